#pragma once

// WAV audio loading and the in-memory signal type all DSP operates on.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace coughml {

struct AudioSignal {
    std::vector<double> samples;  // mono, amplitude in [-1, 1]
    int sample_rate = 0;          // Hz

    double duration_s() const {
        return static_cast<double>(samples.size()) / sample_rate;
    }
};

class AudioError : public std::runtime_error {
public:
    explicit AudioError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline uint32_t read_u32le(const uint8_t* p) {
    return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
           uint32_t(p[3]) << 24;
}
inline uint16_t read_u16le(const uint8_t* p) {
    return uint16_t(p[0]) | uint16_t(p[1]) << 8;
}

}  // namespace detail

// Decodes a RIFF/WAV file: PCM 8/16/24-bit integer or 32-bit float,
// any channel count. Channels are averaged to mono and samples scaled
// to [-1, 1].
inline AudioSignal load_audio(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw AudioError("cannot open audio file: " + path);
    std::vector<uint8_t> buf((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
    if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 ||
        std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
        throw AudioError(path + ": missing RIFF/WAVE header");

    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t rate = 0;
    const uint8_t* data = nullptr;
    size_t data_len = 0;

    size_t pos = 12;
    while (pos + 8 <= buf.size()) {
        const char* id = reinterpret_cast<const char*>(&buf[pos]);
        uint32_t len = detail::read_u32le(&buf[pos + 4]);
        if (pos + 8 + len > buf.size())
            throw AudioError(path + ": truncated chunk '" +
                             std::string(id, 4) + "'");
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (len < 16) throw AudioError(path + ": short fmt chunk");
            format = detail::read_u16le(&buf[pos + 8]);
            channels = detail::read_u16le(&buf[pos + 10]);
            rate = detail::read_u32le(&buf[pos + 12]);
            bits = detail::read_u16le(&buf[pos + 22]);
        } else if (std::memcmp(id, "data", 4) == 0) {
            data = &buf[pos + 8];
            data_len = len;
        }
        pos += 8 + len + (len & 1);  // chunks are word-aligned
    }
    if (channels == 0 || rate == 0) throw AudioError(path + ": no fmt chunk");
    if (!data) throw AudioError(path + ": no data chunk");
    if (format != 1 && format != 3)
        throw AudioError(path + ": unsupported format tag " +
                         std::to_string(format) + " in fmt chunk");
    if (format == 1 && bits != 8 && bits != 16 && bits != 24)
        throw AudioError(path + ": unsupported PCM bit depth " +
                         std::to_string(bits));
    if (format == 3 && bits != 32)
        throw AudioError(path + ": unsupported float bit depth " +
                         std::to_string(bits));

    const size_t bytes_per = bits / 8;
    const size_t frame_bytes = bytes_per * channels;
    const size_t n_frames = data_len / frame_bytes;

    AudioSignal out;
    out.sample_rate = static_cast<int>(rate);
    out.samples.resize(n_frames);
    for (size_t i = 0; i < n_frames; ++i) {
        double acc = 0;
        for (size_t c = 0; c < channels; ++c) {
            const uint8_t* p = data + i * frame_bytes + c * bytes_per;
            double v;
            if (format == 3) {
                float fv;
                std::memcpy(&fv, p, 4);
                v = fv;
            } else if (bits == 8) {
                v = (int(p[0]) - 128) / 128.0;  // 8-bit WAV is unsigned
            } else if (bits == 16) {
                int16_t s = int16_t(uint16_t(p[0]) | uint16_t(p[1]) << 8);
                v = s / 32768.0;
            } else {  // 24-bit
                int32_t s = int32_t(uint32_t(p[0]) << 8 |
                                    uint32_t(p[1]) << 16 |
                                    uint32_t(p[2]) << 24) >> 8;
                v = s / 8388608.0;
            }
            acc += v;
        }
        out.samples[i] = acc / channels;
    }
    if (out.samples.empty()) throw AudioError(path + ": empty data chunk");
    return out;
}

// Writes a mono 16-bit PCM WAV. Used by the synthetic corpus generator
// and tests.
inline void write_audio(const std::string& path, const AudioSignal& sig) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw AudioError("cannot write audio file: " + path);
    auto put_u32 = [&](uint32_t v) {
        uint8_t b[4] = {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16),
                        uint8_t(v >> 24)};
        f.write(reinterpret_cast<char*>(b), 4);
    };
    auto put_u16 = [&](uint16_t v) {
        uint8_t b[2] = {uint8_t(v), uint8_t(v >> 8)};
        f.write(reinterpret_cast<char*>(b), 2);
    };
    uint32_t data_len = uint32_t(sig.samples.size() * 2);
    f.write("RIFF", 4);
    put_u32(36 + data_len);
    f.write("WAVE", 4);
    f.write("fmt ", 4);
    put_u32(16);
    put_u16(1);  // PCM
    put_u16(1);  // mono
    put_u32(uint32_t(sig.sample_rate));
    put_u32(uint32_t(sig.sample_rate) * 2);
    put_u16(2);
    put_u16(16);
    f.write("data", 4);
    put_u32(data_len);
    for (double s : sig.samples) {
        double c = s < -1.0 ? -1.0 : (s > 1.0 ? 1.0 : s);
        int16_t v = int16_t(std::lround(c * 32767.0));
        put_u16(uint16_t(v));
    }
}

}  // namespace coughml
