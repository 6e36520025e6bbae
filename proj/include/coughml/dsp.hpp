#pragma once

// Pre-processing chain: peak normalization, Butterworth filtering via
// bilinear-transformed biquad cascades, and windowed-sinc resampling.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "coughml/audio.hpp"

namespace coughml {

struct Biquad {
    double b0, b1, b2, a1, a2;
};

struct BiquadCascade {
    std::vector<Biquad> sections;

    // |H(e^{j 2 pi f / fs})| of the full cascade.
    double magnitude_at(double freq_hz, double sample_rate_hz) const {
        std::complex<double> z =
            std::exp(std::complex<double>(0.0, -2.0 * M_PI * freq_hz / sample_rate_hz));
        std::complex<double> h(1.0);
        for (const auto& s : sections) {
            h *= (s.b0 + s.b1 * z + s.b2 * z * z) /
                 (1.0 + s.a1 * z + s.a2 * z * z);
        }
        return std::abs(h);
    }

    bool stable() const {
        for (const auto& s : sections) {
            // poles inside unit circle <=> |a2| < 1 and |a1| < 1 + a2
            if (std::abs(s.a2) >= 1.0 || std::abs(s.a1) >= 1.0 + s.a2) return false;
        }
        return true;
    }
};

inline AudioSignal normalize_peak(const AudioSignal& sig) {
    if (sig.samples.empty())
        throw std::invalid_argument("normalize_peak: empty signal");
    double peak = 0;
    for (double s : sig.samples) peak = std::max(peak, std::abs(s));
    if (peak == 0.0)
        throw std::invalid_argument("normalize_peak: all-zero signal");
    AudioSignal out = sig;
    for (double& s : out.samples) s /= peak;
    return out;
}

namespace detail {

// Bilinear transform of one analog prototype section 1/(s^2 + q s + 1)
// (lowpass) or s^2/(s^2 + q s + 1) (highpass), with the analog cutoff
// prewarped so the digital -3 dB point lands exactly on cutoff_hz.
inline Biquad bilinear_section(double q, double cutoff_hz, double fs, bool highpass) {
    double c = 1.0 / std::tan(M_PI * cutoff_hz / fs);
    double d0 = c * c + q * c + 1.0;
    Biquad s{};
    if (highpass) {
        s.b0 = c * c / d0;
        s.b1 = -2.0 * c * c / d0;
        s.b2 = c * c / d0;
    } else {
        s.b0 = 1.0 / d0;
        s.b1 = 2.0 / d0;
        s.b2 = 1.0 / d0;
    }
    s.a1 = (2.0 - 2.0 * c * c) / d0;
    s.a2 = (c * c - q * c + 1.0) / d0;
    return s;
}

inline std::vector<double> butterworth_q(int order) {
    if (order % 2 != 0)
        throw std::invalid_argument("only even Butterworth orders supported");
    std::vector<double> qs;
    for (int k = 1; k <= order / 2; ++k)
        qs.push_back(2.0 * std::sin((2.0 * k - 1.0) * M_PI / (2.0 * order)));
    return qs;
}

}  // namespace detail

inline BiquadCascade design_butterworth_lp(int order, double cutoff_hz,
                                           double sample_rate_hz) {
    if (cutoff_hz <= 0.0 || cutoff_hz >= sample_rate_hz / 2.0)
        throw std::invalid_argument(
            "lowpass cutoff must lie strictly between 0 and Nyquist");
    BiquadCascade c;
    for (double q : detail::butterworth_q(order))
        c.sections.push_back(
            detail::bilinear_section(q, cutoff_hz, sample_rate_hz, false));
    return c;
}

inline BiquadCascade design_butterworth_hp(int order, double cutoff_hz,
                                           double sample_rate_hz) {
    if (cutoff_hz <= 0.0 || cutoff_hz >= sample_rate_hz / 2.0)
        throw std::invalid_argument(
            "highpass cutoff must lie strictly between 0 and Nyquist");
    BiquadCascade c;
    for (double q : detail::butterworth_q(order))
        c.sections.push_back(
            detail::bilinear_section(q, cutoff_hz, sample_rate_hz, true));
    return c;
}

// Causal forward filtering with zero initial state (direct form II
// transposed per section).
inline std::vector<double> apply_filter(const BiquadCascade& cascade,
                                        const std::vector<double>& x) {
    std::vector<double> y = x;
    for (const auto& s : cascade.sections) {
        double z1 = 0.0, z2 = 0.0;
        for (double& v : y) {
            double in = v;
            double out = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * out + z2;
            z2 = s.b2 * in - s.a2 * out;
            v = out;
        }
    }
    return y;
}

inline AudioSignal apply_filter(const BiquadCascade& cascade,
                                const AudioSignal& sig) {
    return {apply_filter(cascade, sig.samples), sig.sample_rate};
}

namespace detail {

inline double bessel_i0(double x) {
    double sum = 1.0, term = 1.0;
    for (int k = 1; k < 64; ++k) {
        term *= (x / (2.0 * k)) * (x / (2.0 * k));
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

}  // namespace detail

// Rate conversion by Kaiser-windowed sinc interpolation (64-tap kernel,
// beta = 8). Identity rates return the input unchanged.
inline AudioSignal resample(const AudioSignal& sig, int target_rate,
                            int taps = 64, double kaiser_beta = 8.0) {
    if (target_rate <= 0)
        throw std::invalid_argument("resample: target rate must be positive");
    if (sig.sample_rate == target_rate) return sig;

    const double ratio = double(target_rate) / double(sig.sample_rate);
    const size_t n_in = sig.samples.size();
    const size_t n_out =
        size_t(std::llround(double(n_in) * ratio));
    // When decimating, the kernel also lowpasses at the new Nyquist.
    const double fc = std::min(1.0, ratio);
    const int half = taps / 2;
    const double i0b = detail::bessel_i0(kaiser_beta);

    AudioSignal out;
    out.sample_rate = target_rate;
    out.samples.resize(n_out);
    for (size_t m = 0; m < n_out; ++m) {
        double t = double(m) / ratio;  // position in input samples
        long center = long(std::floor(t));
        double acc = 0.0;
        for (long k = center - half + 1; k <= center + half; ++k) {
            if (k < 0 || size_t(k) >= n_in) continue;
            double d = (t - double(k)) * fc;
            double sinc = d == 0.0 ? 1.0 : std::sin(M_PI * d) / (M_PI * d);
            double u = (t - double(k)) / double(half);
            if (u <= -1.0 || u >= 1.0) continue;
            double w = detail::bessel_i0(kaiser_beta * std::sqrt(1.0 - u * u)) / i0b;
            acc += sig.samples[size_t(k)] * sinc * w * fc;
        }
        out.samples[m] = acc;
    }
    return out;
}

// The canonical chain: normalize -> 4th order Butterworth lowpass ->
// downsample.
inline AudioSignal preprocess(const AudioSignal& sig, double cutoff_hz = 6000.0,
                              int order = 4, int target_rate = 12000) {
    AudioSignal x = normalize_peak(sig);
    if (cutoff_hz < x.sample_rate / 2.0) {
        auto lp = design_butterworth_lp(order, cutoff_hz, x.sample_rate);
        x = apply_filter(lp, x);
    }
    return resample(x, target_rate);
}

}  // namespace coughml
