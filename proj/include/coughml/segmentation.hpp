#pragma once

// Cough event segmentation: hysteresis comparator on the squared signal
// with debounce, minimum-length rejection, padding and merge. Also the
// per-recording SNR estimate used as a quality gate.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "coughml/audio.hpp"

namespace coughml {

struct SegmentationParams {
    double lower_mult = 0.1;   // x mean signal power
    double upper_mult = 2.0;   // x mean signal power
    double tolerance_ms = 10.0;
    double min_cough_ms = 200.0;
    double pad_ms = 200.0;
};

struct CoughSegment {
    size_t start_sample = 0;
    size_t end_sample = 0;  // exclusive
    std::string recording_uuid;

    size_t length() const { return end_sample - start_sample; }
};

// Comparator semantics: the squared signal opens a candidate at the
// start of the first run of >= tolerance samples above the upper
// threshold, and closes it at the start of the first subsequent run of
// >= tolerance samples below the lower threshold. A candidate still
// open at the end of the signal closes there. Thresholds are relative
// to the mean of the squared signal, so boundaries are invariant to
// amplitude scaling.
inline std::vector<CoughSegment> segment_coughs(const AudioSignal& sig,
                                                const SegmentationParams& p,
                                                const std::string& uuid = "") {
    const size_t n = sig.samples.size();
    if (n == 0) return {};
    const size_t tol = std::max<size_t>(
        1, size_t(std::llround(p.tolerance_ms * 1e-3 * sig.sample_rate)));
    const size_t min_len =
        size_t(std::llround(p.min_cough_ms * 1e-3 * sig.sample_rate));
    const size_t pad =
        size_t(std::llround(p.pad_ms * 1e-3 * sig.sample_rate));

    double mean_power = 0.0;
    for (double s : sig.samples) mean_power += s * s;
    mean_power /= double(n);
    const double up = p.upper_mult * mean_power;
    const double lo = p.lower_mult * mean_power;

    // Run-length scan over the two comparator conditions.
    std::vector<std::pair<size_t, size_t>> raw;  // [open, close)
    bool open = false;
    size_t open_at = 0;
    size_t run_start = 0;
    bool run_active = false;
    for (size_t i = 0; i <= n; ++i) {
        bool cond = false;
        if (i < n) {
            double pw = sig.samples[i] * sig.samples[i];
            cond = open ? (pw < lo) : (pw > up);
        }
        if (cond) {
            if (!run_active) {
                run_active = true;
                run_start = i;
            }
            if (i - run_start + 1 >= tol) {
                if (!open) {
                    open = true;
                    open_at = run_start;
                } else {
                    raw.emplace_back(open_at, run_start);
                    open = false;
                }
                run_active = false;
            }
        } else {
            run_active = false;
        }
    }
    if (open) raw.emplace_back(open_at, n);

    std::vector<CoughSegment> out;
    for (auto [a, b] : raw) {
        if (b - a < min_len) continue;
        size_t s = a > pad ? a - pad : 0;
        size_t e = std::min(n, b + pad);
        if (!out.empty() && s <= out.back().end_sample) {
            out.back().end_sample = e;
        } else {
            out.push_back({s, e, uuid});
        }
    }
    return out;
}

// 20*log10 of cough RMS over non-cough RMS across the recording.
inline double estimate_snr(const AudioSignal& sig,
                           const std::vector<CoughSegment>& segments) {
    const size_t n = sig.samples.size();
    if (segments.empty())
        throw std::invalid_argument("estimate_snr: no cough segments");
    std::vector<bool> in_seg(n, false);
    for (const auto& s : segments)
        for (size_t i = s.start_sample; i < s.end_sample && i < n; ++i)
            in_seg[i] = true;
    double e_sig = 0.0, e_noise = 0.0;
    size_t n_sig = 0, n_noise = 0;
    for (size_t i = 0; i < n; ++i) {
        double p = sig.samples[i] * sig.samples[i];
        if (in_seg[i]) {
            e_sig += p;
            ++n_sig;
        } else {
            e_noise += p;
            ++n_noise;
        }
    }
    if (n_noise == 0)
        throw std::invalid_argument(
            "estimate_snr: segments cover the whole signal");
    double rms_sig = std::sqrt(e_sig / double(n_sig));
    double rms_noise = std::sqrt(e_noise / double(n_noise));
    if (rms_noise == 0.0) return 200.0;  // silent background, effectively clean
    return 20.0 * std::log10(rms_sig / rms_noise);
}

}  // namespace coughml
