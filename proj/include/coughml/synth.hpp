#pragma once

// Synthetic cough corpus generator: class-dependent band-power boost,
// simulated noisy annotators, and partially erased user labels. Used
// by the test suites and the `synth` CLI subcommand; the real corpus
// is large and its test split private.

#include <algorithm>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "coughml/audio.hpp"
#include "coughml/dataset.hpp"
#include "coughml/dsp.hpp"

namespace coughml {

struct SynthConfig {
    int n_recordings = 300;
    int sample_rate = 12000;
    int min_coughs = 3;
    int max_coughs = 5;
    double burst_s = 0.35;
    double gap_s = 0.9;
    double noise_floor = 0.01;
    double pos_fraction = 0.45;
    // positive-class band component in 1000-1500 Hz; 6 dB power boost
    double band_lo_hz = 1000.0;
    double band_hi_hz = 1500.0;
    double band_boost_db = 6.0;
    double cough_jitter = 0.5;       // per-cough spread of the band gain
    int n_annotators = 3;
    double annotator_noise = 0.15;   // independent label-flip probability
    double annotator_coverage = 0.5; // fraction of recordings each expert labels
    double user_noise = 0.15;
    double user_erased = 0.4;
    double gender_unknown = 0.3;
};

struct SynthCorpus {
    std::vector<RecordingMeta> meta;
    std::map<std::string, AudioSignal> audio;
    std::map<std::string, int> ground_truth;  // uuid -> 1 = covid
};

namespace detail {

// Broadband telegraph carrier: amplitude held away from zero so the
// squared signal clears the hysteresis comparator's upper threshold.
inline std::vector<double> telegraph(size_t n, double amp, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> out(n);
    double sign = u(rng) < 0.5 ? -1.0 : 1.0;
    for (size_t i = 0; i < n; ++i) {
        if (u(rng) < 0.25) sign = -sign;
        out[i] = sign * amp * (0.85 + 0.15 * u(rng));
    }
    return out;
}

// Onset gate for the class-dependent band component: off over the first
// 15% of the burst, linear ramp to full by 25%.
inline double band_gate(double t) {
    if (t < 0.15) return 0.0;
    if (t < 0.25) return (t - 0.15) / 0.1;
    return 1.0;
}

// Compensates the gate's duty cycle so the delivered in-band energy
// still matches the nominal boost: 1 / sqrt(mean of gate^2).
constexpr double kGateComp = 1.1303;

}  // namespace detail

inline SynthCorpus generate_synthetic_corpus(const SynthConfig& cfg, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const int fs = cfg.sample_rate;
    auto band_bp_hi = design_butterworth_lp(2, cfg.band_hi_hz, double(fs));
    auto band_bp_lo = design_butterworth_hp(2, cfg.band_lo_hz, double(fs));

    // base gain for a 6 dB in-band boost: in-band fraction of the flat
    // carrier power times (10^(dB/10) - 1)
    const double boost = std::pow(10.0, cfg.band_boost_db / 10.0) - 1.0;
    const double band_frac = (cfg.band_hi_hz - cfg.band_lo_hz) / (fs / 2.0);
    const double base_band_rms = 0.75 * std::sqrt(band_frac * boost);

    SynthCorpus out;
    for (int r = 0; r < cfg.n_recordings; ++r) {
        std::string uuid = "rec" + std::to_string(r);
        int truth = u(rng) < cfg.pos_fraction ? 1 : 0;
        int n_coughs = cfg.min_coughs +
                       int(rng() % uint64_t(cfg.max_coughs - cfg.min_coughs + 1));

        const size_t burst_n = size_t(cfg.burst_s * fs);
        const size_t gap_n = size_t(cfg.gap_s * fs);
        const size_t total = gap_n + size_t(n_coughs) * (burst_n + gap_n);
        AudioSignal sig;
        sig.sample_rate = fs;
        sig.samples.assign(total, 0.0);
        for (auto& s : sig.samples) s = cfg.noise_floor * gauss(rng);

        for (int c = 0; c < n_coughs; ++c) {
            size_t start = gap_n + size_t(c) * (burst_n + gap_n);
            std::vector<double> carrier = detail::telegraph(burst_n, 0.75, rng);
            std::vector<double> band;
            if (truth) {
                // per-cough gain jitter gives aggregation something to
                // average; clamped so no single cough dominates the
                // recording's power statistics
                double g = detail::kGateComp * base_band_rms *
                           std::exp(cfg.cough_jitter *
                                    std::clamp(gauss(rng), -2.0, 2.0));
                std::vector<double> w(burst_n);
                for (auto& v : w) v = gauss(rng);
                band = apply_filter(band_bp_lo, apply_filter(band_bp_hi, w));
                double e = 0.0;
                for (double v : band) e += v * v;
                double rms = std::sqrt(e / double(burst_n));
                if (rms > 0)
                    for (auto& v : band) v *= g / rms;
            }
            for (size_t i = 0; i < burst_n; ++i) {
                // quick attack/decay envelope
                double t = double(i) / double(burst_n);
                double env = t < 0.1 ? t / 0.1 : (1.0 - t) / 0.9;
                double v = carrier[i];
                // the band component fades in after the onset: the clean
                // broadband head is what trips the hysteresis opener, the
                // tonal tail carries the class signature
                if (truth) v += detail::band_gate(t) * band[i];
                sig.samples[start + i] += env * v;
            }
        }

        RecordingMeta m;
        m.uuid = uuid;
        m.cough_score = 0.9 + 0.1 * u(rng);
        m.gender = u(rng) < cfg.gender_unknown
                       ? Gender::unknown
                       : (u(rng) < 0.5 ? Gender::male : Gender::female);
        if (u(rng) < cfg.user_erased) {
            m.user_status = UserStatus::none;
        } else {
            int lbl = u(rng) < cfg.user_noise ? 1 - truth : truth;
            m.user_status = lbl ? UserStatus::covid : UserStatus::healthy;
        }
        for (int a = 0; a < cfg.n_annotators; ++a) {
            std::string id = "e" + std::to_string(a + 1);
            if (u(rng) < cfg.annotator_coverage) {
                int lbl = u(rng) < cfg.annotator_noise ? 1 - truth : truth;
                m.expert_labels[id] =
                    lbl ? ExpertLabel::covid : ExpertLabel::healthy;
            } else {
                m.expert_labels[id] = ExpertLabel::none;
            }
        }
        out.ground_truth[uuid] = truth;
        out.audio[uuid] = std::move(sig);
        out.meta.push_back(std::move(m));
    }
    return out;
}

}  // namespace coughml
