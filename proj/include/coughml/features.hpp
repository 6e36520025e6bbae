#pragma once

// Per-cough feature vector: MFCC statistics, EEPD band peak rates,
// whole-segment spectral features, time-domain features, normalized-PSD
// band powers, plus the gender feature and its imputation model.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "coughml/audio.hpp"
#include "coughml/dsp.hpp"
#include "coughml/fft.hpp"
#include "coughml/stats.hpp"

namespace coughml {

struct FeatureConfig {
    int frame_len = 1024;
    int hop_len = 512;
    int n_mels = 40;
    int n_mfcc = 13;
    double eepd_lo_hz = 50.0;
    double eepd_hi_hz = 1000.0;
    double eepd_band_hz = 50.0;          // 19 bands for the defaults
    double eepd_smooth_ms = 50.0;        // envelope moving average
    double eepd_peak_frac = 0.1;         // peaks above this fraction of max
    std::vector<std::pair<double, double>> psd_bands = {
        {400.0, 550.0}, {550.0, 800.0}, {1000.0, 1500.0}};
    bool include_gender = true;

    int n_eepd_bands() const {
        return int(std::llround((eepd_hi_hz - eepd_lo_hz) / eepd_band_hz));
    }
};

struct FeatureVector {
    std::vector<double> values;
    std::string recording_uuid;
    int segment_index = 0;
};

struct PsdCurve {
    std::vector<double> freqs_hz;
    std::vector<double> density;  // unit trapezoidal area
};

namespace detail {

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular mel filterbank over FFT bins 0..n_fft/2.
inline std::vector<std::vector<double>> mel_filterbank(int n_mels, int n_fft,
                                                       double fs) {
    double mel_lo = hz_to_mel(0.0), mel_hi = hz_to_mel(fs / 2.0);
    std::vector<double> centers(size_t(n_mels) + 2);
    for (int i = 0; i < n_mels + 2; ++i)
        centers[size_t(i)] =
            mel_to_hz(mel_lo + (mel_hi - mel_lo) * double(i) / double(n_mels + 1));
    std::vector<std::vector<double>> fb(size_t(n_mels),
                                        std::vector<double>(size_t(n_fft / 2 + 1), 0.0));
    for (int m = 0; m < n_mels; ++m) {
        double f_lo = centers[size_t(m)], f_c = centers[size_t(m) + 1],
               f_hi = centers[size_t(m) + 2];
        for (int k = 0; k <= n_fft / 2; ++k) {
            double f = double(k) * fs / double(n_fft);
            if (f > f_lo && f < f_c)
                fb[size_t(m)][size_t(k)] = (f - f_lo) / (f_c - f_lo);
            else if (f >= f_c && f < f_hi)
                fb[size_t(m)][size_t(k)] = (f_hi - f) / (f_hi - f_c);
        }
    }
    return fb;
}

inline std::vector<double> hann_window(int n) {
    std::vector<double> w(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        w[size_t(i)] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / (n - 1));
    return w;
}

}  // namespace detail

// 13 MFCCs per frame (mel filterbank on the magnitude spectrum, log,
// orthonormal DCT-II, coefficient 0 kept), then per-coefficient mean
// and standard deviation over frames. 26 values.
inline std::vector<double> mfcc_stats(const std::vector<double>& seg, int fs,
                                      const FeatureConfig& cfg = {}) {
    const int N = cfg.frame_len;
    if (int(seg.size()) < N)
        throw std::invalid_argument("mfcc_stats: segment shorter than one frame");
    auto window = detail::hann_window(N);
    auto fb = detail::mel_filterbank(cfg.n_mels, N, double(fs));
    const double log_floor = 1e-10;

    std::vector<std::vector<double>> coeffs;  // frames x n_mfcc
    for (size_t start = 0; start + size_t(N) <= seg.size();
         start += size_t(cfg.hop_len)) {
        std::vector<std::complex<double>> a(static_cast<size_t>(N));
        for (int i = 0; i < N; ++i)
            a[size_t(i)] = seg[start + size_t(i)] * window[size_t(i)];
        fft_inplace(a);
        std::vector<double> mag(size_t(N / 2 + 1));
        for (int k = 0; k <= N / 2; ++k) mag[size_t(k)] = std::abs(a[size_t(k)]);

        std::vector<double> logmel(size_t(cfg.n_mels));
        for (int m = 0; m < cfg.n_mels; ++m) {
            double e = 0.0;
            for (int k = 0; k <= N / 2; ++k)
                e += fb[size_t(m)][size_t(k)] * mag[size_t(k)];
            logmel[size_t(m)] = std::log(std::max(e, log_floor));
        }
        std::vector<double> c(size_t(cfg.n_mfcc), 0.0);
        for (int q = 0; q < cfg.n_mfcc; ++q) {
            double acc = 0.0;
            for (int m = 0; m < cfg.n_mels; ++m)
                acc += logmel[size_t(m)] *
                       std::cos(M_PI * q * (2.0 * m + 1.0) / (2.0 * cfg.n_mels));
            double norm = q == 0 ? std::sqrt(1.0 / cfg.n_mels)
                                 : std::sqrt(2.0 / cfg.n_mels);
            c[size_t(q)] = acc * norm;
        }
        coeffs.push_back(std::move(c));
    }

    std::vector<double> out;
    out.reserve(size_t(cfg.n_mfcc) * 2);
    const double nf = double(coeffs.size());
    for (int q = 0; q < cfg.n_mfcc; ++q) {
        double m = 0.0;
        for (const auto& c : coeffs) m += c[size_t(q)];
        m /= nf;
        out.push_back(m);
    }
    for (int q = 0; q < cfg.n_mfcc; ++q) {
        double m = out[size_t(q)], acc = 0.0;
        for (const auto& c : coeffs) acc += (c[size_t(q)] - m) * (c[size_t(q)] - m);
        out.push_back(std::sqrt(acc / nf));
    }
    return out;
}

// Energy-envelope peak rates in 50 Hz bands from 50 to 1000 Hz: per
// band, bandpass the segment, rectify, smooth, count envelope maxima
// above a fraction of the envelope peak; rate = peaks per second.
inline std::vector<double> eepd(const std::vector<double>& seg, int fs,
                                const FeatureConfig& cfg = {}) {
    const int n_bands = cfg.n_eepd_bands();
    std::vector<double> out(size_t(n_bands), 0.0);
    if (seg.empty()) return out;
    const double dur_s = double(seg.size()) / fs;
    const size_t smooth = std::max<size_t>(
        1, size_t(std::llround(cfg.eepd_smooth_ms * 1e-3 * fs)));

    for (int b = 0; b < n_bands; ++b) {
        double f_lo = cfg.eepd_lo_hz + b * cfg.eepd_band_hz;
        double f_hi = f_lo + cfg.eepd_band_hz;
        auto hp = design_butterworth_hp(2, f_lo, double(fs));
        auto lp = design_butterworth_lp(2, f_hi, double(fs));
        std::vector<double> y = apply_filter(lp, apply_filter(hp, seg));

        // rectified + moving-average envelope
        std::vector<double> env(y.size());
        double acc = 0.0;
        for (size_t i = 0; i < y.size(); ++i) {
            acc += std::abs(y[i]);
            if (i >= smooth) acc -= std::abs(y[i - smooth]);
            env[i] = acc / double(std::min(i + 1, smooth));
        }
        double peak = *std::max_element(env.begin(), env.end());
        if (peak <= 0.0) continue;
        double thr = cfg.eepd_peak_frac * peak;
        int count = 0;
        for (size_t i = 1; i + 1 < env.size(); ++i)
            if (env[i] > thr && env[i] > env[i - 1] && env[i] >= env[i + 1])
                ++count;
        out[size_t(b)] = double(count) / dur_s;
    }
    return out;
}

// Eleven whole-segment spectral descriptors on the magnitude spectrum.
inline std::vector<double> spectral_features(const std::vector<double>& seg,
                                             int fs) {
    if (seg.empty())
        throw std::invalid_argument("spectral_features: empty segment");
    std::vector<double> mag = magnitude_spectrum(seg, 1024);
    const size_t nb = mag.size();
    const double bin_hz = fs / 2.0 / double(nb - 1);

    double total = std::accumulate(mag.begin(), mag.end(), 0.0);
    if (total <= 0.0) total = 1e-30;

    size_t dom_bin = size_t(
        std::max_element(mag.begin(), mag.end()) - mag.begin());
    double dominant = double(dom_bin) * bin_hz;

    double centroid = 0.0;
    for (size_t k = 0; k < nb; ++k) centroid += double(k) * bin_hz * mag[k];
    centroid /= total;

    double m2 = 0.0, m3 = 0.0, m4 = 0.0, bandwidth = 0.0;
    for (size_t k = 0; k < nb; ++k) {
        double d = double(k) * bin_hz - centroid;
        double p = mag[k] / total;
        m2 += d * d * p;
        m3 += d * d * d * p;
        m4 += d * d * d * d * p;
        bandwidth += std::abs(d) * p;
    }
    double spread = std::sqrt(m2);
    double skew = spread > 0 ? m3 / (spread * spread * spread) : 0.0;
    double kurt = spread > 0 ? m4 / (m2 * m2) : 0.0;

    // rolloff: 85% of spectral power
    double pow_total = 0.0;
    for (double v : mag) pow_total += v * v;
    double cum = 0.0, rolloff = double(nb - 1) * bin_hz;
    for (size_t k = 0; k < nb; ++k) {
        cum += mag[k] * mag[k];
        if (cum >= 0.85 * pow_total) {
            rolloff = double(k) * bin_hz;
            break;
        }
    }

    // flatness on the power spectrum
    double log_acc = 0.0, lin_acc = 0.0;
    for (double v : mag) {
        double p = std::max(v * v, 1e-30);
        log_acc += std::log(p);
        lin_acc += p;
    }
    double flatness = std::exp(log_acc / double(nb)) / (lin_acc / double(nb));

    double mag_mean = total / double(nb);
    double mag_var = 0.0;
    for (double v : mag) mag_var += (v - mag_mean) * (v - mag_mean);
    double mag_std = std::sqrt(mag_var / double(nb));

    // slope: least-squares fit of magnitude against frequency
    double fx = 0.0, fxx = 0.0, fxy = 0.0, fy = total;
    for (size_t k = 0; k < nb; ++k) {
        double f = double(k) * bin_hz;
        fx += f;
        fxx += f * f;
        fxy += f * mag[k];
    }
    double denom = double(nb) * fxx - fx * fx;
    double slope = denom != 0.0 ? (double(nb) * fxy - fx * fy) / denom : 0.0;

    double dec_num = 0.0, dec_den = 0.0;
    for (size_t k = 1; k < nb; ++k) {
        dec_num += (mag[k] - mag[0]) / double(k);
        dec_den += mag[k];
    }
    double decrease = dec_den > 0 ? dec_num / dec_den : 0.0;

    return {dominant, centroid, rolloff, spread,   skew,  kurt,
            bandwidth, flatness, mag_std, slope, decrease};
}

inline std::vector<double> time_features(const std::vector<double>& seg, int fs) {
    if (seg.empty()) throw std::invalid_argument("time_features: empty segment");
    double e = 0.0, peak = 0.0;
    int crossings = 0;
    for (size_t i = 0; i < seg.size(); ++i) {
        e += seg[i] * seg[i];
        peak = std::max(peak, std::abs(seg[i]));
        if (i > 0 && ((seg[i - 1] < 0.0 && seg[i] >= 0.0) ||
                      (seg[i - 1] >= 0.0 && seg[i] < 0.0)))
            ++crossings;
    }
    double rms = std::sqrt(e / double(seg.size()));
    double dur = double(seg.size()) / fs;
    double zcr = double(crossings) / dur;
    double crest = rms > 0.0 ? peak / rms : 0.0;
    return {rms, zcr, crest, dur};
}

// Welch-averaged periodogram (Hann window, 50% overlap), normalized to
// unit trapezoidal area over 0..Nyquist.
inline PsdCurve normalized_psd(const std::vector<double>& seg, int fs,
                               int win_len = 1024) {
    if (int(seg.size()) < win_len)
        throw std::invalid_argument("normalized_psd: segment shorter than one window");
    auto window = detail::hann_window(win_len);
    const int hop = win_len / 2;
    std::vector<double> psd(size_t(win_len / 2 + 1), 0.0);
    int n_frames = 0;
    for (size_t start = 0; start + size_t(win_len) <= seg.size();
         start += size_t(hop)) {
        std::vector<std::complex<double>> a(static_cast<size_t>(win_len));
        for (int i = 0; i < win_len; ++i)
            a[size_t(i)] = seg[start + size_t(i)] * window[size_t(i)];
        fft_inplace(a);
        for (int k = 0; k <= win_len / 2; ++k)
            psd[size_t(k)] += std::norm(a[size_t(k)]);
        ++n_frames;
    }
    for (auto& v : psd) v /= double(n_frames);

    PsdCurve c;
    c.freqs_hz.resize(psd.size());
    for (size_t k = 0; k < psd.size(); ++k)
        c.freqs_hz[k] = double(k) * fs / double(win_len);
    c.density = std::move(psd);

    double area = 0.0;
    for (size_t k = 1; k < c.density.size(); ++k)
        area += 0.5 * (c.density[k] + c.density[k - 1]) *
                (c.freqs_hz[k] - c.freqs_hz[k - 1]);
    if (area <= 0.0)
        throw std::invalid_argument("normalized_psd: zero-power segment");
    for (auto& v : c.density) v /= area;
    return c;
}

// Trapezoidal integral of the curve over [f_lo, f_hi], with linear
// interpolation at the band edges.
inline double band_power(const PsdCurve& psd, double f_lo, double f_hi) {
    if (f_lo >= f_hi) throw std::invalid_argument("band_power: degenerate band");
    if (f_lo < psd.freqs_hz.front() - 1e-9 || f_hi > psd.freqs_hz.back() + 1e-9)
        throw std::invalid_argument("band_power: band outside PSD grid");
    auto value_at = [&](double f) {
        auto it = std::lower_bound(psd.freqs_hz.begin(), psd.freqs_hz.end(), f);
        if (it == psd.freqs_hz.begin()) return psd.density.front();
        if (it == psd.freqs_hz.end()) return psd.density.back();
        size_t k = size_t(it - psd.freqs_hz.begin());
        double f0 = psd.freqs_hz[k - 1], f1 = psd.freqs_hz[k];
        double t = (f - f0) / (f1 - f0);
        return psd.density[k - 1] * (1.0 - t) + psd.density[k] * t;
    };
    double acc = 0.0;
    double prev_f = f_lo, prev_v = value_at(f_lo);
    for (size_t k = 0; k < psd.freqs_hz.size(); ++k) {
        double f = psd.freqs_hz[k];
        if (f <= f_lo) continue;
        if (f >= f_hi) break;
        acc += 0.5 * (prev_v + psd.density[k]) * (f - prev_f);
        prev_f = f;
        prev_v = psd.density[k];
    }
    acc += 0.5 * (prev_v + value_at(f_hi)) * (f_hi - prev_f);
    return acc;
}

inline std::vector<double> band_powers(
    const PsdCurve& psd, const std::vector<std::pair<double, double>>& bands) {
    std::vector<double> out;
    out.reserve(bands.size());
    for (const auto& [lo, hi] : bands) out.push_back(band_power(psd, lo, hi));
    return out;
}

// The 60-feature core schema: 26 MFCC stats, 19 EEPD rates, 11
// spectral, 4 time-domain. PSD band powers and the gender value are
// appended by the extraction driver.
inline std::vector<std::string> core_feature_names(const FeatureConfig& cfg = {}) {
    std::vector<std::string> names;
    for (int q = 0; q < cfg.n_mfcc; ++q)
        names.push_back("mfcc_mean_" + std::to_string(q));
    for (int q = 0; q < cfg.n_mfcc; ++q)
        names.push_back("mfcc_std_" + std::to_string(q));
    for (int b = 0; b < cfg.n_eepd_bands(); ++b) {
        int lo = int(cfg.eepd_lo_hz + b * cfg.eepd_band_hz);
        int hi = int(lo + cfg.eepd_band_hz);
        names.push_back("eepd_" + std::to_string(lo) + "_" + std::to_string(hi));
    }
    for (const char* n :
         {"dominant_frequency", "spectral_centroid", "spectral_rolloff",
          "spectral_spread", "spectral_skewness", "spectral_kurtosis",
          "spectral_bandwidth", "spectral_flatness", "spectral_std",
          "spectral_slope", "spectral_decrease"})
        names.push_back(n);
    for (const char* n : {"rms_power", "zero_crossing_rate", "crest_factor",
                          "length_s"})
        names.push_back(n);
    return names;
}

inline std::vector<std::string> feature_names(const FeatureConfig& cfg = {}) {
    std::vector<std::string> names = core_feature_names(cfg);
    for (const auto& [lo, hi] : cfg.psd_bands)
        names.push_back("psd_" + std::to_string(int(lo)) + "_" +
                        std::to_string(int(hi)));
    if (cfg.include_gender) names.push_back("gender");
    return names;
}

// Full feature vector for one segment; gender slot (if configured) is
// filled from metadata: male=1, female=0, unknown left as NaN for the
// imputation pass.
inline std::vector<double> extract_features(const std::vector<double>& seg,
                                            int fs, const FeatureConfig& cfg,
                                            double gender_value = std::nan("")) {
    std::vector<double> v = mfcc_stats(seg, fs, cfg);
    std::vector<double> e = eepd(seg, fs, cfg);
    v.insert(v.end(), e.begin(), e.end());
    std::vector<double> s = spectral_features(seg, fs);
    v.insert(v.end(), s.begin(), s.end());
    std::vector<double> t = time_features(seg, fs);
    v.insert(v.end(), t.begin(), t.end());
    if (!cfg.psd_bands.empty()) {
        PsdCurve psd = normalized_psd(seg, fs, cfg.frame_len);
        std::vector<double> b = band_powers(psd, cfg.psd_bands);
        v.insert(v.end(), b.begin(), b.end());
    }
    if (cfg.include_gender) v.push_back(gender_value);
    return v;
}

struct ClassPsdReport {
    std::vector<double> freqs_hz;
    std::vector<double> mean_a, ci_a;  // 95% CI half-width
    std::vector<double> mean_b, ci_b;
    std::vector<double> band_p;        // per configured band, two-sided
    std::vector<double> band_log10_p;  // log-domain, robust to underflow
};

// Average normalized PSD per class with 95% confidence intervals, and a
// Welch t-test per band on the per-segment band powers.
inline ClassPsdReport class_psd_report(
    const std::vector<PsdCurve>& class_a, const std::vector<PsdCurve>& class_b,
    const std::vector<std::pair<double, double>>& bands) {
    if (class_a.size() < 2 || class_b.size() < 2)
        throw std::invalid_argument("class_psd_report: need >= 2 segments per class");
    ClassPsdReport r;
    r.freqs_hz = class_a[0].freqs_hz;
    const size_t nf = r.freqs_hz.size();
    auto curve_stats = [&](const std::vector<PsdCurve>& cls,
                           std::vector<double>& mean_out,
                           std::vector<double>& ci_out) {
        mean_out.assign(nf, 0.0);
        ci_out.assign(nf, 0.0);
        for (const auto& c : cls)
            for (size_t k = 0; k < nf; ++k) mean_out[k] += c.density[k];
        for (auto& v : mean_out) v /= double(cls.size());
        for (const auto& c : cls)
            for (size_t k = 0; k < nf; ++k) {
                double d = c.density[k] - mean_out[k];
                ci_out[k] += d * d;
            }
        for (size_t k = 0; k < nf; ++k)
            ci_out[k] = 1.96 * std::sqrt(ci_out[k] / double(cls.size() - 1)) /
                        std::sqrt(double(cls.size()));
    };
    curve_stats(class_a, r.mean_a, r.ci_a);
    curve_stats(class_b, r.mean_b, r.ci_b);

    for (const auto& [lo, hi] : bands) {
        std::vector<double> pa, pb;
        for (const auto& c : class_a) pa.push_back(band_power(c, lo, hi));
        for (const auto& c : class_b) pb.push_back(band_power(c, lo, hi));
        TTestResult t = welch_t_test(pa, pb);
        r.band_p.push_back(t.p);
        r.band_log10_p.push_back(t.log10_p);
    }
    return r;
}

}  // namespace coughml
