#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "coughml/dsp.hpp"
#include "coughml/fft.hpp"

using namespace coughml;

namespace {

// Analytic magnitude of a bilinear-transformed Butterworth lowpass with
// prewarped cutoff: |H(f)| = 1/sqrt(1 + (tan(pi f/fs)/tan(pi fc/fs))^(2n)).
double butter_lp_mag(int order, double f, double fc, double fs) {
    double r = std::tan(M_PI * f / fs) / std::tan(M_PI * fc / fs);
    return 1.0 / std::sqrt(1.0 + std::pow(r, 2 * order));
}

double butter_hp_mag(int order, double f, double fc, double fs) {
    double r = std::tan(M_PI * fc / fs) / std::tan(M_PI * f / fs);
    return 1.0 / std::sqrt(1.0 + std::pow(r, 2 * order));
}

// Least-squares amplitude of a known-frequency sinusoid over [begin, end).
double fit_sine_amplitude(const std::vector<double>& x, double freq, double fs,
                          size_t begin, size_t end) {
    double sc = 0, ss = 0, cc = 0, cs = 0, xs = 0, xc = 0;
    for (size_t i = begin; i < end; ++i) {
        double ph = 2.0 * M_PI * freq * double(i) / fs;
        double c = std::cos(ph), s = std::sin(ph);
        cc += c * c;
        ss += s * s;
        cs += c * s;
        xc += x[i] * c;
        xs += x[i] * s;
    }
    // Solve [cc cs; cs ss] [a; b] = [xc; xs]
    double det = cc * ss - cs * cs;
    double a = (xc * ss - xs * cs) / det;
    double b = (cc * xs - cs * xc) / det;
    return std::hypot(a, b);
}

}  // namespace

TEST_CASE("butterworth lowpass matches the analytic magnitude response") {
    const double fs = 48000.0, fc = 6000.0;
    auto lp = design_butterworth_lp(4, fc, fs);
    REQUIRE(lp.sections.size() == 2);
    CHECK(lp.stable());

    CHECK(lp.magnitude_at(0.0, fs) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lp.magnitude_at(fc, fs) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    // At twice the cutoff an analog 4th-order Butterworth sits at
    // -24.1 dB; the digital response follows the prewarped formula.
    CHECK(lp.magnitude_at(2.0 * fc, fs) ==
          doctest::Approx(butter_lp_mag(4, 2.0 * fc, fc, fs)).epsilon(1e-12));
    for (double f = 100.0; f < fs / 2.0; f += 977.0) {
        CHECK(lp.magnitude_at(f, fs) ==
              doctest::Approx(butter_lp_mag(4, f, fc, fs)).epsilon(1e-10));
    }
    // Monotone decay.
    double prev = 2.0;
    for (double f = 0.0; f < fs / 2.0; f += 200.0) {
        double m = lp.magnitude_at(f, fs);
        CHECK(m < prev + 1e-12);
        prev = m;
    }
}

TEST_CASE("butterworth highpass matches the analytic magnitude response") {
    const double fs = 16000.0, fc = 300.0;
    auto hp = design_butterworth_hp(2, fc, fs);
    REQUIRE(hp.sections.size() == 1);
    CHECK(hp.stable());
    CHECK(hp.magnitude_at(0.0, fs) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(hp.magnitude_at(fc, fs) ==
          doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    for (double f = 50.0; f < fs / 2.0; f += 391.0) {
        CHECK(hp.magnitude_at(f, fs) ==
              doctest::Approx(butter_hp_mag(2, f, fc, fs)).epsilon(1e-10));
    }
}

TEST_CASE("filter design rejects out-of-range cutoffs") {
    CHECK_THROWS_AS(design_butterworth_lp(4, 0.0, 48000), std::invalid_argument);
    CHECK_THROWS_AS(design_butterworth_lp(4, 24000.0, 48000),
                    std::invalid_argument);
    CHECK_THROWS_AS(design_butterworth_hp(4, -5.0, 48000),
                    std::invalid_argument);
    CHECK_THROWS_AS(design_butterworth_lp(3, 6000.0, 48000),
                    std::invalid_argument);
}

TEST_CASE("time-domain filtering reaches the expected steady state") {
    const double fs = 48000.0, fc = 6000.0;
    auto lp = design_butterworth_lp(4, fc, fs);

    SUBCASE("DC input settles at unity gain") {
        std::vector<double> x(4800, 1.0);
        auto y = apply_filter(lp, x);
        for (size_t i = 4000; i < y.size(); ++i)
            CHECK(y[i] == doctest::Approx(1.0).epsilon(1e-9));
    }

    SUBCASE("sine at cutoff is attenuated to 1/sqrt(2)") {
        std::vector<double> x(48000);
        for (size_t i = 0; i < x.size(); ++i)
            x[i] = std::sin(2.0 * M_PI * fc * double(i) / fs);
        auto y = apply_filter(lp, x);
        double amp = fit_sine_amplitude(y, fc, fs, 24000, 48000);
        CHECK(amp == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-2));
    }

    SUBCASE("stopband sine is strongly attenuated") {
        const double f = 18000.0;
        std::vector<double> x(48000);
        for (size_t i = 0; i < x.size(); ++i)
            x[i] = std::sin(2.0 * M_PI * f * double(i) / fs);
        auto y = apply_filter(lp, x);
        double amp = fit_sine_amplitude(y, f, fs, 24000, 48000);
        // Analytic response at 18 kHz is below -60 dB here.
        CHECK(amp < 1e-3);
    }
}

TEST_CASE("white noise through the lowpass loses stopband energy") {
    const double fs = 48000.0, fc = 6000.0;
    std::mt19937_64 rng(42);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> x(1 << 15);
    for (double& v : x) v = g(rng);
    auto lp = design_butterworth_lp(4, fc, fs);
    auto y = apply_filter(lp, x);

    auto mx = magnitude_spectrum(x, x.size());
    auto my = magnitude_spectrum(y, y.size());
    // Energy above 2x cutoff before vs after.
    size_t k0 = size_t(2.0 * fc / fs * double(x.size()));
    double ex = 0, ey = 0;
    for (size_t k = k0; k < mx.size(); ++k) {
        ex += mx[k] * mx[k];
        ey += my[k] * my[k];
    }
    CHECK(10.0 * std::log10(ex / ey) > 20.0);
}

TEST_CASE("normalize_peak scales to unit peak and is idempotent") {
    AudioSignal sig{{0.1, -0.4, 0.25}, 8000};
    auto n1 = normalize_peak(sig);
    double peak = 0;
    for (double s : n1.samples) peak = std::max(peak, std::abs(s));
    CHECK(peak == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(n1.samples[1] == doctest::Approx(-1.0));
    CHECK(n1.samples[0] == doctest::Approx(0.25));
    auto n2 = normalize_peak(n1);
    for (size_t i = 0; i < n1.samples.size(); ++i)
        CHECK(n2.samples[i] == n1.samples[i]);

    CHECK_THROWS_AS(normalize_peak({{}, 8000}), std::invalid_argument);
    CHECK_THROWS_AS(normalize_peak({{0.0, 0.0}, 8000}), std::invalid_argument);
}

TEST_CASE("resample preserves tone amplitude and output length") {
    SUBCASE("48k -> 12k length") {
        AudioSignal sig;
        sig.sample_rate = 48000;
        sig.samples.assign(48000, 0.0);
        auto out = resample(sig, 12000);
        CHECK(out.sample_rate == 12000);
        CHECK(out.samples.size() == 12000);
    }

    SUBCASE("1 kHz tone survives 44.1k -> 12k within 1%") {
        const double fs = 44100.0, f = 1000.0;
        AudioSignal sig;
        sig.sample_rate = 44100;
        sig.samples.resize(44100);
        for (size_t i = 0; i < sig.samples.size(); ++i)
            sig.samples[i] = 0.8 * std::sin(2.0 * M_PI * f * double(i) / fs);
        auto out = resample(sig, 12000);
        REQUIRE(out.samples.size() == 12000);
        // Skip the kernel half-width at both ends.
        double amp = fit_sine_amplitude(out.samples, f, 12000.0, 100,
                                        out.samples.size() - 100);
        CHECK(amp == doctest::Approx(0.8).epsilon(0.01));
    }

    SUBCASE("identity rate is bitwise identity") {
        AudioSignal sig{{0.1, 0.2, -0.3}, 12000};
        auto out = resample(sig, 12000);
        CHECK(out.samples == sig.samples);
    }

    SUBCASE("upsampling doubles the length") {
        AudioSignal sig;
        sig.sample_rate = 12000;
        sig.samples.assign(6000, 0.25);
        auto out = resample(sig, 24000);
        CHECK(out.samples.size() == 12000);
    }

    CHECK_THROWS_AS(resample({{0.1}, 12000}, 0), std::invalid_argument);
}

TEST_CASE("preprocess chains normalize, lowpass and resample") {
    const double fs = 48000.0;
    AudioSignal sig;
    sig.sample_rate = 48000;
    sig.samples.resize(48000);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 0.1);
    for (size_t i = 0; i < sig.samples.size(); ++i)
        sig.samples[i] = 0.3 * std::sin(2.0 * M_PI * 500.0 * double(i) / fs) +
                         g(rng);
    auto out = preprocess(sig);
    CHECK(out.sample_rate == 12000);
    CHECK(out.samples.size() == 12000);
    // The 500 Hz component is in the passband; after peak normalization
    // the tone amplitude must be larger than before.
    double amp = fit_sine_amplitude(out.samples, 500.0, 12000.0, 100, 11900);
    CHECK(amp > 0.3);
    CHECK(amp < 1.1);

    // A source already at the target rate skips filtering when the
    // cutoff exceeds Nyquist.
    AudioSignal low{{0.5, -0.25, 0.1}, 12000};
    auto same = preprocess(low);
    CHECK(same.samples.size() == 3);
    CHECK(same.samples[0] == doctest::Approx(1.0));
}
