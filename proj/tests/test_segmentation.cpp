#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "coughml/segmentation.hpp"

using namespace coughml;

namespace {

// Straight-line reference simulator for the comparator semantics: scan
// explicit tolerance-length windows instead of the incremental run
// bookkeeping used by segment_coughs. Deliberately O(n * tol).
std::vector<CoughSegment> naive_segment(const AudioSignal& sig,
                                        const SegmentationParams& p,
                                        const std::string& uuid = "") {
    const size_t n = sig.samples.size();
    if (n == 0) return {};
    const size_t tol = std::max<size_t>(
        1, size_t(std::llround(p.tolerance_ms * 1e-3 * sig.sample_rate)));
    const size_t min_len =
        size_t(std::llround(p.min_cough_ms * 1e-3 * sig.sample_rate));
    const size_t pad = size_t(std::llround(p.pad_ms * 1e-3 * sig.sample_rate));

    double mean_power = 0.0;
    for (double s : sig.samples) mean_power += s * s;
    mean_power /= double(n);
    const double up = p.upper_mult * mean_power;
    const double lo = p.lower_mult * mean_power;

    auto window_holds = [&](size_t j, bool above) {
        if (j + tol > n) return false;
        for (size_t i = j; i < j + tol; ++i) {
            double pw = sig.samples[i] * sig.samples[i];
            if (above ? !(pw > up) : !(pw < lo)) return false;
        }
        return true;
    };

    std::vector<std::pair<size_t, size_t>> raw;
    size_t i = 0;
    while (i < n) {
        // Find the first full window above the upper threshold.
        size_t open_at = n;
        for (size_t j = i; j + tol <= n; ++j) {
            if (window_holds(j, true)) {
                open_at = j;
                break;
            }
        }
        if (open_at == n) break;
        // Find the first subsequent full window below the lower threshold.
        size_t close_at = n;
        for (size_t j = open_at + tol; j + tol <= n; ++j) {
            if (window_holds(j, false)) {
                close_at = j;
                break;
            }
        }
        raw.emplace_back(open_at, close_at);
        if (close_at == n) break;
        i = close_at + tol;
    }

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

bool same_segments(const std::vector<CoughSegment>& a,
                   const std::vector<CoughSegment>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i].start_sample != b[i].start_sample ||
            a[i].end_sample != b[i].end_sample)
            return false;
    return true;
}

// A loud burst whose squared value stays bounded away from zero, so
// the comparator sees a sustained above-threshold run.
void add_burst(std::vector<double>& x, size_t start, size_t len, double amp,
               std::mt19937_64& rng) {
    std::uniform_real_distribution<double> mag(0.85, 1.0);
    std::bernoulli_distribution flip(0.25);
    double sign = 1.0;
    for (size_t i = start; i < start + len && i < x.size(); ++i) {
        if (flip(rng)) sign = -sign;
        x[i] = sign * amp * mag(rng);
    }
}

AudioSignal random_signal(std::mt19937_64& rng, int sample_rate) {
    std::uniform_int_distribution<size_t> n_dist(500, 4000);
    std::uniform_int_distribution<int> n_bursts(0, 5);
    std::uniform_real_distribution<double> floor_amp(0.001, 0.08);
    std::uniform_real_distribution<double> burst_amp(0.4, 1.0);

    AudioSignal sig;
    sig.sample_rate = sample_rate;
    size_t n = n_dist(rng);
    sig.samples.resize(n);
    std::normal_distribution<double> g(0.0, floor_amp(rng));
    for (double& v : sig.samples) v = g(rng);
    int nb = n_bursts(rng);
    std::uniform_int_distribution<size_t> pos(0, n - 1);
    std::uniform_int_distribution<size_t> len(5, 600);
    for (int b = 0; b < nb; ++b)
        add_burst(sig.samples, pos(rng), len(rng), burst_amp(rng), rng);
    return sig;
}

}  // namespace

TEST_CASE("segment_coughs agrees exactly with the naive reference") {
    std::mt19937_64 rng(2024);
    SegmentationParams p;
    p.tolerance_ms = 5.0;
    p.min_cough_ms = 50.0;
    p.pad_ms = 20.0;
    const int fs = 1000;
    size_t nonempty = 0;
    for (int t = 0; t < 1000; ++t) {
        AudioSignal sig = random_signal(rng, fs);
        auto fast = segment_coughs(sig, p);
        auto ref = naive_segment(sig, p);
        REQUIRE(same_segments(fast, ref));
        if (!fast.empty()) ++nonempty;
    }
    // The corpus must actually exercise both branches.
    CHECK(nonempty > 200);
    CHECK(nonempty < 1000);
}

TEST_CASE("segment boundaries are invariant to amplitude scaling") {
    std::mt19937_64 rng(7);
    SegmentationParams p;
    p.tolerance_ms = 5.0;
    p.min_cough_ms = 50.0;
    p.pad_ms = 20.0;
    AudioSignal sig = random_signal(rng, 1000);
    add_burst(sig.samples, 100, 300, 0.9, rng);
    auto base = segment_coughs(sig, p);
    REQUIRE(!base.empty());
    std::uniform_real_distribution<double> sc(1e-4, 1e4);
    for (int t = 0; t < 100; ++t) {
        AudioSignal scaled = sig;
        double k = sc(rng);
        for (double& v : scaled.samples) v *= k;
        CHECK(same_segments(segment_coughs(scaled, p), base));
    }
}

TEST_CASE("a sustained burst produces one padded segment") {
    std::mt19937_64 rng(9);
    const int fs = 12000;
    AudioSignal sig;
    sig.sample_rate = fs;
    sig.samples.assign(size_t(2.0 * fs), 0.0);
    std::normal_distribution<double> g(0.0, 0.01);
    for (double& v : sig.samples) v = g(rng);
    // 300 ms burst starting at 0.8 s.
    size_t b0 = size_t(0.8 * fs), blen = size_t(0.3 * fs);
    add_burst(sig.samples, b0, blen, 0.8, rng);

    SegmentationParams p;  // defaults: 10 ms tol, 200 ms min, 200 ms pad
    auto segs = segment_coughs(sig, p, "rec1");
    REQUIRE(segs.size() == 1);
    CHECK(segs[0].recording_uuid == "rec1");
    size_t pad = size_t(0.2 * fs);
    // Opens at the burst start, closes shortly after the burst end.
    CHECK(segs[0].start_sample >= b0 - pad - 24);
    CHECK(segs[0].start_sample <= b0 - pad + 24);
    CHECK(segs[0].end_sample >= b0 + blen + pad - 24);
    CHECK(segs[0].end_sample <= b0 + blen + pad + size_t(0.02 * fs));
}

TEST_CASE("bursts shorter than the minimum length are rejected") {
    std::mt19937_64 rng(13);
    const int fs = 12000;
    AudioSignal sig;
    sig.sample_rate = fs;
    sig.samples.assign(size_t(2.0 * fs), 0.0);
    std::normal_distribution<double> g(0.0, 0.01);
    for (double& v : sig.samples) v = g(rng);
    add_burst(sig.samples, size_t(0.9 * fs), size_t(0.1 * fs), 0.8, rng);
    SegmentationParams p;
    CHECK(segment_coughs(sig, p).empty());
}

TEST_CASE("degenerate signals produce no segments") {
    SegmentationParams p;
    CHECK(segment_coughs({{}, 12000}, p).empty());
    AudioSignal silence;
    silence.sample_rate = 12000;
    silence.samples.assign(24000, 0.0);
    CHECK(segment_coughs(silence, p).empty());
    // A constant signal never exceeds twice its own mean power.
    AudioSignal flat;
    flat.sample_rate = 12000;
    flat.samples.assign(24000, 0.5);
    CHECK(segment_coughs(flat, p).empty());
}

TEST_CASE("two nearby bursts merge after padding") {
    std::mt19937_64 rng(21);
    const int fs = 12000;
    AudioSignal sig;
    sig.sample_rate = fs;
    sig.samples.assign(size_t(4.0 * fs), 0.0);
    std::normal_distribution<double> g(0.0, 0.01);
    for (double& v : sig.samples) v = g(rng);
    // Two 300 ms bursts separated by 250 ms: padding (200 + 200 ms)
    // overlaps the gap, so they merge into one segment.
    add_burst(sig.samples, size_t(1.0 * fs), size_t(0.3 * fs), 0.8, rng);
    add_burst(sig.samples, size_t(1.55 * fs), size_t(0.3 * fs), 0.8, rng);
    SegmentationParams p;
    auto segs = segment_coughs(sig, p);
    CHECK(segs.size() == 1);

    // Same bursts 1.5 s apart stay separate.
    AudioSignal far = sig;
    std::fill(far.samples.begin(), far.samples.end(), 0.0);
    for (double& v : far.samples) v = g(rng);
    add_burst(far.samples, size_t(0.5 * fs), size_t(0.3 * fs), 0.8, rng);
    add_burst(far.samples, size_t(2.3 * fs), size_t(0.3 * fs), 0.8, rng);
    CHECK(segment_coughs(far, p).size() == 2);
}

TEST_CASE("estimate_snr closed forms") {
    const int fs = 1000;
    AudioSignal sig;
    sig.sample_rate = fs;
    sig.samples.assign(1000, 0.05);
    for (size_t i = 200; i < 400; ++i) sig.samples[i] = 0.5;
    std::vector<CoughSegment> segs = {{200, 400, "r"}};
    // 20*log10(0.5/0.05) = 20 dB exactly.
    CHECK(estimate_snr(sig, segs) == doctest::Approx(20.0).epsilon(1e-12));

    SUBCASE("no segments throws") {
        CHECK_THROWS_AS(estimate_snr(sig, {}), std::invalid_argument);
    }
    SUBCASE("full coverage throws") {
        std::vector<CoughSegment> all = {{0, 1000, "r"}};
        CHECK_THROWS_AS(estimate_snr(sig, all), std::invalid_argument);
    }
    SUBCASE("silent background saturates") {
        AudioSignal clean;
        clean.sample_rate = fs;
        clean.samples.assign(1000, 0.0);
        for (size_t i = 200; i < 400; ++i) clean.samples[i] = 0.5;
        CHECK(estimate_snr(clean, segs) == doctest::Approx(200.0));
    }
}
