#pragma once

// Shared numeric helpers: moments, regularized incomplete beta,
// Welch's t-test (with log-domain p for extreme statistics), content
// hashing for the run manifest.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace coughml {

inline double mean(const std::vector<double>& v) {
    if (v.empty()) throw std::invalid_argument("mean of empty vector");
    return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

inline double variance(const std::vector<double>& v, bool sample = true) {
    double m = mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    size_t d = sample && v.size() > 1 ? v.size() - 1 : v.size();
    return acc / double(d);
}

inline double stddev(const std::vector<double>& v, bool sample = true) {
    return std::sqrt(variance(v, sample));
}

namespace detail {

inline double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Continued fraction for the regularized incomplete beta (Lentz).
inline double betacf(double a, double b, double x) {
    const double tiny = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-14) break;
    }
    return h;
}

}  // namespace detail

// log of I_x(a, b); stays finite far into the tail where I_x underflows.
inline double log_reg_inc_beta(double a, double b, double x) {
    if (x <= 0.0) return -INFINITY;
    if (x >= 1.0) return 0.0;
    double log_front =
        a * std::log(x) + b * std::log1p(-x) - detail::log_beta(a, b);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return log_front + std::log(detail::betacf(a, b, x) / a);
    }
    // Use symmetry: I_x(a,b) = 1 - I_{1-x}(b,a)
    double log_other = b * std::log1p(-x) + a * std::log(x) -
                       detail::log_beta(b, a) +
                       std::log(detail::betacf(b, a, 1.0 - x) / b);
    return std::log1p(-std::exp(log_other));
}

inline double reg_inc_beta(double a, double b, double x) {
    return std::exp(log_reg_inc_beta(a, b, x));
}

struct TTestResult {
    double t = 0.0;
    double df = 0.0;
    double p = 1.0;         // two-sided; underflows to 0 for huge |t|
    double log10_p = 0.0;   // exact in log domain, usable when p == 0
};

// Welch's unequal-variance two-sample t-test, two-sided.
inline TTestResult welch_t_test(const std::vector<double>& a,
                                const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2)
        throw std::invalid_argument("welch_t_test: need >= 2 samples per group");
    double ma = mean(a), mb = mean(b);
    double va = variance(a) / double(a.size());
    double vb = variance(b) / double(b.size());
    if (va + vb == 0.0) {
        TTestResult r;
        r.t = 0.0;
        r.df = double(a.size() + b.size() - 2);
        r.p = ma == mb ? 1.0 : 0.0;
        r.log10_p = ma == mb ? 0.0 : -INFINITY;
        return r;
    }
    TTestResult r;
    r.t = (ma - mb) / std::sqrt(va + vb);
    r.df = (va + vb) * (va + vb) /
           (va * va / double(a.size() - 1) + vb * vb / double(b.size() - 1));
    // p = I_x(df/2, 1/2) with x = df / (df + t^2)
    double x = r.df / (r.df + r.t * r.t);
    double logp = log_reg_inc_beta(r.df / 2.0, 0.5, x);
    r.log10_p = logp / std::log(10.0);
    r.p = std::exp(logp);
    return r;
}

// FNV-1a 64-bit; content fingerprints in the run manifest.
inline uint64_t fnv1a64(const void* data, size_t len, uint64_t seed = 0xcbf29ce484222325ULL) {
    const uint8_t* p = static_cast<const uint8_t*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string fnv1a64_hex(const std::string& s) {
    uint64_t h = fnv1a64(s.data(), s.size());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace coughml
