#pragma once

// Iterative radix-2 FFT plus real-signal helpers.

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace coughml {

inline size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// In-place complex FFT; length must be a power of two.
inline void fft_inplace(std::vector<std::complex<double>>& a, bool inverse = false) {
    const size_t n = a.size();
    if (n == 0 || (n & (n - 1)))
        throw std::invalid_argument("fft length must be a power of two");
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        double ang = 2.0 * M_PI / double(len) * (inverse ? 1.0 : -1.0);
        std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0);
            for (size_t k = 0; k < len / 2; ++k) {
                auto u = a[i + k];
                auto v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse)
        for (auto& x : a) x /= double(n);
}

// Magnitude spectrum of a real signal, zero-padded to a power of two.
// Returns bins 0..N/2 inclusive; bin spacing = sample_rate / N.
inline std::vector<double> magnitude_spectrum(const std::vector<double>& x,
                                              size_t min_len = 0) {
    size_t n = next_pow2(std::max(x.size(), std::max(min_len, size_t(2))));
    std::vector<std::complex<double>> a(n);
    for (size_t i = 0; i < x.size(); ++i) a[i] = x[i];
    fft_inplace(a);
    std::vector<double> mag(n / 2 + 1);
    for (size_t i = 0; i <= n / 2; ++i) mag[i] = std::abs(a[i]);
    return mag;
}

}  // namespace coughml
