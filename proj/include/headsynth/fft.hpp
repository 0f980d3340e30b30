#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "headsynth/errors.hpp"

namespace headsynth {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

struct Spectrum {
    std::vector<std::complex<double>> coeff;

    std::size_t size() const { return coeff.size(); }

    // For a real signal the negative-frequency half mirrors the positive one.
    double hermitian_residue() const {
        const std::size_t n = coeff.size();
        double worst = 0.0;
        for (std::size_t j = 1; j < n - j; ++j)
            worst = std::max(worst, std::abs(coeff[j] - std::conj(coeff[n - j])));
        if (n > 1) worst = std::max(worst, std::abs(coeff[n / 2].imag()));
        worst = std::max(worst, std::abs(coeff[0].imag()));
        return worst;
    }
};

namespace detail {

// Iterative radix-2 Cooley-Tukey, in place. sign = -1 forward, +1 inverse.
inline void fft_radix2(std::vector<std::complex<double>>& a, int sign) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * 3.14159265358979323846 / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                const std::complex<double> u = a[i + j];
                const std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

} // namespace detail

// DFT of a real signal zero-padded to n (n a power of two, n >= signal size).
inline Spectrum fft(std::span<const double> signal, std::size_t n) {
    if (!is_power_of_two(n)) throw ArgumentError("fft: n must be a power of two");
    if (signal.size() > n) throw ArgumentError("fft: signal longer than transform length");
    Spectrum s;
    s.coeff.assign(n, {0.0, 0.0});
    for (std::size_t i = 0; i < signal.size(); ++i) s.coeff[i] = {signal[i], 0.0};
    detail::fft_radix2(s.coeff, -1);
    return s;
}

inline std::vector<std::complex<double>> ifft_complex(const Spectrum& spec) {
    if (!is_power_of_two(spec.size())) throw ArgumentError("ifft: spectrum length must be a power of two");
    std::vector<std::complex<double>> a = spec.coeff;
    detail::fft_radix2(a, +1);
    const double inv_n = 1.0 / static_cast<double>(a.size());
    for (auto& v : a) v *= inv_n;
    return a;
}

// Inverse transform of a (nominally Hermitian) spectrum; reports the largest
// imaginary residue before it is discarded.
inline std::vector<double> ifft(const Spectrum& spec, double* max_imag = nullptr) {
    auto a = ifft_complex(spec);
    std::vector<double> out(a.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = a[i].real();
        worst = std::max(worst, std::abs(a[i].imag()));
    }
    if (max_imag) *max_imag = worst;
    return out;
}

} // namespace headsynth
