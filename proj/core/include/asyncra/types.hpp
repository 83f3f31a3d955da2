#pragma once

#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace asyncra {

using cdouble = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

using Rng = std::mt19937_64;

// Draws from CN(0, variance): real and imaginary parts are independent N(0, variance / 2).
inline cdouble complex_normal(Rng& rng, double variance) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double scale = std::sqrt(variance / 2.0);
    const double re = gauss(rng);
    const double im = gauss(rng);
    return {scale * re, scale * im};
}

inline double abs2(cdouble z) { return z.real() * z.real() + z.imag() * z.imag(); }

// SplitMix64 finalizer; used to derive independent seeds from structured counters.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    return mix_seed(mix_seed(a) ^ (b + 0x632BE59BD9B4E019ULL));
}

}  // namespace asyncra
