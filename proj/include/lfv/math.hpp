#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "lfv/error.hpp"

namespace lfv {

/// Largest n for which binomial weights are formed in exact integer arithmetic.
inline constexpr int kExactBinomialMax = 60;

/// Exact C(n, k) for 0 <= n <= 60 (C(60, 30) < 2^57).
constexpr std::uint64_t binomial_exact(int n, int k) {
    if (n < 0 || n > kExactBinomialMax) throw ArgumentError("binomial_exact: n outside [0, 60]");
    if (k < 0 || k > n) return 0;
    if (k > n - k) k = n - k;
    std::uint64_t r = 1;
    // r * (n - k + i) / i stays integral at every step.
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    return r;
}

inline double log_binomial(int n, int k) {
    if (k < 0 || k > n) return -INFINITY;
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

/// C(n, k) as a double; exact up to n = 60, log-gamma beyond.
inline double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    if (n <= kExactBinomialMax) return static_cast<double>(binomial_exact(n, k));
    return std::exp(log_binomial(n, k));
}

inline double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

/// C(b, 2) without going through the general routine.
inline double pairs(double b) { return 0.5 * b * (b - 1.0); }

inline constexpr double kPi = std::numbers::pi;

}  // namespace lfv
