#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "lfv/error.hpp"
#include "lfv/lookdown.hpp"
#include "lfv/quadrature.hpp"
#include "lfv/stats.hpp"

namespace lfv {

/// Unit-peak isotropic Gaussian exp(-|x - center|^2 / (2 width^2)), scaled by `height`.
struct GaussianTest {
    std::vector<double> center;
    double width = 1.0;
    double height = 1.0;

    double operator()(std::span<const double> x) const {
        double r2 = 0.0;
        for (std::size_t c = 0; c < center.size(); ++c) r2 += (x[c] - center[c]) * (x[c] - center[c]);
        return height * std::exp(-r2 / (2.0 * width * width));
    }

    /// Heat flow: E f(x + B_s) is again Gaussian with variance width^2 + s.
    GaussianTest heat(double s) const {
        const double v0 = width * width, v1 = v0 + s;
        return {center, std::sqrt(v1), height * std::pow(v0 / v1, 0.5 * static_cast<double>(center.size()))};
    }

    /// Pointwise product of two Gaussians is a Gaussian.
    friend GaussianTest operator*(const GaussianTest& a, const GaussianTest& b) {
        const double va = a.width * a.width, vb = b.width * b.width, vs = va + vb;
        GaussianTest p;
        p.center.resize(a.center.size());
        double gap2 = 0.0;
        for (std::size_t c = 0; c < a.center.size(); ++c) {
            p.center[c] = (vb * a.center[c] + va * b.center[c]) / vs;
            gap2 += (a.center[c] - b.center[c]) * (a.center[c] - b.center[c]);
        }
        p.width = std::sqrt(va * vb / vs);
        p.height = a.height * b.height * std::exp(-gap2 / (2.0 * vs));
        return p;
    }
};

inline void validate(const GaussianTest& f, int d) {
    if (static_cast<int>(f.center.size()) != d) throw ArgumentError("test-function center must have d coordinates");
    if (!(f.width > 0.0) || !std::isfinite(f.width)) throw ArgumentError("test-function width must be positive");
}

/// E <X_T, f1><X_T, f2> for the process started from a unit mass at the
/// origin: two lineages stay apart for lookback s with probability e^{-rs};
/// before that both follow the heat flow independently, after it they share
/// one path. r is the pair merger rate lambda_2 (the total mass).
inline double second_moment_analytic(double r, int d, double T, const GaussianTest& f1, const GaussianTest& f2) {
    validate(f1, d);
    validate(f2, d);
    if (!(T >= 0.0)) throw ArgumentError("T must be nonnegative");
    const std::vector<double> origin(static_cast<std::size_t>(d), 0.0);
    const double apart = std::exp(-r * T) * f1.heat(T)(origin) * f2.heat(T)(origin);
    if (T == 0.0 || r == 0.0) return apart;
    auto merged = [&](double s) { return r * std::exp(-r * s) * (f1.heat(s) * f2.heat(s)).heat(T - s)(origin); };
    return apart + integrate_adaptive(merged, 0.0, T, 1e-10).value;
}

struct SecondMomentCheck {
    double analytic = 0.0;
    double mc_mean = 0.0;
    double mc_se = 0.0;
    double z = 0.0;
    int replicas = 0;
    int n = 0;
};

/// <X^n_T, f1> <X^n_T, f2> for one lookdown replica started at the origin.
inline double empirical_product(const LookdownState& s, const GaussianTest& f1, const GaussianTest& f2) {
    double a = 0.0, b = 0.0;
    for (int i = 1; i <= s.n; ++i) {
        a += f1(s.at(i));
        b += f2(s.at(i));
    }
    return a / s.n * (b / s.n);
}

inline SecondMomentCheck summarize_second_moment(double analytic, std::span<const double> products, int n) {
    SecondMomentCheck c;
    c.analytic = analytic;
    const auto ms = mean_se(products);
    c.mc_mean = ms.mean;
    c.mc_se = ms.se;
    c.replicas = static_cast<int>(products.size());
    c.n = n;
    c.z = ms.se > 0.0 ? (ms.mean - analytic) / ms.se : (ms.mean == analytic ? 0.0 : INFINITY);
    return c;
}

}  // namespace lfv
