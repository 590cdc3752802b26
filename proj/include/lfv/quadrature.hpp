#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "lfv/error.hpp"
#include "lfv/format.hpp"
#include "lfv/measure.hpp"

namespace lfv {

struct QuadratureResult {
    double value = 0.0;
    double abs_error = 0.0;
};

namespace detail {

// 7-point Gauss / 15-point Kronrod pair on [-1, 1]; nodes from the outside in,
// the Gauss nodes are the odd entries.
inline constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851, 0.864864423359769072789712788640926,
    0.741531185599394439863864773280788, 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204, 0.104790010322250183839876322541518,
    0.140653259715525918745189590510238, 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kGaussWeights[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                            0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b, value, error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

/// One G7-K15 application. The raw |K - G| is rescaled as in QUADPACK so
/// that smooth pieces are not over-refined, with a roundoff floor.
template <class F>
Segment kronrod15(F& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    const double fc = f(c);
    double k = fc * kKronrodWeights[7];
    double g = fc * kGaussWeights[3];
    double abs_k = std::abs(k);
    double fv1[7], fv2[7];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kKronrodNodes[j];
        fv1[j] = f(c - dx);
        fv2[j] = f(c + dx);
        k += kKronrodWeights[j] * (fv1[j] + fv2[j]);
        abs_k += kKronrodWeights[j] * (std::abs(fv1[j]) + std::abs(fv2[j]));
        if (j % 2 == 1) g += kGaussWeights[j / 2] * (fv1[j] + fv2[j]);
    }
    const double mean = 0.5 * k;
    double asc = kKronrodWeights[7] * std::abs(fc - mean);
    for (int j = 0; j < 7; ++j) asc += kKronrodWeights[j] * (std::abs(fv1[j] - mean) + std::abs(fv2[j] - mean));
    double err = std::abs((k - g) * h);
    asc *= std::abs(h);
    abs_k *= std::abs(h);
    if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
    const double eps = std::numeric_limits<double>::epsilon();
    if (abs_k > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(err, 50.0 * eps * abs_k);
    return {a, b, k * h, err};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod over [a, b]: the segment with the largest
/// error estimate is bisected until the total meets rel_tol. Throws
/// NumericError carrying the accuracy reached when the budget runs out.
template <class F>
QuadratureResult integrate_adaptive(F f, double a, double b, double rel_tol, int max_segments = 4000) {
    std::priority_queue<detail::Segment> heap;
    auto first = detail::kronrod15(f, a, b);
    double value = first.value, error = first.error;
    heap.push(first);
    auto done = [&] { return error <= rel_tol * std::abs(value) || error <= 1e-300; };
    while (!done() && static_cast<int>(heap.size()) < max_segments) {
        auto s = heap.top();
        const double mid = 0.5 * (s.a + s.b);
        if (!(mid > s.a && mid < s.b)) break;
        heap.pop();
        auto l = detail::kronrod15(f, s.a, mid);
        auto r = detail::kronrod15(f, mid, s.b);
        value += l.value + r.value - s.value;
        error += l.error + r.error - s.error;
        heap.push(l);
        heap.push(r);
    }
    // Re-sum; the running totals carry cancellation.
    value = 0.0;
    error = 0.0;
    for (auto h = heap; !h.empty(); h.pop()) {
        value += h.top().value;
        error += h.top().error;
    }
    if (!std::isfinite(value)) throw NumericError("quadrature produced a non-finite value");
    const double achieved = value != 0.0 ? error / std::abs(value) : error;
    if (!done()) throw NumericError("quadrature did not converge (relative error " + format_double(achieved) + ")", achieved);
    return {value, error};
}

namespace detail {

inline double log_add(double x, double y) {
    if (x == -INFINITY) return y;
    if (y == -INFINITY) return x;
    double m = std::max(x, y);
    return m + std::log1p(std::exp(-std::abs(x - y)));
}

/// log of  int_{lo}^{hi} x^e0 (1-x)^e1 dx  with endpoint singularities absorbed
/// by x = u^{1/(1+e0)} near 0 (resp. 1 - x = v^{1/(1+e1)} near 1). The
/// integrand is scaled by its peak so that huge b does not underflow.
inline double log_power_integral(double lo, double hi, double e0, double e1, double rel_tol, double& rel_err) {
    const bool sing0 = (lo == 0.0 && e0 < 0.0);
    const bool sing1 = (hi == 1.0 && e1 < 0.0);
    if (lo == 0.0 && !(e0 > -1.0)) throw ArgumentError("integrand not integrable at 0");
    if (hi == 1.0 && !(e1 > -1.0)) throw ArgumentError("integrand not integrable at 1");

    auto logf = [&](double x) {
        double l = 0.0;
        if (e0 != 0.0) l += e0 * std::log(x);
        if (e1 != 0.0) l += e1 * std::log1p(-x);
        return l;
    };

    // Peak location of the regular part, used for scaling and breakpoints.
    double mode = -1.0;
    if (e0 > 0.0 && e1 > 0.0) mode = e0 / (e0 + e1);
    else if (e0 > 0.0 && e1 <= 0.0) mode = hi;
    else if (e0 <= 0.0 && e1 > 0.0) mode = lo;

    double log_scale = -INFINITY;
    for (double x : {lo, hi, std::clamp(mode, lo, hi)}) {
        if ((x == 0.0 && e0 < 0.0) || (x == 1.0 && e1 < 0.0)) continue;
        if ((x == 0.0 && e0 > 0.0) || (x == 1.0 && e1 > 0.0)) continue;
        log_scale = std::max(log_scale, logf(x));
    }
    if (sing0 || sing1) log_scale = std::max(log_scale, 0.0);
    if (!std::isfinite(log_scale)) log_scale = 0.0;

    std::vector<double> cuts{lo, hi};
    if (lo < 0.5 && 0.5 < hi) cuts.push_back(0.5);
    if (mode > lo && mode < hi) {
        double s = std::sqrt(mode * (1.0 - mode) / (e0 + e1 + 1.0));
        for (double w : {0.0, 1.0, 3.0, 6.0, 12.0, 25.0, 50.0}) {
            cuts.push_back(mode - w * s);
            cuts.push_back(mode + w * s);
        }
    }
    if (sing0 || (lo == 0.0 && e1 > 0.0))
        for (double j : {1.0, 4.0, 16.0, 64.0}) cuts.push_back(j / (e1 + 1.0));
    if (sing1 || (hi == 1.0 && e0 > 0.0))
        for (double j : {1.0, 4.0, 16.0, 64.0}) cuts.push_back(1.0 - j / (e0 + 1.0));
    cuts.erase(std::remove_if(cuts.begin(), cuts.end(), [&](double c) { return !(c >= lo && c <= hi); }), cuts.end());
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    double total = 0.0, err = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double x0 = cuts[i], x1 = cuts[i + 1];
        QuadratureResult r;
        if (x0 == 0.0 && sing0) {
            double p = 1.0 / (1.0 + e0);
            auto g = [&](double u) {
                double x = std::pow(u, p);
                return p * std::exp(e1 * std::log1p(-x) - log_scale);
            };
            r = integrate_adaptive(g, 0.0, std::pow(x1, 1.0 + e0), rel_tol);
        } else if (x1 == 1.0 && sing1) {
            double q = 1.0 / (1.0 + e1);
            auto g = [&](double v) {
                double y = std::pow(v, q);
                return q * std::exp(e0 * std::log1p(-y) - log_scale);
            };
            r = integrate_adaptive(g, 0.0, std::pow(1.0 - x0, 1.0 + e1), rel_tol);
        } else {
            r = integrate_adaptive([&](double x) { return std::exp(logf(x) - log_scale); }, x0, x1, rel_tol);
        }
        total += r.value;
        err += r.abs_error;
    }
    rel_err = total > 0.0 ? err / total : 0.0;
    if (total <= 0.0) return -INFINITY;
    return std::log(total) + log_scale;
}

}  // namespace detail

/// log of  int_0^1 x^(k-2) (1-x)^(b-k) rho(x) dx  for a density given as power
/// pieces, to relative accuracy rel_tol. Returns -inf for a zero integral.
inline double log_density_moment(const std::vector<PowerPiece>& pieces, int b, int k, double rel_tol = 1e-10) {
    double acc = -INFINITY;
    for (const auto& p : pieces) {
        if (p.scale <= 0.0 || p.hi <= p.lo) continue;
        double rel_err = 0.0;
        double l = detail::log_power_integral(p.lo, p.hi, k - 2 + p.a, b - k + p.c, rel_tol, rel_err);
        if (rel_err > rel_tol)
            throw NumericError("lambda quadrature reached only relative accuracy " + format_double(rel_err), rel_err);
        acc = detail::log_add(acc, l + std::log(p.scale));
    }
    return acc;
}

}  // namespace lfv
