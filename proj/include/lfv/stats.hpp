#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "lfv/error.hpp"

namespace lfv {

struct MeanSe {
    double mean = NAN;
    double se = NAN;
    double sd = NAN;
    std::size_t n = 0;
};

inline MeanSe mean_se(std::span<const double> xs) {
    MeanSe r;
    r.n = xs.size();
    if (xs.empty()) return r;
    // Two-pass for stability.
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    r.mean = m;
    if (xs.size() > 1) {
        r.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
        r.se = r.sd / std::sqrt(static_cast<double>(xs.size()));
    }
    return r;
}

inline double median(std::vector<double> xs) {
    if (xs.empty()) return NAN;
    const std::size_t mid = xs.size() / 2;
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
    const double hi = xs[mid];
    if (xs.size() % 2) return hi;
    const double lo = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

struct LinearFit {
    double slope = NAN;
    double intercept = NAN;
    double slope_se = NAN;
    double max_abs_residual = NAN;
};

inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ArgumentError("linear_fit needs two or more (x, y) pairs");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) throw ArgumentError("linear_fit: x values are all equal");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double rss = 0.0;
    f.max_abs_residual = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        rss += r * r;
        f.max_abs_residual = std::max(f.max_abs_residual, std::abs(r));
    }
    if (x.size() > 2) f.slope_se = std::sqrt(rss / (n - 2.0) / sxx);
    return f;
}

struct ChiSquareResult {
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
};

inline double chi_square_upper_tail(double stat, int dof) {
    if (dof <= 0) return 1.0;
    boost::math::chi_squared dist(dof);
    return boost::math::cdf(boost::math::complement(dist, std::max(0.0, stat)));
}

/// Goodness of fit of counts against probabilities. Adjacent categories are
/// pooled until each expected count reaches min_expected.
inline ChiSquareResult chi_square_gof(std::span<const double> observed, std::span<const double> probs,
                                      double min_expected = 5.0) {
    if (observed.size() != probs.size() || observed.empty()) throw ArgumentError("chi_square_gof: size mismatch");
    const double total = std::accumulate(observed.begin(), observed.end(), 0.0);
    const double psum = std::accumulate(probs.begin(), probs.end(), 0.0);
    std::vector<double> o, e;
    double ob = 0.0, eb = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        ob += observed[i];
        eb += total * probs[i] / psum;
        if (eb >= min_expected) {
            o.push_back(ob);
            e.push_back(eb);
            ob = eb = 0.0;
        }
    }
    if (eb > 0.0 || ob > 0.0) {
        if (e.empty()) {
            o.push_back(ob);
            e.push_back(eb);
        } else {
            o.back() += ob;
            e.back() += eb;
        }
    }
    ChiSquareResult r;
    for (std::size_t i = 0; i < o.size(); ++i) {
        if (e[i] > 0.0) r.statistic += (o[i] - e[i]) * (o[i] - e[i]) / e[i];
        else if (o[i] > 0.0) r.statistic = INFINITY;
    }
    r.dof = static_cast<int>(o.size()) - 1;
    r.p_value = std::isfinite(r.statistic) ? chi_square_upper_tail(r.statistic, r.dof) : 0.0;
    return r;
}

/// Homogeneity of two count vectors over the same categories (2 x K table).
/// Categories with a small pooled count are merged with their neighbours.
inline ChiSquareResult chi_square_two_sample(std::span<const double> a, std::span<const double> b,
                                             double min_expected = 5.0) {
    if (a.size() != b.size() || a.empty()) throw ArgumentError("chi_square_two_sample: size mismatch");
    const double na = std::accumulate(a.begin(), a.end(), 0.0);
    const double nb = std::accumulate(b.begin(), b.end(), 0.0);
    const double share = std::min(na, nb) / (na + nb);
    std::vector<double> pa, pb;
    double ca = 0.0, cb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ca += a[i];
        cb += b[i];
        if ((ca + cb) * share >= min_expected) {
            pa.push_back(ca);
            pb.push_back(cb);
            ca = cb = 0.0;
        }
    }
    if (ca + cb > 0.0) {
        if (pa.empty()) {
            pa.push_back(ca);
            pb.push_back(cb);
        } else {
            pa.back() += ca;
            pb.back() += cb;
        }
    }
    ChiSquareResult r;
    const double n = na + nb;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const double col = pa[i] + pb[i];
        const double ea = col * na / n, eb = col * nb / n;
        if (ea > 0.0) r.statistic += (pa[i] - ea) * (pa[i] - ea) / ea;
        if (eb > 0.0) r.statistic += (pb[i] - eb) * (pb[i] - eb) / eb;
    }
    r.dof = static_cast<int>(pa.size()) - 1;
    r.p_value = chi_square_upper_tail(r.statistic, r.dof);
    return r;
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Kolmogorov distribution upper tail Q(lambda) = 2 sum (-1)^(j-1) exp(-2 j^2 lambda^2).
inline double kolmogorov_upper_tail(double lambda) {
    if (lambda < 0.2) return 1.0;
    double sum = 0.0;
    for (int j = 1; j <= 200; ++j) {
        const double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += (j % 2 ? 1.0 : -1.0) * term;
        if (term < 1e-17) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// (Stephens' small-sample correction of the effective size).
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw ArgumentError("ks_two_sample needs two nonempty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    KsResult r;
    r.statistic = d;
    const double ne = std::sqrt(na * nb / (na + nb));
    r.p_value = kolmogorov_upper_tail((ne + 0.12 + 0.11 / ne) * d);
    return r;
}

}  // namespace lfv
