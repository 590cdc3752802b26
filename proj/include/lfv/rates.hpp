#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "lfv/error.hpp"
#include "lfv/math.hpp"
#include "lfv/measure.hpp"
#include "lfv/quadrature.hpp"

namespace lfv {

inline constexpr double kRateRelTol = 1e-10;

// ---------------------------------------------------------------------------
// Single rates lambda_{b,k}
// ---------------------------------------------------------------------------

/// log of the density contribution to lambda_{b,k}; -inf if there is none.
inline double log_lambda_density(const LambdaMeasure& mu, int b, int k) {
    if (!mu.has_density()) return -INFINITY;
    if (const auto* beta = mu.as_beta()) {
        const double be = beta->beta;
        return log_beta(k - be, b - k + be) - log_beta(2.0 - be, be);
    }
    return log_density_moment(mu.pieces(), b, k, kRateRelTol);
}

/// Density contribution by quadrature only, also for Beta densities. Kept as
/// the independent route against the Beta closed form.
inline double lambda_density_quadrature(const LambdaMeasure& mu, int b, int k) {
    if (!mu.has_density()) return 0.0;
    return std::exp(log_density_moment(mu.pieces(), b, k, kRateRelTol));
}

/// lambda_{b,k} = int x^(k-2) (1-x)^(b-k) Lambda(dx): the rate at which one
/// given k-tuple out of b blocks merges.
inline double lambda_bk(const LambdaMeasure& mu, int b, int k) {
    if (!(b >= k && k >= 2)) throw ArgumentError("lambda_bk requires b >= k >= 2");
    double v = 0.0;
    if (k == 2) v += mu.atom0();
    if (k == b) v += mu.atom1();
    double ld = log_lambda_density(mu, b, k);
    if (ld > -INFINITY) v += std::exp(ld);
    return v;
}

// ---------------------------------------------------------------------------
// Binomially weighted rows: w_k = C(b,k) lambda_{b,k}, k = 2..b
// ---------------------------------------------------------------------------

/// Row of merger weights w_k = C(b,k) lambda_{b,k}; index k-2. Integer
/// binomials up to b = 60, log-space beyond. Throws NumericError on overflow.
inline std::vector<double> merger_weights(const LambdaMeasure& mu, int b) {
    if (b < 2) throw ArgumentError("merger_weights requires b >= 2");
    std::vector<double> w(static_cast<std::size_t>(b - 1), 0.0);
    if (const auto* beta = mu.as_beta()) {
        const double be = beta->beta;
        if (b <= kExactBinomialMax) {
            for (int k = 2; k <= b; ++k)
                w[k - 2] = static_cast<double>(binomial_exact(b, k)) * std::exp(log_lambda_density(mu, b, k));
        } else {
            // w_{k+1} / w_k = (b-k)/(k+1) * (k-beta)/(b-k-1+beta); start from log w_2.
            double lw = log_binomial(b, 2) + log_lambda_density(mu, b, 2);
            w[0] = std::exp(lw);
            for (int k = 2; k < b; ++k)
                w[k - 1] = w[k - 2] * (static_cast<double>(b - k) / (k + 1)) * ((k - be) / (b - k - 1 + be));
        }
    } else if (mu.has_density()) {
        const auto pieces = mu.pieces();
        for (int k = 2; k <= b; ++k) {
            double ld = log_density_moment(pieces, b, k, kRateRelTol);
            if (ld == -INFINITY) continue;
            w[k - 2] = b <= kExactBinomialMax ? static_cast<double>(binomial_exact(b, k)) * std::exp(ld)
                                              : std::exp(log_binomial(b, k) + ld);
        }
    }
    w[0] += mu.atom0() * pairs(b);
    w[b - 2] += mu.atom1();
    for (double x : w)
        if (!std::isfinite(x)) throw NumericError("merger weight overflow at b = " + std::to_string(b));
    return w;
}

/// gamma_{b,m} from a merger-weight row: sum_k min(k-1, b-m) w_k.
inline double gamma_bm_from_row(std::span<const double> w, int b, int m) {
    double g = 0.0;
    for (int k = 2; k <= b; ++k) g += static_cast<double>(std::min(k - 1, b - m)) * w[k - 2];
    return g;
}

// ---------------------------------------------------------------------------
// Rate table for one b
// ---------------------------------------------------------------------------

struct RateTable {
    int b = 0;
    int m = 0;
    std::vector<double> lambda_bk;  ///< k = 2..b at index k-2
    double lambda_b = 0.0;          ///< total coalescence rate
    double gamma_b = 0.0;           ///< rate of decrease of the block count
    double gamma_bm = 0.0;          ///< decrease rate of the chain absorbed at m
    std::vector<double> mu_bk;      ///< block-counting transition rates b -> k, k = m..b-1 at index k-m
};

inline RateTable rate_summary(const LambdaMeasure& mu, int b, int m) {
    if (!(b > m && m >= 2)) throw ArgumentError("rate_summary requires b > m >= 2");
    RateTable t;
    t.b = b;
    t.m = m;
    const auto w = merger_weights(mu, b);
    t.lambda_bk.resize(w.size());
    for (int k = 2; k <= b; ++k) {
        t.lambda_bk[k - 2] = lambda_bk(mu, b, k);
        t.lambda_b += w[k - 2];
        t.gamma_b += (k - 1) * w[k - 2];
    }
    t.gamma_bm = gamma_bm_from_row(w, b, m);
    t.mu_bk.assign(static_cast<std::size_t>(b - m), 0.0);
    for (int k = 2; k <= b; ++k) {
        int target = std::max(b - k + 1, m);
        t.mu_bk[target - m] += w[k - 2];
    }
    return t;
}

// ---------------------------------------------------------------------------
// Consistency lambda_{b,k} = lambda_{b+1,k} + lambda_{b+1,k+1}
// ---------------------------------------------------------------------------

struct ConsistencyReport {
    int b_max = 0;
    double max_abs_residual = 0.0;
    double max_scaled_residual = 0.0;  ///< residual / max(1, lambda_{b,k})
    int worst_b = 0;
    int worst_k = 0;
    bool pass = false;
};

inline ConsistencyReport check_consistency(const LambdaMeasure& mu, int b_max, double tol = 1e-8) {
    if (b_max < 2) throw ArgumentError("check_consistency requires b_max >= 2");
    ConsistencyReport r;
    r.b_max = b_max;
    for (int b = 2; b <= b_max; ++b) {
        for (int k = 2; k <= b; ++k) {
            double lhs = lambda_bk(mu, b, k);
            double res = std::abs(lhs - lambda_bk(mu, b + 1, k) - lambda_bk(mu, b + 1, k + 1));
            double scaled = res / std::max(1.0, lhs);
            if (scaled > r.max_scaled_residual) {
                r.max_scaled_residual = scaled;
                r.worst_b = b;
                r.worst_k = k;
            }
            r.max_abs_residual = std::max(r.max_abs_residual, res);
        }
    }
    r.pass = r.max_scaled_residual <= tol;
    return r;
}

// ---------------------------------------------------------------------------
// Generating-function route for the row sums (no per-k rates needed)
// ---------------------------------------------------------------------------

namespace detail {

/// For K ~ Binomial(b, x): {P(K >= 2), E[(K-1)^+]} divided by x^2, computed
/// without cancellation; both tend to C(b,2) as x -> 0.
struct BinomialTail {
    double p_ge2;
    double excess;
};

inline BinomialTail binomial_tail_over_x2(int b, double x) {
    const double bx = b * x;
    if (bx < 1.0) {
        double t = pairs(b) * std::exp((b - 2) * std::log1p(-x));
        double p = 0.0, e = 0.0;
        const double ratio = x / (1.0 - x);
        for (int k = 2; k <= b && t > 0.0; ++k) {
            p += t;
            e += (k - 1) * t;
            if (t < 1e-18 * p) break;
            t *= static_cast<double>(b - k) / (k + 1) * ratio;
        }
        return {p, e};
    }
    const double l1 = std::log1p(-x);
    const double p0 = std::exp(b * l1);
    const double p1 = bx * std::exp((b - 1) * l1);
    return {(1.0 - p0 - p1) / (x * x), (bx - 1.0 + p0) / (x * x)};
}

/// E[(K - c)^+] for K ~ Binomial(b, x); only the terms with K > c
/// contribute, which is cheap when c is close to b.
inline double binomial_upper_excess(int b, double x, int c) {
    if (c >= b) return 0.0;
    if (x >= 1.0) return b - c;
    // Start at the largest term and walk outwards in both directions.
    const int j0 = std::clamp(static_cast<int>(std::lround(b * x)), c + 1, b);
    const double lx = std::log(x), l1 = std::log1p(-x);
    const double t0 = std::exp(log_binomial(b, j0) + j0 * lx + (b - j0) * l1);
    if (t0 == 0.0) return 0.0;
    const double up = x / (1.0 - x);
    double acc = (j0 - c) * t0;
    double t = t0;
    for (int j = j0 + 1; j <= b; ++j) {
        t *= static_cast<double>(b - j + 1) / j * up;
        acc += (j - c) * t;
        if (t <= 1e-18 * acc) break;
    }
    t = t0;
    for (int j = j0 - 1; j > c; --j) {
        t *= static_cast<double>(j + 1) / (b - j) / up;
        acc += (j - c) * t;
        if (t <= 1e-18 * acc) break;
    }
    return acc;
}

/// int x^a (1-x)^c phi(x) dx over [lo, hi] with endpoint singularities absorbed.
template <class Phi>
double integrate_weighted(double lo, double hi, double a, double c, Phi phi, std::vector<double> cuts, double rel_tol) {
    cuts.push_back(lo);
    cuts.push_back(hi);
    if (lo < 0.5 && hi > 0.5) cuts.push_back(0.5);
    cuts.erase(std::remove_if(cuts.begin(), cuts.end(), [&](double x) { return !(x >= lo && x <= hi); }), cuts.end());
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    double total = 0.0, err = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double x0 = cuts[i], x1 = cuts[i + 1];
        QuadratureResult r;
        if (x0 == 0.0 && a < 0.0) {
            const double p = 1.0 / (1.0 + a);
            auto g = [&](double u) {
                double x = std::pow(u, p);
                if (x <= 0.0) x = std::numeric_limits<double>::min();
                return p * std::pow(1.0 - x, c) * phi(x);
            };
            r = integrate_adaptive(g, 0.0, std::pow(x1, 1.0 + a), rel_tol);
        } else if (x1 == 1.0 && c < 0.0) {
            const double q = 1.0 / (1.0 + c);
            auto g = [&](double v) {
                double y = std::pow(v, q);
                if (y <= 0.0) y = std::numeric_limits<double>::min();
                return q * std::pow(1.0 - y, a) * phi(1.0 - y);
            };
            r = integrate_adaptive(g, 0.0, std::pow(1.0 - x0, 1.0 + c), rel_tol);
        } else {
            r = integrate_adaptive([&](double x) { return std::pow(x, a) * std::pow(1.0 - x, c) * phi(x); }, x0, x1,
                                   rel_tol);
        }
        total += r.value;
        err += r.abs_error;
    }
    if (total > 0.0 && err / total > rel_tol)
        throw NumericError("rate-sum quadrature reached only relative accuracy " + format_double(err / total), err / total);
    return total;
}

inline std::vector<double> scale_cuts(int b) {
    std::vector<double> cuts;
    for (double j : {0.25, 1.0, 4.0, 16.0, 64.0}) cuts.push_back(j / b);
    return cuts;
}

}  // namespace detail

struct RateSums {
    double lambda_b = 0.0;
    double gamma_b = 0.0;
};

/// lambda_b and gamma_b from
///   lambda_b = int P(Bin(b,x) >= 2) x^-2 Lambda(dx),
///   gamma_b  = int E[(Bin(b,x) - 1)^+] x^-2 Lambda(dx),
/// one quadrature each regardless of b.
inline RateSums rate_sums_integral(const LambdaMeasure& mu, int b) {
    if (b < 2) throw ArgumentError("rate sums require b >= 2");
    RateSums s;
    s.lambda_b = mu.atom0() * pairs(b) + mu.atom1();
    s.gamma_b = mu.atom0() * pairs(b) + mu.atom1() * (b - 1);
    for (const auto& p : mu.pieces()) {
        auto cuts = detail::scale_cuts(b);
        s.lambda_b += p.scale * detail::integrate_weighted(
                                    p.lo, p.hi, p.a, p.c,
                                    [b](double x) { return detail::binomial_tail_over_x2(b, x).p_ge2; }, cuts, kRateRelTol);
        s.gamma_b += p.scale * detail::integrate_weighted(
                                   p.lo, p.hi, p.a, p.c,
                                   [b](double x) { return detail::binomial_tail_over_x2(b, x).excess; }, cuts, kRateRelTol);
    }
    return s;
}

/// gamma_{b,m} = gamma_b - int E[(K - (b-m+1))^+] x^-2 Lambda(dx).
inline double gamma_bm_integral(const LambdaMeasure& mu, int b, int m, double gamma_b) {
    const int c = b - m + 1;
    double g = gamma_b;
    // atom0 only produces k = 2 <= c; atom1 produces k = b.
    g -= mu.atom1() * std::max(0, b - c);
    if (b - c <= 0) return g;
    for (const auto& p : mu.pieces()) {
        auto cuts = detail::scale_cuts(b);
        cuts.push_back(static_cast<double>(c) / b);
        g -= p.scale * detail::integrate_weighted(
                           p.lo, p.hi, p.a, p.c,
                           [b, c](double x) {
                               double e = detail::binomial_upper_excess(b, x, c);
                               return e > 0.0 ? e / (x * x) : 0.0;
                           }, cuts, kRateRelTol);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Sweeps over b (lambda_b, gamma_b, gamma_{b,m} for several m at once)
// ---------------------------------------------------------------------------

enum class SweepRoute { closed_form, rows, integral };

inline SweepRoute sweep_route(const LambdaMeasure& mu) {
    if (!mu.has_density()) return SweepRoute::closed_form;
    if (mu.as_beta()) return SweepRoute::rows;
    return SweepRoute::integral;
}

/// Calls fn(b, lambda_b, gamma_b, gamma_bm) for b in [b_lo, b_hi]; gamma_bm[i]
/// refers to ms[i] and is NaN when b <= ms[i].
template <class Fn>
void sweep_rates(const LambdaMeasure& mu, int b_lo, int b_hi, const std::vector<int>& ms, Fn&& fn) {
    if (b_lo < 2) throw ArgumentError("sweep_rates requires b >= 2");
    std::vector<double> gbm(ms.size());
    const auto route = sweep_route(mu);
    for (int b = b_lo; b <= b_hi; ++b) {
        double lam = 0.0, gam = 0.0;
        if (route == SweepRoute::closed_form) {
            const double c2 = pairs(b);
            lam = mu.atom0() * c2 + mu.atom1();
            gam = mu.atom0() * c2 + mu.atom1() * (b - 1);
            for (std::size_t i = 0; i < ms.size(); ++i)
                gbm[i] = b > ms[i] ? mu.atom0() * c2 + mu.atom1() * (b - ms[i]) : NAN;
        } else if (route == SweepRoute::rows) {
            const auto w = merger_weights(mu, b);
            for (int k = 2; k <= b; ++k) {
                lam += w[k - 2];
                gam += (k - 1) * w[k - 2];
            }
            for (std::size_t i = 0; i < ms.size(); ++i) {
                const int m = ms[i];
                if (b <= m) {
                    gbm[i] = NAN;
                    continue;
                }
                double corr = 0.0;
                for (int k = b - m + 2; k <= b; ++k) corr += (k - 1 - (b - m)) * w[k - 2];
                gbm[i] = gam - corr;
            }
        } else {
            const auto s = rate_sums_integral(mu, b);
            lam = s.lambda_b;
            gam = s.gamma_b;
            for (std::size_t i = 0; i < ms.size(); ++i)
                gbm[i] = b > ms[i] ? gamma_bm_integral(mu, b, ms[i], gam) : NAN;
        }
        fn(b, lam, gam, std::span<const double>(gbm));
    }
}

// ---------------------------------------------------------------------------
// Tail sums and extrapolation
// ---------------------------------------------------------------------------

/// Exponent above which a term sequence b^-p is treated as summable for
/// extrapolation.
inline constexpr double kExtrapolationMinExponent = 1.1;

struct TailSeries {
    double truncated = 0.0;
    double extrapolated = 0.0;
    bool extrapolation_applied = false;
    double decay_exponent = NAN;  ///< fitted p in term ~ A b^-p over the last decade
    std::vector<double> terms;    ///< b = m+1 .. b_cap
};

struct TailSums {
    int m = 0;
    int b_cap = 0;
    TailSeries inv_gamma_b;
    TailSeries inv_gamma_bm;
    TailSeries inv_lambda_b;
};

namespace detail {

/// Least-squares power decay fitted on the last decade of terms, anchored at
/// the final term; the remainder uses the Euler-Maclaurin form of sum b^-p.
inline void extrapolate(TailSeries& s, int b_first) {
    const int n = static_cast<int>(s.terms.size());
    s.extrapolated = s.truncated;
    if (n < 8) return;
    const int b_last = b_first + n - 1;
    const int lo = std::max(b_first, b_last / 10);
    if (b_last - lo < 6) return;
    // Log-spaced sample of the decade.
    std::vector<double> xs, ys;
    const int samples = 64;
    int prev = -1;
    for (int i = 0; i < samples; ++i) {
        int b = static_cast<int>(std::lround(lo * std::pow(static_cast<double>(b_last) / lo, i / (samples - 1.0))));
        if (b == prev) continue;
        prev = b;
        double t = s.terms[b - b_first];
        if (!(t > 0.0)) return;
        xs.push_back(std::log(static_cast<double>(b)));
        ys.push_back(std::log(t));
    }
    if (xs.size() < 4) return;
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    const double p = -sxy / sxx;
    s.decay_exponent = p;
    if (!(p > kExtrapolationMinExponent)) return;
    const double N = b_last;
    const double tN = s.terms.back();
    const double tail = tN * (N / (p - 1.0) - 0.5 + p / (12.0 * N));
    s.extrapolated = s.truncated + tail;
    s.extrapolation_applied = true;
}

}  // namespace detail

/// Partial sums over b = m+1..b_cap of 1/gamma_b, 1/gamma_{b,m}, 1/lambda_b,
/// with a power-law tail estimate when the terms are summable.
inline TailSums tail_sums(const LambdaMeasure& mu, int m, int b_cap, bool keep_terms = true) {
    if (!(b_cap > m && m >= 2)) throw ArgumentError("tail_sums requires b_cap > m >= 2");
    TailSums ts;
    ts.m = m;
    ts.b_cap = b_cap;
    for (auto* s : {&ts.inv_gamma_b, &ts.inv_gamma_bm, &ts.inv_lambda_b}) s->terms.reserve(b_cap - m);
    sweep_rates(mu, m + 1, b_cap, {m}, [&](int b, double lam, double gam, std::span<const double> gbm) {
        if (!(gam > 0.0) || !(lam > 0.0) || !(gbm[0] > 0.0))
            throw DegenerateMeasureError("zero coalescence rate at b = " + std::to_string(b));
        ts.inv_gamma_b.terms.push_back(1.0 / gam);
        ts.inv_gamma_bm.terms.push_back(1.0 / gbm[0]);
        ts.inv_lambda_b.terms.push_back(1.0 / lam);
    });
    for (auto* s : {&ts.inv_gamma_b, &ts.inv_gamma_bm, &ts.inv_lambda_b}) {
        // Sum smallest terms first.
        double acc = 0.0;
        for (auto it = s->terms.rbegin(); it != s->terms.rend(); ++it) acc += *it;
        s->truncated = acc;
        detail::extrapolate(*s, m + 1);
        if (!keep_terms) {
            s->terms.clear();
            s->terms.shrink_to_fit();
        }
    }
    return ts;
}

// ---------------------------------------------------------------------------
// Exponent fit for  sum_{b>m} 1/gamma_{b,m} <= C m^-alpha
// ---------------------------------------------------------------------------

struct AlphaFit {
    bool fitted = false;
    double alpha = NAN;
    double C = NAN;
    double residual = NAN;       ///< max |log deviation| over the fitted points
    std::string hint;            ///< set when no fit is returned
    std::vector<int> m_used;
    std::vector<double> tail;    ///< extrapolated tail sums at m_used
    int b_cap = 0;
};

inline int default_b_cap(const LambdaMeasure& mu, int m_max) {
    switch (sweep_route(mu)) {
        case SweepRoute::closed_form: return std::max(1'000'000, 1000 * m_max);
        case SweepRoute::rows: return std::max(4000, 20 * m_max);
        case SweepRoute::integral: return std::max(2000, 10 * m_max);
    }
    return 4000;
}

inline AlphaFit fit_alpha(const LambdaMeasure& mu, const std::vector<int>& m_grid, int b_cap = 0) {
    if (m_grid.size() < 4) throw ArgumentError("fit_alpha needs at least 4 grid points");
    for (std::size_t i = 0; i < m_grid.size(); ++i) {
        if (m_grid[i] < 2) throw ArgumentError("fit_alpha grid values must be >= 2");
        if (i && m_grid[i] <= m_grid[i - 1]) throw ArgumentError("fit_alpha grid must increase strictly");
    }
    AlphaFit fit;
    // Only the largest half of the grid enters the fit.
    fit.m_used.assign(m_grid.begin() + m_grid.size() / 2, m_grid.end());
    const int m_lo = fit.m_used.front();
    const int m_hi = fit.m_used.back();
    if (b_cap <= 0) b_cap = default_b_cap(mu, m_hi);
    if (b_cap <= m_hi + 10) throw ArgumentError("fit_alpha: b_cap must exceed the grid");
    fit.b_cap = b_cap;

    const std::size_t nm = fit.m_used.size();
    std::vector<std::vector<double>> terms(nm);
    sweep_rates(mu, m_lo + 1, b_cap, fit.m_used, [&](int b, double, double gam, std::span<const double> gbm) {
        if (!(gam > 0.0)) throw DegenerateMeasureError("zero coalescence rate at b = " + std::to_string(b));
        for (std::size_t i = 0; i < nm; ++i)
            if (b > fit.m_used[i]) terms[i].push_back(1.0 / gbm[i]);
    });
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < nm; ++i) {
        TailSeries s;
        s.terms = std::move(terms[i]);
        double acc = 0.0;
        for (auto it = s.terms.rbegin(); it != s.terms.rend(); ++it) acc += *it;
        s.truncated = acc;
        detail::extrapolate(s, fit.m_used[i] + 1);
        if (!s.extrapolation_applied) {
            fit.hint = "tail sums do not converge (fitted term decay exponent " + format_double(s.decay_exponent) +
                       " <= " + format_double(kExtrapolationMinExponent) + "); no exponent reported";
            fit.tail.clear();
            return fit;
        }
        fit.tail.push_back(s.extrapolated);
        xs.push_back(std::log(static_cast<double>(fit.m_used[i])));
        ys.push_back(std::log(s.extrapolated));
    }
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    const double slope = sxy / sxx;
    const double intercept = my - slope * mx;
    fit.alpha = -slope;
    fit.C = std::exp(intercept);
    fit.residual = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        fit.residual = std::max(fit.residual, std::abs(ys[i] - (intercept + slope * xs[i])));
    fit.fitted = true;
    return fit;
}

// ---------------------------------------------------------------------------
// Coming down from infinity
// ---------------------------------------------------------------------------

enum class CdiClass { comes_down, stays_infinite, neither, inconclusive };

inline const char* to_string(CdiClass c) {
    switch (c) {
        case CdiClass::comes_down: return "comes_down";
        case CdiClass::stays_infinite: return "stays_infinite";
        case CdiClass::neither: return "neither";
        case CdiClass::inconclusive: return "inconclusive";
    }
    return "?";
}

struct CdiReport {
    CdiClass classification = CdiClass::inconclusive;
    std::vector<int> partial_sum_grid;
    std::vector<double> partial_sums;  ///< sum_{b=2}^{B} 1/gamma_b at each grid B
    AlphaFit alpha;                    ///< only fitted for comes_down
    std::string method;
};

inline std::vector<int> default_alpha_grid() { return {16, 32, 64, 128, 256, 512}; }

inline CdiReport classify_cdi(const LambdaMeasure& mu, const std::vector<int>& alpha_grid = default_alpha_grid(),
                              bool fit = true) {
    if (mu.is_zero()) throw DegenerateMeasureError("the zero measure has no coalescence");
    CdiReport r;
    const bool quad = sweep_route(mu) == SweepRoute::integral;
    r.partial_sum_grid = quad ? std::vector<int>{10, 100, 1000, 4000} : std::vector<int>{10, 100, 1000, 10000};

    {
        double acc = 0.0;
        std::size_t gi = 0;
        sweep_rates(mu, 2, r.partial_sum_grid.back(), {}, [&](int b, double, double gam, std::span<const double>) {
            if (!(gam > 0.0)) throw DegenerateMeasureError("zero coalescence rate at b = " + std::to_string(b));
            acc += 1.0 / gam;
            if (b == r.partial_sum_grid[gi]) {
                r.partial_sums.push_back(acc);
                ++gi;
            }
        });
    }

    // Classification of the part of the measure on [0, 1).
    CdiClass rest;
    const bool atoms_only = !mu.has_density();
    if (mu.atom0() > 0.0) {
        rest = CdiClass::comes_down;
        r.method = "analytic: Kingman component present";
    } else if (atoms_only) {
        rest = CdiClass::neither;  // only the atom at 1 remains
        r.method = "analytic: atom at 1 only";
    } else if (const auto* beta = mu.as_beta()) {
        rest = beta->beta > 1.0 ? CdiClass::comes_down : CdiClass::stays_infinite;
        r.method = "analytic: Beta(2-beta, beta) family";
    } else if (mu.as_powerlaw()) {
        rest = CdiClass::comes_down;
        r.method = "analytic: (c, eps, gamma)-property";
    } else {
        // Increments of the partial sums over the last two decades.
        const auto& s = r.partial_sums;
        const std::size_t n = s.size();
        double d_last = s[n - 1] - s[n - 2];
        double d_prev = s[n - 2] - s[n - 3];
        double ratio = d_last / d_prev;
        if (ratio < 0.5) rest = CdiClass::comes_down;
        else if (ratio > 0.9) rest = CdiClass::stays_infinite;
        else rest = CdiClass::inconclusive;
        r.method = "numeric: partial-sum increment ratio " + format_double(ratio) +
                   " (< 0.5 comes down, > 0.9 stays infinite)";
    }

    if (mu.atom1() > 0.0 && !atoms_only && rest != CdiClass::comes_down) {
        // Whatever the rest does, the atom at 1 collapses everything at a finite rate.
        r.classification = rest == CdiClass::inconclusive ? CdiClass::inconclusive : CdiClass::neither;
        r.method += "; atom at 1 present";
    } else {
        r.classification = rest;
    }
    if (fit && r.classification == CdiClass::comes_down) r.alpha = fit_alpha(mu, alpha_grid);
    return r;
}

// ---------------------------------------------------------------------------
// Lower bound lambda_n >= C(c, gamma, eps) n^(1+gamma)
// ---------------------------------------------------------------------------

inline double cg_constant(double c, double gamma, double eps) {
    if (!(c > 0.0) || !(gamma > 0.0 && gamma < 1.0) || !(eps > 0.0 && eps < 1.0))
        throw ArgumentError("cg_constant requires c > 0, gamma in (0,1), eps in (0,1)");
    return c * std::pow(eps, 1.0 - gamma) / (2.0 * (1.0 - gamma)) * std::pow(1.0 / (3.0 * (2.0 - gamma)), gamma) *
           std::exp(-gamma * gamma / (2.0 * (1.0 - gamma)));
}

struct CgBoundReport {
    double constant = 0.0;
    double min_ratio = INFINITY;  ///< min over n of lambda_n / n^(1+gamma)
    int argmin_n = 0;
    bool pass = false;
};

inline CgBoundReport cg_lower_bound_check(double c, double gamma, double eps, int n_max) {
    if (n_max < 2) throw ArgumentError("cg_lower_bound_check requires n_max >= 2");
    CgBoundReport r;
    r.constant = cg_constant(c, gamma, eps);
    const auto mu = LambdaMeasure::powerlaw(c, gamma, eps);
    for (int n = 2; n <= n_max; ++n) {
        double ratio = rate_sums_integral(mu, n).lambda_b / std::pow(n, 1.0 + gamma);
        if (ratio < r.min_ratio) {
            r.min_ratio = ratio;
            r.argmin_n = n;
        }
    }
    r.pass = r.min_ratio >= r.constant;
    return r;
}

}  // namespace lfv
