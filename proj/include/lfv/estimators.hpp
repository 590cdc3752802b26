#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lfv/error.hpp"
#include "lfv/genealogy.hpp"
#include "lfv/lookdown.hpp"
#include "lfv/math.hpp"
#include "lfv/random.hpp"
#include "lfv/stats.hpp"

namespace lfv {

// ---------------------------------------------------------------------------
// Constants and bounds
// ---------------------------------------------------------------------------

/// Geometric-series constant 1 / (1 - 2^-(1/2 - delta)) of the radius bound.
inline double c_delta(double delta) {
    if (!(delta > 0.0 && delta < 0.5)) throw ArgumentError("c_delta needs 0 < delta < 1/2");
    return 1.0 / -std::expm1(-(0.5 - delta) * std::log(2.0));
}

struct BrownianBound {
    double C1 = 0.0;
    double C2 = 0.0;
    double bound = 0.0;  ///< C1 sqrt(t) / x exp(-C2 x^2 / t), uncapped
    double probability_bound() const { return std::min(1.0, bound); }
};

/// P(sup_{s<=t} |B(s)| > x) <= C1 sqrt(t) x^-1 exp(-C2 x^2 / t) for d-dimensional
/// Brownian motion: a union over coordinates of the one-dimensional reflection
/// bound at level x / sqrt(d), with C1 = (8 d^3 / pi)^(1/2) and C2 = 1 / (2d).
inline BrownianBound brownian_sup_bound(int d, double t, double x) {
    if (d < 1) throw ArgumentError("dimension must be at least 1");
    if (!(t > 0.0 && x > 0.0)) throw ArgumentError("brownian_sup_bound needs t > 0 and x > 0");
    BrownianBound b;
    b.C1 = std::sqrt(8.0 * d * d * d / kPi);
    b.C2 = 1.0 / (2.0 * d);
    b.bound = b.C1 * std::sqrt(t) / x * std::exp(-b.C2 * x * x / t);
    return b;
}

/// Fraction of discretized d-dimensional Brownian paths on [0, 1] whose sup
/// norm over the grid exceeds each threshold. The grid sup underestimates the
/// continuous one.
inline std::vector<double> brownian_sup_exceedance(int d, int steps, std::size_t paths, std::span<const double> thresholds,
                                                   Rng& rng) {
    std::vector<double> hits(thresholds.size(), 0.0);
    const double sd = std::sqrt(1.0 / steps);
    std::vector<double> pos(static_cast<std::size_t>(d));
    for (std::size_t p = 0; p < paths; ++p) {
        std::fill(pos.begin(), pos.end(), 0.0);
        double sup2 = 0.0;
        for (int s = 0; s < steps; ++s) {
            double r2 = 0.0;
            for (auto& v : pos) {
                v += sd * normal(rng);
                r2 += v * v;
            }
            sup2 = std::max(sup2, r2);
        }
        for (std::size_t i = 0; i < thresholds.size(); ++i)
            if (sup2 > thresholds[i] * thresholds[i]) hits[i] += 1.0;
    }
    for (auto& h : hits) h /= static_cast<double>(paths);
    return hits;
}

// ---------------------------------------------------------------------------
// Point-cloud geometry; points are flat arrays of d-tuples
// ---------------------------------------------------------------------------

namespace detail {

inline double dist2(const double* a, const double* b, int d) {
    double s = 0.0;
    for (int c = 0; c < d; ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
    return s;
}

inline std::size_t count_points(std::span<const double> pts, int d) {
    if (d < 1 || pts.size() % static_cast<std::size_t>(d)) throw ArgumentError("point array length must be a multiple of d");
    return pts.size() / static_cast<std::size_t>(d);
}

inline std::vector<std::vector<double>> distinct_points(std::span<const double> pts, int d) {
    const std::size_t n = count_points(pts, d);
    std::vector<std::vector<double>> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i].assign(pts.begin() + i * d, pts.begin() + (i + 1) * d);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

inline double cross(const std::vector<double>& o, const std::vector<double>& a, const std::vector<double>& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

}  // namespace detail

/// Largest pairwise distance. Exact in every dimension: in the plane the
/// search runs over the convex hull only.
inline double diameter(std::span<const double> pts, int d) {
    auto v = detail::distinct_points(pts, d);
    if (v.size() < 2) return 0.0;
    if (d == 1) return v.back()[0] - v.front()[0];
    if (d == 2) {
        // Monotone chain on lexicographically sorted points.
        std::vector<std::vector<double>> hull(2 * v.size());
        std::size_t k = 0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            while (k >= 2 && detail::cross(hull[k - 2], hull[k - 1], v[i]) <= 0) --k;
            hull[k++] = v[i];
        }
        for (std::size_t i = v.size() - 1, t = k + 1; i > 0; --i) {
            while (k >= t && detail::cross(hull[k - 2], hull[k - 1], v[i - 1]) <= 0) --k;
            hull[k++] = v[i - 1];
        }
        hull.resize(k > 1 ? k - 1 : k);
        v = std::move(hull);
    }
    double best = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = i + 1; j < v.size(); ++j) best = std::max(best, detail::dist2(v[i].data(), v[j].data(), d));
    return std::sqrt(best);
}

struct BoxCount {
    std::vector<double> scales;
    std::vector<double> counts;
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double residual = 0.0;  ///< largest absolute residual of the log-log fit
    double band_lo() const { return slope - 2.0 * slope_se; }
    double band_hi() const { return slope + 2.0 * slope_se; }
};

/// Occupied boxes of side s on a grid anchored at the bounding-box corner,
/// for each scale, and the least-squares slope of log count against log(1/s).
inline BoxCount box_counting_dim(std::span<const double> pts, int d, std::vector<double> scales) {
    if (scales.size() < 2) throw ArgumentError("box counting needs at least two scales");
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (!(scales[i] > 0.0) || !std::isfinite(scales[i])) throw ArgumentError("box scales must be positive");
        if (i && !(scales[i] < scales[i - 1])) throw ArgumentError("box scales must be strictly decreasing");
    }
    const std::size_t n = detail::count_points(pts, d);
    BoxCount out;
    out.scales = scales;
    if (n == 0) throw ArgumentError("box counting needs at least one point");
    std::vector<double> lo(static_cast<std::size_t>(d), INFINITY);
    for (std::size_t i = 0; i < n; ++i)
        for (int c = 0; c < d; ++c) lo[c] = std::min(lo[c], pts[i * d + c]);
    std::vector<std::vector<long long>> cells(n, std::vector<long long>(static_cast<std::size_t>(d)));
    for (double s : scales) {
        for (std::size_t i = 0; i < n; ++i)
            for (int c = 0; c < d; ++c) cells[i][c] = static_cast<long long>(std::floor((pts[i * d + c] - lo[c]) / s));
        auto sorted = cells;
        std::sort(sorted.begin(), sorted.end());
        out.counts.push_back(static_cast<double>(std::unique(sorted.begin(), sorted.end()) - sorted.begin()));
    }
    std::vector<double> x, y;
    for (std::size_t i = 0; i < scales.size(); ++i) {
        x.push_back(-std::log(scales[i]));
        y.push_back(std::log(out.counts[i]));
    }
    const auto fit = linear_fit(x, y);
    out.slope = fit.slope;
    out.intercept = fit.intercept;
    out.slope_se = std::isfinite(fit.slope_se) ? fit.slope_se : 0.0;
    out.residual = fit.max_abs_residual;
    return out;
}

/// Geometric scale list: top * ratio^i for i = 0..count-1.
inline std::vector<double> geometric_scales(double top, double ratio, int count) {
    if (!(top > 0.0) || !(ratio > 0.0 && ratio < 1.0) || count < 2) throw ArgumentError("bad geometric scale list");
    std::vector<double> s;
    for (int i = 0; i < count; ++i) s.push_back(top * std::pow(ratio, i));
    return s;
}

/// Scale window chosen from the data: halvings of diam/2, keeping the scales
/// whose occupied-box count lies in [min_boxes, max_fraction * n]. Below that
/// range the grid is too coarse; above it the count saturates at n.
struct BoxWindow {
    double min_boxes = 16.0;
    double max_fraction = 0.125;
};

inline BoxCount box_counting_auto(std::span<const double> pts, int d, BoxWindow w = {}) {
    const double n = static_cast<double>(detail::count_points(pts, d));
    const double dia = diameter(pts, d);
    if (!(dia > 0.0)) throw ArgumentError("box counting window needs two distinct points");
    const double top = w.max_fraction * n;
    std::vector<double> ladder;
    for (int i = 0; i < 60; ++i) ladder.push_back(0.5 * dia * std::ldexp(1.0, -i));
    std::vector<double> keep;
    // Counts grow as the scale shrinks; walk down until the upper limit is passed.
    for (std::size_t i = 0; i + 1 < ladder.size(); ++i) {
        const auto c = box_counting_dim(pts, d, {ladder[i], ladder[i + 1]}).counts[0];
        if (c > top) break;
        if (c >= w.min_boxes) keep.push_back(ladder[i]);
    }
    if (keep.size() < 2) throw ArgumentError("too few points for a box-count window (" + std::to_string(keep.size()) + " scales)");
    return box_counting_dim(pts, d, keep);
}

struct EnergyResult {
    double value = INFINITY;        ///< mean of |x - y|^-a over pairs at distinct positions
    double sampling_se = 0.0;       ///< batch-means error when the input was subsampled
    double coincidence_fraction = 0.0;
    std::size_t points_used = 0;
    bool infinite = false;          ///< no pair at distinct positions
};

/// Mean of |x - y|^-a over unordered pairs at distinct positions. Inputs larger
/// than max_points are subsampled without replacement; the error is then
/// estimated from ten disjoint batches.
inline EnergyResult energy_integral(std::span<const double> pts, int d, double a, Rng* rng = nullptr,
                                    std::size_t max_points = 10'000) {
    if (!(a > 0.0)) throw ArgumentError("energy exponent must be positive");
    const std::size_t n = detail::count_points(pts, d);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    const bool sub = n > max_points;
    if (sub) {
        if (!rng) throw ArgumentError("subsampling the energy integral needs a generator");
        const auto pick = sample_subset(static_cast<int>(n), static_cast<int>(max_points), *rng);
        idx.assign(pick.begin(), pick.end());
        for (auto& i : idx) --i;
    }
    auto pair_mean = [&](std::size_t from, std::size_t to, double& coincident, double& total) {
        double sum = 0.0, cnt = 0.0;
        for (std::size_t i = from; i < to; ++i)
            for (std::size_t j = i + 1; j < to; ++j) {
                const double r2 = detail::dist2(&pts[idx[i] * d], &pts[idx[j] * d], d);
                total += 1.0;
                if (r2 == 0.0) {
                    coincident += 1.0;
                    continue;
                }
                sum += std::pow(r2, -0.5 * a);
                cnt += 1.0;
            }
        return cnt > 0.0 ? sum / cnt : INFINITY;
    };
    EnergyResult r;
    r.points_used = idx.size();
    double coincident = 0.0, total = 0.0;
    r.value = pair_mean(0, idx.size(), coincident, total);
    r.coincidence_fraction = total > 0.0 ? coincident / total : 0.0;
    r.infinite = !std::isfinite(r.value);
    if (sub && !r.infinite) {
        std::vector<double> batches;
        const std::size_t B = 10, len = idx.size() / B;
        for (std::size_t b = 0; b < B; ++b) {
            double c0 = 0.0, t0 = 0.0;
            const double v = pair_mean(b * len, (b + 1) * len, c0, t0);
            if (std::isfinite(v)) batches.push_back(v);
        }
        // A batch has 1/B of the points, so its pair mean varies about B times
        // more than the full-sample mean; scale accordingly.
        if (batches.size() > 1) r.sampling_se = mean_se(batches).sd / static_cast<double>(B);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Cluster schedule, radii and dislocations
// ---------------------------------------------------------------------------

/// N_k = ceil(2^(k/alpha) k^(2/alpha)).
inline long long schedule_size(int k, double alpha) {
    if (!(alpha > 0.0) || k < 1) throw ArgumentError("schedule needs alpha > 0 and k >= 1");
    const double v = std::ceil(std::exp((k * std::log(2.0) + 2.0 * std::log(static_cast<double>(k))) / alpha) - 1e-9);
    return v > 9e18 ? static_cast<long long>(9e18) : static_cast<long long>(v);
}

struct ClusterSchedule {
    double alpha = 1.0;
    double T = 0.0;
    int n = 0;
    std::vector<int> k;             ///< realized indices, consecutive
    std::vector<long long> N;       ///< N_k
    std::vector<double> lookback;   ///< T_{N_k}
    std::vector<int> N_star;        ///< #Pi(T_{N_k})
    int k_unrealized = 0;           ///< indices below k.front() whose N_k blocks were not reached by time 0
    bool truncated = false;         ///< the genealogy never came down to N_{k.front()} (or to N_1)
    bool top_reached = false;       ///< the last N_k is at least n, so the last radius is zero

    std::size_t size() const { return k.size(); }
    double time(std::size_t i) const { return T - lookback[i]; }
};

/// Realized schedule of one genealogy: indices from the first k whose N_k
/// blocks are reached by time 0 up to the first k with N_k >= n.
inline ClusterSchedule make_schedule(const Genealogy& g, double alpha) {
    ClusterSchedule s;
    s.alpha = alpha;
    s.T = g.T();
    s.n = g.n();
    for (int k = 1; k < 200; ++k) {
        const long long Nk = schedule_size(k, alpha);
        if (k > 1 && Nk <= schedule_size(k - 1, alpha)) throw NumericError("schedule sizes must increase strictly");
        const int N = static_cast<int>(std::min<long long>(Nk, g.n()));
        const auto lb = g.hitting_lookback(N);
        if (!lb) {
            ++s.k_unrealized;
            if (!s.k.empty()) throw InvariantViolation("schedule realized out of order");
            continue;
        }
        s.k.push_back(k);
        s.N.push_back(Nk);
        s.lookback.push_back(*lb);
        s.N_star.push_back(g.block_count(*lb));
        if (Nk >= g.n()) {
            s.top_reached = true;
            break;
        }
    }
    s.truncated = s.k_unrealized > 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.N_star[i] > std::min<long long>(s.N[i], s.n)) throw InvariantViolation("N*_k exceeds min(N_k, n)");
        if (i && s.lookback[i] > s.lookback[i - 1]) throw InvariantViolation("schedule lookbacks must decrease in k");
    }
    return s;
}

struct SupportReport {
    ClusterSchedule schedule;
    std::vector<double> R;  ///< R_k per realized index
    std::vector<double> D;  ///< D_k for all but the last realized index
    bool triangle_ok = true;
    double worst_triangle_ratio = 0.0;  ///< max over m of R_m / (sum_{k>=m} D_k + R_last)
    double diameter = 0.0;
};

/// Relative slack of the triangle chain check, covering rounding in the sums.
inline constexpr double kTriangleSlack = 1e-12;

/// Radii and dislocations of one replica. `observations` holds the tracked
/// levels at each schedule time (left limits), in schedule order; the final
/// state holds the n levels at T.
inline SupportReport support_metrics(const Genealogy& g, const LookdownState& final_state,
                                     const std::vector<Snapshot>& observations, const ClusterSchedule& s) {
    if (observations.size() != s.size()) throw ArgumentError("one observation per schedule time is required");
    const int n = g.n(), d = final_state.d;
    if (final_state.n != n) throw ArgumentError("final state does not match the genealogy");
    SupportReport r;
    r.schedule = s;
    r.diameter = diameter(final_state.positions, d);
    if (s.size() == 0) return r;
    const auto anc = g.block_indices(s.lookback);
    auto anc_pos = [&](std::size_t i, int leaf) {
        const int level = anc[i][leaf - 1];
        if (level > observations[i].levels) throw InvariantViolation("ancestral level beyond the tracked levels");
        return &observations[i].positions[static_cast<std::size_t>(level - 1) * d];
    };
    r.R.assign(s.size(), 0.0);
    r.D.assign(s.size() - 1, 0.0);
    for (int j = 1; j <= n; ++j) {
        const double* xt = final_state.positions.data() + static_cast<std::size_t>(j - 1) * d;
        for (std::size_t i = 0; i < s.size(); ++i) {
            r.R[i] = std::max(r.R[i], std::sqrt(detail::dist2(xt, anc_pos(i, j), d)));
            if (i + 1 < s.size()) r.D[i] = std::max(r.D[i], std::sqrt(detail::dist2(anc_pos(i + 1, j), anc_pos(i, j), d)));
        }
    }
    double tail = r.R.back();
    for (std::size_t i = s.size(); i-- > 0;) {
        if (i + 1 < s.size()) tail += r.D[i];
        const double ratio = tail > 0.0 ? r.R[i] / tail : (r.R[i] > 0.0 ? INFINITY : 0.0);
        r.worst_triangle_ratio = std::max(r.worst_triangle_ratio, ratio);
        if (r.R[i] > tail * (1.0 + kTriangleSlack)) r.triangle_ok = false;
    }
    return r;
}

/// One replica of the support experiment: events, genealogy, schedule, then
/// positions observed at the schedule times.
struct SupportRun {
    LookdownRun run;
    ClusterSchedule schedule;
    SupportReport report;
};

inline SupportRun simulate_support(const JumpLaw& law, const LookdownConfig& cfg, double alpha, Rng& events_rng,
                                   Rng& motion_rng) {
    const auto plan = plan_events(law, cfg, events_rng);
    const Genealogy g(plan.log, cfg.n, cfg.T);
    SupportRun out;
    out.schedule = make_schedule(g, alpha);
    std::vector<double> times;
    for (std::size_t i = 0; i < out.schedule.size(); ++i) times.push_back(out.schedule.time(i));
    out.run = realize_positions(plan, cfg, motion_rng, times);
    // Observations come back sorted by time, the schedule by increasing k
    // (increasing time as well).
    out.report = support_metrics(g, out.run.final_state, out.run.observations, out.schedule);
    return out;
}

}  // namespace lfv
