#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lfv/error.hpp"
#include "lfv/jump_law.hpp"
#include "lfv/partition.hpp"
#include "lfv/random.hpp"
#include "lfv/rates.hpp"

namespace lfv {

// ---------------------------------------------------------------------------
// Partition-valued chain
// ---------------------------------------------------------------------------

struct StepResult {
    double holding_time = INFINITY;  ///< infinite when no merger can ever happen
    std::vector<int> merged;         ///< sorted 1-based block indices
    OrderedPartition next;
};

inline StepResult coalescent_step(const OrderedPartition& p, const JumpLaw& law, Rng& rng) {
    const int b = p.size();
    if (b < 2) throw AbsorbingStateError("the coalescent has a single block");
    StepResult r;
    const Jump j = law.next(b, rng);
    if (!std::isfinite(j.dt)) {
        r.next = p;
        return r;
    }
    r.holding_time = j.dt;
    r.merged = sample_subset(b, j.k, rng);
    r.next = p.merge(r.merged);
    return r;
}

struct JumpRecord {
    double time = 0.0;
    int k = 0;
    std::vector<int> block_minima;  ///< least elements of the merging blocks
};

struct PartitionPath {
    std::vector<double> times;
    std::vector<OrderedPartition> snapshots;  ///< state at each recorded time (jumps at that time included)
    std::vector<JumpRecord> jumps;
};

inline PartitionPath simulate_partition_path(const JumpLaw& law, int n, double horizon, Rng& rng,
                                             std::vector<double> record = {}, bool check_invariants = false) {
    if (n < 1) throw ArgumentError("simulate_partition_path requires n >= 1");
    if (!(horizon >= 0.0)) throw ArgumentError("horizon must be nonnegative");
    std::sort(record.begin(), record.end());
    if (!record.empty() && (record.front() < 0.0 || record.back() > horizon))
        throw ArgumentError("record times must lie in [0, horizon]");
    PartitionPath out;
    out.times = record;
    auto p = OrderedPartition::finest(n);
    double t = 0.0;
    std::size_t ri = 0;
    while (p.size() >= 2) {
        auto s = coalescent_step(p, law, rng);
        const double next_t = t + s.holding_time;
        if (!(next_t <= horizon)) break;
        for (; ri < record.size() && record[ri] < next_t; ++ri) out.snapshots.push_back(p);
        JumpRecord jr;
        jr.time = next_t;
        jr.k = static_cast<int>(s.merged.size());
        for (int i : s.merged) jr.block_minima.push_back(p.block(i).front());
        out.jumps.push_back(std::move(jr));
        p = std::move(s.next);
        if (check_invariants) p.check();
        t = next_t;
    }
    for (; ri < record.size(); ++ri) out.snapshots.push_back(p);
    return out;
}

/// T_m^n for n = 1..n_max from one path of Pi_{n_max}: the first time the
/// restriction to [n] has at most m blocks (horizon if never). The restrictions
/// share one event stream, so the values are nondecreasing in n.
inline std::vector<double> restricted_hitting_times(const JumpLaw& law, int n_max, int m, double horizon, Rng& rng) {
    std::vector<double> hit(static_cast<std::size_t>(n_max) + 1, horizon);
    auto p = OrderedPartition::finest(n_max);
    std::vector<bool> done(static_cast<std::size_t>(n_max) + 1, false);
    auto mark = [&](double t) {
        // Counts for all n in one pass over the blocks' minima.
        std::vector<int> starts(static_cast<std::size_t>(n_max) + 2, 0);
        for (const auto& b : p.blocks()) ++starts[b.front()];
        int c = 0;
        for (int n = 1; n <= n_max; ++n) {
            c += starts[n];
            if (!done[n] && c <= m) {
                done[n] = true;
                hit[n] = t;
            }
        }
    };
    mark(0.0);
    double t = 0.0;
    while (p.size() > m && p.size() >= 2) {
        auto s = coalescent_step(p, law, rng);
        t += s.holding_time;
        if (!(t <= horizon)) break;
        p = std::move(s.next);
        mark(t);
    }
    hit.erase(hit.begin());
    return hit;
}

// ---------------------------------------------------------------------------
// Block-counting chain and T_m
// ---------------------------------------------------------------------------

/// Sum over b > n of 1/gamma_b: expected time the chain started from
/// infinity spends above n blocks. Partial sum over a window plus the fitted
/// power-law tail.
inline double gamma_tail_beyond(const LambdaMeasure& mu, int n) {
    if (n < 1) throw ArgumentError("gamma_tail_beyond requires n >= 1");
    int len;
    switch (sweep_route(mu)) {
        case SweepRoute::closed_form: len = std::max(100'000, 100 * n); break;
        case SweepRoute::rows: len = std::clamp(4 * n, 400, 4000); break;
        default: len = std::clamp(4 * n, 400, 2000); break;
    }
    TailSeries s;
    s.terms.reserve(static_cast<std::size_t>(len));
    sweep_rates(mu, n + 1, n + len, {}, [&](int b, double, double gam, std::span<const double>) {
        if (!(gam > 0.0)) throw DegenerateMeasureError("zero coalescence rate at b = " + std::to_string(b));
        s.terms.push_back(1.0 / gam);
    });
    for (auto it = s.terms.rbegin(); it != s.terms.rend(); ++it) s.truncated += *it;
    detail::extrapolate(s, n + 1);
    return s.extrapolation_applied ? s.extrapolated : INFINITY;
}

/// Sum_{b=m+1}^{n} 1/gamma_{b,m}: the bound on E T_m^n for the chain started at n.
inline double gamma_bm_partial_sum(const LambdaMeasure& mu, int m, int n) {
    if (!(n > m && m >= 1)) throw ArgumentError("gamma_bm_partial_sum requires n > m >= 1");
    double acc = 0.0;
    sweep_rates(mu, std::max(2, m + 1), n, {m}, [&](int b, double, double, std::span<const double> g) {
        if (!(g[0] > 0.0)) throw DegenerateMeasureError("zero coalescence rate at b = " + std::to_string(b));
        acc += 1.0 / g[0];
    });
    return acc;
}

inline constexpr int kMaxAutoStart = 200'000;

struct TmPlan {
    int m = 1;
    int n_start = 0;
    bool auto_start = false;
    bool target_met = true;       ///< auto start reached the 1% criterion below kMaxAutoStart
    double truncation_bound = 0;  ///< sum_{b > n_start} 1/gamma_b
    double bound_truncated = 0;   ///< sum_{b=m+1}^{n_start} 1/gamma_{b,m}
    double target_scale = NAN;    ///< sum_{b > m} 1/gamma_{b,m} (extrapolated), auto start only
};

/// Fixes n_start (explicit, or the smallest n with sum_{b>n} 1/gamma_b below 1%
/// of sum_{b>m} 1/gamma_{b,m}) and the bounds reported with every sample.
inline TmPlan plan_tm(const LambdaMeasure& mu, int m, std::optional<int> n_start) {
    if (m < 1) throw ArgumentError("sample_Tm requires m >= 1");
    if (mu.is_zero()) throw DegenerateMeasureError("the zero measure never merges");
    TmPlan plan;
    plan.m = m;
    if (n_start) {
        if (*n_start <= m) throw ArgumentError("n_start must exceed m");
        plan.n_start = *n_start;
    } else {
        plan.auto_start = true;
        const auto cls = classify_cdi(mu, {}, false).classification;
        if (cls != CdiClass::comes_down)
            throw UnsupportedMeasureError(std::string("automatic n_start needs a measure that comes down from infinity (got ") +
                                          to_string(cls) + ")");
        const int b_cap = std::max(sweep_route(mu) == SweepRoute::closed_form ? 100'000 : 4000, 40 * m);
        // gamma_{b,m} and gamma_b over one window.
        std::vector<double> inv_g, inv_gm;
        sweep_rates(mu, m + 1, b_cap, {m}, [&](int b, double, double gam, std::span<const double> gbm) {
            if (!(gam > 0.0)) throw DegenerateMeasureError("zero coalescence rate at b = " + std::to_string(b));
            inv_g.push_back(1.0 / gam);
            inv_gm.push_back(1.0 / gbm[0]);
        });
        TailSeries sg, sgm;
        sg.terms = std::move(inv_g);
        sgm.terms = std::move(inv_gm);
        for (auto* s : {&sg, &sgm}) {
            for (auto it = s->terms.rbegin(); it != s->terms.rend(); ++it) s->truncated += *it;
            detail::extrapolate(*s, m + 1);
        }
        plan.target_scale = sgm.extrapolated;
        const double goal = 0.01 * plan.target_scale;
        double tail = sg.extrapolated;
        int n = m;
        for (double t : sg.terms) {
            if (tail <= goal) break;
            tail -= t;
            ++n;
        }
        if (tail > goal) {
            // Beyond the window: tail(n) ~ tail(b_cap) (n / b_cap)^(1 - p).
            const double p = sg.decay_exponent;
            const double ratio = goal / tail;
            double n_needed = b_cap * std::pow(ratio, 1.0 / (1.0 - p));
            if (!std::isfinite(n_needed) || n_needed > kMaxAutoStart) {
                plan.target_met = false;
                n = kMaxAutoStart;
            } else {
                n = static_cast<int>(std::ceil(n_needed));
            }
        }
        plan.n_start = std::max(n, m + 1);
    }
    plan.truncation_bound = gamma_tail_beyond(mu, plan.n_start);
    plan.bound_truncated = gamma_bm_partial_sum(mu, m, plan.n_start);
    return plan;
}

struct TmSample {
    int m_target = 1;
    int n_start = 0;
    double t_value = 0.0;
    bool censored = false;
    double truncation_bound = 0.0;
    std::vector<std::pair<double, int>> path;  ///< (time, block count) after each jump, if kept
};

/// One draw of T_m^{n_start} from the block-counting chain (counts only).
inline TmSample sample_Tm(const TmPlan& plan, const JumpLaw& law, double horizon, Rng& rng, bool keep_path = false) {
    if (!(horizon > 0.0)) throw ArgumentError("horizon must be positive");
    TmSample s;
    s.m_target = plan.m;
    s.n_start = plan.n_start;
    s.truncation_bound = plan.truncation_bound;
    int b = plan.n_start;
    double t = 0.0;
    if (keep_path) s.path.emplace_back(0.0, b);
    while (b > plan.m) {
        const Jump j = law.next(b, rng);
        if (!(t + j.dt <= horizon)) {
            s.censored = true;
            s.t_value = horizon;
            return s;
        }
        t += j.dt;
        b -= j.k - 1;
        if (keep_path) s.path.emplace_back(t, b);
    }
    s.t_value = t;
    return s;
}

}  // namespace lfv
