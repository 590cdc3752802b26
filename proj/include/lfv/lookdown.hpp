#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "lfv/error.hpp"
#include "lfv/jump_law.hpp"
#include "lfv/random.hpp"

namespace lfv {

// ---------------------------------------------------------------------------
// State and event log
// ---------------------------------------------------------------------------

/// Positions of levels 1..n in R^d; level i occupies positions[(i-1)*d, i*d).
struct LookdownState {
    int n = 0;
    int d = 1;
    double time = 0.0;
    std::vector<double> positions;

    std::span<const double> at(int level) const {
        return {positions.data() + static_cast<std::size_t>(level - 1) * d, static_cast<std::size_t>(d)};
    }
};

struct LookdownEvent {
    double time = 0.0;
    std::vector<int> levels;  ///< participating levels, sorted, at least two
};

/// Time-ordered reproduction events. A thinned log keeps only events with two
/// or more participants among the levels whose genealogy is tracked, with the
/// participants restricted to those levels; genealogy queries on tracked
/// levels give the same answers as on the full log.
struct EventLog {
    std::vector<LookdownEvent> events;
    bool thinned = false;

    std::size_t size() const { return events.size(); }

    /// Checks ordering and participant sets; throws InvariantViolation.
    void validate(int n) const {
        double prev = -INFINITY;
        for (const auto& e : events) {
            if (!(e.time > prev)) throw InvariantViolation("event times must increase strictly");
            prev = e.time;
            if (e.levels.size() < 2) throw InvariantViolation("an event needs at least two participants");
            for (std::size_t i = 0; i < e.levels.size(); ++i) {
                if (e.levels[i] < 1 || e.levels[i] > n) throw InvariantViolation("participant level out of range");
                if (i && e.levels[i] <= e.levels[i - 1]) throw InvariantViolation("participants must be sorted and distinct");
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Relabelling at a reproduction event
// ---------------------------------------------------------------------------

/// Source level (1-based, before the event) of every level after the event
/// with participants J. With j = min J: levels up to j keep their particle,
/// levels in J copy level j, and every other level k takes the particle from
/// k - (|J n [1, k-1]| - 1), pushing the old particles upward. The result has
/// new_size levels: old_size for a truncated array (the top |J|-1 particles
/// fall off) or old_size + |J| - 1 for a growing one.
namespace detail {

/// Source of level k > min J, given below = |J n [1, k-1]|.
inline int relabel_source(int k, std::span<const int> J, std::size_t below) {
    if (below < J.size() && J[below] == k) return J.front();
#ifdef LFV_MUTATE_SHIFT_RULE
    return k - static_cast<int>(below);
#else
    return k - (static_cast<int>(below) - 1);
#endif
}

}  // namespace detail

inline std::vector<int> relabel_sources(int old_size, std::span<const int> J, int new_size) {
    if (J.size() < 2) throw ArgumentError("an event needs at least two participants");
    std::vector<int> src(static_cast<std::size_t>(new_size));
    std::size_t below = 0;
    for (int k = 1; k <= new_size; ++k) {
        const int s = k <= J.front() ? k : detail::relabel_source(k, J, below);
        if (s < 1 || s > old_size) throw InvariantViolation("relabelling reads outside the level array");
        src[k - 1] = s;
        if (below < J.size() && J[below] == k) ++below;
    }
    return src;
}

inline LookdownState apply_event(const LookdownState& state, std::span<const int> J) {
    if (J.size() < 2) throw ArgumentError("apply_event needs |J| >= 2");
    for (std::size_t i = 0; i < J.size(); ++i)
        if (J[i] < 1 || J[i] > state.n || (i && J[i] <= J[i - 1]))
            throw ArgumentError("participants must be sorted distinct levels in [1, n]");
    const auto src = relabel_sources(state.n, J, state.n);
    LookdownState out = state;
    for (int k = 1; k <= state.n; ++k) {
        auto from = state.at(src[k - 1]);
        std::copy(from.begin(), from.end(), out.positions.begin() + static_cast<std::ptrdiff_t>(k - 1) * state.d);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class LookdownMode { automatic, full, ancestral };

inline const char* to_string(LookdownMode m) {
    switch (m) {
        case LookdownMode::automatic: return "automatic";
        case LookdownMode::full: return "full";
        case LookdownMode::ancestral: return "ancestral";
    }
    return "?";
}

struct InitialSpec {
    enum class Kind { origin, gaussian, uniform_box } kind = Kind::origin;
    double scale = 1.0;  ///< standard deviation, or half-width of the box
};

struct LookdownConfig {
    int n = 1;
    int d = 1;
    double T = 1.0;
    InitialSpec initial{};
    std::vector<double> snapshot_times;  ///< positions of all n levels are recorded here
    LookdownMode mode = LookdownMode::automatic;
    int max_levels = 1 << 20;
    double diffusivity = 1.0;  ///< variance of each coordinate per unit time; 0 freezes motion
};

inline void validate(const LookdownConfig& c, const LambdaMeasure& mu) {
    if (mu.atom1() > 0.0) throw UnsupportedMeasureError("the spatial model requires no atom at 1");
    if (c.n < 1) throw ArgumentError("n must be at least 1");
    if (c.d < 1) throw ArgumentError("d must be at least 1");
    if (!(c.T >= 0.0) || !std::isfinite(c.T)) throw ArgumentError("T must be finite and nonnegative");
    if (!(c.diffusivity >= 0.0)) throw ArgumentError("diffusivity must be nonnegative");
    if (c.n > c.max_levels) throw ResourceError("n = " + std::to_string(c.n) + " exceeds the level cap " + std::to_string(c.max_levels));
    for (double t : c.snapshot_times)
        if (!(t >= 0.0 && t <= c.T)) throw ArgumentError("snapshot times must lie in [0, T]");
}

/// Full logs are used while the expected work n * lambda_n * T stays small.
inline LookdownMode resolve_mode(const LookdownConfig& c, const JumpLaw& law) {
    if (c.mode != LookdownMode::automatic) return c.mode;
    if (c.n <= 2) return LookdownMode::full;
    if (c.n > 256) return LookdownMode::ancestral;
    const double work = static_cast<double>(c.n) * law.rate(c.n) * c.T;
    return work <= 2e6 ? LookdownMode::full : LookdownMode::ancestral;
}

// ---------------------------------------------------------------------------
// Phase A: events
// ---------------------------------------------------------------------------

/// Events of one replica plus the level-array sizes the forward pass needs.
struct EventPlan {
    LookdownMode mode = LookdownMode::full;
    int n = 0;
    double T = 0.0;
    EventLog log;
    int initial_size = 0;               ///< levels alive (tracked) at time 0
    std::vector<double> query_times;    ///< ascending; T is always the last entry
    std::vector<int> size_after_query;  ///< tracked levels just after each query time
};

/// All events on levels [n] in [0, T]: rate lambda_n, |J| = k with
/// probability C(n,k) lambda_{n,k} / lambda_n, J uniform among k-subsets.
inline EventLog sample_events_full(const JumpLaw& law, int n, double T, Rng& rng) {
    EventLog log;
    if (n < 2) return log;
    double t = 0.0;
    for (;;) {
        const Jump jmp = law.next(n, rng);
        if (!(t + jmp.dt <= T)) break;
        t += jmp.dt;
        log.events.push_back({t, sample_subset(n, jmp.k, rng)});
    }
    return log;
}

/// Genealogy-relevant events, generated backward from T. The tracked levels
/// are always a prefix [b]; at each query time the prefix is reset to [n]
/// so that all n levels can be observed there. Between resets b follows the
/// block-counting chain, and an event restricted to [b] merges a uniform
/// k-subset with the coalescent's rates (consistency of the lambda_{b,k}).
inline EventPlan sample_events_ancestral(const JumpLaw& law, int n, double T, std::vector<double> query_times, Rng& rng) {
    std::sort(query_times.begin(), query_times.end());
    query_times.erase(std::unique(query_times.begin(), query_times.end()), query_times.end());
    if (query_times.empty() || query_times.back() != T) query_times.push_back(T);
    EventPlan plan;
    plan.mode = LookdownMode::ancestral;
    plan.n = n;
    plan.T = T;
    plan.log.thinned = true;
    plan.query_times = query_times;
    plan.size_after_query.assign(query_times.size(), n);

    std::vector<LookdownEvent> rev;
    int b = n;
    double tau = 0.0;  // lookback from T
    std::size_t qi = query_times.size() - 1;
    for (;;) {
        const double reset = qi > 0 ? T - query_times[qi - 1] : T;
        Jump jmp;
        if (b >= 2) jmp = law.next(b, rng);
        if (tau + jmp.dt < reset) {
            tau += jmp.dt;
            rev.push_back({T - tau, sample_subset(b, jmp.k, rng)});
            b -= jmp.k - 1;
            continue;
        }
        tau = reset;
        if (qi == 0) break;
        --qi;
        plan.size_after_query[qi] = b;
        b = n;
        if (T - query_times[qi] >= T) {
            // Query at time 0: the initial array holds all n levels.
            break;
        }
    }
    plan.initial_size = b;
    plan.log.events.assign(rev.rbegin(), rev.rend());
    // Events at the same time as a reset keep strict ordering only if the
    // clocks never tie; ties have probability zero but are guarded anyway.
    for (std::size_t i = 1; i < plan.log.events.size(); ++i)
        if (!(plan.log.events[i].time > plan.log.events[i - 1].time))
            throw NumericError("coincident event times in the backward sampler");
    return plan;
}

inline EventPlan plan_events(const JumpLaw& law, const LookdownConfig& cfg, Rng& rng) {
    validate(cfg, law.measure());
    const auto mode = resolve_mode(cfg, law);
    if (mode == LookdownMode::ancestral) return sample_events_ancestral(law, cfg.n, cfg.T, cfg.snapshot_times, rng);
    EventPlan plan;
    plan.mode = LookdownMode::full;
    plan.n = cfg.n;
    plan.T = cfg.T;
    plan.log = sample_events_full(law, cfg.n, cfg.T, rng);
    plan.initial_size = cfg.n;
    plan.query_times = cfg.snapshot_times;
    std::sort(plan.query_times.begin(), plan.query_times.end());
    plan.query_times.erase(std::unique(plan.query_times.begin(), plan.query_times.end()), plan.query_times.end());
    if (plan.query_times.empty() || plan.query_times.back() != cfg.T) plan.query_times.push_back(cfg.T);
    plan.size_after_query.assign(plan.query_times.size(), cfg.n);
    return plan;
}

// ---------------------------------------------------------------------------
// Phase B: positions
// ---------------------------------------------------------------------------

struct Snapshot {
    double time = 0.0;
    int levels = 0;
    std::vector<double> positions;  ///< levels x d
};

struct LookdownRun {
    LookdownMode mode = LookdownMode::full;
    LookdownState final_state;
    EventLog log;
    std::vector<Snapshot> snapshots;     ///< at cfg.snapshot_times (all n levels)
    std::vector<Snapshot> observations;  ///< tracked levels at the extra observation times
};

namespace detail {

/// Level array whose particles are advanced lazily: each slot remembers the
/// time of its last position, and Brownian increments are drawn exactly when
/// the position is needed.
class LazyLevels {
public:
    LazyLevels(int d, double diffusivity) : d_(d), sd_(std::sqrt(diffusivity)) {}

    int size() const { return static_cast<int>(t_.size()); }

    void push(double t, std::span<const double> x) {
        t_.push_back(t);
        x_.insert(x_.end(), x.begin(), x.end());
    }

    void advance(int level, double to, Rng& rng) {
        double& last = t_[level - 1];
        if (to > last) {
            const double s = sd_ * std::sqrt(to - last);
            if (s > 0.0)
                for (int c = 0; c < d_; ++c) x_[static_cast<std::size_t>(level - 1) * d_ + c] += s * normal(rng);
            last = to;
        }
    }

    void advance_all(double to, Rng& rng) {
        for (int l = 1; l <= size(); ++l) advance(l, to, rng);
    }

    /// Relabels in place; new_size is size() for a truncated array and
    /// size() + |J| - 1 for a growing one. Sources never exceed their target
    /// level, so a top-down sweep reads every source before overwriting it.
    void relabel(std::span<const int> J, int new_size, double at, Rng& rng) {
        advance(J.front(), at, rng);
        const int old_size = size();
        t_.resize(static_cast<std::size_t>(new_size));
        x_.resize(static_cast<std::size_t>(new_size) * d_);
        std::size_t below = J.size();
        for (int k = new_size; k > J.front(); --k) {
            while (below > 0 && J[below - 1] >= k) --below;
            const int s = detail::relabel_source(k, J, below);
            if (s < 1 || s > old_size) throw InvariantViolation("relabelling reads outside the level array");
            if (s == k) continue;
            t_[k - 1] = t_[s - 1];
            std::copy_n(x_.begin() + static_cast<std::ptrdiff_t>(s - 1) * d_, d_,
                        x_.begin() + static_cast<std::ptrdiff_t>(k - 1) * d_);
        }
    }

    void truncate(int new_size) {
        t_.resize(static_cast<std::size_t>(new_size));
        x_.resize(static_cast<std::size_t>(new_size) * d_);
    }

    Snapshot snapshot(double t) const {
        Snapshot s;
        s.time = t;
        s.levels = size();
        s.positions = x_;
        return s;
    }

private:
    int d_;
    double sd_;
    std::vector<double> t_;
    std::vector<double> x_;
};

inline std::vector<double> initial_position(const InitialSpec& init, int d, Rng& rng) {
    std::vector<double> x(static_cast<std::size_t>(d), 0.0);
    switch (init.kind) {
        case InitialSpec::Kind::origin: break;
        case InitialSpec::Kind::gaussian:
            for (auto& v : x) v = init.scale * normal(rng);
            break;
        case InitialSpec::Kind::uniform_box:
            for (auto& v : x) v = init.scale * (2.0 * uniform01(rng) - 1.0);
            break;
    }
    return x;
}

}  // namespace detail

/// Forward pass over a plan: positions at every query time and at the extra
/// observation times (tracked levels only). At equal times observations come
/// before the event, so they are left limits.
inline LookdownRun realize_positions(const EventPlan& plan, const LookdownConfig& cfg, Rng& rng,
                                     std::vector<double> observe_times = {}) {
    std::sort(observe_times.begin(), observe_times.end());
    LookdownRun run;
    run.mode = plan.mode;
    run.log = plan.log;
    detail::LazyLevels lv(cfg.d, cfg.diffusivity);
    for (int l = 0; l < plan.initial_size; ++l) lv.push(0.0, detail::initial_position(cfg.initial, cfg.d, rng));

    std::vector<double> snaps = cfg.snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    std::size_t ei = 0, qi = 0, oi = 0;
    const auto& ev = plan.log.events;
    const bool grow = plan.mode == LookdownMode::ancestral;
    for (;;) {
        const double te = ei < ev.size() ? ev[ei].time : INFINITY;
        const double tq = qi < plan.query_times.size() ? plan.query_times[qi] : INFINITY;
        const double to = oi < observe_times.size() ? observe_times[oi] : INFINITY;
        if (!std::isfinite(te) && !std::isfinite(tq) && !std::isfinite(to)) break;
        if (to <= tq && to <= te) {
            lv.advance_all(to, rng);
            run.observations.push_back(lv.snapshot(to));
            ++oi;
        } else if (tq <= te) {
            if (lv.size() != plan.n) throw InvariantViolation("level array does not hold n levels at a query time");
            lv.advance_all(tq, rng);
            if (std::binary_search(snaps.begin(), snaps.end(), tq)) run.snapshots.push_back(lv.snapshot(tq));
            if (tq == plan.T) {
                run.final_state.n = plan.n;
                run.final_state.d = cfg.d;
                run.final_state.time = plan.T;
                run.final_state.positions = lv.snapshot(tq).positions;
            }
            if (grow) lv.truncate(plan.size_after_query[qi]);
            ++qi;
        } else {
            const auto& J = ev[ei].levels;
            lv.relabel(J, grow ? lv.size() + static_cast<int>(J.size()) - 1 : lv.size(), te, rng);
            ++ei;
        }
    }
    // Snapshot times may repeat; expand to one entry per requested time.
    if (run.snapshots.size() != cfg.snapshot_times.size()) {
        std::vector<Snapshot> expanded;
        for (double t : cfg.snapshot_times)
            for (const auto& s : run.snapshots)
                if (s.time == t) expanded.push_back(s);
        run.snapshots = std::move(expanded);
    }
    return run;
}

/// Lookdown particle system on n levels up to time T. The event stream and the
/// motion stream use separate generators so that a replica's genealogy does
/// not depend on which positions are requested.
inline LookdownRun simulate_lookdown(const JumpLaw& law, const LookdownConfig& cfg, Rng& events_rng, Rng& motion_rng,
                                     std::vector<double> observe_times = {}) {
    const auto plan = plan_events(law, cfg, events_rng);
    return realize_positions(plan, cfg, motion_rng, std::move(observe_times));
}

}  // namespace lfv
