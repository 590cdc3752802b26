#include "commands.hpp"

#include <chrono>
#include <sstream>

#include <CLI11.hpp>

#include "config.hpp"
#include "lfv/coalescent.hpp"
#include "lfv/estimators.hpp"
#include "lfv/format.hpp"
#include "lfv/genealogy.hpp"
#include "lfv/lookdown.hpp"
#include "lfv/moments.hpp"
#include "lfv/rates.hpp"
#include "lfv/replicas.hpp"
#include "output.hpp"
#include "verify.hpp"

namespace lfv::cli {
namespace {

using nlohmann::json;

std::string fmt(double v) { return format_double(v); }

/// JSON number that survives non-finite values (as strings).
json num(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

class Checker {
public:
    explicit Checker(const RunConfig& c) : c_(c) {}

    LambdaMeasure measure() {
        if (!c_.measure) {
            bad_.push_back("missing 'measure'");
            return {};
        }
        try {
            return parse_measure(*c_.measure);
        } catch (const std::exception& e) {
            bad_.push_back(std::string("measure: ") + e.what());
            return {};
        }
    }

    template <class T>
    T need(const std::optional<T>& v, const char* key, T fallback = T{}) {
        if (!v) bad_.push_back(std::string("missing '") + key + "'");
        return v.value_or(fallback);
    }

    void require(bool ok, const std::string& msg) {
        if (!ok) bad_.push_back(msg);
    }

    std::uint64_t seed() {
        if (!c_.seed) bad_.push_back("missing 'seed' (stochastic commands need an explicit seed)");
        return c_.seed.value_or(0);
    }

    int replicas() {
        const int r = need(c_.replicas, "replicas", 1);
        require(r >= 1, "replicas must be at least 1");
        return r;
    }

    void done() const {
        if (!bad_.empty()) throw ConfigError(bad_);
    }

private:
    const RunConfig& c_;
    std::vector<std::string> bad_;
};

InitialSpec parse_initial(const std::optional<std::string>& s, Checker& chk) {
    InitialSpec init;
    if (!s || *s == "origin") return init;
    const auto colon = s->find(':');
    const std::string kind = s->substr(0, colon);
    double scale = 1.0;
    if (colon != std::string::npos) {
        try {
            scale = parse_double(s->substr(colon + 1), "initial scale");
        } catch (const std::exception& e) {
            chk.require(false, e.what());
        }
    }
    if (kind == "gaussian") init.kind = InitialSpec::Kind::gaussian;
    else if (kind == "box") init.kind = InitialSpec::Kind::uniform_box;
    else chk.require(false, "initial must be origin, gaussian:<sd> or box:<half-width>");
    chk.require(scale > 0.0, "initial scale must be positive");
    init.scale = scale;
    return init;
}

LookdownMode parse_mode(const std::optional<std::string>& s, Checker& chk) {
    if (!s || *s == "automatic") return LookdownMode::automatic;
    if (*s == "full") return LookdownMode::full;
    if (*s == "ancestral") return LookdownMode::ancestral;
    chk.require(false, "mode must be automatic, full or ancestral");
    return LookdownMode::automatic;
}

LookdownConfig lookdown_config(const RunConfig& c, Checker& chk) {
    LookdownConfig lc;
    lc.n = chk.need(c.n, "n", 1);
    lc.d = c.d.value_or(1);
    lc.T = chk.need(c.T, "T", 1.0);
    lc.initial = parse_initial(c.initial, chk);
    lc.mode = parse_mode(c.mode, chk);
    lc.snapshot_times = c.snapshot_times;
    chk.require(lc.n >= 1, "n must be at least 1");
    chk.require(lc.d >= 1, "d must be at least 1");
    chk.require(lc.T >= 0.0 && std::isfinite(lc.T), "T must be finite and nonnegative");
    for (double t : lc.snapshot_times) chk.require(t >= 0.0 && t <= lc.T, "snapshot times must lie in [0, T]");
    return lc;
}

std::string coords_header(int d) {
    std::string s;
    for (int c = 1; c <= d; ++c) s += ",x" + std::to_string(c);
    return s;
}

void append_points(std::string& csv, int replica, double time, const std::vector<double>& pos, int d) {
    const std::size_t n = pos.size() / static_cast<std::size_t>(d);
    for (std::size_t i = 0; i < n; ++i) {
        csv += std::to_string(replica) + "," + fmt(time) + "," + std::to_string(i + 1);
        for (int c = 0; c < d; ++c) csv += "," + fmt(pos[i * d + c]);
        csv += "\n";
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

void cmd_rates(const RunConfig& c, OutputDir& dir, std::ostream& out) {
    Checker chk(c);
    const auto mu = chk.measure();
    const int b = chk.need(c.b, "b", 3);
    const int m = c.m.value_or(2);
    const int b_min = c.b_min.value_or(b);
    chk.require(m >= 2, "m must be at least 2");
    chk.require(b > m, "b must exceed m");
    chk.require(b_min <= b, "b_min must not exceed b");
    chk.done();
    std::string table = "b,m,lambda_b,gamma_b,gamma_bm\n";
    std::string rows = "b,k,lambda_bk,merger_rate\n";
    std::string chain = "b,target,rate\n";
    for (int bb = std::max(b_min, m + 1); bb <= b; ++bb) {
        const auto t = rate_summary(mu, bb, m);
        table += std::to_string(bb) + "," + std::to_string(m) + "," + fmt(t.lambda_b) + "," + fmt(t.gamma_b) + "," +
                 fmt(t.gamma_bm) + "\n";
        for (int k = 2; k <= bb; ++k)
            rows += std::to_string(bb) + "," + std::to_string(k) + "," + fmt(t.lambda_bk[k - 2]) + "," +
                    fmt(binomial(bb, k) * t.lambda_bk[k - 2]) + "\n";
        for (int k = m; k < bb; ++k)
            chain += std::to_string(bb) + "," + std::to_string(k) + "," + fmt(t.mu_bk[k - m]) + "\n";
    }
    dir.write("rates.csv", table, "b,m,lambda_b,gamma_b,gamma_bm");
    dir.write("rate_rows.csv", rows, "b,k,lambda_bk,merger_rate");
    dir.write("block_counting.csv", chain, "b,target,rate");
    out << table;
}

json alpha_json(const AlphaFit& a) {
    json j{{"fitted", a.fitted}, {"b_cap", a.b_cap}, {"m_used", a.m_used}};
    if (a.fitted) {
        j["alpha"] = a.alpha;
        j["C"] = a.C;
        j["residual"] = a.residual;
    }
    json tail = json::array();
    for (double t : a.tail) tail.push_back(num(t));
    j["tail"] = tail;
    if (!a.hint.empty()) j["hint"] = a.hint;
    return j;
}

void cmd_cdi(const RunConfig& c, OutputDir& dir, std::ostream& out) {
    Checker chk(c);
    const auto mu = chk.measure();
    const auto grid = c.m_grid.empty() ? default_alpha_grid() : c.m_grid;
    chk.done();
    const auto r = classify_cdi(mu, grid);
    json j{{"measure", mu.describe()},
           {"classification", to_string(r.classification)},
           {"method", r.method},
           {"partial_sum_grid", r.partial_sum_grid},
           {"partial_sums", r.partial_sums}};
    if (r.classification == CdiClass::comes_down) j["alpha"] = alpha_json(r.alpha);
    dir.write("cdi.json", j.dump(2) + "\n", "CdiReport");
    out << to_string(r.classification);
    if (r.alpha.fitted) out << " alpha=" << fmt(r.alpha.alpha);
    out << "\n";
}

void cmd_coalescent(const RunConfig& c, OutputDir& dir, std::ostream& out) {
    Checker chk(c);
    const auto mu = chk.measure();
    const int n = chk.need(c.n, "n", 1);
    const double T = chk.need(c.T, "T", 1.0);
    const int reps = chk.replicas();
    const auto seed = chk.seed();
    auto times = c.times.empty() ? std::vector<double>{T} : c.times;
    chk.require(n >= 1, "n must be at least 1");
    chk.require(T >= 0.0 && std::isfinite(T), "T must be finite and nonnegative");
    for (double t : times) chk.require(t >= 0.0 && t <= T, "times must lie in [0, T]");
    chk.done();
    const JumpLaw law(mu);
    const auto paths = map_replicas(reps, c.workers.value_or(0), [&](int r) {
        auto rng = make_rng(seed, static_cast<std::uint64_t>(r), 0);
        return simulate_partition_path(law, n, T, rng, times, true);
    });
    std::string snaps = "replica,time,blocks,partition\n";
    std::string jumps;
    std::vector<double> final_blocks;
    for (int r = 0; r < reps; ++r) {
        const auto& p = paths[r];
        for (std::size_t i = 0; i < p.times.size(); ++i)
            snaps += std::to_string(r) + "," + fmt(p.times[i]) + "," + std::to_string(p.snapshots[i].size()) + ",\"" +
                     p.snapshots[i].to_string() + "\"\n";
        for (const auto& jr : p.jumps)
            jumps += json{{"replica", r}, {"time", jr.time}, {"k", jr.k}, {"block_minima", jr.block_minima}}.dump() + "\n";
        final_blocks.push_back(p.snapshots.back().size());
    }
    dir.write("partition_snapshots.csv", snaps, "replica,time,blocks,partition");
    dir.write("jumps.jsonl", jumps, "replica,time,k,block_minima");
    const auto ms = mean_se(final_blocks);
    out << "mean blocks at t=" << fmt(times.back()) << ": " << fmt(ms.mean) << " (se " << fmt(ms.se) << ")\n";
}

void cmd_tm(const RunConfig& c, OutputDir& dir, std::ostream& out) {
    Checker chk(c);
    const auto mu = chk.measure();
    std::vector<int> ms = c.m_grid;
    if (c.m) ms.insert(ms.begin(), *c.m);
    chk.require(!ms.empty(), "missing 'm' or 'm_grid'");
    for (int m : ms) chk.require(m >= 1, "m must be at least 1");
    const int reps = chk.replicas();
    const auto seed = chk.seed();
    const double horizon = c.horizon.value_or(1e12);
    chk.require(horizon > 0.0, "horizon must be positive");
    if (c.n_start)
        for (int m : ms) chk.require(*c.n_start > m, "n_start must exceed every m");
    chk.done();
    const JumpLaw law(mu);
    std::string csv = "replica,m,n_start,t_value,censored\n";
    json summary = json::array();
    for (std::size_t mi = 0; mi < ms.size(); ++mi) {
        const int m = ms[mi];
        const auto plan = plan_tm(mu, m, c.n_start ? std::optional<int>(*c.n_start) : std::nullopt);
        const auto samples = map_replicas(reps, c.workers.value_or(0), [&](int r) {
            auto rng = make_rng(seed, static_cast<std::uint64_t>(r), 2 + mi);
            return sample_Tm(plan, law, horizon, rng);
        });
        std::vector<double> vals;
        int censored = 0;
        for (int r = 0; r < reps; ++r) {
            const auto& s = samples[r];
            csv += std::to_string(r) + "," + std::to_string(m) + "," + std::to_string(s.n_start) + "," + fmt(s.t_value) +
                   "," + (s.censored ? "1" : "0") + "\n";
            vals.push_back(s.t_value);
            censored += s.censored;
        }
        const auto st = mean_se(vals);
        summary.push_back({{"m", m},
                           {"n_start", plan.n_start},
                           {"auto_start", plan.auto_start},
                           {"target_met", plan.target_met},
                           {"mean", num(st.mean)},
                           {"se", num(st.se)},
                           {"bound_truncated", num(plan.bound_truncated)},
                           {"truncation_bound", num(plan.truncation_bound)},
                           {"censored", censored},
                           {"mean_within_bound", st.mean <= plan.bound_truncated + 3.0 * (std::isfinite(st.se) ? st.se : 0.0)}});
        out << "m=" << m << " n_start=" << plan.n_start << " mean=" << fmt(st.mean) << " se=" << fmt(st.se)
            << " bound=" << fmt(plan.bound_truncated) << "\n";
    }
    dir.write("tm.csv", csv, "replica,m,n_start,t_value,censored");
    dir.write("tm_summary.json", summary.dump(2) + "\n", "per m: n_start, mean, se, bound_truncated, truncation_bound");
}

void cmd_lookdown(const RunConfig& c, OutputDir& dir, std::ostream& out) {
    Checker chk(c);
    const auto mu = chk.measure();
    auto lc = lookdown_config(c, chk);
    const int reps = chk.replicas();
    const auto seed = chk.seed();
    chk.require(mu.atom1() == 0.0, "the lookdown model needs a measure without an atom at 1");
    chk.done();
    const JumpLaw law(mu);
    const auto runs = map_replicas(reps, c.workers.value_or(0), [&](int r) {
        auto re = make_rng(seed, static_cast<std::uint64_t>(r), 0), rm = make_rng(seed, static_cast<std::uint64_t>(r), 1);
        return simulate_lookdown(law, lc, re, rm);
    });
    std::string snaps = "replica,time,level" + coords_header(lc.d) + "\n";
    std::string events;
    json per = json::array();
    for (int r = 0; r < reps; ++r) {
        const auto& run = runs[r];
        for (const auto& s : run.snapshots) append_points(snaps, r, s.time, s.positions, lc.d);
        if (std::find(lc.snapshot_times.begin(), lc.snapshot_times.end(), lc.T) == lc.snapshot_times.end())
            append_points(snaps, r, lc.T, run.final_state.positions, lc.d);
        for (const auto& e : run.log.events)
            events += json{{"replica", r}, {"time", e.time}, {"participants", e.levels}}.dump() + "\n";
        per.push_back({{"replica", r}, {"mode", to_string(run.mode)}, {"thinned", run.log.thinned}, {"events", run.log.size()}});
    }
    dir.write("snapshots.csv", snaps, "replica,time,level,x1..xd");
    dir.write("events.jsonl", events, "replica,time,participants");
    dir.write("lookdown.json", json{{"replicas", per}}.dump(2) + "\n", "per replica: mode, thinned, events");
    out << "replicas=" << reps << " mode=" << to_string(runs.front().mode) << "\n";
}

double resolve_alpha(const RunConfig& c, const LambdaMeasure& mu) {
    if (c.alpha) return *c.alpha;
    const auto r = classify_cdi(mu);
    if (r.classification != CdiClass::comes_down || !r.alpha.fitted)
        throw ConfigError({"support needs 'alpha' for a measure without a fitted exponent (" +
                           std::string(to_string(r.classification)) + ")"});
    return r.alpha.alpha;
}

void cmd_support(const RunConfig& c, OutputDir& dir, std::ostream& out) {
    Checker chk(c);
    const auto mu = chk.measure();
    auto lc = lookdown_config(c, chk);
    const int reps = chk.replicas();
    const auto seed = chk.seed();
    chk.require(mu.atom1() == 0.0, "the lookdown model needs a measure without an atom at 1");
    if (c.alpha) chk.require(*c.alpha > 0.0, "alpha must be positive");
    if (c.delta) chk.require(*c.delta > 0.0 && *c.delta < 0.5, "delta must lie in (0, 1/2)");
    for (double a : c.energy) chk.require(a > 0.0, "energy exponents must be positive");
    chk.done();
    const double alpha = resolve_alpha(c, mu);
    const JumpLaw law(mu);
    struct Out {
        SupportReport report;
        std::vector<EnergyResult> energy;
    };
    const auto runs = map_replicas(reps, c.workers.value_or(0), [&](int r) {
        auto re = make_rng(seed, static_cast<std::uint64_t>(r), 0), rm = make_rng(seed, static_cast<std::uint64_t>(r), 1);
        auto ra = make_rng(seed, static_cast<std::uint64_t>(r), 2);
        auto s = simulate_support(law, lc, alpha, re, rm);
        Out o{std::move(s.report), {}};
        for (double a : c.energy) o.energy.push_back(energy_integral(s.run.final_state.positions, lc.d, a, &ra));
        return o;
    });
    std::string radii = "replica,m,value\n", disl = "replica,k,value\n";
    json per = json::array();
    int triangle_failures = 0;
    for (int r = 0; r < reps; ++r) {
        const auto& rep = runs[r].report;
        const auto& s = rep.schedule;
        for (std::size_t i = 0; i < s.size(); ++i) radii += std::to_string(r) + "," + std::to_string(s.k[i]) + "," + fmt(rep.R[i]) + "\n";
        for (std::size_t i = 0; i < rep.D.size(); ++i)
            disl += std::to_string(r) + "," + std::to_string(s.k[i]) + "," + fmt(rep.D[i]) + "\n";
        triangle_failures += !rep.triangle_ok;
        json lb = json::array();
        for (double x : s.lookback) lb.push_back(num(x));
        json j{{"replica", r},
               {"diameter", rep.diameter},
               {"triangle_ok", rep.triangle_ok},
               {"worst_triangle_ratio", num(rep.worst_triangle_ratio)},
               {"schedule",
                {{"k", s.k}, {"N", s.N}, {"lookback", lb}, {"N_star", s.N_star}, {"k_unrealized", s.k_unrealized},
                 {"truncated", s.truncated}, {"top_reached", s.top_reached}}},
               {"R", rep.R},
               {"D", rep.D}};
        if (c.delta) {
            const double cd = c_delta(*c.delta);
            json ratio = json::array();
            for (std::size_t i = 0; i < s.size(); ++i)
                ratio.push_back(rep.R[i] / (cd * std::exp2(-s.k[i] * (0.5 - *c.delta))));
            j["radius_over_bound"] = ratio;
        }
        if (!c.energy.empty()) {
            json e = json::array();
            for (std::size_t a = 0; a < c.energy.size(); ++a) {
                const auto& er = runs[r].energy[a];
                e.push_back({{"a", c.energy[a]}, {"value", num(er.value)}, {"sampling_se", er.sampling_se},
                             {"coincidence_fraction", er.coincidence_fraction}, {"infinite", er.infinite},
                             {"points_used", er.points_used}});
            }
            j["energy"] = e;
        }
        per.push_back(std::move(j));
    }
    json report{{"measure", mu.describe()}, {"alpha", alpha}, {"n", lc.n}, {"d", lc.d}, {"T", lc.T},
                {"triangle_failures", triangle_failures}, {"replicas", per}};
    if (c.delta) report["c_delta"] = c_delta(*c.delta);
    dir.write("support.json", report.dump(2) + "\n", "SupportReport per replica");
    dir.write("radii.csv", radii, "replica,m,value");
    dir.write("dislocations.csv", disl, "replica,k,value");
    std::vector<double> dia;
    for (const auto& o : runs) dia.push_back(o.report.diameter);
    out << "alpha=" << fmt(alpha) << " median diameter=" << fmt(median(dia)) << " triangle failures=" << triangle_failures
        << "\n";
    if (triangle_failures) throw InvariantViolation("triangle chain failed in " + std::to_string(triangle_failures) + " replicas");
}

void cmd_dimension(const RunConfig& c, OutputDir& dir, std::ostream& out) {
    Checker chk(c);
    const auto mu = chk.measure();
    auto lc = lookdown_config(c, chk);
    const int reps = chk.replicas();
    const auto seed = chk.seed();
    chk.require(mu.atom1() == 0.0, "the lookdown model needs a measure without an atom at 1");
    for (std::size_t i = 0; i < c.scales.size(); ++i) {
        chk.require(c.scales[i] > 0.0, "scales must be positive");
        if (i) chk.require(c.scales[i] < c.scales[i - 1], "scales must be strictly decreasing");
    }
    chk.require(c.scales.empty() || c.scales.size() >= 2, "at least two scales are needed");
    chk.done();
    const JumpLaw law(mu);
    const auto fits = map_replicas(reps, c.workers.value_or(0), [&](int r) {
        auto re = make_rng(seed, static_cast<std::uint64_t>(r), 0), rm = make_rng(seed, static_cast<std::uint64_t>(r), 1);
        const auto run = simulate_lookdown(law, lc, re, rm);
        const auto& pts = run.final_state.positions;
        return c.scales.empty() ? box_counting_auto(pts, lc.d) : box_counting_dim(pts, lc.d, c.scales);
    });
    std::string csv = "replica,scale,count\n";
    json per = json::array();
    std::vector<double> slopes;
    for (int r = 0; r < reps; ++r) {
        const auto& f = fits[r];
        for (std::size_t i = 0; i < f.scales.size(); ++i) csv += std::to_string(r) + "," + fmt(f.scales[i]) + "," + fmt(f.counts[i]) + "\n";
        per.push_back({{"replica", r}, {"slope", f.slope}, {"band", {f.band_lo(), f.band_hi()}}, {"residual", f.residual},
                       {"scales", f.scales}});
        slopes.push_back(f.slope);
    }
    const double med = median(slopes);
    json report{{"measure", mu.describe()}, {"n", lc.n}, {"d", lc.d}, {"T", lc.T},
                {"window", c.scales.empty() ? "automatic: box counts in [16, n/8]" : "user scales"},
                {"median_slope", med}, {"replicas", per}};
    dir.write("boxcount.csv", csv, "replica,scale,count");
    dir.write("dimension.json", report.dump(2) + "\n", "box-dimension estimate per replica");
    out << "median box-count slope=" << fmt(med) << "\n";
}

GaussianTest test_function(const std::vector<double>& center, const std::optional<double>& width, int d, Checker& chk) {
    GaussianTest f;
    f.center = center.empty() ? std::vector<double>(static_cast<std::size_t>(d), 0.0) : center;
    f.width = width.value_or(1.0);
    chk.require(static_cast<int>(f.center.size()) == d, "test-function centers need d coordinates");
    chk.require(f.width > 0.0, "test-function widths must be positive");
    return f;
}

void cmd_moment2(const RunConfig& c, OutputDir& dir, std::ostream& out) {
    Checker chk(c);
    const auto mu = chk.measure();
    auto lc = lookdown_config(c, chk);
    const int reps = chk.replicas();
    const auto seed = chk.seed();
    chk.require(mu.atom1() == 0.0, "the second-moment check needs a measure without an atom at 1");
    chk.require(!c.initial || *c.initial == "origin", "the second-moment formula assumes an origin start");
    const auto f1 = test_function(c.phi1_center, c.phi1_width, lc.d, chk);
    const auto f2 = test_function(c.phi2_center, c.phi2_width, lc.d, chk);
    chk.done();
    lc.snapshot_times.clear();
    const JumpLaw law(mu);
    const double r = law.rate(2);
    const double analytic = second_moment_analytic(r, lc.d, lc.T, f1, f2);
    const auto prods = map_replicas(reps, c.workers.value_or(0), [&](int i) {
        auto re = make_rng(seed, static_cast<std::uint64_t>(i), 0), rm = make_rng(seed, static_cast<std::uint64_t>(i), 1);
        return empirical_product(simulate_lookdown(law, lc, re, rm).final_state, f1, f2);
    });
    const auto chkd = summarize_second_moment(analytic, prods, lc.n);
    json j{{"measure", mu.describe()}, {"pair_rate", r}, {"d", lc.d}, {"T", lc.T}, {"n", lc.n}, {"replicas", reps},
           {"analytic", chkd.analytic}, {"mc_mean", chkd.mc_mean}, {"mc_se", num(chkd.mc_se)}, {"z", num(chkd.z)}};
    dir.write("moment2.json", j.dump(2) + "\n", "second-moment check");
    out << "analytic=" << fmt(chkd.analytic) << " mc=" << fmt(chkd.mc_mean) << " se=" << fmt(chkd.mc_se)
        << " z=" << fmt(chkd.z) << "\n";
}

// ---------------------------------------------------------------------------
// Flag plumbing
// ---------------------------------------------------------------------------

template <class T>
void opt(CLI::App* app, const std::string& name, std::optional<T>& dst, const std::string& help) {
    app->add_option_function<T>(name, [&dst](const T& v) { dst = v; }, help);
}

template <class T>
void opt(CLI::App* app, const std::string& name, std::vector<T>& dst, const std::string& help) {
    app->add_option_function<std::vector<T>>(name, [&dst](const std::vector<T>& v) { dst = v; }, help)->delimiter(',');
}

/// Values set on the command line replace the config file's.
void overlay(RunConfig& base, const RunConfig& f) {
    auto take = [](auto& dst, const auto& src) {
        if (src) dst = src;
    };
    auto take_vec = [](auto& dst, const auto& src) {
        if (!src.empty()) dst = src;
    };
    take(base.measure, f.measure);
    take(base.n, f.n);
    take(base.d, f.d);
    take(base.T, f.T);
    take(base.m, f.m);
    take_vec(base.m_grid, f.m_grid);
    take(base.b, f.b);
    take(base.b_min, f.b_min);
    take(base.replicas, f.replicas);
    take_vec(base.snapshot_times, f.snapshot_times);
    take_vec(base.times, f.times);
    take_vec(base.scales, f.scales);
    take(base.alpha, f.alpha);
    take(base.delta, f.delta);
    take(base.seed, f.seed);
    take(base.out, f.out);
    take(base.workers, f.workers);
    take(base.horizon, f.horizon);
    take(base.n_start, f.n_start);
    take(base.mode, f.mode);
    take(base.initial, f.initial);
    take_vec(base.phi1_center, f.phi1_center);
    take(base.phi1_width, f.phi1_width);
    take_vec(base.phi2_center, f.phi2_center);
    take(base.phi2_width, f.phi2_width);
    take_vec(base.energy, f.energy);
    base.quick = base.quick || f.quick;
}

struct Spec {
    const char* name;
    const char* help;
    const char* options;  // letters: see add_options
    void (*run)(const RunConfig&, OutputDir&, std::ostream&);
};

void add_options(CLI::App* sc, const std::string& which, RunConfig& f, std::string& config_path) {
    sc->add_option("--config", config_path, "JSON config file; flags override its values");
    opt(sc, "--seed", f.seed, "master seed");
    opt(sc, "--out", f.out, "output directory (default $LFV_OUT_DIR or lfv_out)");
    opt(sc, "--workers", f.workers, "worker threads (0 = hardware)");
    for (char ch : which) {
        switch (ch) {
            case 'M': opt(sc, "--measure", f.measure, "measure spec, e.g. delta0:1, beta:1.5, powerlaw:c=1,gamma=0.5,eps=0.5"); break;
            case 'n': opt(sc, "--n", f.n, "number of levels / leaves"); break;
            case 'd': opt(sc, "--d", f.d, "spatial dimension"); break;
            case 'T': opt(sc, "--T", f.T, "time horizon"); break;
            case 'm': opt(sc, "--m", f.m, "block-count target"); break;
            case 'g': opt(sc, "--m-grid", f.m_grid, "comma-separated m values"); break;
            case 'b': opt(sc, "--b", f.b, "largest block count"); opt(sc, "--b-min", f.b_min, "smallest block count"); break;
            case 'r': opt(sc, "--replicas", f.replicas, "number of replicas"); break;
            case 's': opt(sc, "--snapshot-times", f.snapshot_times, "comma-separated snapshot times"); break;
            case 't': opt(sc, "--times", f.times, "comma-separated record times"); break;
            case 'S': opt(sc, "--scales", f.scales, "comma-separated decreasing box sizes"); break;
            case 'a': opt(sc, "--alpha", f.alpha, "schedule exponent (default: fitted)"); break;
            case 'D': opt(sc, "--delta", f.delta, "delta in (0, 1/2) for the radius bound"); break;
            case 'h': opt(sc, "--horizon", f.horizon, "censoring horizon"); break;
            case 'N': opt(sc, "--n-start", f.n_start, "starting block count (default: automatic)"); break;
            case 'o': opt(sc, "--mode", f.mode, "automatic | full | ancestral"); break;
            case 'i': opt(sc, "--initial", f.initial, "origin | gaussian:<sd> | box:<half-width>"); break;
            case 'E': opt(sc, "--energy", f.energy, "comma-separated energy exponents"); break;
            case 'p':
                opt(sc, "--phi1-center", f.phi1_center, "center of the first test function");
                opt(sc, "--phi1-width", f.phi1_width, "width of the first test function");
                opt(sc, "--phi2-center", f.phi2_center, "center of the second test function");
                opt(sc, "--phi2-width", f.phi2_width, "width of the second test function");
                break;
            default: break;
        }
    }
}

const std::vector<Spec>& specs() {
    static const std::vector<Spec> s{
        {"rates", "rate table lambda_{b,k}, lambda_b, gamma_b, gamma_{b,m}", "Mbm", cmd_rates},
        {"cdi", "coming-down-from-infinity classification and exponent fit", "Mg", cmd_cdi},
        {"coalescent", "partition-valued paths", "MnTrt", cmd_coalescent},
        {"tm", "samples of T_m with the bound columns", "MmgrhN", cmd_tm},
        {"lookdown", "lookdown particle system: snapshots and event logs", "MndTrsio", cmd_lookdown},
        {"support", "subcluster radii, dislocations and diameter", "MndTraDioE", cmd_support},
        {"dimension", "box-counting slope of the particle cloud at T", "MndTrSio", cmd_dimension},
        {"moment2", "second-moment check against the analytic formula", "MndTrop", cmd_moment2},
    };
    return s;
}

}  // namespace

int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Lambda-coalescent and lookdown Fleming-Viot simulator"};
    app.require_subcommand(1);
    RunConfig flags;
    std::string config_path;
    for (const auto& s : specs()) add_options(app.add_subcommand(s.name, s.help), s.options, flags, config_path);
    auto* verify = app.add_subcommand("verify", "run the invariant suite; exits 4 on any failure");
    verify->add_flag("--quick", flags.quick, "smaller sample sizes");
    opt(verify, "--seed", flags.seed, "master seed for the stochastic checks (default 1)");
    opt(verify, "--workers", flags.workers, "worker threads");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return 2;
    }

    const auto* chosen = app.get_subcommands().front();
    const std::string name = chosen->get_name();
    try {
        if (name == "verify") return run_verify(flags.quick, flags.seed.value_or(1), out);
        RunConfig cfg = config_path.empty() ? RunConfig{} : load_config(config_path);
        overlay(cfg, flags);
        cfg.command = name;
        const auto* spec = &specs().front();
        for (const auto& s : specs())
            if (name == s.name) spec = &s;
        const auto t0 = std::chrono::steady_clock::now();
        OutputDir dir(cfg.out ? std::filesystem::path(*cfg.out) : default_out_dir());
        spec->run(cfg, dir, out);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        dir.write_manifest(name, to_json(cfg), wall);
        return 0;
    } catch (const ConfigError& e) {
        err << "config error:\n";
        for (const auto& p : e.problems()) err << "  " << p << "\n";
        return 2;
    } catch (const ArgumentError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const UnsupportedMeasureError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ResourceError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const InvariantViolation& e) {
        err << "invariant failure: " << e.what() << "\n";
        return 4;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const DegenerateMeasureError& e) {
        err << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const AbsorbingStateError& e) {
        err << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace lfv::cli
