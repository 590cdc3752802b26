#include "verify.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"
#include "lfv/coalescent.hpp"
#include "lfv/estimators.hpp"
#include "lfv/format.hpp"
#include "lfv/genealogy.hpp"
#include "lfv/lookdown.hpp"
#include "lfv/moments.hpp"
#include "lfv/rates.hpp"
#include "lfv/stats.hpp"

namespace lfv::cli {
namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

struct Check {
    const char* module;
    const char* name;
    std::function<Outcome()> run;
};

std::string fmt(double v) { return format_double(v); }

std::vector<LambdaMeasure> built_ins() {
    return {LambdaMeasure::kingman(), LambdaMeasure::delta1(), LambdaMeasure::beta(1.5), LambdaMeasure::beta(0.8),
            LambdaMeasure::powerlaw(1, 0.5, 0.5), LambdaMeasure::table({0.0, 0.2, 0.7}, {1.0, 3.0}),
            parse_measure("mix:delta0=0.3+beta=1.5")};
}

std::vector<LambdaMeasure> comes_down() {
    return {LambdaMeasure::kingman(), LambdaMeasure::beta(1.5), LambdaMeasure::powerlaw(1, 0.5, 0.5)};
}

/// Collects the first few failures of a check.
class Failures {
public:
    void add(const std::string& what) {
        if (count_++ < 3) msg_ += (msg_.empty() ? "" : "; ") + what;
    }
    Outcome outcome(const std::string& ok_detail) const {
        if (count_ == 0) return {true, ok_detail};
        return {false, std::to_string(count_) + " failure(s): " + msg_};
    }

private:
    int count_ = 0;
    std::string msg_;
};

// ---------------------------------------------------------------------------
// measures
// ---------------------------------------------------------------------------

Outcome consistency() {
    Failures f;
    double worst = 0.0;
    for (const auto& mu : built_ins()) {
        const auto r = check_consistency(mu, 30);
        worst = std::max(worst, r.max_scaled_residual);
        if (!r.pass) f.add(mu.describe() + " residual " + fmt(r.max_scaled_residual));
    }
    return f.outcome("max scaled residual " + fmt(worst));
}

Outcome beta_quadrature() {
    Failures f;
    double worst = 0.0;
    for (double beta : {0.8, 1.2, 1.5, 1.9}) {
        const auto mu = LambdaMeasure::beta(beta);
        for (int b = 2; b <= 50; ++b)
            for (int k = 2; k <= b; ++k) {
                const double a = lambda_bk(mu, b, k), q = lambda_density_quadrature(mu, b, k);
                const double rel = std::abs(a - q) / std::max(std::abs(a), 1e-300);
                worst = std::max(worst, rel);
                if (rel > 1e-8) f.add(mu.describe() + " b=" + std::to_string(b) + " k=" + std::to_string(k));
            }
    }
    return f.outcome("max relative gap " + fmt(worst));
}

/// Visits (b, m, lambda_b, gamma_b, gamma_bm, row) for 2 <= m < b <= b_max.
template <class Fn>
void for_rows(const LambdaMeasure& mu, int b_max, Fn&& fn) {
    for (int b = 3; b <= b_max; ++b) {
        const auto w = merger_weights(mu, b);
        double lam = 0.0, gam = 0.0;
        for (int k = 2; k <= b; ++k) {
            lam += w[k - 2];
            gam += (k - 1) * w[k - 2];
        }
        for (int m = 2; m < b; ++m) fn(b, m, lam, gam, gamma_bm_from_row(w, b, m));
    }
}

Outcome monotonicity(int b_max) {
    Failures f;
    for (const auto& mu : built_ins()) {
        std::vector<double> prev(static_cast<std::size_t>(b_max) + 1, 0.0);
        for_rows(mu, b_max, [&](int b, int m, double, double, double g) {
            if (prev[m] > g * (1 + 1e-10))
                f.add(mu.describe() + " m=" + std::to_string(m) + " b=" + std::to_string(b - 1) + "->" + std::to_string(b));
            prev[m] = g;
        });
    }
    return f.outcome("2 <= m < b <= " + std::to_string(b_max));
}

Outcome sandwich(int b_max) {
    Failures f;
    for (const auto& mu : built_ins())
        for_rows(mu, b_max, [&](int b, int m, double lam, double gam, double g) {
            const double tol = 1e-12 * std::max(1.0, gam);
            if (lam > g + tol || g > gam + tol) f.add(mu.describe() + " b=" + std::to_string(b) + " m=" + std::to_string(m));
        });
    return f.outcome("2 <= m < b <= " + std::to_string(b_max));
}

Outcome pascal() {
    Failures f;
    for (int n = 1; n < kExactBinomialMax; ++n)
        for (int k = 1; k <= n; ++k)
            if (binomial_exact(n, k) + binomial_exact(n, k - 1) != binomial_exact(n + 1, k))
                f.add("exact n=" + std::to_string(n) + " k=" + std::to_string(k));
    for (int n = kExactBinomialMax; n <= 400; n += 7)
        for (int k = 1; k <= n; k += 3) {
            const double lhs = std::log(std::exp(log_binomial(n, k) - log_binomial(n + 1, k)) +
                                        std::exp(log_binomial(n, k - 1) - log_binomial(n + 1, k)));
            if (std::abs(lhs) > 1e-12) f.add("log n=" + std::to_string(n) + " k=" + std::to_string(k));
        }
    return f.outcome("exact to n=" + std::to_string(kExactBinomialMax) + ", log space to n=400");
}

Outcome row_sums() {
    Failures f;
    for (const auto& mu : built_ins())
        for (int b = 3; b <= 40; ++b)
            for (int m = 2; m < b; m += 5) {
                const auto t = rate_summary(mu, b, m);
                const double s = std::accumulate(t.mu_bk.begin(), t.mu_bk.end(), 0.0);
                if (std::abs(s - t.lambda_b) > 1e-10 * t.lambda_b)
                    f.add(mu.describe() + " b=" + std::to_string(b) + " m=" + std::to_string(m));
            }
    return f.outcome("b <= 40");
}

Outcome kingman_closed_forms() {
    Failures f;
    for (double mass : {1.0, 0.25, 3.0}) {
        const auto mu = LambdaMeasure::kingman(mass);
        for (int b = 3; b <= 100; ++b) {
            const auto t = rate_summary(mu, b, 2);
            const double want = 0.5 * b * (b - 1) * mass;
            if (t.lambda_b != want || t.gamma_b != want) f.add("mass " + fmt(mass) + " b=" + std::to_string(b));
        }
    }
    return f.outcome("b <= 100, exact equality");
}

// ---------------------------------------------------------------------------
// coalescent
// ---------------------------------------------------------------------------

Outcome jump_chain(int draws, int b_max, std::uint64_t seed) {
    Failures f;
    double worst = 1.0;
    for (std::size_t fi = 0; fi < built_ins().size(); ++fi) {
        const auto mu = built_ins()[fi];
        const JumpLaw law(mu);
        auto rng = make_rng(seed, 100 + fi, 2);
        for (int b = 2; b <= b_max; ++b) {
            const auto w = merger_weights(mu, b);
            const double lam = std::accumulate(w.begin(), w.end(), 0.0);
            std::vector<double> obs, p;
            std::vector<double> counts(1u << b, 0.0);
            for (int i = 0; i < draws; ++i) {
                const auto s = coalescent_step(OrderedPartition::finest(b), law, rng);
                unsigned mask = 0;
                for (int j : s.merged) mask |= 1u << (j - 1);
                counts[mask] += 1.0;
            }
            for (unsigned mask = 0; mask < (1u << b); ++mask) {
                const int k = __builtin_popcount(mask);
                const double q = k >= 2 ? w[k - 2] / lam / binomial(b, k) : 0.0;
                if (q > 0.0 || counts[mask] > 0.0) {
                    obs.push_back(counts[mask]);
                    p.push_back(q);
                }
            }
            const double pv = chi_square_gof(obs, p).p_value;
            worst = std::min(worst, pv);
            if (!(pv > 1e-3)) f.add(mu.describe() + " b=" + std::to_string(b) + " p=" + fmt(pv));
        }
    }
    return f.outcome("min p " + fmt(worst));
}

Outcome monotone_coupling(int reps, std::uint64_t seed) {
    Failures f;
    for (const auto& mu : built_ins()) {
        const JumpLaw law(mu);
        for (int r = 0; r < reps; ++r) {
            auto rng = make_rng(seed, r, 3);
            const auto hit = restricted_hitting_times(law, 60, 3, 50.0, rng);
            for (std::size_t n = 1; n < hit.size(); ++n)
                if (hit[n - 1] > hit[n]) f.add(mu.describe() + " replica " + std::to_string(r));
        }
    }
    return f.outcome(std::to_string(reps) + " shared streams per measure, n <= 60");
}

Outcome mean_bound(int reps, std::uint64_t seed) {
    Failures f;
    double worst = -INFINITY;
    for (const auto& mu : comes_down()) {
        const JumpLaw law(mu);
        for (int m : {5, 10, 20}) {
            const auto plan = plan_tm(mu, m, 400);
            std::vector<double> t;
            for (int r = 0; r < reps; ++r) {
                auto rng = make_rng(seed, r, 4);
                t.push_back(sample_Tm(plan, law, 1e9, rng).t_value);
            }
            const auto ms = mean_se(t);
            worst = std::max(worst, (ms.mean - plan.bound_truncated) / ms.se);
            if (ms.mean > plan.bound_truncated + 3 * ms.se) f.add(mu.describe() + " m=" + std::to_string(m));
        }
    }
    return f.outcome("largest (mean - bound)/se " + fmt(worst));
}

Outcome block_counts(int reps, std::uint64_t seed) {
    Failures f;
    for (const auto& mu : built_ins()) {
        const JumpLaw law(mu);
        for (int r = 0; r < reps; ++r) {
            auto rng = make_rng(seed, r, 5);
            const auto path = simulate_partition_path(law, 40, 2.0, rng, {0.1, 0.5, 1.0, 2.0}, true);
            std::size_t prev = 40;
            for (const auto& s : path.snapshots) {
                if (s.size() > prev) f.add(mu.describe() + " replica " + std::to_string(r));
                prev = s.size();
            }
        }
    }
    return f.outcome("partition checked after every jump");
}

// ---------------------------------------------------------------------------
// lookdown
// ---------------------------------------------------------------------------

Outcome level_one(int reps, std::uint64_t seed) {
    Failures f;
    double worst = 0.0;
    for (const auto& mu : comes_down()) {
        const JumpLaw law(mu);
        LookdownConfig cfg;
        cfg.n = 12;
        cfg.T = 0.7;
        cfg.mode = LookdownMode::full;
        cfg.diffusivity = 0.0;
        cfg.initial = {InitialSpec::Kind::gaussian, 1.0};
        cfg.snapshot_times = {0.0};
        for (int r = 0; r < 20; ++r) {
            auto re = make_rng(seed, r, 0), rm = make_rng(seed, r, 1);
            const auto run = simulate_lookdown(law, cfg, re, rm);
            if (run.final_state.at(1)[0] != run.snapshots.at(0).positions[0]) f.add(mu.describe() + " level 1 moved");
        }
        cfg.diffusivity = 1.0;
        cfg.initial = {};
        cfg.snapshot_times.clear();
        std::vector<double> x;
        for (int r = 0; r < reps; ++r) {
            auto re = make_rng(seed, r, 0), rm = make_rng(seed, r, 1);
            x.push_back(simulate_lookdown(law, cfg, re, rm).final_state.at(1)[0]);
        }
        const auto ms = mean_se(x);
        const double ratio = ms.sd * ms.sd / cfg.T;
        const double se = std::sqrt(2.0 / (reps - 1));
        worst = std::max(worst, std::abs(ratio - 1.0) / se);
        if (std::abs(ratio - 1.0) > 3 * se) f.add(mu.describe() + " variance ratio " + fmt(ratio));
    }
    return f.outcome("worst variance-ratio deviation " + fmt(worst) + " se");
}

Outcome level_identity(int reps, std::uint64_t seed) {
    Failures f;
    for (const auto& mu : {LambdaMeasure::kingman(), LambdaMeasure::beta(1.5), LambdaMeasure::beta(0.8)}) {
        const JumpLaw law(mu);
        for (int r = 0; r < reps; ++r) {
            auto rng = make_rng(seed, r, 6);
            try {
                const auto full = sample_events_full(law, 9, 1.0, rng);
                check_level_identity(full, 9, 1.0, {0.0, 0.1, 0.4, 0.9, 1.0});
                const auto anc = sample_events_ancestral(law, 200, 1.0, {0.3, 0.6}, rng);
                check_level_identity(anc.log, 200, 1.0, {0.0, 0.05, 0.2, 0.5, 0.95});
            } catch (const InvariantViolation& e) {
                f.add(mu.describe() + " replica " + std::to_string(r) + ": " + e.what());
            }
        }
    }
    return f.outcome(std::to_string(3 * reps) + " replicas, both sampling modes");
}

Outcome genealogy_equivalence(int reps, std::uint64_t seed) {
    Failures f;
    double worst = 1.0;
    const int n = 5;
    const double T = 1.0;
    const std::vector<double> times{0.3, 0.8};
    for (const auto& mu : {LambdaMeasure::kingman(), LambdaMeasure::beta(1.5)}) {
        const JumpLaw law(mu);
        for (std::size_t ti = 0; ti < times.size(); ++ti) {
            std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0);
            for (int r = 0; r < reps; ++r) {
                auto r1 = make_rng(seed, r, 7), r2 = make_rng(seed, r, 8), r3 = make_rng(seed, r, 9);
                a[Genealogy(sample_events_full(law, n, T, r1), n, T).block_count(times[ti]) - 1] += 1;
                b[Genealogy(sample_events_ancestral(law, n, T, {}, r2).log, n, T).block_count(times[ti]) - 1] += 1;
                c[simulate_partition_path(law, n, times[ti], r3, {times[ti]}).snapshots.front().size() - 1] += 1;
            }
            for (const auto* x : {&a, &b}) {
                const double pv = chi_square_two_sample(*x, c).p_value;
                worst = std::min(worst, pv);
                if (!(pv > 1e-3)) f.add(mu.describe() + " t=" + fmt(times[ti]) + " p=" + fmt(pv));
            }
        }
    }
    return f.outcome("min p " + fmt(worst));
}

Outcome exchangeability(int reps, std::uint64_t seed) {
    const JumpLaw law(LambdaMeasure::beta(1.5));
    LookdownConfig cfg;
    cfg.n = 300;
    cfg.T = 0.4;
    cfg.initial = {InitialSpec::Kind::gaussian, 1.0};
    std::vector<double> lo, hi;
    for (int r = 0; r < reps; ++r) {
        auto re = make_rng(seed, r, 0), rm = make_rng(seed, r, 1);
        const auto run = simulate_lookdown(law, cfg, re, rm);
        auto q = make_rng(seed, r, 2);
        lo.push_back(run.final_state.at(1 + static_cast<int>(q() % 150))[0]);
        hi.push_back(run.final_state.at(151 + static_cast<int>(q() % 150))[0]);
    }
    const double pv = ks_two_sample(lo, hi).p_value;
    return {pv > 1e-3, "KS p " + fmt(pv)};
}

Outcome event_rate(int reps, std::uint64_t seed) {
    Failures f;
    for (const auto& mu : {LambdaMeasure::kingman(), LambdaMeasure::beta(1.5), LambdaMeasure::powerlaw(1, 0.5, 0.5)}) {
        const JumpLaw law(mu);
        std::vector<double> counts;
        for (int r = 0; r < reps; ++r) {
            auto rng = make_rng(seed, r, 10);
            counts.push_back(static_cast<double>(sample_events_full(law, 6, 0.8, rng).size()));
        }
        const auto ms = mean_se(counts);
        if (std::abs(ms.mean - law.rate(6) * 0.8) > 3 * ms.se) f.add(mu.describe() + " mean " + fmt(ms.mean));
    }
    return f.outcome("n = 6, T = 0.8");
}

Outcome lookdown_determinism(std::uint64_t seed) {
    const JumpLaw law(LambdaMeasure::beta(1.5));
    LookdownConfig cfg;
    cfg.n = 500;
    cfg.d = 2;
    cfg.snapshot_times = {0.5};
    auto once = [&] {
        auto re = make_rng(seed, 0, 0), rm = make_rng(seed, 0, 1);
        return simulate_lookdown(law, cfg, re, rm);
    };
    const auto a = once(), b = once();
    bool same = a.final_state.positions == b.final_state.positions && a.snapshots[0].positions == b.snapshots[0].positions &&
                a.log.size() == b.log.size();
    for (std::size_t i = 0; same && i < a.log.size(); ++i)
        same = a.log.events[i].time == b.log.events[i].time && a.log.events[i].levels == b.log.events[i].levels;
    return {same, "n = 500, bitwise comparison"};
}

// ---------------------------------------------------------------------------
// estimators
// ---------------------------------------------------------------------------

Outcome triangle_and_schedule(int reps, std::uint64_t seed, bool want_triangle) {
    Failures f;
    int star_fail = 0, total = 0;
    for (const auto& mu : comes_down()) {
        const JumpLaw law(mu);
        const double alpha = mu.atom0() > 0 ? 1.0 : 0.5;
        LookdownConfig cfg;
        cfg.n = 1000;
        cfg.d = 2;
        for (int r = 0; r < reps; ++r) {
            auto re = make_rng(seed, r, 0), rm = make_rng(seed, r, 1);
            const auto s = simulate_support(law, cfg, alpha, re, rm);
            if (want_triangle && !s.report.triangle_ok)
                f.add(mu.describe() + " replica " + std::to_string(r) + " ratio " + fmt(s.report.worst_triangle_ratio));
            if (s.schedule.size() > 0) {
                ++total;
                const std::size_t last = s.schedule.size() - 1;
                star_fail += s.schedule.N_star[last] > s.schedule.N[last];
            }
        }
    }
    if (!want_triangle && star_fail >= 0.05 * total) f.add(std::to_string(star_fail) + " of " + std::to_string(total));
    return f.outcome(want_triangle ? "n = 1000, d = 2"
                                   : std::to_string(star_fail) + " of " + std::to_string(total) + " replicas exceed N_k");
}

Outcome bound_dominance(std::size_t paths, std::uint64_t seed) {
    Failures f;
    double worst = 0.0;
    for (int d = 1; d <= 3; ++d) {
        const auto b = brownian_sup_bound(d, 1.0, 1.0);
        if (b.C1 != std::sqrt(8.0 * d * d * d / kPi) || b.C2 != 1.0 / (2.0 * d)) f.add("constants d=" + std::to_string(d));
        // Both sides depend on x / sqrt(t) only, so unit-time paths cover the grid.
        const std::vector<double> xs{2.0, 3.0, 4.0};
        auto rng = make_rng(seed, static_cast<std::uint64_t>(d), 11);
        const auto hits = brownian_sup_exceedance(d, 400, paths, xs, rng);
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double bound = brownian_sup_bound(d, 1.0, xs[i]).bound;
            // In one dimension the bound is nearly tight, so allow for sampling noise.
            const double se = std::sqrt(hits[i] * (1.0 - hits[i]) / static_cast<double>(paths));
            worst = std::max(worst, hits[i] / bound);
            if (hits[i] - 3.0 * se > bound) f.add("d=" + std::to_string(d) + " x/sqrt(t)=" + fmt(xs[i]));
        }
    }
    return f.outcome("largest MC/bound ratio " + fmt(worst));
}

Outcome box_slope_cap(int reps, std::uint64_t seed) {
    Failures f;
    double worst = -INFINITY;
    for (const auto& mu : comes_down()) {
        const JumpLaw law(mu);
        for (int d : {1, 2}) {
            LookdownConfig cfg;
            cfg.n = 4096;
            cfg.d = d;
            for (int r = 0; r < reps; ++r) {
                auto re = make_rng(seed, r, 0), rm = make_rng(seed, r, 1);
                const auto pts = simulate_lookdown(law, cfg, re, rm).final_state.positions;
                const double slope = box_counting_auto(pts, d).slope;
                worst = std::max(worst, slope - d);
                if (slope > d + 0.2) f.add(mu.describe() + " d=" + std::to_string(d) + " slope " + fmt(slope));
            }
        }
    }
    return f.outcome("largest slope - d " + fmt(worst));
}

Outcome second_moment(int n, int reps, std::uint64_t seed) {
    Failures f;
    double worst = 0.0;
    const GaussianTest f1{{0.3, 0.0}, 0.8, 1.0}, f2{{-0.2, 0.4}, 1.1, 1.0};
    for (const auto& mu : comes_down()) {
        const JumpLaw law(mu);
        LookdownConfig cfg;
        cfg.n = n;
        cfg.d = 2;
        cfg.T = 0.5;
        std::vector<double> prods;
        for (int r = 0; r < reps; ++r) {
            auto re = make_rng(seed, r, 0), rm = make_rng(seed, r, 1);
            prods.push_back(empirical_product(simulate_lookdown(law, cfg, re, rm).final_state, f1, f2));
        }
        const auto c = summarize_second_moment(second_moment_analytic(law.rate(2), 2, cfg.T, f1, f2), prods, n);
        worst = std::max(worst, std::abs(c.z));
        if (!(std::abs(c.z) <= 3.0)) f.add(mu.describe() + " z=" + fmt(c.z));
    }
    return f.outcome("n = " + std::to_string(n) + ", largest |z| " + fmt(worst));
}

Outcome compactness(int reps, std::uint64_t seed) {
    auto medians = [&](double beta) {
        const JumpLaw law(LambdaMeasure::beta(beta));
        std::vector<double> out;
        for (int n : {1 << 10, 1 << 12, 1 << 14}) {
            LookdownConfig cfg;
            cfg.n = n;
            cfg.d = 2;
            std::vector<double> dia;
            for (int r = 0; r < reps; ++r) {
                auto re = make_rng(seed, r, 0), rm = make_rng(seed, r, 1);
                dia.push_back(diameter(simulate_lookdown(law, cfg, re, rm).final_state.positions, 2));
            }
            out.push_back(median(dia));
        }
        return out;
    };
    const auto flat = medians(1.5), grow = medians(0.8);
    const std::vector<double> lg{10, 12, 14};
    const double slope = linear_fit(lg, flat).slope;
    const bool ok = std::abs(slope) <= 0.1 && grow[0] < grow[1] && grow[1] < grow[2];
    return {ok, "beta 1.5 slope " + fmt(slope) + "; beta 0.8 medians " + fmt(grow[0]) + ", " + fmt(grow[1]) + ", " +
                    fmt(grow[2])};
}

// ---------------------------------------------------------------------------
// cli
// ---------------------------------------------------------------------------

int invoke(std::vector<std::string> args) {
    std::vector<const char*> argv{"lfv"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    return run_command(static_cast<int>(argv.size()), argv.data(), out, err);
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

/// The manifest's file list (everything except the wall-clock line).
std::string manifest_files(const std::filesystem::path& dir) {
    const auto j = nlohmann::json::parse(read_file(dir / "manifest.json"));
    return j.at("files").dump();
}

Outcome cli_determinism(std::uint64_t seed) {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / ("lfv_verify_" + std::to_string(seed) + "_" +
                                                        std::to_string(std::hash<std::string>{}(fs::current_path().string())));
    fs::remove_all(root);
    Failures f;
    const std::string s = std::to_string(seed);
    const std::vector<std::vector<std::string>> runs{
        {"lookdown", "--measure", "beta:1.5", "--n", "64", "--d", "2", "--T", "0.5", "--replicas", "4", "--seed", s},
        {"support", "--measure", "delta0:1", "--n", "256", "--d", "2", "--T", "1", "--replicas", "3", "--alpha", "1",
         "--seed", s},
        {"coalescent", "--measure", "beta:1.2", "--n", "10", "--T", "1", "--replicas", "5", "--seed", s}};
    for (std::size_t i = 0; i < runs.size(); ++i) {
        std::vector<std::string> digests;
        for (const char* workers : {"1", "1", "3"}) {
            const fs::path dir = root / (std::to_string(i) + "_" + std::to_string(digests.size()));
            auto args = runs[i];
            args.insert(args.end(), {"--workers", workers, "--out", dir.string()});
            const int code = invoke(args);
            if (code != 0) {
                f.add(runs[i][0] + " exited " + std::to_string(code));
                break;
            }
            digests.push_back(manifest_files(dir));
        }
        for (const auto& d : digests)
            if (d != digests.front()) f.add(runs[i][0] + " checksums differ");
    }
    fs::remove_all(root);
    return f.outcome("same seed: repeated runs and 1 vs 3 workers");
}

Outcome cli_strict_config() {
    Failures f;
    try {
        parse_config(R"({"betaa": 1.5})");
        f.add("unknown key accepted");
    } catch (const ConfigError& e) {
        if (e.problems().empty() || e.problems()[0].find("betaa") == std::string::npos) f.add("key not named");
    }
    if (invoke({"rates", "--bogus"}) != 2) f.add("unknown flag did not exit 2");
    if (invoke({"lookdown", "--measure", "delta0:1", "--n", "4", "--T", "1"}) != 2) f.add("missing seed did not exit 2");
    return f.outcome("unknown keys, unknown flags and missing seed exit 2");
}

}  // namespace

int run_verify(bool quick, std::uint64_t seed, std::ostream& out) {
    const int s = quick ? 1 : 5;
    const std::vector<Check> checks{
        {"measures", "consistency lambda_{b,k} = lambda_{b+1,k} + lambda_{b+1,k+1}", consistency},
        {"measures", "beta closed form matches quadrature", beta_quadrature},
        {"measures", "gamma_{b,m} nondecreasing in b", [&] { return monotonicity(quick ? 50 : 100); }},
        {"measures", "lambda_b <= gamma_{b,m} <= gamma_b", [&] { return sandwich(quick ? 50 : 100); }},
        {"measures", "Pascal identity for binomial weights", pascal},
        {"measures", "block-counting row sums equal lambda_b", row_sums},
        {"measures", "Kingman closed forms", kingman_closed_forms},
        {"coalescent", "jump-chain law", [&] { return jump_chain(quick ? 20000 : 100000, quick ? 5 : 6, seed); }},
        {"coalescent", "T_m monotone under a shared event stream", [&] { return monotone_coupling(4 * s, seed); }},
        {"coalescent", "mean T_m below the truncated tail sum", [&] { return mean_bound(400 * s, seed); }},
        {"coalescent", "block counts never increase, partitions valid", [&] { return block_counts(10 * s, seed); }},
        {"lookdown", "level 1 never jumps and moves as Brownian motion", [&] { return level_one(400 * s, seed); }},
        {"lookdown", "ancestor levels of block l all equal l", [&] { return level_identity(10 * s, seed); }},
        {"lookdown", "recovered genealogy matches the coalescent", [&] { return genealogy_equivalence(4000 * s, seed); }},
        {"lookdown", "levels exchangeable at T", [&] { return exchangeability(500 * s, seed); }},
        {"lookdown", "event count mean lambda_n T", [&] { return event_rate(1000 * s, seed); }},
        {"lookdown", "identical seeds give identical runs", [&] { return lookdown_determinism(seed); }},
        {"estimators", "triangle chain R_m <= sum D_k + R_{K+1}", [&] { return triangle_and_schedule(3 * s, seed, true); }},
        {"estimators", "N*_k <= N_k at the largest realized k", [&] { return triangle_and_schedule(3 * s, seed, false); }},
        {"estimators", "Brownian sup bound dominates Monte Carlo", [&] { return bound_dominance(quick ? 4000 : 20000, seed); }},
        {"estimators", "box-counting slope at most d + 0.2", [&] { return box_slope_cap(s, seed); }},
        {"estimators", "second-moment z-score within 3",
         [&] { return quick ? second_moment(256, 100, seed) : second_moment(2048, 200, seed); }},
        {"cli", "strict config validation", cli_strict_config},
        {"cli", "byte-identical outputs across runs and worker counts", [&] { return cli_determinism(seed); }},
    };
    int failed = 0;
    auto report = [&](const char* module, const char* name, const Outcome& o) {
        failed += !o.pass;
        out << (o.pass ? "PASS " : "FAIL ") << module << ": " << name;
        if (!o.detail.empty()) out << " (" << o.detail << ")";
        out << "\n" << std::flush;
    };
    for (const auto& c : checks) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        report(c.module, c.name, o);
    }
    const char* contrast = "support diameter flat for beta 1.5, growing for beta 0.8";
    if (quick) out << "SKIP estimators: " << contrast << " (full run only)\n";
    else {
        Outcome o;
        try {
            o = compactness(50, seed);
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        report("estimators", contrast, o);
    }
    out << (failed ? std::to_string(failed) + " invariant(s) failed\n" : "all invariants hold\n");
    return failed ? 4 : 0;
}

}  // namespace lfv::cli
