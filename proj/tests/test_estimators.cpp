#include <gtest/gtest.h>

#include "lfv/estimators.hpp"
#include "lfv/moments.hpp"

using namespace lfv;

namespace {

double brute_diameter(const std::vector<double>& pts, int d) {
    const std::size_t n = pts.size() / d;
    double best = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (int c = 0; c < d; ++c) s += (pts[i * d + c] - pts[j * d + c]) * (pts[i * d + c] - pts[j * d + c]);
            best = std::max(best, s);
        }
    return std::sqrt(best);
}

std::vector<double> uniform_square(std::size_t n, Rng& rng) {
    std::vector<double> pts;
    for (std::size_t i = 0; i < 2 * n; ++i) pts.push_back(uniform01(rng));
    return pts;
}

}  // namespace

TEST(Constants, CDelta) {
    EXPECT_NEAR(c_delta(0.25), 6.2853, 1e-4);
    EXPECT_NEAR(c_delta(1e-12), 1.0 / (1.0 - std::sqrt(0.5)), 1e-9);
    EXPECT_NEAR(c_delta(0.49), 144.77, 0.05);
    EXPECT_THROW(c_delta(0.0), ArgumentError);
    EXPECT_THROW(c_delta(0.5), ArgumentError);
}

TEST(Constants, BrownianBound) {
    const auto b2 = brownian_sup_bound(2, 1.0, 3.0);
    EXPECT_NEAR(b2.bound, 0.1586, 1e-4);
    const auto b1 = brownian_sup_bound(1, 1.0, 3.0);
    EXPECT_NEAR(b1.C1, 1.5958, 1e-4);
    EXPECT_NEAR(b1.bound, 0.00591, 1e-5);
    for (int d = 1; d <= 3; ++d) {
        const auto b = brownian_sup_bound(d, 2.0, 1.0);
        EXPECT_DOUBLE_EQ(b.C1, std::sqrt(8.0 * d * d * d / kPi));
        EXPECT_DOUBLE_EQ(b.C2, 1.0 / (2.0 * d));
    }
    EXPECT_THROW(brownian_sup_bound(2, 0.0, 1.0), ArgumentError);
}

TEST(Constants, BrownianBoundDominatesDiscreteSup) {
    auto rng = make_rng(2, 0, 0);
    const std::vector<double> x{2.0, 3.0};
    const auto hits = brownian_sup_exceedance(2, 500, 5000, x, rng);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_LE(hits[i], brownian_sup_bound(2, 1.0, x[i]).bound);
    // One dimension at level 2: the reflection principle gives 4 (1 - Phi(2)) minus a small correction.
    const std::vector<double> two{2.0};
    const auto one = brownian_sup_exceedance(1, 1000, 20000, two, rng);
    EXPECT_NEAR(one[0], 0.0898, 0.012);
}

TEST(Geometry, DiameterMatchesBruteForce) {
    auto rng = make_rng(3, 0, 0);
    for (int d : {1, 2, 3}) {
        std::vector<double> pts;
        for (int i = 0; i < 300 * d; ++i) pts.push_back(normal(rng));
        EXPECT_DOUBLE_EQ(diameter(pts, d), brute_diameter(pts, d)) << d;
    }
    const std::vector<double> square{0, 0, 1, 0, 0, 1, 1, 1, 0.5, 0.5, 1, 1};
    EXPECT_DOUBLE_EQ(diameter(square, 2), std::sqrt(2.0));
    EXPECT_EQ(diameter(std::vector<double>{1, 1}, 2), 0.0);
}

TEST(Geometry, BoxCountingKnownSets) {
    auto rng = make_rng(4, 0, 0);
    const auto scales = geometric_scales(0.25, 0.5, 5);
    std::vector<double> seg;
    for (int i = 0; i < 10000; ++i) {
        const double t = uniform01(rng);
        seg.push_back(t);
        seg.push_back(0.3 * t);
    }
    EXPECT_NEAR(box_counting_dim(seg, 2, scales).slope, 1.0, 0.1);
    EXPECT_NEAR(box_counting_dim(uniform_square(10000, rng), 2, scales).slope, 2.0, 0.15);
    const auto one = box_counting_dim(std::vector<double>{0.2, 0.7}, 2, scales);
    EXPECT_EQ(one.slope, 0.0);
    EXPECT_THROW(box_counting_dim(seg, 2, {0.1}), ArgumentError);
    EXPECT_THROW(box_counting_dim(seg, 2, {0.1, 0.2}), ArgumentError);
}

TEST(Geometry, BoxCountingWindowFromCounts) {
    auto rng = make_rng(6, 0, 0);
    const auto sq = uniform_square(20000, rng);
    const auto fit = box_counting_auto(sq, 2);
    EXPECT_NEAR(fit.slope, 2.0, 0.15);
    for (std::size_t i = 0; i < fit.counts.size(); ++i) {
        EXPECT_GE(fit.counts[i], 16.0);
        EXPECT_LE(fit.counts[i], 20000 / 8.0);
    }
    std::vector<double> seg;
    for (int i = 0; i < 20000; ++i) {
        const double t = uniform01(rng);
        seg.insert(seg.end(), {t, -0.5 * t});
    }
    EXPECT_NEAR(box_counting_auto(seg, 2).slope, 1.0, 0.1);
    EXPECT_THROW(box_counting_auto(std::vector<double>{0.0, 0.0, 1.0, 1.0}, 2), ArgumentError);
    EXPECT_THROW(box_counting_auto(std::vector<double>{0.5, 0.5}, 2), ArgumentError);
}

TEST(Geometry, EnergyIntegral) {
    EXPECT_DOUBLE_EQ(energy_integral(std::vector<double>{0, 0, 1, 0}, 2, 1.0).value, 1.0);
    EXPECT_DOUBLE_EQ(energy_integral(std::vector<double>{0, 0, 0, 2}, 2, 1.0).value, 0.5);
    const auto same = energy_integral(std::vector<double>{1, 1, 1, 1, 1, 1}, 2, 1.0);
    EXPECT_TRUE(same.infinite);
    EXPECT_DOUBLE_EQ(same.coincidence_fraction, 1.0);
    const auto dup = energy_integral(std::vector<double>{0, 0, 0, 0, 0, 1}, 2, 1.0);
    EXPECT_DOUBLE_EQ(dup.value, 1.0);
    EXPECT_NEAR(dup.coincidence_fraction, 1.0 / 3.0, 1e-15);
}

TEST(Geometry, EnergyIntegralAgainstSubsampleOracle) {
    auto rng = make_rng(5, 0, 0);
    const auto pts = uniform_square(10000, rng);
    const double full = energy_integral(pts, 2, 1.0).value;
    double sum = 0.0, cnt = 0.0;
    for (int i = 0; i < 1000; ++i)
        for (int j = i + 1; j < 1000; ++j) {
            sum += 1.0 / std::hypot(pts[2 * i] - pts[2 * j], pts[2 * i + 1] - pts[2 * j + 1]);
            cnt += 1.0;
        }
    EXPECT_NEAR(full, sum / cnt, 0.05 * full);
    // Subsampled estimate reports an error bar that covers the full value.
    std::vector<double> big = pts;
    const auto more = uniform_square(2000, rng);
    big.insert(big.end(), more.begin(), more.end());
    const auto sub = energy_integral(big, 2, 1.0, &rng, 3000);
    EXPECT_EQ(sub.points_used, 3000u);
    EXPECT_GT(sub.sampling_se, 0.0);
    EXPECT_NEAR(sub.value, full, 5.0 * sub.sampling_se + 0.02 * full);
}

TEST(Schedule, Sizes) {
    EXPECT_EQ(schedule_size(1, 1.0), 2);
    EXPECT_EQ(schedule_size(3, 1.0), 72);
    EXPECT_EQ(schedule_size(4, 1.0), 256);
    EXPECT_EQ(schedule_size(5, 1.0), 800);
    EXPECT_EQ(schedule_size(6, 1.0), 2304);
    EXPECT_EQ(schedule_size(7, 1.0), 6272);
    EXPECT_EQ(schedule_size(2, 0.5), 256);
}

TEST(Support, NoEventsGivesZeroRadii) {
    const JumpLaw law(LambdaMeasure::zero());
    LookdownConfig cfg;
    cfg.n = 1;
    cfg.d = 2;
    auto re = make_rng(6, 0, 0), rm = make_rng(6, 0, 1);
    const auto s = simulate_support(law, cfg, 1.0, re, rm);
    ASSERT_GE(s.schedule.size(), 1u);
    for (double r : s.report.R) EXPECT_EQ(r, 0.0);
    EXPECT_TRUE(s.report.triangle_ok);
}

TEST(Support, FrozenMotionGivesZeroDislocations) {
    EventPlan plan;
    plan.mode = LookdownMode::full;
    plan.n = 4;
    plan.T = 1.0;
    plan.log.events.push_back({0.4, {1, 2}});
    plan.initial_size = 4;
    plan.query_times = {1.0};
    plan.size_after_query = {4};
    LookdownConfig cfg;
    cfg.n = 4;
    cfg.d = 2;
    cfg.diffusivity = 0.0;
    const Genealogy g(plan.log, 4, 1.0);
    const auto sched = make_schedule(g, 1.0);
    std::vector<double> times;
    for (std::size_t i = 0; i < sched.size(); ++i) times.push_back(sched.time(i));
    auto rng = make_rng(7, 0, 0);
    const auto run = realize_positions(plan, cfg, rng, times);
    const auto rep = support_metrics(g, run.final_state, run.observations, sched);
    for (double r : rep.R) EXPECT_EQ(r, 0.0);
    for (double x : rep.D) EXPECT_EQ(x, 0.0);
}

TEST(Support, TriangleChainAndScheduleInvariants) {
    for (const auto& mu : {LambdaMeasure::kingman(), LambdaMeasure::beta(1.5)}) {
        const JumpLaw law(mu);
        LookdownConfig cfg;
        cfg.n = 1000;
        cfg.d = 2;
        for (int r = 0; r < 10; ++r) {
            auto re = make_rng(8, r, 0), rm = make_rng(8, r, 1);
            const auto s = simulate_support(law, cfg, mu.atom0() > 0 ? 1.0 : 0.5, re, rm);
            EXPECT_TRUE(s.report.triangle_ok);
            EXPECT_TRUE(s.schedule.top_reached);
            EXPECT_EQ(s.report.R.back(), 0.0);
            for (std::size_t i = 0; i < s.schedule.size(); ++i)
                EXPECT_LE(s.schedule.N_star[i], std::min<long long>(s.schedule.N[i], cfg.n));
            EXPECT_GE(s.report.diameter, s.report.R.front());
        }
    }
}

// The radius at each schedule time equals a brute-force pass over leaves that
// replays ancestral levels one by one.
TEST(Support, RadiiMatchLevelReplay) {
    const JumpLaw law(LambdaMeasure::beta(1.4));
    LookdownConfig cfg;
    cfg.n = 60;
    cfg.d = 2;
    cfg.mode = LookdownMode::full;
    auto re = make_rng(9, 0, 0), rm = make_rng(9, 0, 1);
    const auto plan = plan_events(law, cfg, re);
    const Genealogy g(plan.log, cfg.n, cfg.T);
    const auto sched = make_schedule(g, 0.5);
    std::vector<double> times;
    for (std::size_t i = 0; i < sched.size(); ++i) times.push_back(sched.time(i));
    const auto run = realize_positions(plan, cfg, rm, times);
    const auto rep = support_metrics(g, run.final_state, run.observations, sched);
    for (std::size_t i = 0; i < sched.size(); ++i) {
        double R = 0.0;
        for (int j = 1; j <= cfg.n; ++j) {
            const int L = ancestral_level(plan.log, j, sched.time(i), cfg.T);
            const double dx = run.final_state.at(j)[0] - run.observations[i].positions[2 * (L - 1)];
            const double dy = run.final_state.at(j)[1] - run.observations[i].positions[2 * (L - 1) + 1];
            R = std::max(R, std::hypot(dx, dy));
        }
        EXPECT_NEAR(rep.R[i], R, 1e-12);
    }
}

TEST(SecondMoment, GaussianClosedForms) {
    const GaussianTest f{{0.3}, 0.8, 1.0};
    const double s = 0.6, x = -0.4;
    auto conv = [&](double y) { return f(std::vector<double>{x + y}) * std::exp(-y * y / (2 * s)) / std::sqrt(2 * kPi * s); };
    const double numeric = integrate_adaptive(conv, -12.0, 12.0, 1e-12).value;
    EXPECT_NEAR(f.heat(s)(std::vector<double>{x}), numeric, 1e-10);
    const GaussianTest g{{-0.5}, 1.3, 2.0};
    const std::vector<double> p{0.7};
    EXPECT_NEAR((f * g)(p), f(p) * g(p), 1e-14);
}

TEST(SecondMoment, DegenerateCases) {
    const GaussianTest f{{0.0, 0.0}, 1.0, 1.0}, g{{0.5, 0.0}, 0.7, 1.0};
    const std::vector<double> o{0.0, 0.0};
    EXPECT_DOUBLE_EQ(second_moment_analytic(1.0, 2, 0.0, f, g), f(o) * g(o));
    EXPECT_DOUBLE_EQ(second_moment_analytic(0.0, 2, 0.5, f, g), f.heat(0.5)(o) * g.heat(0.5)(o));
    EXPECT_THROW(second_moment_analytic(1.0, 3, 0.5, f, g), ArgumentError);
}

// Independent oracle: simulate the two dual lineages directly.
TEST(SecondMoment, AnalyticMatchesDualLineages) {
    const GaussianTest f{{0.2, 0.0}, 0.9, 1.0}, g{{-0.3, 0.1}, 1.2, 1.0};
    const double r = 1.7, T = 0.8;
    auto rng = make_rng(10, 0, 0);
    std::vector<double> v;
    for (int i = 0; i < 200000; ++i) {
        const double S = exponential(rng, r);
        const double shared = std::sqrt(std::max(0.0, T - S)), own = std::sqrt(std::min(S, T));
        std::vector<double> x(2), y(2);
        for (int c = 0; c < 2; ++c) {
            const double common = shared * normal(rng);
            x[c] = common + own * normal(rng);
            y[c] = common + own * normal(rng);
        }
        v.push_back(f(x) * g(y));
    }
    const auto ms = mean_se(v);
    EXPECT_NEAR(second_moment_analytic(r, 2, T, f, g), ms.mean, 4 * ms.se);
}

TEST(SecondMoment, ZeroMeasureLookdown) {
    const JumpLaw law(LambdaMeasure::zero());
    LookdownConfig cfg;
    cfg.n = 50;
    cfg.d = 2;
    cfg.T = 0.5;
    const GaussianTest f{{0.0, 0.0}, 1.0, 1.0};
    std::vector<double> prod;
    for (int r = 0; r < 400; ++r) {
        auto re = make_rng(12, r, 0), rm = make_rng(12, r, 1);
        prod.push_back(empirical_product(simulate_lookdown(law, cfg, re, rm).final_state, f, f));
    }
    // With independent particles the finite-n mean has an exact 1/n correction.
    const std::vector<double> o{0.0, 0.0};
    const double pair = f.heat(0.5)(o) * f.heat(0.5)(o);
    const double self = (f * f).heat(0.5)(o);
    const double exact = pair + (self - pair) / cfg.n;
    const auto c = summarize_second_moment(exact, prod, cfg.n);
    EXPECT_LE(std::abs(c.z), 3.0);
    EXPECT_NEAR(second_moment_analytic(0.0, 2, 0.5, f, f), pair, 1e-15);
}
