#include <gtest/gtest.h>

#include <map>

#include "lfv/coalescent.hpp"
#include "lfv/stats.hpp"

using namespace lfv;

namespace {

std::vector<LambdaMeasure> families() {
    return {LambdaMeasure::kingman(), LambdaMeasure::delta1(), LambdaMeasure::beta(1.5), LambdaMeasure::beta(0.8),
            LambdaMeasure::powerlaw(1, 0.5, 0.5), LambdaMeasure::table({0.0, 0.2, 0.7}, {1.0, 3.0}),
            parse_measure("mix:delta0=0.3+beta=1.5")};
}

}  // namespace

TEST(Subset, UniformOverSubsets) {
    Rng rng(7);
    for (auto [n, k] : {std::pair{6, 2}, {6, 3}, {40, 2}, {12, 11}}) {
        std::map<std::vector<int>, double> counts;
        const int draws = 60000;
        for (int i = 0; i < draws; ++i) counts[sample_subset(n, k, rng)] += 1.0;
        const double ncomb = binomial(n, k);
        std::vector<double> obs, p;
        for (auto& [s, c] : counts) obs.push_back(c), p.push_back(1.0 / ncomb);
        // Unseen subsets count as zero observations.
        for (double i = counts.size(); i < ncomb; ++i) obs.push_back(0.0), p.push_back(1.0 / ncomb);
        EXPECT_GT(chi_square_gof(obs, p).p_value, 1e-3) << n << " " << k;
    }
}

TEST(Partition, RestrictionExamples) {
    OrderedPartition p(4, {{4}, {3, 1}, {2}});
    EXPECT_EQ(p.to_string(), "{{1,3},{2},{4}}");
    EXPECT_EQ(restriction(p, 3).to_string(), "{{1,3},{2}}");
    EXPECT_EQ(restriction(OrderedPartition::finest(7), 4), OrderedPartition::finest(4));
    EXPECT_THROW(OrderedPartition(3, {{1, 2}, {2, 3}}), ArgumentError);
    EXPECT_THROW(OrderedPartition(3, {{1, 2}}), ArgumentError);
    auto q = OrderedPartition::finest(5).merge({2, 4});
    EXPECT_EQ(q.to_string(), "{{1},{2,4},{3},{5}}");
    q.check();
    EXPECT_EQ(q.block_of(4), 2);
}

TEST(CoalescentStep, AbsorbingAndDelta1) {
    JumpLaw law(LambdaMeasure::kingman());
    Rng rng(1);
    EXPECT_THROW(coalescent_step(OrderedPartition::finest(1), law, rng), AbsorbingStateError);
    JumpLaw d1(LambdaMeasure::delta1());
    std::vector<double> dts;
    for (int i = 0; i < 20000; ++i) {
        auto s = coalescent_step(OrderedPartition::finest(7), d1, rng);
        ASSERT_EQ(s.next.size(), 1);
        dts.push_back(s.holding_time);
    }
    auto ms = mean_se(dts);
    EXPECT_NEAR(ms.mean, 1.0, 3 * ms.se);
}

TEST(CoalescentStep, KingmanHoldingMeans) {
    Rng rng(2);
    JumpLaw law(LambdaMeasure::kingman());
    for (auto [n, mean] : {std::pair{3, 1.0 / 3}, {2, 1.0}}) {
        std::vector<double> dts;
        for (int i = 0; i < 100000; ++i) dts.push_back(coalescent_step(OrderedPartition::finest(n), law, rng).holding_time);
        auto ms = mean_se(dts);
        EXPECT_NEAR(ms.mean, mean, 3 * ms.se);
    }
}

// (k, subset) law of one step from 0_[b] against C(b,k) lambda_{b,k} / lambda_b x uniform subset.
TEST(CoalescentStep, JumpChainLaw) {
    Rng rng(3);
    for (const auto& mu : families()) {
        JumpLaw law(mu);
        for (int b = 2; b <= 6; ++b) {
            const auto w = merger_weights(mu, b);
            const double lam = std::accumulate(w.begin(), w.end(), 0.0);
            std::vector<double> obs(1u << b, 0.0), p(1u << b, 0.0);
            for (unsigned mask = 0; mask < (1u << b); ++mask) {
                int k = __builtin_popcount(mask);
                if (k >= 2) p[mask] = w[k - 2] / lam / binomial(b, k);
            }
            for (int i = 0; i < 100000; ++i) {
                auto s = coalescent_step(OrderedPartition::finest(b), law, rng);
                unsigned mask = 0;
                for (int j : s.merged) mask |= 1u << (j - 1);
                obs[mask] += 1.0;
            }
            std::vector<double> o2, p2;
            for (std::size_t i = 0; i < obs.size(); ++i)
                if (p[i] > 0.0 || obs[i] > 0.0) o2.push_back(obs[i]), p2.push_back(p[i]);
            EXPECT_GT(chi_square_gof(o2, p2).p_value, 1e-3) << mu.describe() << " b=" << b;
        }
    }
}

// Paintbox route at b above a tiny row cap against the exact row.
TEST(JumpLaw, PaintboxMatchesRows) {
    Rng rng(4);
    for (const auto& mu : families()) {
        if (mu.pieces().empty()) continue;
        JumpLaw law(mu, 2);
        for (int b : {3, 12, 40}) {
            const auto w = merger_weights(mu, b);
            const double lam = std::accumulate(w.begin(), w.end(), 0.0);
            std::vector<double> obs(w.size(), 0.0), dts;
            for (int i = 0; i < 40000; ++i) {
                auto j = law.paintbox(b, rng);
                obs[j.k - 2] += 1.0;
                dts.push_back(j.dt);
            }
            EXPECT_GT(chi_square_gof(obs, w).p_value, 1e-3) << mu.describe() << " b=" << b;
            auto ms = mean_se(dts);
            EXPECT_NEAR(ms.mean * lam, 1.0, 4 * ms.se * lam) << mu.describe() << " b=" << b;
        }
    }
}

TEST(PartitionPath, ZeroMeasureAndDelta1) {
    Rng rng(5);
    JumpLaw zero(LambdaMeasure::zero());
    auto p = simulate_partition_path(zero, 6, 10.0, rng, {1.0, 10.0});
    EXPECT_TRUE(p.jumps.empty());
    EXPECT_EQ(p.snapshots.back(), OrderedPartition::finest(6));
    JumpLaw d1(LambdaMeasure::delta1());
    int single = 0;
    for (int i = 0; i < 200; ++i) {
        auto q = simulate_partition_path(d1, 10, 10.0, rng);
        ASSERT_LE(q.jumps.size(), 1u);
        if (q.jumps.size() == 1) {
            EXPECT_EQ(q.jumps[0].k, 10);
            ++single;
        }
    }
    EXPECT_GT(single, 190);
}

TEST(PartitionPath, KingmanFirstJumpMean) {
    Rng rng(6);
    JumpLaw law(LambdaMeasure::kingman());
    std::vector<double> t;
    for (int i = 0; i < 100000; ++i) {
        auto p = simulate_partition_path(law, 2, 1e9, rng);
        t.push_back(p.jumps.at(0).time);
    }
    auto ms = mean_se(t);
    EXPECT_NEAR(ms.mean, 1.0, 3 * ms.se);
}

TEST(PartitionPath, ReproducibleUnderSeed) {
    JumpLaw law(LambdaMeasure::beta(1.5));
    Rng a(42), b(42);
    auto p = simulate_partition_path(law, 30, 2.0, a, {0.5, 1.0});
    auto q = simulate_partition_path(law, 30, 2.0, b, {0.5, 1.0});
    ASSERT_EQ(p.jumps.size(), q.jumps.size());
    for (std::size_t i = 0; i < p.jumps.size(); ++i) EXPECT_EQ(p.jumps[i].time, q.jumps[i].time);
    EXPECT_EQ(p.snapshots, q.snapshots);
}

// Block count of R_3(Pi_6(0.5)) has the law of #Pi_3(0.5).
TEST(Restriction, SamplingConsistency) {
    Rng rng(8);
    JumpLaw law(LambdaMeasure::kingman());
    std::vector<double> a(4, 0.0), b(4, 0.0);
    for (int i = 0; i < 100000; ++i) {
        a[simulate_partition_path(law, 6, 0.5, rng, {0.5}).snapshots[0].restrict_to(3).size()] += 1;
        b[simulate_partition_path(law, 3, 0.5, rng, {0.5}).snapshots[0].size()] += 1;
    }
    EXPECT_GT(chi_square_two_sample(a, b).p_value, 0.01);
}

TEST(SampleTm, KingmanTelescoping) {
    JumpLaw law(LambdaMeasure::kingman());
    for (auto [m, mean] : {std::pair{1, 2.0}, {2, 1.0}}) {
        auto plan = plan_tm(LambdaMeasure::kingman(), m, 10000);
        EXPECT_NEAR(plan.truncation_bound, 2.0 / 10000, 1e-9);
        std::vector<double> t;
        for (int r = 0; r < 10000; ++r) {
            auto rng = make_rng(11, r);
            t.push_back(sample_Tm(plan, law, 1e9, rng).t_value);
        }
        auto ms = mean_se(t);
        EXPECT_NEAR(ms.mean, mean, 3 * ms.se) << "m=" << m;
    }
}

TEST(SampleTm, AutoStartAndErrors) {
    auto plan = plan_tm(LambdaMeasure::kingman(), 10, std::nullopt);
    // 2/n <= 0.01 * 2/m  =>  n >= 100 m
    EXPECT_EQ(plan.n_start, 1000);
    EXPECT_THROW(plan_tm(LambdaMeasure::beta(0.8), 10, std::nullopt), UnsupportedMeasureError);
    auto bp = plan_tm(LambdaMeasure::beta(1.5), 10, 500);
    EXPECT_GT(bp.bound_truncated, 0.0);
    JumpLaw law(LambdaMeasure::beta(1.5));
    Rng rng(1);
    auto s = sample_Tm(bp, law, 1e-6, rng, true);
    EXPECT_TRUE(s.censored);
    EXPECT_EQ(s.t_value, 1e-6);
}

TEST(SampleTm, MeanBelowTruncatedTailSum) {
    for (const auto& mu : {LambdaMeasure::beta(1.5), LambdaMeasure::powerlaw(1, 0.5, 0.5)}) {
        JumpLaw law(mu);
        for (int m : {5, 10, 20}) {
            auto plan = plan_tm(mu, m, 400);
            std::vector<double> t;
            for (int r = 0; r < 2000; ++r) {
                auto rng = make_rng(12, r);
                t.push_back(sample_Tm(plan, law, 1e9, rng).t_value);
            }
            auto ms = mean_se(t);
            EXPECT_LE(ms.mean, plan.bound_truncated + 3 * ms.se) << mu.describe() << " m=" << m;
        }
    }
}

TEST(SampleTm, MonotoneCoupling) {
    for (const auto& mu : families()) {
        JumpLaw law(mu);
        for (int r = 0; r < 20; ++r) {
            auto rng = make_rng(13, r);
            auto hit = restricted_hitting_times(law, 60, 3, 50.0, rng);
            for (std::size_t n = 1; n < hit.size(); ++n) ASSERT_LE(hit[n - 1], hit[n]) << mu.describe();
        }
    }
}
