#include <gtest/gtest.h>

#include <map>
#include <string>

#include "lfv/coalescent.hpp"
#include "lfv/genealogy.hpp"
#include "lfv/lookdown.hpp"
#include "lfv/stats.hpp"

using namespace lfv;

namespace {

LookdownState line_state(int n) {
    LookdownState s;
    s.n = n;
    s.d = 1;
    for (int i = 1; i <= n; ++i) s.positions.push_back(i);
    return s;
}

std::vector<double> levels_of(const LookdownState& s) { return s.positions; }

std::vector<double> column(const std::vector<LookdownRun>& runs, int level) {
    std::vector<double> out;
    for (const auto& r : runs) out.push_back(r.final_state.at(level)[0]);
    return out;
}

}  // namespace

TEST(ApplyEvent, PushesNonParticipantsUp) {
    const std::vector<int> J{2, 4};
    const auto out = apply_event(line_state(5), J);
    EXPECT_EQ(levels_of(out), (std::vector<double>{1, 2, 3, 2, 4}));
}

TEST(ApplyEvent, LevelOneParticipant) {
    const std::vector<int> J{1, 2, 5};
    const auto out = apply_event(line_state(6), J);
    EXPECT_EQ(levels_of(out), (std::vector<double>{1, 1, 2, 3, 1, 4}));
}

TEST(ApplyEvent, GrowingArrayKeepsEveryParticle) {
    const std::vector<int> J{2, 4};
    const auto src = relabel_sources(3, J, 4);
    EXPECT_EQ(src, (std::vector<int>{1, 2, 3, 2}));
    const auto src2 = relabel_sources(3, std::vector<int>{1, 4}, 4);
    EXPECT_EQ(src2, (std::vector<int>{1, 2, 3, 1}));
}

TEST(ApplyEvent, RejectsBadParticipants) {
    EXPECT_THROW(apply_event(line_state(3), std::vector<int>{2}), ArgumentError);
    EXPECT_THROW(apply_event(line_state(3), std::vector<int>{3, 2}), ArgumentError);
    EXPECT_THROW(apply_event(line_state(3), std::vector<int>{1, 4}), ArgumentError);
}

TEST(Genealogy, SingleEventLevelsAndPartition) {
    EventLog log;
    log.events.push_back({0.5, {1, 3}});
    std::vector<int> levels;
    for (int j = 1; j <= 4; ++j) levels.push_back(ancestral_level(log, j, 0.2, 1.0));
    EXPECT_EQ(levels, (std::vector<int>{1, 2, 1, 3}));
    const Genealogy g(log, 4, 1.0);
    EXPECT_EQ(g.partition_at(0.8).to_string(), "{{1,3},{2},{4}}");
    EXPECT_EQ(g.partition_at(0.3).to_string(), "{{1},{2},{3},{4}}");
    EXPECT_EQ(g.block_count(0.5), 3);
    EXPECT_DOUBLE_EQ(*g.hitting_lookback(3), 0.5);
    EXPECT_FALSE(g.hitting_lookback(2).has_value());
    EXPECT_NO_THROW(check_level_identity(log, 4, 1.0, {0.0, 0.3, 0.5, 0.8, 1.0}));
}

TEST(Genealogy, LeftLimitAtEventTime) {
    EventLog log;
    log.events.push_back({0.5, {2, 3}});
    EXPECT_EQ(ancestral_level(log, 3, 0.5, 1.0), 2);
    EXPECT_EQ(ancestral_level(log, 3, 0.50001, 1.0), 3);
}

TEST(Lookdown, SingleLevelIsBrownian) {
    const JumpLaw law(LambdaMeasure::kingman());
    LookdownConfig cfg;
    cfg.n = 1;
    cfg.d = 2;
    cfg.T = 0.7;
    std::vector<double> xs;
    for (int r = 0; r < 4000; ++r) {
        auto re = make_rng(11, r, 0), rm = make_rng(11, r, 1);
        const auto run = simulate_lookdown(law, cfg, re, rm);
        EXPECT_TRUE(run.log.events.empty());
        xs.push_back(run.final_state.at(1)[1]);
    }
    const auto ms = mean_se(xs);
    EXPECT_NEAR(ms.mean, 0.0, 4 * ms.se);
    EXPECT_NEAR(ms.sd * ms.sd, 0.7, 0.7 * 0.1);
}

TEST(Lookdown, ZeroMeasureHasNoEvents) {
    const JumpLaw law(LambdaMeasure::zero());
    LookdownConfig cfg;
    cfg.n = 5;
    cfg.T = 2.0;
    auto re = make_rng(1, 0, 0), rm = make_rng(1, 0, 1);
    const auto run = simulate_lookdown(law, cfg, re, rm);
    EXPECT_TRUE(run.log.events.empty());
    EXPECT_EQ(run.final_state.n, 5);
}

TEST(Lookdown, RejectsAtomAtOneAndLargeN) {
    LookdownConfig cfg;
    cfg.n = 4;
    auto re = make_rng(1, 0, 0), rm = make_rng(1, 0, 1);
    const JumpLaw mixed(LambdaMeasure(1.0, 0.5, PowerLawDensity{1.0, 0.5, 0.5}));
    EXPECT_THROW(simulate_lookdown(mixed, cfg, re, rm), UnsupportedMeasureError);
    const JumpLaw law(LambdaMeasure::kingman());
    cfg.n = 100;
    cfg.max_levels = 50;
    EXPECT_THROW(simulate_lookdown(law, cfg, re, rm), ResourceError);
}

TEST(Lookdown, FirstEventOfTwoLevels) {
    const JumpLaw law(LambdaMeasure::kingman());
    std::vector<double> first;
    for (int r = 0; r < 4000; ++r) {
        auto rng = make_rng(3, r, 0);
        const auto log = sample_events_full(law, 2, 50.0, rng);
        ASSERT_FALSE(log.events.empty());
        first.push_back(log.events.front().time);
    }
    const auto ms = mean_se(first);
    EXPECT_NEAR(ms.mean, 1.0, 3 * ms.se);
}

TEST(Lookdown, EventCountMatchesTotalRate) {
    for (const auto& mu : {LambdaMeasure::beta(1.5), LambdaMeasure::kingman()}) {
        const JumpLaw law(mu);
        const int n = 6;
        const double T = 0.8;
        std::vector<double> counts;
        for (int r = 0; r < 3000; ++r) {
            auto rng = make_rng(5, r, 0);
            const auto log = sample_events_full(law, n, T, rng);
            log.validate(n);
            counts.push_back(static_cast<double>(log.size()));
        }
        const auto ms = mean_se(counts);
        EXPECT_NEAR(ms.mean, law.rate(n) * T, 3.5 * ms.se) << mu.describe();
    }
}

TEST(Lookdown, LevelOneNeverJumps) {
    const JumpLaw law(LambdaMeasure::beta(1.2));
    LookdownConfig cfg;
    cfg.n = 12;
    cfg.T = 1.5;
    cfg.mode = LookdownMode::full;
    cfg.diffusivity = 0.0;
    cfg.initial = {InitialSpec::Kind::gaussian, 1.0};
    cfg.snapshot_times = {0.0};
    for (int r = 0; r < 50; ++r) {
        auto re = make_rng(8, r, 0), rm = make_rng(8, r, 1);
        const auto run = simulate_lookdown(law, cfg, re, rm);
        ASSERT_EQ(run.snapshots.size(), 1u);
        EXPECT_EQ(run.final_state.at(1)[0], run.snapshots[0].positions[0]);
    }
}

// Pi(t) recovered from lookdown events (both modes) against the coalescent.
TEST(Lookdown, RecoveredPartitionMatchesCoalescent) {
    const int n = 4;
    const double T = 1.0, t = 0.5;
    for (const auto& mu : {LambdaMeasure::kingman(), LambdaMeasure::beta(1.5)}) {
        const JumpLaw law(mu);
        std::map<std::string, int> index;
        std::vector<double> a(15, 0.0), b(15, 0.0), c(15, 0.0);
        auto slot = [&](const OrderedPartition& p) {
            auto [it, fresh] = index.emplace(p.to_string(), static_cast<int>(index.size()));
            return it->second;
        };
        const int reps = 20000;
        for (int r = 0; r < reps; ++r) {
            auto r1 = make_rng(21, r, 0), r2 = make_rng(21, r, 1), r3 = make_rng(21, r, 2);
            const auto full = sample_events_full(law, n, T, r1);
            a[slot(Genealogy(full, n, T).partition_at(t))] += 1;
            const auto anc = sample_events_ancestral(law, n, T, {}, r2);
            b[slot(Genealogy(anc.log, n, T).partition_at(t))] += 1;
            const auto path = simulate_partition_path(law, n, t, r3, {t});
            c[slot(path.snapshots.front())] += 1;
        }
        EXPECT_GT(chi_square_two_sample(a, c).p_value, 1e-3) << mu.describe();
        EXPECT_GT(chi_square_two_sample(b, c).p_value, 1e-3) << mu.describe();
    }
}

TEST(Lookdown, LevelIdentityOnRandomLogs) {
    const JumpLaw law(LambdaMeasure::beta(1.3));
    for (int r = 0; r < 40; ++r) {
        auto rng = make_rng(31, r, 0);
        const auto full = sample_events_full(law, 9, 1.0, rng);
        EXPECT_NO_THROW(check_level_identity(full, 9, 1.0, {0.0, 0.1, 0.4, 0.9, 1.0}));
        const auto anc = sample_events_ancestral(law, 9, 1.0, {0.3, 0.6}, rng);
        anc.log.validate(9);
        EXPECT_NO_THROW(check_level_identity(anc.log, 9, 1.0, {0.0, 0.2, 0.5, 0.95}));
    }
}

// Both modes realize the same law of positions at T and at snapshot times.
TEST(Lookdown, AncestralModeMatchesFullMode) {
    const JumpLaw law(LambdaMeasure::beta(1.5));
    LookdownConfig cfg;
    cfg.n = 8;
    cfg.T = 0.7;
    cfg.initial = {InitialSpec::Kind::gaussian, 0.5};
    cfg.snapshot_times = {0.35};
    std::vector<LookdownRun> full, anc;
    for (int r = 0; r < 3000; ++r) {
        auto re = make_rng(41, r, 0), rm = make_rng(41, r, 1);
        cfg.mode = LookdownMode::full;
        full.push_back(simulate_lookdown(law, cfg, re, rm));
        cfg.mode = LookdownMode::ancestral;
        anc.push_back(simulate_lookdown(law, cfg, re, rm));
        ASSERT_EQ(anc.back().snapshots.size(), 1u);
        ASSERT_EQ(anc.back().snapshots[0].levels, 8);
    }
    for (int level : {1, 4, 8})
        EXPECT_GT(ks_two_sample(column(full, level), column(anc, level)).p_value, 1e-3) << level;
    auto spread = [](const std::vector<LookdownRun>& runs) {
        std::vector<double> out;
        for (const auto& r : runs) out.push_back(std::abs(r.final_state.at(2)[0] - r.final_state.at(7)[0]));
        return out;
    };
    EXPECT_GT(ks_two_sample(spread(full), spread(anc)).p_value, 1e-3);
    auto snap = [](const std::vector<LookdownRun>& runs) {
        std::vector<double> out;
        for (const auto& r : runs) out.push_back(r.snapshots[0].positions[5] - r.snapshots[0].positions[0]);
        return out;
    };
    EXPECT_GT(ks_two_sample(snap(full), snap(anc)).p_value, 1e-3);
}

TEST(Lookdown, ExchangeableAtT) {
    const JumpLaw law(LambdaMeasure::kingman());
    LookdownConfig cfg;
    cfg.n = 300;
    cfg.T = 0.4;
    cfg.initial = {InitialSpec::Kind::gaussian, 1.0};
    std::vector<double> lo, hi;
    for (int r = 0; r < 2000; ++r) {
        auto re = make_rng(51, r, 0), rm = make_rng(51, r, 1);
        const auto run = simulate_lookdown(law, cfg, re, rm);
        EXPECT_EQ(run.mode, LookdownMode::ancestral);
        lo.push_back(run.final_state.at(1)[0]);
        hi.push_back(run.final_state.at(300)[0]);
    }
    EXPECT_GT(ks_two_sample(lo, hi).p_value, 1e-3);
}

TEST(Lookdown, Deterministic) {
    const JumpLaw law(LambdaMeasure::beta(1.5));
    LookdownConfig cfg;
    cfg.n = 500;
    cfg.d = 2;
    cfg.snapshot_times = {0.5};
    auto run_once = [&] {
        auto re = make_rng(77, 3, 0), rm = make_rng(77, 3, 1);
        return simulate_lookdown(law, cfg, re, rm);
    };
    const auto a = run_once(), b = run_once();
    EXPECT_EQ(a.final_state.positions, b.final_state.positions);
    EXPECT_EQ(a.snapshots[0].positions, b.snapshots[0].positions);
    EXPECT_EQ(a.log.size(), b.log.size());
}
