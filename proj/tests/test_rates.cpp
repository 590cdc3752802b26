#include <gtest/gtest.h>

#include <boost/math/special_functions/beta.hpp>

#include "lfv/rates.hpp"

using namespace lfv;

TEST(LambdaBk, AtomsAndBetaValues) {
    auto k0 = LambdaMeasure::kingman();
    auto d1 = LambdaMeasure::delta1();
    EXPECT_EQ(lambda_bk(k0, 5, 2), 1.0);
    EXPECT_EQ(lambda_bk(k0, 5, 3), 0.0);
    EXPECT_EQ(lambda_bk(d1, 5, 5), 1.0);
    EXPECT_EQ(lambda_bk(d1, 5, 3), 0.0);
    EXPECT_NEAR(lambda_bk(LambdaMeasure::beta(1.5), 4, 2), 0.625, 1e-14);
    EXPECT_THROW(lambda_bk(k0, 3, 4), ArgumentError);
    EXPECT_THROW(lambda_bk(k0, 3, 1), ArgumentError);
}

TEST(LambdaBk, BetaClosedFormMatchesQuadrature) {
    for (double be : {0.5, 0.8, 1.2, 1.5, 1.9}) {
        auto mu = LambdaMeasure::beta(be);
        for (int b = 2; b <= 50; ++b)
            for (int k = 2; k <= b; ++k) {
                double cf = lambda_bk(mu, b, k);
                double q = lambda_density_quadrature(mu, b, k);
                ASSERT_NEAR(q / cf, 1.0, 1e-8) << be << " " << b << " " << k;
            }
    }
}

TEST(LambdaBk, PowerlawMatchesIncompleteBeta) {
    // c * int_0^eps x^(k-2-gamma) (1-x)^(b-k) dx = c * B_eps(k-1-gamma, b-k+1)
    auto mu = LambdaMeasure::powerlaw(1.0, 0.5, 0.5);
    for (int b : {2, 3, 10, 40, 150})
        for (int k = 2; k <= b; ++k) {
            double oracle = boost::math::beta(k - 1 - 0.5, b - k + 1.0, 0.5);
            ASSERT_NEAR(lambda_bk(mu, b, k) / oracle, 1.0, 1e-9) << b << " " << k;
        }
}

TEST(RateSummary, SpecExamples) {
    auto t = rate_summary(LambdaMeasure::kingman(), 4, 2);
    EXPECT_EQ(t.lambda_b, 6.0);
    EXPECT_EQ(t.gamma_b, 6.0);
    EXPECT_EQ(t.gamma_bm, 6.0);
    EXPECT_EQ(t.mu_bk[3 - 2], 6.0);
    EXPECT_EQ(t.mu_bk[2 - 2], 0.0);
    auto u = rate_summary(LambdaMeasure::delta1(), 4, 2);
    EXPECT_EQ(u.lambda_b, 1.0);
    EXPECT_EQ(u.gamma_b, 3.0);
    EXPECT_EQ(u.gamma_bm, 2.0);
    EXPECT_EQ(u.mu_bk[0], 1.0);
}

TEST(RateSums, IntegralRouteMatchesRows) {
    for (auto mu : {LambdaMeasure::beta(1.5), LambdaMeasure::beta(0.7), LambdaMeasure::powerlaw(1, 0.5, 0.5),
                    LambdaMeasure::table({0.0, 0.3, 1.0}, {2.0, 0.5}),
                    parse_measure("mix:delta0=0.3+beta=1.5")}) {
        for (int b : {2, 3, 7, 30, 100}) {
            auto w = merger_weights(mu, b);
            double lam = 0, gam = 0;
            for (int k = 2; k <= b; ++k) lam += w[k - 2], gam += (k - 1) * w[k - 2];
            auto s = rate_sums_integral(mu, b);
            EXPECT_NEAR(s.lambda_b / lam, 1.0, 1e-9) << mu.describe() << " b=" << b;
            EXPECT_NEAR(s.gamma_b / gam, 1.0, 1e-9) << mu.describe() << " b=" << b;
            for (int m = 2; m < b; m += std::max(1, b / 5))
                EXPECT_NEAR(gamma_bm_integral(mu, b, m, s.gamma_b) / gamma_bm_from_row(w, b, m), 1.0, 1e-8)
                    << mu.describe() << " b=" << b << " m=" << m;
        }
    }
}

TEST(TailSums, KingmanTwoOverM) {
    for (int m : {5, 10, 50}) {
        auto ts = tail_sums(LambdaMeasure::kingman(), m, 1'000'000, false);
        EXPECT_NEAR(ts.inv_lambda_b.extrapolated, 2.0 / m, 1e-9);
        EXPECT_TRUE(ts.inv_lambda_b.extrapolation_applied);
    }
}

TEST(FitAlpha, Families) {
    auto g = default_alpha_grid();
    auto k = fit_alpha(LambdaMeasure::kingman(), g);
    ASSERT_TRUE(k.fitted);
    EXPECT_NEAR(k.alpha, 1.0, 0.05);
    auto b = fit_alpha(LambdaMeasure::beta(1.5), g);
    ASSERT_TRUE(b.fitted);
    EXPECT_NEAR(b.alpha, 0.5, 0.1);
    auto s = fit_alpha(LambdaMeasure::beta(0.8), g);
    EXPECT_FALSE(s.fitted);
    EXPECT_FALSE(s.hint.empty());
}
