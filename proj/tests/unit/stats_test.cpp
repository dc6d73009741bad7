#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lexrag/error.hpp"
#include "lexrag/random.hpp"
#include "lexrag/stats.hpp"
#include "oracles.hpp"

namespace lexrag {
namespace {

// Two-sided p for Student t with 2 degrees of freedom, from the closed-form CDF.
double p_df2(double t) { return 1.0 - std::abs(t) / std::sqrt(2.0 + t * t); }

TEST(Stats, MeanAndQuantiles) {
    EXPECT_DOUBLE_EQ(mean({1, 2, 3, 4}), 2.5);
    const std::vector<double> s{1, 2, 3, 4, 5};
    EXPECT_DOUBLE_EQ(quantile_sorted(s, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(quantile_sorted(s, 0.5), 3.0);
    EXPECT_DOUBLE_EQ(quantile_sorted(s, 0.125), 1.5);
    EXPECT_DOUBLE_EQ(quantile_sorted(s, 1.0), 5.0);
    EXPECT_THROW(quantile_sorted({}, 0.5), ConfigError);
}

TEST(Bootstrap, ConstantSeriesCollapses) {
    const auto r = bootstrap_ci(std::vector<double>(30, 0.05), 1000, 0.95, 3);
    EXPECT_EQ(r.lo, 0.05);
    EXPECT_EQ(r.hi, 0.05);
    EXPECT_EQ(r.min, 0.05);
    EXPECT_EQ(r.max, 0.05);
}

TEST(Bootstrap, SeededAndWorkerInvariant) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0, 1);
    std::vector<double> v(80);
    for (auto& x : v) x = n(rng);
    const auto a = bootstrap_ci(v, 2000, 0.95, 42, 1);
    const auto b = bootstrap_ci(v, 2000, 0.95, 42, 4);
    EXPECT_EQ(a.lo, b.lo);
    EXPECT_EQ(a.hi, b.hi);
    const auto c = bootstrap_ci(v, 2000, 0.95, 43, 1);
    EXPECT_NE(a.lo, c.lo);
}

TEST(Bootstrap, AgreesWithDirectResamplingOracle) {
    std::mt19937_64 rng(5);
    std::exponential_distribution<double> e(2.0);
    std::vector<double> v(120);
    for (auto& x : v) x = e(rng);
    const auto lib = bootstrap_ci(v, 20000, 0.95, 9);
    std::mt19937_64 orng(77);
    const auto [lo, hi] = oracle::bootstrap_mean_ci(v, 20000, orng);
    const double m = mean(v);
    EXPECT_LT(lib.lo, m);
    EXPECT_GT(lib.hi, m);
    EXPECT_NEAR(lib.lo, lo, 0.01);
    EXPECT_NEAR(lib.hi, hi, 0.01);
    EXPECT_LE(lib.min, lib.lo);
    EXPECT_GE(lib.max, lib.hi);
}

TEST(Bootstrap, RejectsBadArguments) {
    EXPECT_THROW(bootstrap_ci({}, 10), ConfigError);
    EXPECT_THROW(bootstrap_ci({1.0}, 0), ConfigError);
    EXPECT_THROW(bootstrap_ci({1.0}, 10, 1.0), ConfigError);
}

TEST(TTest, HandDerivedCase) {
    // Differences 1, 2, 3: mean 2, sd 1, t = 2 / (1 / sqrt 3).
    const auto r = paired_ttest({2, 3, 4}, {1, 1, 1});
    EXPECT_NEAR(r.t, 2.0 * std::sqrt(3.0), 1e-12);
    EXPECT_EQ(r.df, 2u);
    EXPECT_NEAR(r.p, p_df2(r.t), 1e-9);
    EXPECT_NEAR(r.p, 0.0742, 1e-3);
}

TEST(TTest, MatchesClosedFormForRandomTriples) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> a(3), b(3);
        for (int j = 0; j < 3; ++j) {
            a[j] = u(rng);
            b[j] = u(rng);
        }
        const auto r = paired_ttest(a, b);
        EXPECT_NEAR(r.p, p_df2(r.t), 1e-9);
    }
}

TEST(TTest, DegenerateCases) {
    const auto zero = paired_ttest({1, 2, 3}, {1, 2, 3});
    EXPECT_EQ(zero.t, 0.0);
    EXPECT_EQ(zero.p, 1.0);
    const auto flat = paired_ttest({2, 3, 4}, {1, 2, 3});
    EXPECT_TRUE(flat.degenerate);
    EXPECT_EQ(flat.p, 0.0);
    EXPECT_TRUE(std::isinf(flat.t) && flat.t > 0);
    EXPECT_THROW(paired_ttest({1, 2}, {1}), ConfigError);
    EXPECT_THROW(paired_ttest({1}, {1}), ConfigError);
}

TEST(Bonferroni, ClampedProduct) {
    EXPECT_EQ(bonferroni(0.01, 5), 0.01 * 5);
    EXPECT_EQ(bonferroni(0.3, 5), 1.0);
    EXPECT_EQ(bonferroni(0.3, 1), 0.3);
}

} // namespace
} // namespace lexrag
