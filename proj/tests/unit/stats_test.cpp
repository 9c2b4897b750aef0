#include "sheetlab/stats.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sheetlab;

TEST(Wilson, MatchesClosedForm) {
    // p = 0.5, n = 100, z = 1.96: centre 0.5, half width z sqrt(1/400 + z^2/40000) / (1 + z^2/100).
    const double z = 1.96, n = 100;
    const double half = z * std::sqrt(0.25 / n + z * z / (4 * n * n)) / (1 + z * z / n);
    const Interval ci = wilson_interval(50, 100);
    EXPECT_NEAR(ci.lo, 0.5 - half, 1e-15);
    EXPECT_NEAR(ci.hi, 0.5 + half, 1e-15);
}

TEST(Wilson, ZeroCountHasZeroLowerBound) {
    const Interval ci = wilson_interval(0, 1000);
    EXPECT_EQ(ci.lo, 0.0);
    EXPECT_NEAR(ci.hi, 1.96 * 1.96 / 1000 / (1 + 1.96 * 1.96 / 1000), 1e-15);
}

TEST(Interval, Overlap) {
    EXPECT_TRUE((Interval{0, 1}).overlaps({1, 2}));
    EXPECT_FALSE((Interval{0, 1}).overlaps({1.5, 2}));
}

TEST(FitLine, RecoversExactLine) {
    const std::vector<double> x{0, 1, 2, 3}, y{1, 3, 5, 7};
    const auto f = fit_line(x, y);
    ASSERT_TRUE(f);
    EXPECT_NEAR(f->slope, 2.0, 1e-14);
    EXPECT_NEAR(f->intercept, 1.0, 1e-14);
    for (double r : f->residuals) EXPECT_NEAR(r, 0.0, 1e-14);
}

TEST(FitLine, RejectsDegenerateAbscissae) {
    const std::vector<double> x{1, 1}, y{0, 1};
    EXPECT_FALSE(fit_line(x, y));
}

TEST(MeanVar, UnbiasedVariance) {
    const std::vector<double> xs{1, 2, 3, 4};
    const MeanVar mv = mean_var(xs);
    EXPECT_DOUBLE_EQ(mv.mean, 2.5);
    EXPECT_DOUBLE_EQ(mv.variance, 5.0 / 3.0);
}

TEST(Halton, RadicalInverse) {
    EXPECT_DOUBLE_EQ(halton(1, 0), 0.5);
    EXPECT_DOUBLE_EQ(halton(3, 0), 0.75);
    EXPECT_DOUBLE_EQ(halton(1, 1), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(halton(5, 1), 2.0 / 3.0 + 1.0 / 9.0);
}

TEST(DecayFit, PowerLawSlope) {
    // P = eps^2 on {0.4, 0.2, 0.1} with 10^6 trials: counts 160000, 40000, 10000.
    const std::vector<double> eps{0.4, 0.2, 0.1};
    const std::vector<std::size_t> counts{160000, 40000, 10000};
    const DecayFit f = fit_decay(eps, counts, 1000000, 1.5);
    ASSERT_TRUE(f.slope);
    EXPECT_NEAR(*f.slope, 2.0, 1e-12);
    EXPECT_EQ(f.verdict, Verdict::pass);
    ASSERT_EQ(f.local_slopes.size(), 2u);
    EXPECT_NEAR(f.local_slopes[0], 2.0, 1e-12);
    EXPECT_NEAR(f.local_slopes[1], 2.0, 1e-12);
}

TEST(DecayFit, FailsBelowRequestedOrder) {
    const std::vector<double> eps{0.4, 0.2, 0.1};
    const std::vector<std::size_t> counts{160000, 40000, 10000};
    EXPECT_EQ(fit_decay(eps, counts, 1000000, 3.0).verdict, Verdict::fail);
}

TEST(DecayFit, AllZeroCountsIsIndeterminateWithBounds) {
    const std::vector<double> eps{0.3, 0.2, 0.1};
    const std::vector<std::size_t> counts{0, 0, 0};
    const DecayFit f = fit_decay(eps, counts, 1000, 1.0);
    EXPECT_EQ(f.verdict, Verdict::indeterminate);
    EXPECT_FALSE(f.slope);
    for (const auto& p : f.points) {
        EXPECT_TRUE(p.upper_bound);
        EXPECT_DOUBLE_EQ(p.p_hat, 1e-3);
    }
    for (bool b : f.local_slope_is_bound) EXPECT_TRUE(b);
}

TEST(DecayFit, SortsByDecreasingEps) {
    const std::vector<double> eps{0.1, 0.4, 0.2};
    const std::vector<std::size_t> counts{10, 160, 40};
    const DecayFit f = fit_decay(eps, counts, 1000, 1.0);
    EXPECT_DOUBLE_EQ(f.points[0].eps, 0.4);
    EXPECT_DOUBLE_EQ(f.points[2].eps, 0.1);
}
