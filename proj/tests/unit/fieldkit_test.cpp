#include "sheetlab/fieldkit.hpp"
#include "sheetlab/presets.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace sheetlab;

TEST(FieldKit, CovariantDerivativeMatchesHandExpansion) {
    // A = (x2, 0), B = (x1^2, x1 x2): A.grad B = x2 d1 B = (2 x1 x2, x2^2).
    const Expr x1 = coord(0), x2 = coord(1);
    const FieldExpr a{{x2, constant(0.0)}, "A"};
    const FieldExpr b{{x1 * x1, x1 * x2}, "B"};
    const FieldExpr ab = covariant_derivative(a, b);
    const std::vector<double> p{0.3, -1.7};
    const Eigen::VectorXd v = eval_field(ab, 0, 0, p);
    EXPECT_NEAR(v(0), 2 * 0.3 * -1.7, 1e-15);
    EXPECT_NEAR(v(1), 1.7 * 1.7, 1e-15);
}

TEST(FieldKit, JacobianAgreesWithCentralDifferences) {
    const FieldSet fs = presets::smooth();
    const std::vector<double> x{0.4, -0.2};
    const double h = 1e-6;
    for (std::size_t l = 0; l <= fs.d(); ++l) {
        const Eigen::MatrixXd J = jacobian_x(fs.field(l), 0.3, 0.6, x);
        for (std::size_t k = 0; k < 2; ++k) {
            auto xp = x, xm = x;
            xp[k] += h;
            xm[k] -= h;
            const Eigen::VectorXd fd = (eval_field(fs.field(l), 0.3, 0.6, xp) - eval_field(fs.field(l), 0.3, 0.6, xm)) / (2 * h);
            for (Eigen::Index i = 0; i < 2; ++i) EXPECT_NEAR(J(i, static_cast<Eigen::Index>(k)), fd(i), 1e-8) << "A" << l;
        }
    }
}

TEST(FieldKit, FieldSetFlags) {
    const FieldSet add = presets::additive(3);
    EXPECT_EQ(add.m(), 3u);
    EXPECT_EQ(add.d(), 3u);
    EXPECT_TRUE(add.is_zero(0));
    EXPECT_TRUE(add.frozen(2));
    EXPECT_TRUE(add.all_jacobians_vanish());
    const FieldSet g = presets::grushin();
    EXPECT_FALSE(g.spatially_constant(1));
    EXPECT_FALSE(g.all_jacobians_vanish());
    const FieldSet s = presets::smooth();
    EXPECT_FALSE(s.frozen(1));
}

TEST(FieldKit, ConstructionErrors) {
    EXPECT_THROW(FieldSet("x", 0, {}, Regime::smooth), ConfigError);
    EXPECT_THROW(FieldSet("x", 2, {presets::zero_field(2)}, Regime::smooth), ConfigError);
    EXPECT_THROW(FieldSet("x", 2, {presets::zero_field(2), presets::zero_field(3)}, Regime::smooth), DimensionError);
    DeclaredBounds b;
    b.beta = 0.4;
    EXPECT_THROW(FieldSet("x", 1, {presets::zero_field(1), presets::zero_field(1)}, Regime::regular_holder, b),
                 ConfigError);
    b.beta = 0.75;
    EXPECT_THROW(FieldSet("x", 1, {presets::zero_field(1), presets::zero_field(1)}, Regime::irregular_holder, b),
                 ConfigError);
    b.gamma = 1.0;
    EXPECT_THROW(FieldSet("x", 1, {presets::zero_field(1), presets::zero_field(1)}, Regime::smooth, b), ConfigError);
    EXPECT_THROW(presets::by_name("nope"), ConfigError);
}

TEST(FieldKit, RegimeNamesRoundTrip) {
    for (Regime r : {Regime::elliptic, Regime::smooth, Regime::factorable, Regime::regular_holder,
                     Regime::irregular_holder})
        EXPECT_EQ(parse_regime(to_string(r)), r);
    EXPECT_FALSE(parse_regime("hypo").has_value());
}

TEST(FieldKit, PresetsBuild) {
    for (const auto& n : presets::names()) EXPECT_NO_THROW(presets::by_name(n)) << n;
}

TEST(Hormander, GrushinSpansAfterOneLevel) {
    const FieldSet g = presets::grushin();
    const std::vector<double> origin{0.0, 0.0};
    const HormanderReport r = hormander_report(g, 1.0, origin, 2);
    ASSERT_EQ(r.levels.size(), 3u);
    EXPECT_EQ(r.levels[0].cumulative_rank, 1u);
    EXPECT_EQ(r.levels[0].c_estimate, 0.0);
    EXPECT_EQ(r.levels[1].cumulative_rank, 2u);
    EXPECT_NEAR(r.levels[1].c_estimate, 1.0, 1e-12);
    // (1, x1) . grad (0, 1) vanishes identically.
    EXPECT_EQ(r.levels[2].distinct_count, 1u);
    EXPECT_TRUE(r.full_rank());
    EXPECT_EQ(r.spanning_fields.size(), 2u);
}

TEST(Hormander, GramEigenvalueAwayFromOrigin) {
    // Columns (1, 1) and (0, 1): Gram [[1,1],[1,2]] with eigenvalues (3 -+ sqrt 5) / 2.
    const std::vector<double> x{1.0, 0.0};
    const HormanderReport r = hormander_report(presets::grushin(), 1.0, x, 1);
    EXPECT_NEAR(r.c_N, (3.0 - std::sqrt(5.0)) / 2.0, 1e-12);
}

TEST(Hormander, DegenerateNeverSpans) {
    const std::vector<double> x{0.2, 0.3};
    const HormanderReport r = hormander_report(presets::degenerate(), 1.0, x, 3);
    EXPECT_FALSE(r.full_rank());
    EXPECT_EQ(r.c_N, 0.0);
    for (std::size_t k = 1; k < r.levels.size(); ++k) EXPECT_EQ(r.levels[k].cumulative_rank, 1u);
}

TEST(Hormander, NeighborhoodMinimumBelowCentre) {
    const std::vector<double> x{0.0, 0.0};
    const HormanderReport r = hormander_report(presets::grushin(), 1.0, x, 1, Neighborhood{0.1, 0.5, 256});
    ASSERT_TRUE(r.neighborhood_min.has_value());
    EXPECT_LE(*r.neighborhood_min, r.c_N + 1e-12);
    // Smallest eigenvalue over |x1| <= 0.5 is (2 + x1^2 - |x1| sqrt(4 + x1^2)) / 2 at |x1| = 0.5.
    const double lo = (2.0 + 0.25 - 0.5 * std::sqrt(4.25)) / 2.0;
    EXPECT_GE(*r.neighborhood_min, lo - 1e-12);
}

TEST(Hormander, NumericalRank) {
    Eigen::MatrixXd c(2, 3);
    c << 1, 2, 0, 2, 4, 0;
    EXPECT_EQ(numerical_rank(c), 1u);
    EXPECT_EQ(numerical_rank(Eigen::MatrixXd::Zero(2, 2)), 0u);
    EXPECT_EQ(numerical_rank(Eigen::MatrixXd(2, 0)), 0u);
}

TEST(Holder, ProbeTimesIncludeGeometricTail) {
    const auto ts = holder_probe_times(1.0, 5);
    EXPECT_EQ(ts.front(), 0.0);
    EXPECT_EQ(ts.back(), 1.0);
    EXPECT_NE(std::find(ts.begin(), ts.end(), 1.0 / 32.0), ts.end());
    EXPECT_TRUE(std::is_sorted(ts.begin(), ts.end()));
}

TEST(Holder, SquareRootProfileIsHalfHolderWithConstantOne) {
    const HolderCertificate c = holder_certificate(presets::irregular_holder(), 12);
    ASSERT_EQ(c.coefficients.size(), 2u);
    EXPECT_NEAR(c.coefficients[1].s_holder, 1.0, 1e-12);
    EXPECT_TRUE(c.passed());
    // Quotient sqrt(th) / th^0.75 grows like th^-1/4 along the geometric probes.
    const HolderCertificate tight = holder_certificate(presets::irregular_holder(), 12, 1.0, 1.0, 0.75);
    EXPECT_GT(tight.coefficients[1].s_holder, std::pow(2.0, 12 * 0.25) * 0.99);
    EXPECT_FALSE(tight.passed());
}

TEST(Holder, PresetsSatisfyTheirDeclaredBounds) {
    for (const char* n : {"additive", "grushin", "smooth", "factorable", "regular-holder", "irregular-holder"})
        EXPECT_TRUE(holder_certificate(presets::by_name(n), 9).passed()) << n;
}

TEST(Holder, JacobianBoundViolationIsReported) {
    const Expr x1 = coord(0);
    DeclaredBounds b;
    b.K = 1.0;
    b.K_gamma = 0.0;
    const FieldSet fs("steep", 1, {FieldExpr{{constant(0.0)}, ""}, FieldExpr{{3.0 * x1}, ""}}, Regime::smooth, b);
    const HolderCertificate c = holder_certificate(fs, 4);
    EXPECT_NEAR(c.coefficients[1].sup_jacobian, 3.0, 1e-15);
    EXPECT_FALSE(c.coefficients[1].jacobian_ok);
}
