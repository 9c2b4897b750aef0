#include "sheetlab/norris.hpp"
#include "sheetlab/presets.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace sheetlab;

TEST(Diagonal, BrownianDriverIsPhiloxRandomWalk) {
    const std::size_t steps = 64;
    const DiagonalPath p = simulate_diagonal(brownian_spec(), steps, 2.0, 13, 7);
    const double du = 2.0 / steps;
    double b = 0.0, sy = 0.0;
    for (std::size_t n = 0; n <= steps; ++n) {
        EXPECT_NEAR(p.y[n], b, 1e-13);
        EXPECT_EQ(p.upsilon[n], 1.0);
        EXPECT_NEAR(p.int_y2[n], du * sy, 1e-13);
        sy += b * b;
        b += std::sqrt(du) * philox_normal(13, make_counter(Stream::drivers, 7, 0, 0, static_cast<std::uint32_t>(n)));
    }
    EXPECT_EQ(p.u.back(), 2.0);
}

TEST(Diagonal, BrownianUpsilonIntegratesToHorizon) {
    for (std::size_t steps : {3u, 500u, 777u}) {
        const DiagonalPath p = simulate_diagonal(brownian_spec(), steps, 1.3, 1);
        EXPECT_NEAR(p.upsilon_integral(), 1.3, 1e-12);
    }
}

TEST(Diagonal, DriftSpecIsDeterministicLine) {
    const std::size_t steps = 40;
    const DiagonalPath p = simulate_diagonal(drift_spec(0.5, 1.0), steps, 2.0, 99);
    const double du = 0.05;
    double sum = 0.0;
    for (std::size_t n = 0; n <= steps; ++n) {
        EXPECT_NEAR(p.y[n], 1.0 + 0.5 * p.u[n], 1e-13);
        EXPECT_EQ(p.upsilon[n], 0.0);
        if (n < steps) sum += std::pow(1.0 + 0.5 * du * static_cast<double>(n), 2);
    }
    EXPECT_NEAR(p.y2_integral(), du * sum, 1e-12);
    EXPECT_EQ(p.upsilon_integral(), 0.0);
}

// Y_s(lambda) = lambda + lambda B_s, so the diagonal is u (1 + B_u); the
// parameter-dependent assembly must reproduce it from the same driver path.
TEST(Diagonal, ParameterDependentAssembly) {
    SemimartingaleSpec s = brownian_spec();
    s.name = "scaled";
    s.y0 = [](double lambda) { return lambda; };
    s.psi = [](double, double lambda, std::span<const double>, std::span<double> out) { out[0] = lambda; };
    s.lambda_free = false;
    const DiagonalPath p = simulate_diagonal(s, 50, 1.0, 4, 2);
    const DiagonalPath b = simulate_diagonal(brownian_spec(), 50, 1.0, 4, 2);
    for (std::size_t n = 0; n <= 50; ++n) {
        EXPECT_NEAR(p.y[n], p.u[n] * (1.0 + b.y[n]), 1e-12);
        EXPECT_NEAR(p.upsilon[n], p.u[n] * p.u[n], 1e-15);
    }
}

TEST(Diagonal, CorrelatedDriversFollowTheta) {
    SemimartingaleSpec s;
    s.name = "pair";
    s.m = 2;
    s.y0 = [](double) { return 0.0; };
    s.psi = [](double, double, std::span<const double>, std::span<double> out) {
        out[0] = 1.0;
        out[1] = 1.0;
    };
    s.phi = [](double, double, std::span<const double>) { return 0.0; };
    s.theta = [](double, std::span<const double>, std::span<double> out) {
        out[0] = 1.0;
        out[1] = out[2] = 0.5;
        out[3] = 1.0;
    };
    s.lambda_free = true;
    // Var(M1 + M2) = (1 + 1 + 2 * 0.5) s = 3 at s = 1.
    double sum2 = 0.0;
    const std::size_t trials = 4000;
    for (std::uint32_t t = 0; t < trials; ++t) {
        const DiagonalPath p = simulate_diagonal(s, 4, 1.0, 8, t);
        sum2 += p.y.back() * p.y.back();
        EXPECT_NEAR(p.upsilon[0], 3.0, 1e-12);
    }
    EXPECT_NEAR(sum2 / trials, 3.0, 4.0 * 3.0 * std::sqrt(2.0 / trials));
}

TEST(Diagonal, PsdSquareRoot) {
    Eigen::Matrix2d th{{2.0, 1.0}, {1.0, 2.0}};
    const Eigen::MatrixXd r = detail::psd_sqrt(th, 0.0);
    EXPECT_LT((r * r - th).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_THROW(detail::psd_sqrt(Eigen::Matrix2d{{1.0, 2.0}, {2.0, 1.0}}, 0.0), SpecificationError);
    EXPECT_THROW(detail::psd_sqrt(Eigen::Matrix2d{{1.0, 0.5}, {0.0, 1.0}}, 0.0), SpecificationError);
    EXPECT_THROW(detail::psd_sqrt(Eigen::MatrixXd::Constant(1, 1, -1.0), 0.0), SpecificationError);
}

TEST(Diagonal, InputChecks) {
    EXPECT_THROW(simulate_diagonal(brownian_spec(), 1, 1.0, 0), ConfigError);
    EXPECT_THROW(simulate_diagonal(brownian_spec(), 10, 0.0, 0), ConfigError);
}

TEST(SpdeAdapter, AdditiveCoordinateReplaysExactly) {
    const FieldSet fs = presets::additive(2);
    const GridSpec g = make_grid(1.0, 0.5, 16, 8);
    const SheetSample sh = sample_sheet(g, 2, 3, 1);
    const std::vector<double> x0{0.2, 0.1};
    const PathLattice path = solve_path(fs, g, sh, x0);
    const FieldExpr V{{coord(0), coord(1)}, "id"};
    const SpdeDiagonal d = spde_diagonal_adapter(fs, g, sh, path, Eigen::Vector2d(1.0, 0.0), V, 8);
    EXPECT_LT(d.max_discrepancy, 1e-13);
    for (std::size_t i = 0; i <= 16; ++i) {
        EXPECT_EQ(d.direct.y[i], path.at(i, 8)[0]);
        EXPECT_NEAR(d.direct.upsilon[i], 0.5, 1e-14);
    }
    EXPECT_NEAR(d.direct.upsilon_integral(), 0.5, 1e-13);
}

TEST(SpdeAdapter, GrushinNoiseFieldIsAffine) {
    const FieldSet fs = presets::grushin();
    const GridSpec g = make_grid(1.0, 1.0, 24, 24);
    const SheetSample sh = sample_sheet(g, 1, 6, 0);
    const std::vector<double> x0{0.0, 0.0};
    const PathLattice path = solve_path(fs, g, sh, x0);
    const Eigen::Vector2d v(0.0, 1.0);
    const SpdeDiagonal d = spde_diagonal_adapter(fs, g, sh, path, v, fs.field(1), 24);
    EXPECT_LT(d.max_discrepancy, 1e-12);
    // <e2, A1> = x1, whose gradient is e1 and Theta^{11} = t.
    for (std::size_t i = 0; i <= 24; ++i) EXPECT_NEAR(d.direct.upsilon[i], 1.0, 1e-12);
}

TEST(SpdeAdapter, NonlinearTestFieldReplaysApproximately) {
    const FieldSet fs = presets::smooth();
    const GridSpec g = make_grid(1.0, 1.0, 32, 32);
    const SheetSample sh = sample_sheet(g, 2, 1, 0);
    const std::vector<double> x0{0.0, 0.0};
    const PathLattice path = solve_path(fs, g, sh, x0);
    const SpdeDiagonal d = spde_diagonal_adapter(fs, g, sh, path, Eigen::Vector2d(1.0, 0.0), fs.field(1), 32);
    EXPECT_GT(d.max_discrepancy, 0.0);
    EXPECT_LT(d.max_discrepancy, 0.2);
}

TEST(SpdeAdapter, ArgumentChecks) {
    const FieldSet fs = presets::additive(2);
    const GridSpec g = make_grid(1.0, 1.0, 4, 4);
    const SheetSample sh = sample_sheet(g, 2, 0);
    const std::vector<double> x0{0.0, 0.0};
    const PathLattice path = solve_path(fs, g, sh, x0);
    const FieldExpr V{{coord(0), coord(1)}, ""};
    EXPECT_THROW(spde_diagonal_adapter(fs, g, sh, path, Eigen::Vector2d(1.0, 1.0), V, 2), DomainError);
    EXPECT_THROW(spde_diagonal_adapter(fs, g, sh, path, Eigen::Vector2d(1.0, 0.0), V, 5), IndexError);
    EXPECT_THROW(spde_diagonal_adapter(fs, g, sh, path, Eigen::Vector3d(1.0, 0.0, 0.0), V, 2), DimensionError);
}

// Exponent arithmetic: nu > 3/(2 beta - 1), rho > 3 + 2 nu, rho > (11/2 + 4/beta')(1 + 1/beta').
TEST(NorrisBounds, PaperExponentArithmetic) {
    EXPECT_DOUBLE_EQ(nu_lower_bound(0.75), 6.0);
    EXPECT_DOUBLE_EQ(rho_lower_bound_regular(6.0), 15.0);
    EXPECT_DOUBLE_EQ(rho_lower_bound_irregular(0.4), 54.25);
    EXPECT_DOUBLE_EQ(rho_lower_bound_irregular(1.0), 19.0);
}

TEST(NorrisValidation, DefaultsPassForRegularRegime) {
    const NorrisValidation v = validate_norris(NorrisConfig{}, NorrisRegime::regular, 0.75, std::nullopt);
    EXPECT_TRUE(v.ok());
    EXPECT_DOUBLE_EQ(*v.nu_min, 6.0);
    EXPECT_NEAR(*v.rho_min, 15.002, 1e-12);
}

TEST(NorrisValidation, RhoBelowMinimalBoundWarns) {
    NorrisConfig c;
    c.rho = 10.0;
    const NorrisValidation v = validate_norris(c, NorrisRegime::regular, 0.75, std::nullopt);
    EXPECT_TRUE(v.ok());
    ASSERT_EQ(v.warnings.size(), 1u);
    EXPECT_NE(v.warnings[0].find("3+2nu = 15"), std::string::npos);
}

TEST(NorrisValidation, NuBelowBoundWarns) {
    NorrisConfig c;
    c.nu = 5.0;
    c.rho = 20.0;
    const NorrisValidation v = validate_norris(c, NorrisRegime::regular, 0.75, std::nullopt);
    ASSERT_EQ(v.warnings.size(), 1u);
    EXPECT_NE(v.warnings[0].find("3/(2 beta - 1) = 6"), std::string::npos);
}

TEST(NorrisValidation, IrregularRegime) {
    NorrisConfig c;
    c.rho = 60.0;
    EXPECT_TRUE(validate_norris(c, NorrisRegime::irregular, 0.5, 0.4).warnings.empty());
    c.rho = 54.0;
    EXPECT_EQ(validate_norris(c, NorrisRegime::irregular, 0.5, 0.4).warnings.size(), 1u);
    EXPECT_FALSE(validate_norris(c, NorrisRegime::irregular, 0.5, 0.0).ok());
    EXPECT_FALSE(validate_norris(c, NorrisRegime::irregular, 0.5, std::nullopt).ok());
    EXPECT_FALSE(validate_norris(c, NorrisRegime::irregular, 0.75, 0.4).ok());
}

TEST(NorrisValidation, Errors) {
    NorrisConfig c;
    c.trials = 999;
    c.eps = {0.2, 1.0};
    c.alpha2 = 0.0;
    const NorrisValidation v = validate_norris(c, NorrisRegime::regular, 0.75, std::nullopt);
    EXPECT_EQ(v.errors.size(), 3u);
    EXPECT_FALSE(validate_norris(NorrisConfig{}, NorrisRegime::regular, 0.5, std::nullopt).ok());
}

TEST(NorrisSummary, CountsJointEventsAgainstThresholds) {
    NorrisConfig c;
    c.alpha1 = 1.0;
    c.alpha2 = 1.0;
    c.rho = 1.0;
    c.eps = {0.5, 0.25, 0.1};
    const std::vector<double> y2{0.05, 0.2, 0.3, 0.6, 0.01};
    const std::vector<double> ups{1.0, 0.3, 0.2, 1.0, 0.05};
    const NorrisReport r = summarize_norris(c, {}, y2, ups);
    // eps 0.5: y2 <= 0.5 and ups >= 0.5 -> trial 0; 0.25: y2 <= .25, ups >= .25 -> 0, 1; 0.1: 0.
    EXPECT_EQ(r.counts, (std::vector<std::size_t>{1, 2, 1}));
    EXPECT_DOUBLE_EQ(r.y_threshold[1], 0.25);
    EXPECT_DOUBLE_EQ(r.upsilon_threshold[2], 0.1);
    EXPECT_EQ(r.fit.points.front().eps, 0.5);
}

TEST(NorrisSummary, FlagsSignificantIncrease) {
    NorrisConfig c;
    c.rho = 1.0;
    c.eps = {0.9, 0.5, 0.3};
    std::vector<double> y2(2000, 0.2), ups(2000, 0.4);
    for (std::size_t k = 0; k < 1000; ++k) ups[k] = 0.95;
    const NorrisReport r = summarize_norris(c, {}, y2, ups);
    EXPECT_EQ(r.counts[0], 1000u);
    EXPECT_EQ(r.counts[2], 2000u);
    EXPECT_FALSE(r.flags.empty());
}

TEST(NorrisExperiment, DeterministicAcrossWorkers) {
    NorrisConfig c;
    c.alpha1 = 0.15 / std::pow(0.2, 15.001);
    c.trials = 1000;
    c.steps = 100;
    c.seed = 5;
    const NorrisReport a = norris_event_probability(brownian_spec(), c);
    c.workers = 3;
    const NorrisReport b = norris_event_probability(brownian_spec(), c);
    EXPECT_EQ(a.counts, b.counts);
    EXPECT_GE(a.counts[0], a.counts[1]);
    EXPECT_GE(a.counts[1], a.counts[2]);
    c.trials = 10;
    EXPECT_THROW(norris_event_probability(brownian_spec(), c), ConfigError);
}

TEST(HolderDiagnostics, BrownianSpecIsConstant) {
    const HolderDiagnostics h = holder_diagnostics(brownian_spec(), 8);
    EXPECT_EQ(h.psi, 0.0);
    EXPECT_EQ(h.theta, 0.0);
    EXPECT_TRUE(h.passed());
}

TEST(HolderDiagnostics, RootProfileExceedsDeclaredConstant) {
    SemimartingaleSpec s = brownian_spec();
    s.y0 = [](double lambda) { return std::sqrt(lambda); };
    s.holder_constant = 1.0;
    // sqrt is 1/2-Holder with constant 1; at beta = 0.75 the quotient th^-1/4 grows on the geometric probes.
    const HolderDiagnostics ok = holder_diagnostics(s, 10, 1.0, 0.5);
    EXPECT_NEAR(ok.y0, 1.0, 1e-12);
    const HolderDiagnostics bad = holder_diagnostics(s, 10, 1.0, 0.75);
    EXPECT_GT(bad.y0, 1.5);
    EXPECT_FALSE(bad.passed());
}
