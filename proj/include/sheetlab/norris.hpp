#pragma once
//
// Parameter-dependent semimartingales Y_s(lambda) = Y_0(lambda) + M_s(lambda) + V_s(lambda),
//
//   M_s(lambda) = int_0^s Psi_eta(lambda) . dM~_eta,   V_s(lambda) = int_0^s Phi_eta(lambda) d eta,
//
// evaluated on the diagonal lambda = u, together with the small-ball events
// { int Y_u(u)^2 du <= a1 eps^rho, int Upsilon_u(u) du >= a2 eps }.

#include "sheetlab/error.hpp"
#include "sheetlab/fieldkit.hpp"
#include "sheetlab/lattice.hpp"
#include "sheetlab/parallel.hpp"
#include "sheetlab/philox.hpp"
#include "sheetlab/solver.hpp"
#include "sheetlab/stats.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace sheetlab {

enum class NorrisRegime { regular, irregular };

inline std::string to_string(NorrisRegime r) { return r == NorrisRegime::regular ? "regular" : "irregular"; }

struct SemimartingaleSpec {
    std::string name;
    std::size_t m = 1;  // number of drivers M~^j
    std::function<double(double lambda)> y0;
    // psi(eta, lambda, drivers, out[m])
    std::function<void(double, double, std::span<const double>, std::span<double>)> psi;
    // phi(eta, lambda, drivers)
    std::function<double(double, double, std::span<const double>)> phi;
    // theta(eta, drivers, out[m*m]), row-major covariation density
    std::function<void(double, std::span<const double>, std::span<double>)> theta;
    bool lambda_free = false;  // Psi and Phi ignore lambda: Y assembles in linear time

    double bound = std::numeric_limits<double>::infinity();
    NorrisRegime regime = NorrisRegime::regular;
    double beta = 0.75;
    std::optional<double> beta_prime;
    double holder_constant = std::numeric_limits<double>::infinity();
};

// Psi = 1, Phi = 0, Theta = 1, Y_0 = 0: Y_u(u) is a standard Brownian motion.
inline SemimartingaleSpec brownian_spec() {
    SemimartingaleSpec s;
    s.name = "brownian";
    s.y0 = [](double) { return 0.0; };
    s.psi = [](double, double, std::span<const double>, std::span<double> out) { out[0] = 1.0; };
    s.phi = [](double, double, std::span<const double>) { return 0.0; };
    s.theta = [](double, std::span<const double>, std::span<double> out) { out[0] = 1.0; };
    s.lambda_free = true;
    s.bound = 1.0;
    s.holder_constant = 0.0;
    return s;
}

// Psi = 0, Phi = c: Y_u(u) = y + c u, no martingale part.
inline SemimartingaleSpec drift_spec(double c, double y = 0.0) {
    SemimartingaleSpec s;
    s.name = "drift";
    s.y0 = [y](double) { return y; };
    s.psi = [](double, double, std::span<const double>, std::span<double> out) { out[0] = 0.0; };
    s.phi = [c](double, double, std::span<const double>) { return c; };
    s.theta = [](double, std::span<const double>, std::span<double> out) { out[0] = 1.0; };
    s.lambda_free = true;
    s.bound = std::max(1.0, std::abs(c));
    s.holder_constant = 0.0;
    return s;
}

struct DiagonalPath {
    double s = 0.0;
    std::size_t steps = 0;
    std::vector<double> u;            // steps + 1 nodes
    std::vector<double> y;            // Y_u(u)
    std::vector<double> upsilon;      // Upsilon_u(u)
    std::vector<double> int_y2;       // left-endpoint running integrals, int_y2[0] = 0
    std::vector<double> int_upsilon;

    [[nodiscard]] double y2_integral() const { return int_y2.back(); }
    [[nodiscard]] double upsilon_integral() const { return int_upsilon.back(); }
};

namespace detail {

// Y_n = y0(u_n) + sum_{k<n} psi(k, u_n) . dM_k + phi(k, u_n) du.
template <class Y0, class Psi, class Phi>
std::vector<double> assemble_diagonal(std::span<const double> u, std::size_t m, double du,
                                      std::span<const double> increments, Y0&& y0, Psi&& psi, Phi&& phi,
                                      bool lambda_free) {
    const std::size_t nodes = u.size();
    std::vector<double> y(nodes), row(m);
    auto step_term = [&](std::size_t k, double lambda) {
        psi(k, lambda, std::span<double>(row));
        double v = phi(k, lambda) * du;
        for (std::size_t j = 0; j < m; ++j) v += row[j] * increments[k * m + j];
        return v;
    };
    if (lambda_free) {
        double acc = 0.0;
        for (std::size_t n = 0; n < nodes; ++n) {
            y[n] = y0(u[n]) + acc;
            if (n + 1 < nodes) acc += step_term(n, u[n]);
        }
    } else {
        for (std::size_t n = 0; n < nodes; ++n) {
            double acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) acc += step_term(k, u[n]);
            y[n] = y0(u[n]) + acc;
        }
    }
    return y;
}

// Running integrals as du times index-ordered partial sums, so a constant
// integrand integrates to du * steps exactly.
inline void finish_integrals(DiagonalPath& p, double du) {
    const std::size_t nodes = p.u.size();
    p.int_y2.assign(nodes, 0.0);
    p.int_upsilon.assign(nodes, 0.0);
    double sy = 0.0, su = 0.0;
    for (std::size_t n = 1; n < nodes; ++n) {
        sy += p.y[n - 1] * p.y[n - 1];
        su += p.upsilon[n - 1];
        p.int_y2[n] = du * sy;
        p.int_upsilon[n] = du * su;
    }
}

inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& theta, double eta) {
    if (theta.rows() == 1) {
        const double v = theta(0, 0);
        if (v < -1e-12) throw SpecificationError("Theta is negative at eta = " + std::to_string(eta));
        return Eigen::MatrixXd::Constant(1, 1, std::sqrt(std::max(v, 0.0)));
    }
    if ((theta - theta.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, theta.cwiseAbs().maxCoeff()))
        throw SpecificationError("Theta is not symmetric at eta = " + std::to_string(eta));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(theta);
    Eigen::VectorXd ev = eig.eigenvalues();
    if (ev.minCoeff() < -1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff()))
        throw SpecificationError("Theta is not positive semidefinite at eta = " + std::to_string(eta));
    ev = ev.cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace detail

// Euler simulation of the drivers with Gaussian increments of covariance
// Theta(eta_n) du, then diagonal assembly of Y and Upsilon.
inline DiagonalPath simulate_diagonal(const SemimartingaleSpec& spec, std::size_t steps, double s,
                                      std::uint64_t seed, std::uint32_t trial = 0) {
    if (steps < 2) throw ConfigError("diagonal simulation needs at least 2 steps");
    if (!(s > 0.0)) throw ConfigError("horizon s must be positive");
    if (spec.m == 0) throw ConfigError("spec needs at least one driver");
    const std::size_t m = spec.m;
    const double du = s / static_cast<double>(steps);
    DiagonalPath p;
    p.s = s;
    p.steps = steps;
    p.u.resize(steps + 1);
    for (std::size_t n = 0; n <= steps; ++n) p.u[n] = n == steps ? s : static_cast<double>(n) * du;

    std::vector<double> drivers((steps + 1) * m, 0.0), increments(steps * m, 0.0), thetas((steps + 1) * m * m);
    Eigen::MatrixXd theta(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    Eigen::VectorXd xi(static_cast<Eigen::Index>(m));
    const double sq = std::sqrt(du);
    for (std::size_t n = 0; n <= steps; ++n) {
        std::span<const double> here(drivers.data() + n * m, m);
        std::span<double> th(thetas.data() + n * m * m, m * m);
        spec.theta(p.u[n], here, th);
        if (n == steps) break;
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b)
                theta(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = th[a * m + b];
        const Eigen::MatrixXd root = detail::psd_sqrt(theta, p.u[n]);
        for (std::size_t j = 0; j < m; ++j)
            xi(static_cast<Eigen::Index>(j)) = philox_normal(
                seed, make_counter(Stream::drivers, trial, static_cast<std::uint32_t>(j),
                                   static_cast<std::uint32_t>(n >> 32), static_cast<std::uint32_t>(n)));
        const Eigen::VectorXd dm = sq * (root * xi);
        for (std::size_t j = 0; j < m; ++j) {
            increments[n * m + j] = dm(static_cast<Eigen::Index>(j));
            drivers[(n + 1) * m + j] = drivers[n * m + j] + increments[n * m + j];
        }
    }
    auto drivers_at = [&](std::size_t k) { return std::span<const double>(drivers.data() + k * m, m); };
    p.y = detail::assemble_diagonal(
        p.u, m, du, increments, spec.y0,
        [&](std::size_t k, double lambda, std::span<double> out) { spec.psi(p.u[k], lambda, drivers_at(k), out); },
        [&](std::size_t k, double lambda) { return spec.phi(p.u[k], lambda, drivers_at(k)); }, spec.lambda_free);

    p.upsilon.resize(steps + 1);
    std::vector<double> row(m);
    for (std::size_t n = 0; n <= steps; ++n) {
        spec.psi(p.u[n], p.u[n], drivers_at(n), row);
        const double* th = thetas.data() + n * m * m;
        double v = 0.0;
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b) v += row[a] * th[a * m + b] * row[b];
        if (v < -1e-12) throw SpecificationError("Upsilon is negative at u = " + std::to_string(p.u[n]));
        p.upsilon[n] = v;
    }
    detail::finish_integrals(p, du);
    return p;
}

// Diagonal processes of Y_s(lambda) = <v, V(lambda, t, X_{s,t})> read off a
// lattice path on the row j = t_index.
struct SpdeDiagonal {
    DiagonalPath direct;            // Y from X directly, Upsilon from Psi and Theta
    std::vector<double> replay;     // Y rebuilt from Y_0, Psi, Phi and the driver increments
    std::vector<double> psi;        // (steps+1) x m at lambda = eta
    std::vector<double> theta;      // (steps+1) x m x m
    std::vector<double> increments; // steps x m, dM~^k = sum_b sum_l A_l^k dW^l
    double max_discrepancy = 0.0;   // max |direct - replay|
};

inline SpdeDiagonal spde_diagonal_adapter(const FieldSet& fs, const GridSpec& grid, const SheetSample& sheet,
                                          const PathLattice& path, const Eigen::VectorXd& v, const FieldExpr& V,
                                          std::size_t t_index) {
    const std::size_t m = fs.m(), d = fs.d();
    if (V.dimension() != m) throw DimensionError("V has the wrong dimension");
    if (static_cast<std::size_t>(v.size()) != m) throw DimensionError("v has the wrong dimension");
    if (std::abs(v.squaredNorm() - 1.0) > 1e-12) throw DomainError("v must be a unit vector");
    if (t_index > grid.n_t()) throw IndexError("time index outside grid");
    if (sheet.d != d || sheet.n_s != grid.n_s() || sheet.n_t != grid.n_t())
        throw DimensionError("sheet sample does not match fields and grid");

    const std::size_t n_s = grid.n_s(), j = t_index;
    const double t = grid.t_at(j), ds = grid.ds(), dt = grid.dt();
    const FieldProgram vprog(component_lists(std::span<const FieldExpr>(&V, 1)), m, 2);
    std::vector<double> vbuf = vprog.make_buffer();
    bool lambda_free = true;
    for (const auto& e : V.components) lambda_free &= !e.depends_on_time();

    SpdeDiagonal out;
    DiagonalPath& p = out.direct;
    p.s = grid.s_max();
    p.steps = n_s;
    p.u.resize(n_s + 1);
    for (std::size_t i = 0; i <= n_s; ++i) p.u[i] = grid.s_at(i);

    // <v, V>, <v, dV> and <v, d^2 V> at (lambda, t, x).
    auto vv = [&](double lambda, std::span<const double> x) {
        vprog.evaluate(lambda, t, x, vbuf);
        double r = 0.0;
        for (std::size_t k = 0; k < m; ++k) r += v(static_cast<Eigen::Index>(k)) * vprog.value(vbuf, 0, k);
        return r;
    };
    auto vgrad = [&](std::size_t c) {
        double r = 0.0;
        for (std::size_t k = 0; k < m; ++k) r += v(static_cast<Eigen::Index>(k)) * vprog.derivative(vbuf, 0, k, c);
        return r;
    };
    auto vhess = [&](std::size_t a, std::size_t b) {
        double r = 0.0;
        for (std::size_t k = 0; k < m; ++k)
            r += v(static_cast<Eigen::Index>(k)) * vprog.second_derivative(vbuf, 0, k, a, b);
        return r;
    };

    // Column integrals below t: Theta, the drift and diffusion quadratures, dM~.
    const FieldProgram& aprog = fs.value_program();
    std::vector<double> abuf = aprog.make_buffer();
    out.theta.assign((n_s + 1) * m * m, 0.0);
    out.increments.assign(n_s * m, 0.0);
    std::vector<double> drift_int((n_s + 1) * m, 0.0);  // sum_b A_0 dt
    for (std::size_t i = 0; i <= n_s; ++i)
        for (std::size_t b = 0; b < j; ++b) {
            aprog.evaluate(grid.s_at(i), grid.t_at(b), path.at(i, b), abuf);
            for (std::size_t k = 0; k < m; ++k) {
                drift_int[i * m + k] += aprog.value(abuf, 0, k) * dt;
                for (std::size_t l = 1; l <= d; ++l) {
                    const double ak = aprog.value(abuf, l, k);
                    if (i < n_s) out.increments[i * m + k] += ak * sheet.increment(l - 1, i, b);
                    for (std::size_t q = 0; q < m; ++q)
                        out.theta[(i * m + k) * m + q] += ak * aprog.value(abuf, l, q) * dt;
                }
            }
        }

    auto psi_at = [&](std::size_t i, double lambda, std::span<double> row) {
        vprog.evaluate(lambda, t, path.at(i, j), vbuf);
        for (std::size_t c = 0; c < m; ++c) row[c] = vgrad(c);
    };
    auto phi_at = [&](std::size_t i, double lambda) {
        vprog.evaluate(lambda, t, path.at(i, j), vbuf);
        double r = 0.0;
        for (std::size_t c = 0; c < m; ++c) r += drift_int[i * m + c] * vgrad(c);
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b) r += 0.5 * vhess(a, b) * out.theta[(i * m + a) * m + b];
        return r;
    };

    p.y.resize(n_s + 1);
    p.upsilon.resize(n_s + 1);
    out.psi.assign((n_s + 1) * m, 0.0);
    for (std::size_t i = 0; i <= n_s; ++i) {
        p.y[i] = vv(p.u[i], path.at(i, j));
        std::span<double> row(out.psi.data() + i * m, m);
        for (std::size_t c = 0; c < m; ++c) row[c] = vgrad(c);
        double ups = 0.0;
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t b = 0; b < m; ++b) ups += row[a] * out.theta[(i * m + a) * m + b] * row[b];
        p.upsilon[i] = ups;
    }
    detail::finish_integrals(p, ds);

    const std::vector<double> x0 = path.x0;
    out.replay = detail::assemble_diagonal(
        p.u, m, ds, out.increments, [&](double lambda) { return vv(lambda, x0); }, psi_at, phi_at, lambda_free);
    for (std::size_t i = 0; i <= n_s; ++i)
        out.max_discrepancy = std::max(out.max_discrepancy, std::abs(p.y[i] - out.replay[i]));
    return out;
}

inline double nu_lower_bound(double beta) { return 3.0 / (2.0 * beta - 1.0); }
inline double rho_lower_bound_regular(double nu) { return 3.0 + 2.0 * nu; }
inline double rho_lower_bound_irregular(double beta_prime) {
    return (5.5 + 4.0 / beta_prime) * (1.0 + 1.0 / beta_prime);
}

struct NorrisConfig {
    double alpha1 = 1.0;
    double alpha2 = 1.0;
    double rho = 15.001;
    double nu = 6.001;
    std::vector<double> eps{0.3, 0.2, 0.1};
    std::size_t trials = 1000;
    double s = 1.0;
    std::size_t steps = 500;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    double requested_p = 1.0;
};

struct NorrisValidation {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    std::optional<double> nu_min;   // regular regime
    std::optional<double> rho_min;  // bound the configured rho must exceed

    [[nodiscard]] bool ok() const { return errors.empty(); }
};

namespace detail {
inline std::string num(double x) {
    std::ostringstream os;
    os.precision(12);
    os << x;
    return os.str();
}
}  // namespace detail

inline NorrisValidation validate_norris(const NorrisConfig& cfg, NorrisRegime regime, double beta,
                                        std::optional<double> beta_prime) {
    NorrisValidation v;
    using detail::num;
    if (!(cfg.alpha1 > 0.0) || !(cfg.alpha2 > 0.0)) v.errors.push_back("alpha1 and alpha2 must be positive");
    if (!(cfg.rho > 0.0)) v.errors.push_back("rho must be positive");
    if (!(cfg.s > 0.0)) v.errors.push_back("horizon s must be positive");
    if (cfg.steps < 2) v.errors.push_back("steps must be at least 2");
    if (cfg.eps.empty()) v.errors.push_back("eps grid is empty");
    for (double e : cfg.eps)
        if (!(e > 0.0 && e < 1.0)) v.errors.push_back("eps value " + num(e) + " outside (0,1)");
    if (cfg.trials < 1000) v.errors.push_back("trials must be at least 1000");
    if (regime == NorrisRegime::regular) {
        if (!(beta > 0.5 && beta < 1.0)) {
            v.errors.push_back("regular regime requires beta in (1/2, 1), got " + num(beta));
            return v;
        }
        v.nu_min = nu_lower_bound(beta);
        v.rho_min = rho_lower_bound_regular(cfg.nu);
        if (!(cfg.nu > *v.nu_min))
            v.warnings.push_back("nu = " + num(cfg.nu) + " does not exceed 3/(2 beta - 1) = " + num(*v.nu_min));
        if (!(cfg.rho > rho_lower_bound_regular(*v.nu_min)))
            v.warnings.push_back("rho = " + num(cfg.rho) + " <= 3+2nu bound for minimal nu=" + num(*v.nu_min) +
                                 " (3+2nu = " + num(rho_lower_bound_regular(*v.nu_min)) + ")");
        else if (!(cfg.rho > *v.rho_min))
            v.warnings.push_back("rho = " + num(cfg.rho) + " <= 3+2nu = " + num(*v.rho_min) + " for nu = " +
                                 num(cfg.nu));
    } else {
        if (!(beta > 0.0 && beta <= 0.5))
            v.errors.push_back("irregular regime requires beta in (0, 1/2], got " + num(beta));
        if (!beta_prime) {
            v.errors.push_back("irregular regime requires beta'");
            return v;
        }
        if (!(*beta_prime > 0.0 && *beta_prime <= 1.0)) {
            v.errors.push_back("beta' must lie in (0, 1], got " + num(*beta_prime));
            return v;
        }
        v.rho_min = rho_lower_bound_irregular(*beta_prime);
        if (!(cfg.rho > *v.rho_min))
            v.warnings.push_back("rho = " + num(cfg.rho) + " <= (11/2 + 4/beta')(1 + 1/beta') = " + num(*v.rho_min));
    }
    return v;
}

struct NorrisReport {
    NorrisConfig config;
    NorrisValidation validation;
    std::vector<double> y_threshold;        // alpha1 eps^rho, per eps as supplied
    std::vector<double> upsilon_threshold;  // alpha2 eps
    std::vector<std::size_t> counts;
    DecayFit fit;                           // points sorted by decreasing eps
    std::vector<std::string> flags;
};

// Tabulates joint events from per-trial integrals (int Y^2, int Upsilon).
inline NorrisReport summarize_norris(const NorrisConfig& cfg, NorrisValidation validation,
                                     std::span<const double> y2, std::span<const double> ups) {
    NorrisReport rep;
    rep.config = cfg;
    rep.validation = std::move(validation);
    const std::size_t trials = y2.size();
    for (double e : cfg.eps) {
        const double ty = cfg.alpha1 * std::pow(e, cfg.rho), tu = cfg.alpha2 * e;
        rep.y_threshold.push_back(ty);
        rep.upsilon_threshold.push_back(tu);
        std::size_t c = 0;
        for (std::size_t t = 0; t < trials; ++t)
            if (y2[t] <= ty && ups[t] >= tu) ++c;
        rep.counts.push_back(c);
    }
    rep.fit = fit_decay(cfg.eps, rep.counts, trials, cfg.requested_p);
    const double n = static_cast<double>(trials);
    for (std::size_t k = 0; k + 1 < rep.fit.points.size(); ++k) {
        const auto& big = rep.fit.points[k];
        const auto& small = rep.fit.points[k + 1];
        const double pb = static_cast<double>(big.count) / n, ps = static_cast<double>(small.count) / n;
        const double sigma = std::sqrt((pb * (1 - pb) + ps * (1 - ps)) / n);
        if (ps > pb && ps - pb > 3.0 * sigma)
            rep.flags.push_back("estimate increases beyond 3 sigma as eps decreases from " + detail::num(big.eps) +
                                " to " + detail::num(small.eps));
    }
    return rep;
}

inline NorrisReport norris_event_probability(const SemimartingaleSpec& spec, const NorrisConfig& cfg) {
    NorrisValidation validation = validate_norris(cfg, spec.regime, spec.beta, spec.beta_prime);
    if (!validation.ok()) throw ConfigError(validation.errors.front());
    std::vector<double> y2(cfg.trials), ups(cfg.trials);
    parallel_for(cfg.trials, cfg.workers, [&](std::size_t t) {
        const DiagonalPath p = simulate_diagonal(spec, cfg.steps, cfg.s, cfg.seed, static_cast<std::uint32_t>(t));
        y2[t] = p.y2_integral();
        ups[t] = p.upsilon_integral();
    });
    return summarize_norris(cfg, std::move(validation), y2, ups);
}

struct HolderDiagnostics {
    double beta = 0.0;
    double beta_prime = 0.0;
    double y0 = 0.0;        // lambda-Holder constants at beta
    double psi = 0.0;
    double phi = 0.0;
    double psi_diagonal = 0.0;  // eta-Holder of Psi_eta(eta) at beta'
    double theta = 0.0;         // eta-Holder of Theta_eta at beta'
    double declared = 0.0;
    std::vector<std::string> flags;

    [[nodiscard]] bool passed() const { return flags.empty(); }
};

// Largest |f(a) - f(b)| / |a - b|^e over probe pairs; drivers are held at 0.
inline HolderDiagnostics holder_diagnostics(const SemimartingaleSpec& spec, std::size_t probes, double s = 1.0,
                                            std::optional<double> beta = {}, std::optional<double> beta_prime = {}) {
    if (probes < 2) throw ConfigError("Holder diagnostics need at least 2 probes");
    const std::size_t m = spec.m;
    HolderDiagnostics h;
    h.beta = beta.value_or(spec.beta);
    h.beta_prime = beta_prime.value_or(spec.beta_prime.value_or(h.beta));
    h.declared = spec.holder_constant;
    const std::vector<double> pts = holder_probe_times(s, probes);
    const std::vector<double> zero(m, 0.0);

    auto ratio = [](double fa, double fb, double a, double b, double e) {
        return std::abs(fa - fb) / std::pow(std::abs(a - b), e);
    };
    std::vector<double> pa(m), pb(m), ta(m * m), tb(m * m);
    for (std::size_t x = 0; x < pts.size(); ++x)
        for (std::size_t y = x + 1; y < pts.size(); ++y) {
            const double a = pts[x], b = pts[y];
            if (a == b) continue;
            h.y0 = std::max(h.y0, ratio(spec.y0(a), spec.y0(b), a, b, h.beta));
            for (double eta : pts) {
                spec.psi(eta, a, zero, pa);
                spec.psi(eta, b, zero, pb);
                for (std::size_t k = 0; k < m; ++k) h.psi = std::max(h.psi, ratio(pa[k], pb[k], a, b, h.beta));
                h.phi = std::max(h.phi, ratio(spec.phi(eta, a, zero), spec.phi(eta, b, zero), a, b, h.beta));
            }
            spec.psi(a, a, zero, pa);
            spec.psi(b, b, zero, pb);
            for (std::size_t k = 0; k < m; ++k)
                h.psi_diagonal = std::max(h.psi_diagonal, ratio(pa[k], pb[k], a, b, h.beta_prime));
            spec.theta(a, zero, ta);
            spec.theta(b, zero, tb);
            for (std::size_t k = 0; k < m * m; ++k) h.theta = std::max(h.theta, ratio(ta[k], tb[k], a, b, h.beta_prime));
        }
    const double limit = h.declared * (1.0 + 1e-9);
    auto check = [&](double v, const char* what) {
        if (v > limit) h.flags.push_back(std::string(what) + " Holder constant " + detail::num(v) + " exceeds declared " +
                                         detail::num(h.declared));
    };
    check(h.y0, "Y0");
    check(h.psi, "Psi");
    check(h.phi, "Phi");
    check(h.psi_diagonal, "Psi(eta,eta)");
    check(h.theta, "Theta");
    if (spec.regime == NorrisRegime::regular && !(spec.beta > 0.5 && spec.beta < 1.0))
        h.flags.push_back("regular regime declared with beta outside (1/2, 1)");
    if (spec.regime == NorrisRegime::irregular && !(spec.beta > 0.0 && spec.beta <= 0.5))
        h.flags.push_back("irregular regime declared with beta outside (0, 1/2]");
    return h;
}

}  // namespace sheetlab
