#pragma once
//
// Endpoint sampling X_z over independent sheets, a product-Gaussian kernel
// density estimate on a rectangular lattice, and the closed-form Gaussian law
// of the constant-coefficient case.

#include "sheetlab/error.hpp"
#include "sheetlab/fieldkit.hpp"
#include "sheetlab/lattice.hpp"
#include "sheetlab/parallel.hpp"
#include "sheetlab/solver.hpp"
#include "sheetlab/stats.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sheetlab {

struct EndpointSample {
    std::size_t m = 0;
    std::size_t trials = 0;
    std::vector<double> values;  // trial-major, trials x m
    std::string fields;
    GridSpec grid;
    Node z;
    std::vector<double> x0;
    std::uint64_t seed = 0;

    [[nodiscard]] std::span<const double> row(std::size_t t) const { return {values.data() + t * m, m}; }
    [[nodiscard]] double at(std::size_t t, std::size_t k) const { return values[t * m + k]; }
};

inline EndpointSample sample_endpoint(const FieldSet& fs, const GridSpec& grid, std::span<const double> x0, Node z,
                                      std::size_t trials, std::uint64_t seed, unsigned workers = 1) {
    if (!grid.contains(z)) throw IndexError("evaluation node outside grid");
    if (z.i == 0 || z.j == 0) throw DegenerateError("endpoint on an axis: st = 0 lies outside the set E");
    if (x0.size() != fs.m()) throw DimensionError("x0 has the wrong dimension");
    EndpointSample out;
    out.m = fs.m();
    out.trials = trials;
    out.fields = fs.name();
    out.grid = grid;
    out.z = z;
    out.x0.assign(x0.begin(), x0.end());
    out.seed = seed;
    out.values.resize(trials * out.m);
    parallel_for(trials, workers, [&](std::size_t t) {
        const SheetSample sheet = sample_sheet(grid, fs.d(), seed, static_cast<std::uint32_t>(t));
        const PathLattice path = solve_path(fs, grid, sheet, x0, z);
        const auto end = path.at(z);
        std::copy(end.begin(), end.end(), out.values.begin() + static_cast<std::ptrdiff_t>(t * out.m));
    });
    return out;
}

struct SampleMoments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;  // unbiased
};

inline SampleMoments sample_moments(const EndpointSample& s) {
    const auto m = static_cast<Eigen::Index>(s.m);
    SampleMoments r{Eigen::VectorXd::Zero(m), Eigen::MatrixXd::Zero(m, m)};
    if (s.trials == 0) return r;
    for (std::size_t t = 0; t < s.trials; ++t)
        for (Eigen::Index k = 0; k < m; ++k) r.mean(k) += s.at(t, static_cast<std::size_t>(k));
    r.mean /= static_cast<double>(s.trials);
    if (s.trials < 2) return r;
    Eigen::VectorXd dev(m);
    for (std::size_t t = 0; t < s.trials; ++t) {
        for (Eigen::Index k = 0; k < m; ++k) dev(k) = s.at(t, static_cast<std::size_t>(k)) - r.mean(k);
        r.covariance.noalias() += dev * dev.transpose();
    }
    r.covariance /= static_cast<double>(s.trials - 1);
    return r;
}

struct Box {
    std::vector<double> lo;
    std::vector<double> hi;
};

struct KdeOptions {
    std::optional<std::vector<double>> bandwidth;  // default: Scott's rule
    std::optional<Box> box;                        // default: mean +- 6 sd per axis
    std::size_t resolution = 64;                   // lattice points per axis
    unsigned workers = 1;
};

struct DensityEstimate {
    std::size_t m = 0;
    std::size_t resolution = 0;
    std::vector<std::vector<double>> axes;  // cell-centre coordinates per axis
    std::vector<double> values;             // axis 0 slowest
    std::vector<double> bandwidth;
    std::string kernel = "gaussian-product";
    std::string rule;
    bool bandwidth_floored = false;
    std::size_t trials = 0;

    [[nodiscard]] double cell_volume() const {
        double v = 1.0;
        for (const auto& a : axes) v *= a.size() > 1 ? a[1] - a[0] : 1.0;
        return v;
    }
    // Midpoint-rule mass over the box.
    [[nodiscard]] double mass() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s * cell_volume();
    }
    [[nodiscard]] std::vector<double> point(std::size_t flat) const {
        std::vector<double> p(m);
        for (std::size_t k = m; k-- > 0;) {
            p[k] = axes[k][flat % resolution];
            flat /= resolution;
        }
        return p;
    }
};

constexpr double kBandwidthFloor = 1e-8;

inline DensityEstimate kde(const EndpointSample& s, const KdeOptions& opts = {}) {
    if (s.trials < 100) throw ConfigError("kernel density estimate needs at least 100 trials");
    if (opts.resolution < 2) throw ConfigError("KDE resolution must be at least 2");
    const std::size_t m = s.m, n = s.trials, R = opts.resolution;
    const SampleMoments mom = sample_moments(s);
    DensityEstimate est;
    est.m = m;
    est.resolution = R;
    est.trials = n;
    if (opts.bandwidth) {
        if (opts.bandwidth->size() != m) throw DimensionError("bandwidth vector has the wrong dimension");
        est.bandwidth = *opts.bandwidth;
        est.rule = "user";
    } else {
        const double factor = std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(m) + 4.0));
        for (std::size_t k = 0; k < m; ++k)
            est.bandwidth.push_back(std::sqrt(mom.covariance(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k))) * factor);
        est.rule = "scott";
    }
    for (std::size_t k = 0; k < m; ++k) {
        const double floor = kBandwidthFloor * std::max(1.0, std::abs(mom.mean(static_cast<Eigen::Index>(k))));
        if (!(est.bandwidth[k] >= floor)) {
            est.bandwidth[k] = floor;
            est.bandwidth_floored = true;
        }
    }
    Box box;
    if (opts.box) {
        box = *opts.box;
        if (box.lo.size() != m || box.hi.size() != m) throw DimensionError("KDE box has the wrong dimension");
    } else {
        for (std::size_t k = 0; k < m; ++k) {
            const double sd = std::max(std::sqrt(mom.covariance(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k))),
                                       est.bandwidth[k]);
            box.lo.push_back(mom.mean(static_cast<Eigen::Index>(k)) - 6.0 * sd);
            box.hi.push_back(mom.mean(static_cast<Eigen::Index>(k)) + 6.0 * sd);
        }
    }
    // Per-axis kernel tables K_k[r][i] = phi((g_r - x_ik) / h_k) / h_k.
    std::vector<std::vector<double>> table(m);
    for (std::size_t k = 0; k < m; ++k) {
        if (!(box.hi[k] > box.lo[k])) throw ConfigError("KDE box must have positive width");
        const double step = (box.hi[k] - box.lo[k]) / static_cast<double>(R);
        std::vector<double> axis(R);
        for (std::size_t r = 0; r < R; ++r) axis[r] = box.lo[k] + (static_cast<double>(r) + 0.5) * step;
        est.axes.push_back(axis);
        const double h = est.bandwidth[k];
        const double norm = 1.0 / (h * std::sqrt(2.0 * std::numbers::pi));
        table[k].resize(R * n);
        for (std::size_t r = 0; r < R; ++r)
            for (std::size_t i = 0; i < n; ++i) {
                const double u = (axis[r] - s.at(i, k)) / h;
                table[k][r * n + i] = norm * std::exp(-0.5 * u * u);
            }
    }
    std::size_t points = 1;
    for (std::size_t k = 0; k < m; ++k) points *= R;
    est.values.assign(points, 0.0);
    parallel_for(points, opts.workers, [&](std::size_t flat) {
        std::vector<const double*> rows(m);
        std::size_t f = flat;
        for (std::size_t k = m; k-- > 0;) {
            rows[k] = table[k].data() + (f % R) * n;
            f /= R;
        }
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double prod = rows[0][i];
            for (std::size_t k = 1; k < m; ++k) prod *= rows[k][i];
            sum += prod;
        }
        est.values[flat] = sum / static_cast<double>(n);
    });
    return est;
}

// Law N(mean, cov) of X_z for constant coefficients.
struct GaussianReference {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    bool singular = false;

    [[nodiscard]] double density(std::span<const double> x) const {
        if (singular) return std::numeric_limits<double>::quiet_NaN();
        const auto m = mean.size();
        if (static_cast<Eigen::Index>(x.size()) != m) throw DimensionError("point has the wrong dimension");
        Eigen::VectorXd d(m);
        for (Eigen::Index k = 0; k < m; ++k) d(k) = x[static_cast<std::size_t>(k)] - mean(k);
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(covariance);
        const double q = d.dot(ldlt.solve(d));
        const double det = covariance.determinant();
        return std::exp(-0.5 * q) / std::sqrt(std::pow(2.0 * std::numbers::pi, static_cast<double>(m)) * det);
    }
};

// N(x0 + area * drift, area * B B^T) with B the m x d noise matrix and area = s t.
inline GaussianReference gaussian_reference(std::span<const double> x0, double area, const Eigen::MatrixXd& B,
                                            std::optional<Eigen::VectorXd> drift = {}) {
    const auto m = static_cast<Eigen::Index>(x0.size());
    if (B.rows() != m) throw DimensionError("noise matrix has the wrong number of rows");
    if (!(area > 0.0)) throw DegenerateError("rectangle area must be positive");
    GaussianReference g;
    g.mean = Eigen::Map<const Eigen::VectorXd>(x0.data(), m);
    if (drift) g.mean += area * *drift;
    g.covariance = area * B * B.transpose();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g.covariance, Eigen::EigenvaluesOnly);
    const double top = eig.eigenvalues().cwiseAbs().maxCoeff();
    g.singular = !(eig.eigenvalues().minCoeff() > 1e-12 * std::max(top, 1e-300));
    return g;
}

inline GaussianReference gaussian_reference(const FieldSet& fs, std::span<const double> x0, double s, double t) {
    for (std::size_t l = 0; l <= fs.d(); ++l)
        if (!fs.frozen(l)) throw ConfigError("Gaussian reference needs constant coefficient fields");
    const std::vector<double> origin(fs.m(), 0.0);
    Eigen::MatrixXd B(static_cast<Eigen::Index>(fs.m()), static_cast<Eigen::Index>(fs.d()));
    for (std::size_t l = 1; l <= fs.d(); ++l) B.col(static_cast<Eigen::Index>(l - 1)) = eval_field(fs.field(l), 0, 0, origin);
    return gaussian_reference(x0, s * t, B, eval_field(fs.field(0), 0, 0, origin));
}

}  // namespace sheetlab
