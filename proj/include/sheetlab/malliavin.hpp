#pragma once
//
// Malliavin covariance C_z = ds dt * sum_{cells r < z} sum_l (xi(r,z) A_l)(xi(r,z) A_l)^T
// and Monte Carlo probes of P{v^T C_z v <= eps}.

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
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sheetlab {

enum class MalliavinStrategy {
    exact,      // one backward sweep gives xi(r, z) for every cell
    per_cell,   // one forward variation solve per cell, O(N^2)
    subsample,  // forward solves on a uniform sample of cells, scaled by N / K
};

inline std::string to_string(MalliavinStrategy s) {
    switch (s) {
        case MalliavinStrategy::exact: return "exact";
        case MalliavinStrategy::per_cell: return "per-cell";
        case MalliavinStrategy::subsample: return "subsample";
    }
    return "?";
}

inline std::optional<MalliavinStrategy> parse_strategy(std::string_view s) {
    if (s == "exact" || s == "adjoint") return MalliavinStrategy::exact;
    if (s == "per-cell" || s == "per_cell") return MalliavinStrategy::per_cell;
    if (s == "subsample") return MalliavinStrategy::subsample;
    return std::nullopt;
}

struct MalliavinOptions {
    MalliavinStrategy strategy = MalliavinStrategy::exact;
    std::size_t subsample_cells = 4096;
};

struct MalliavinMatrix {
    Eigen::MatrixXd C;
    Node z;
    std::uint64_t seed = 0;
    std::uint32_t trial = 0;
    MalliavinStrategy strategy = MalliavinStrategy::exact;
    std::size_t cells_used = 0;
    std::size_t cells_total = 0;
};

namespace detail {

inline void check_target(const GridSpec& grid, Node z) {
    if (!grid.contains(z)) throw IndexError("evaluation node outside grid");
    if (z.i == 0 || z.j == 0)
        throw DegenerateError("evaluation node (" + std::to_string(z.i) + ", " + std::to_string(z.j) +
                              ") lies on an axis: the rectangle [0, z] is degenerate");
}

// Noise columns A_1..A_d at the cell with lower-left node (a, b), as an m x d matrix.
inline Eigen::MatrixXd noise_columns(CellEvaluator& eval, const PathLattice& path, std::size_t a,
                                     std::size_t b, std::size_t m, std::size_t d) {
    eval.at(a, b, path.at(a, b));
    Eigen::MatrixXd A(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d));
    for (std::size_t l = 0; l < d; ++l)
        for (std::size_t k = 0; k < m; ++k)
            A(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = eval.value(l + 1, k);
    return A;
}

// Sorted sample of k distinct indices from [0, n): partial Fisher-Yates on
// the subsample stream of the trial.
inline std::vector<std::size_t> sample_cells(std::size_t n, std::size_t k, std::uint64_t seed,
                                             std::uint32_t trial) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    k = std::min(k, n);
    for (std::size_t q = 0; q < k; ++q) {
        const double u = philox_uniform(
            seed, make_counter(Stream::subsample, trial, 0, static_cast<std::uint32_t>(q >> 32),
                               static_cast<std::uint32_t>(q)));
        const std::size_t span = n - q;
        const std::size_t pick = q + std::min(span - 1, static_cast<std::size_t>(u * static_cast<double>(span)));
        std::swap(idx[q], idx[pick]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace detail

// Calls fn(a, b, G) with G = ds dt * sum_l (xi A_l)(xi A_l)^T for every cell
// below z, visiting cells in row-major order. Exact strategies only.
template <class Fn>
void for_each_contribution(const FieldSet& fs, const GridSpec& grid, const SheetSample& sheet,
                           const PathLattice& path, Node z, MalliavinStrategy strategy, Fn&& fn) {
    detail::check_target(grid, z);
    const std::size_t m = fs.m(), d = fs.d();
    const CellMatrices M = linearize(fs, grid, sheet, path, z);
    detail::CellEvaluator eval(fs, grid, fs.value_program());
    const double area = grid.cell_area();
    std::optional<ReverseVariation> S;
    if (strategy == MalliavinStrategy::exact) S = variation_to(M, z);
    for (std::size_t a = 0; a < z.i; ++a)
        for (std::size_t b = 0; b < z.j; ++b) {
            const Eigen::MatrixXd A = detail::noise_columns(eval, path, a, b, m, d);
            Eigen::MatrixXd U;
            if (M.identity_kernel)
                U = A;
            else if (S)
                U = S->at(a, b) * A;
            else
                U = solve_variation(M, {a, b}, z).at(z) * A;
            fn(a, b, Eigen::MatrixXd(area * U * U.transpose()));
        }
}

inline MalliavinMatrix malliavin_matrix(const FieldSet& fs, const GridSpec& grid, const SheetSample& sheet,
                                        const PathLattice& path, Node z, const MalliavinOptions& opts = {}) {
    detail::check_target(grid, z);
    const auto m = static_cast<Eigen::Index>(fs.m());
    MalliavinMatrix out;
    out.C = Eigen::MatrixXd::Zero(m, m);
    out.z = z;
    out.seed = sheet.seed;
    out.trial = sheet.trial;
    out.strategy = opts.strategy;
    out.cells_total = z.i * z.j;

    if (opts.strategy != MalliavinStrategy::subsample || opts.subsample_cells >= out.cells_total) {
        const auto strategy =
            opts.strategy == MalliavinStrategy::subsample ? MalliavinStrategy::per_cell : opts.strategy;
        for_each_contribution(fs, grid, sheet, path, z, strategy,
                              [&](std::size_t, std::size_t, const Eigen::MatrixXd& G) { out.C += G; });
        out.cells_used = out.cells_total;
    } else {
        if (opts.subsample_cells == 0) throw ConfigError("subsample size must be positive");
        const CellMatrices M = linearize(fs, grid, sheet, path, z);
        detail::CellEvaluator eval(fs, grid, fs.value_program());
        const auto picks = detail::sample_cells(out.cells_total, opts.subsample_cells, sheet.seed, sheet.trial);
        for (std::size_t c : picks) {
            const std::size_t a = c / z.j, b = c % z.j;
            const Eigen::MatrixXd A = detail::noise_columns(eval, path, a, b, fs.m(), fs.d());
            const Eigen::MatrixXd U = M.identity_kernel ? A : Eigen::MatrixXd(solve_variation(M, {a, b}, z).at(z) * A);
            out.C += U * U.transpose();
        }
        out.C *= grid.cell_area() * static_cast<double>(out.cells_total) / static_cast<double>(picks.size());
        out.cells_used = picks.size();
    }
    out.C = 0.5 * (out.C + out.C.transpose());
    return out;
}

inline double quadratic_form(const Eigen::MatrixXd& C, const Eigen::VectorXd& v) {
    if (v.size() != C.rows()) throw DimensionError("direction has the wrong dimension");
    if (std::abs(v.squaredNorm() - 1.0) > 1e-12) throw DomainError("direction must be a unit vector");
    return v.dot(C * v);
}

inline double quadratic_form(const MalliavinMatrix& C, const Eigen::VectorXd& v) {
    return quadratic_form(C.C, v);
}

constexpr double kDetFloor = 1e-30;

struct HistogramBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
};

struct DetMomentReport {
    double p = 1.0;
    std::size_t samples = 0;
    std::size_t used = 0;
    std::size_t floored = 0;  // det C below kDetFloor, excluded from the mean
    double floored_fraction = 0.0;
    double estimate = 0.0;
    double std_error = 0.0;
    Interval ci;
    std::vector<HistogramBin> log10_det_histogram;
};

inline DetMomentReport det_inverse_moments(std::span<const MalliavinMatrix> samples, double p,
                                           std::size_t bins = 10) {
    if (!(p >= 1.0)) throw ConfigError("moment order p must be at least 1");
    if (samples.empty()) throw ConfigError("no Malliavin matrices supplied");
    DetMomentReport r;
    r.p = p;
    r.samples = samples.size();
    std::vector<double> moments, logs;
    for (const auto& s : samples) {
        const double det = s.C.determinant();
        if (!(det >= kDetFloor)) {
            ++r.floored;
            continue;
        }
        moments.push_back(std::pow(det, -p));
        logs.push_back(std::log10(det));
    }
    r.used = moments.size();
    r.floored_fraction = static_cast<double>(r.floored) / static_cast<double>(r.samples);
    if (moments.empty())
        throw EstimationError("every Malliavin matrix is singular (det C < 1e-30)");
    const MeanVar mv = mean_var(moments);
    r.estimate = mv.mean;
    r.std_error = mv.std_error();
    r.ci = {mv.mean - 1.96 * r.std_error, mv.mean + 1.96 * r.std_error};
    const auto [lo_it, hi_it] = std::minmax_element(logs.begin(), logs.end());
    const double lo = *lo_it, hi = *hi_it;
    bins = std::max<std::size_t>(bins, 1);
    const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
    for (std::size_t b = 0; b < bins; ++b)
        r.log10_det_histogram.push_back({lo + width * static_cast<double>(b), lo + width * static_cast<double>(b + 1), 0});
    for (double x : logs) {
        auto b = static_cast<std::size_t>((x - lo) / width);
        r.log10_det_histogram[std::min(b, bins - 1)].count++;
    }
    return r;
}

// Uniform direction on the unit sphere from the directions stream.
inline Eigen::VectorXd random_direction(std::uint64_t seed, std::size_t index, std::size_t m) {
    for (std::uint32_t attempt = 0;; ++attempt) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(m));
        for (std::size_t k = 0; k < m; ++k)
            v(static_cast<Eigen::Index>(k)) = philox_normal(
                seed, make_counter(Stream::directions, attempt, static_cast<std::uint32_t>(index),
                                   static_cast<std::uint32_t>(k), 0));
        const double n = v.norm();
        if (n > 1e-12) return v / n;
    }
}

struct ProbeOptions {
    std::size_t random_directions = 8;
    std::vector<Eigen::VectorXd> pinned;
    std::vector<double> eps{0.2, 0.1, 0.05};
    std::size_t trials = 1000;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    double requested_p = 1.0;
    MalliavinOptions malliavin;
};

struct ProbeReport {
    std::vector<Eigen::VectorXd> directions;  // pinned first, then random
    std::vector<bool> pinned;
    std::vector<double> eps;                  // as supplied
    std::size_t trials = 0;
    std::vector<std::vector<std::size_t>> counts;  // [direction][eps]
    std::vector<DecayFit> fits;                    // per direction
    std::vector<double> worst_p_hat;               // sup over directions, per eps
    std::size_t worst_direction = 0;               // largest P-hat at the smallest eps
    std::vector<std::string> flags;

    [[nodiscard]] double p_hat(std::size_t dir, std::size_t e) const {
        return static_cast<double>(counts[dir][e]) / static_cast<double>(trials);
    }
    [[nodiscard]] Interval ci(std::size_t dir, std::size_t e) const {
        return wilson_interval(counts[dir][e], trials);
    }
};

inline ProbeReport nondegeneracy_probe(const FieldSet& fs, const GridSpec& grid, std::span<const double> x0,
                                       Node z, const ProbeOptions& opts) {
    if (opts.eps.size() < 3) throw ConfigError("probe needs at least 3 eps values");
    for (double e : opts.eps)
        if (!(e > 0.0 && e < 1.0)) throw ConfigError("probe eps values must lie in (0,1)");
    if (opts.trials < 1000) throw ConfigError("probe needs at least 1000 trials");
    detail::check_target(grid, z);
    const std::size_t m = fs.m();

    ProbeReport rep;
    rep.eps = opts.eps;
    rep.trials = opts.trials;
    for (const auto& v : opts.pinned) {
        if (static_cast<std::size_t>(v.size()) != m) throw DimensionError("pinned direction has the wrong dimension");
        if (!(v.norm() > 0.0)) throw DomainError("pinned direction must be non-zero");
        rep.directions.push_back(v / v.norm());
        rep.pinned.push_back(true);
    }
    for (std::size_t k = 0; k < opts.random_directions; ++k) {
        rep.directions.push_back(random_direction(opts.seed, k, m));
        rep.pinned.push_back(false);
    }
    if (rep.directions.empty()) throw ConfigError("probe needs at least one direction");
    const std::size_t D = rep.directions.size();

    std::vector<double> forms(opts.trials * D);
    parallel_for(opts.trials, opts.workers, [&](std::size_t t) {
        const auto trial = static_cast<std::uint32_t>(t);
        const SheetSample sheet = sample_sheet(grid, fs.d(), opts.seed, trial);
        const PathLattice path = solve_path(fs, grid, sheet, x0, z);
        const MalliavinMatrix C = malliavin_matrix(fs, grid, sheet, path, z, opts.malliavin);
        for (std::size_t k = 0; k < D; ++k) forms[t * D + k] = rep.directions[k].dot(C.C * rep.directions[k]);
    });

    rep.counts.assign(D, std::vector<std::size_t>(opts.eps.size(), 0));
    for (std::size_t t = 0; t < opts.trials; ++t)
        for (std::size_t k = 0; k < D; ++k)
            for (std::size_t e = 0; e < opts.eps.size(); ++e)
                if (forms[t * D + k] <= opts.eps[e]) ++rep.counts[k][e];

    std::vector<std::size_t> order(opts.eps.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return opts.eps[a] > opts.eps[b]; });

    rep.worst_p_hat.assign(opts.eps.size(), 0.0);
    for (std::size_t k = 0; k < D; ++k) {
        rep.fits.push_back(fit_decay(opts.eps, rep.counts[k], opts.trials, opts.requested_p));
        for (std::size_t e = 0; e < opts.eps.size(); ++e)
            rep.worst_p_hat[e] = std::max(rep.worst_p_hat[e], rep.p_hat(k, e));
        for (std::size_t q = 0; q + 1 < order.size(); ++q) {
            const std::size_t big = order[q], small = order[q + 1];
            if (rep.p_hat(k, small) > rep.p_hat(k, big) && !rep.ci(k, small).overlaps(rep.ci(k, big)))
                rep.flags.push_back("direction " + std::to_string(k) + ": P-hat increases as eps decreases from " +
                                    std::to_string(opts.eps[big]) + " to " + std::to_string(opts.eps[small]));
        }
    }
    const std::size_t smallest = order.back();
    for (std::size_t k = 1; k < D; ++k)
        if (rep.counts[k][smallest] > rep.counts[rep.worst_direction][smallest]) rep.worst_direction = k;
    return rep;
}

}  // namespace sheetlab
