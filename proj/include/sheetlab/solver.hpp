#pragma once
//
// Lower-left-corner rectangle recursion for the two-parameter Ito equation
//
//   X(i,j) = X(i-1,j) + X(i,j-1) - X(i-1,j-1)
//          + sum_l A_l(r, X_r) dW^l(r) + A_0(r, X_r) ds dt,   r = (i-1, j-1),
//
// and the matrix-valued recursion for the first variation xi(r, z).

#include "sheetlab/error.hpp"
#include "sheetlab/fieldkit.hpp"
#include "sheetlab/lattice.hpp"
#include "sheetlab/parallel.hpp"
#include "sheetlab/stats.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

namespace sheetlab {

struct PathLattice {
    GridSpec grid;
    std::size_t m = 0;
    std::uint64_t seed = 0;
    std::uint32_t trial = 0;
    std::vector<double> x0;
    std::vector<double> values;  // node-major: ((i * (n_t+1)) + j) * m + k

    [[nodiscard]] std::size_t offset(std::size_t i, std::size_t j) const {
        return (i * (grid.n_t() + 1) + j) * m;
    }
    [[nodiscard]] std::span<const double> at(std::size_t i, std::size_t j) const {
        return {values.data() + offset(i, j), m};
    }
    [[nodiscard]] std::span<double> at(std::size_t i, std::size_t j) {
        return {values.data() + offset(i, j), m};
    }
    [[nodiscard]] std::span<const double> at(Node n) const { return at(n.i, n.j); }
};

namespace detail {

inline void check_sheet(const FieldSet& fs, const GridSpec& grid, const SheetSample& sheet) {
    if (sheet.d != fs.d())
        throw DimensionError("sheet has d = " + std::to_string(sheet.d) + ", fields need d = " +
                             std::to_string(fs.d()));
    if (sheet.n_s != grid.n_s() || sheet.n_t != grid.n_t())
        throw DimensionError("sheet sample does not match grid");
}

// Evaluates every coefficient at the cell with lower-left node (i, j), or
// reuses the frozen values when nothing depends on (theta, tau, x).
class CellEvaluator {
public:
    CellEvaluator(const FieldSet& fs, const GridSpec& grid, const FieldProgram& prog)
        : fs_(fs), grid_(grid), prog_(prog), buf_(prog.make_buffer()) {
        all_frozen_ = true;
        for (std::size_t l = 0; l <= fs.d(); ++l) all_frozen_ &= fs.frozen(l);
        if (all_frozen_) {
            std::vector<double> origin(fs.m(), 0.0);
            prog_.evaluate(0.0, 0.0, origin, buf_);
        }
    }

    void at(std::size_t i, std::size_t j, std::span<const double> x) {
        if (!all_frozen_) prog_.evaluate(grid_.s_at(i), grid_.t_at(j), x, buf_);
    }
    [[nodiscard]] bool all_frozen() const { return all_frozen_; }
    [[nodiscard]] std::span<const double> buffer() const { return buf_; }
    [[nodiscard]] double value(std::size_t l, std::size_t k) const { return prog_.value(buf_, l, k); }
    [[nodiscard]] double derivative(std::size_t l, std::size_t k, std::size_t c) const {
        return prog_.derivative(buf_, l, k, c);
    }

private:
    const FieldSet& fs_;
    const GridSpec& grid_;
    const FieldProgram& prog_;
    std::vector<double> buf_;
    bool all_frozen_ = false;
};

}  // namespace detail

// Solves on the whole grid, or only on the nodes below `upto` when given.
inline PathLattice solve_path(const FieldSet& fs, const GridSpec& grid, const SheetSample& sheet,
                              std::span<const double> x0, std::optional<Node> upto = {}) {
    detail::check_sheet(fs, grid, sheet);
    if (x0.size() != fs.m())
        throw DimensionError("x0 has " + std::to_string(x0.size()) + " entries, expected " +
                             std::to_string(fs.m()));
    const Node end = upto.value_or(Node{grid.n_s(), grid.n_t()});
    if (!grid.contains(end)) throw IndexError("solve target outside grid");

    PathLattice p;
    p.grid = grid;
    p.m = fs.m();
    p.seed = sheet.seed;
    p.trial = sheet.trial;
    p.x0.assign(x0.begin(), x0.end());
    p.values.assign((grid.n_s() + 1) * (grid.n_t() + 1) * p.m, 0.0);
    const std::size_t m = p.m, d = fs.d();
    for (std::size_t i = 0; i <= grid.n_s(); ++i) std::copy(x0.begin(), x0.end(), p.at(i, 0).begin());
    for (std::size_t j = 0; j <= grid.n_t(); ++j) std::copy(x0.begin(), x0.end(), p.at(0, j).begin());

    detail::CellEvaluator eval(fs, grid, fs.value_program());
    std::vector<bool> active(d + 1);
    for (std::size_t l = 0; l <= d; ++l) active[l] = !fs.is_zero(l);
    const double area = grid.cell_area();

    for (std::size_t i = 1; i <= end.i; ++i) {
        for (std::size_t j = 1; j <= end.j; ++j) {
            const auto ll = p.at(i - 1, j - 1);
            const auto left = p.at(i - 1, j);
            const auto below = p.at(i, j - 1);
            auto out = p.at(i, j);
            eval.at(i - 1, j - 1, ll);
            bool finite = true;
            for (std::size_t k = 0; k < m; ++k) {
                double v = left[k] + below[k] - ll[k];
                if (active[0]) v += eval.value(0, k) * area;
                for (std::size_t l = 1; l <= d; ++l)
                    if (active[l]) v += eval.value(l, k) * sheet.increment(l - 1, i - 1, j - 1);
                out[k] = v;
                finite &= std::isfinite(v);
            }
            if (!finite) throw DivergenceError(i, j);
        }
    }
    return p;
}

// Per-cell linearisation M_c = sum_l dA_l dW^l + dA_0 ds dt, row-major m x m,
// for the cells strictly below `upto`.
struct CellMatrices {
    std::size_t m = 0;
    std::size_t rows = 0;  // cells in s
    std::size_t cols = 0;  // cells in t
    bool identity_kernel = false;  // every Jacobian vanishes identically
    std::vector<double> data;

    [[nodiscard]] const double* at(std::size_t i, std::size_t j) const {
        return data.data() + (i * cols + j) * m * m;
    }
};

inline CellMatrices linearize(const FieldSet& fs, const GridSpec& grid, const SheetSample& sheet,
                              const PathLattice& path, std::optional<Node> upto = {}) {
    detail::check_sheet(fs, grid, sheet);
    const Node end = upto.value_or(Node{grid.n_s(), grid.n_t()});
    if (!grid.contains(end)) throw IndexError("linearisation target outside grid");
    CellMatrices M;
    M.m = fs.m();
    M.rows = end.i;
    M.cols = end.j;
    M.identity_kernel = fs.all_jacobians_vanish();
    if (M.identity_kernel) return M;
    const std::size_t m = M.m, d = fs.d();
    M.data.assign(M.rows * M.cols * m * m, 0.0);
    detail::CellEvaluator eval(fs, grid, fs.jacobian_program());
    const double area = grid.cell_area();
    for (std::size_t i = 0; i < M.rows; ++i)
        for (std::size_t j = 0; j < M.cols; ++j) {
            eval.at(i, j, path.at(i, j));
            double* out = M.data.data() + (i * M.cols + j) * m * m;
            for (std::size_t l = 0; l <= d; ++l) {
                if (fs.spatially_constant(l)) continue;
                const double w = l == 0 ? area : sheet.increment(l - 1, i, j);
                for (std::size_t r = 0; r < m; ++r)
                    for (std::size_t c = 0; c < m; ++c) out[r * m + c] += eval.derivative(l, r, c) * w;
            }
        }
    return M;
}

// xi(r; i, j) for i >= r.i, j >= r.j.
struct VariationKernel {
    Node base;
    std::size_t m = 0;
    std::size_t rows = 0;  // nodes in s, counted from base
    std::size_t cols = 0;
    std::vector<double> data;

    [[nodiscard]] Eigen::MatrixXd at(std::size_t i, std::size_t j) const {
        if (i < base.i || j < base.j || i - base.i >= rows || j - base.j >= cols)
            throw IndexError("variation kernel queried outside its rectangle");
        const double* p = data.data() + ((i - base.i) * cols + (j - base.j)) * m * m;
        return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            p, static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    }
    [[nodiscard]] Eigen::MatrixXd at(Node n) const { return at(n.i, n.j); }
};

inline VariationKernel solve_variation(const CellMatrices& M, Node r, Node end) {
    if (r.i > end.i || r.j > end.j) throw IndexError("variation base point beyond its target");
    if (end.i > M.rows || end.j > M.cols) throw IndexError("variation target beyond linearisation");
    VariationKernel K;
    K.base = r;
    K.m = M.m;
    K.rows = end.i - r.i + 1;
    K.cols = end.j - r.j + 1;
    const std::size_t m = M.m, mm = m * m;
    K.data.assign(K.rows * K.cols * mm, 0.0);
    auto cell = [&](std::size_t a, std::size_t b) { return K.data.data() + (a * K.cols + b) * mm; };
    for (std::size_t a = 0; a < K.rows; ++a)
        for (std::size_t b = 0; b < K.cols; ++b) {
            double* out = cell(a, b);
            if (a == 0 || b == 0 || M.identity_kernel) {
                for (std::size_t k = 0; k < m; ++k) out[k * m + k] = 1.0;
                continue;
            }
            const double* left = cell(a - 1, b);
            const double* below = cell(a, b - 1);
            const double* ll = cell(a - 1, b - 1);
            const double* mc = M.at(r.i + a - 1, r.j + b - 1);
            bool finite = true;
            for (std::size_t p = 0; p < m; ++p)
                for (std::size_t q = 0; q < m; ++q) {
                    double v = left[p * m + q] + below[p * m + q] - ll[p * m + q];
                    for (std::size_t k = 0; k < m; ++k) v += mc[p * m + k] * ll[k * m + q];
                    out[p * m + q] = v;
                    finite &= std::isfinite(v);
                }
            if (!finite) throw DivergenceError(r.i + a, r.j + b);
        }
    return K;
}

inline VariationKernel solve_variation(const FieldSet& fs, const GridSpec& grid, const SheetSample& sheet,
                                       const PathLattice& path, Node r, std::optional<Node> upto = {}) {
    const Node end = upto.value_or(Node{grid.n_s(), grid.n_t()});
    if (!grid.contains(r)) throw IndexError("variation base point outside grid");
    return solve_variation(linearize(fs, grid, sheet, path, end), r, end);
}

// xi(r, z) for every node r <= z from one backward sweep:
//   S(a,b) = S(a+1,b) + S(a,b+1) - S(a+1,b+1) + S(a+1,b+1) M(a,b),
// with S = I on the lines a = z.i and b = z.j. S(r) equals xi(r, z) because
// the forward recursion for xi(r, .) is linear with the same cell matrices.
struct ReverseVariation {
    Node target;
    std::size_t m = 0;
    bool identity = false;
    std::vector<double> data;  // ((a * (z.j+1)) + b) * m * m, row-major blocks

    [[nodiscard]] const double* raw(std::size_t a, std::size_t b) const {
        return data.data() + (a * (target.j + 1) + b) * m * m;
    }
    [[nodiscard]] Eigen::MatrixXd at(std::size_t a, std::size_t b) const {
        if (a > target.i || b > target.j) throw IndexError("reverse variation queried beyond target");
        if (identity) return Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            raw(a, b), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    }
};

inline ReverseVariation variation_to(const CellMatrices& M, Node z) {
    if (z.i > M.rows || z.j > M.cols) throw IndexError("variation target beyond linearisation");
    ReverseVariation R;
    R.target = z;
    R.m = M.m;
    R.identity = M.identity_kernel;
    if (R.identity) return R;
    const std::size_t m = M.m, mm = m * m, W = z.j + 1;
    R.data.assign((z.i + 1) * W * mm, 0.0);
    auto cell = [&](std::size_t a, std::size_t b) { return R.data.data() + (a * W + b) * mm; };
    for (std::size_t a = z.i + 1; a-- > 0;)
        for (std::size_t b = z.j + 1; b-- > 0;) {
            double* out = cell(a, b);
            if (a == z.i || b == z.j) {
                for (std::size_t k = 0; k < m; ++k) out[k * m + k] = 1.0;
                continue;
            }
            const double* right = cell(a + 1, b);
            const double* above = cell(a, b + 1);
            const double* diag = cell(a + 1, b + 1);
            const double* mc = M.at(a, b);
            bool finite = true;
            for (std::size_t p = 0; p < m; ++p)
                for (std::size_t q = 0; q < m; ++q) {
                    double v = right[p * m + q] + above[p * m + q] - diag[p * m + q];
                    for (std::size_t k = 0; k < m; ++k) v += diag[p * m + k] * mc[k * m + q];
                    out[p * m + q] = v;
                    finite &= std::isfinite(v);
                }
            if (!finite) throw DivergenceError(a, b);
        }
    return R;
}

// CSV dump: i, j, s, t, x_1..x_m.
inline void write_path_csv(std::ostream& out, const PathLattice& p) {
    out << "i,j,s,t";
    for (std::size_t k = 0; k < p.m; ++k) out << ",x_" << (k + 1);
    out << '\n';
    out.precision(17);
    for (std::size_t i = 0; i <= p.grid.n_s(); ++i)
        for (std::size_t j = 0; j <= p.grid.n_t(); ++j) {
            out << i << ',' << j << ',' << p.grid.s_at(i) << ',' << p.grid.t_at(j);
            for (double v : p.at(i, j)) out << ',' << v;
            out << '\n';
        }
}

struct ConvergenceLevel {
    std::size_t cells = 0;                 // per side
    std::vector<double> mean_endpoint;     // trial average of X_z
    std::optional<double> rms_difference;  // E|X^(k) - X^(k+1)|^2 ^ 1/2, absent at the finest level
};

struct ConvergenceReport {
    std::vector<ConvergenceLevel> levels;
    std::size_t trials = 0;
};

// Level k uses base * 2^k cells per side on [0,s] x [0,t]; every level is
// driven by block sums of the finest sheet of each trial.
inline ConvergenceReport refine_convergence(const FieldSet& fs, std::span<const double> x0, double s,
                                            double t, std::uint64_t seed, std::size_t levels,
                                            std::size_t base, std::size_t trials, unsigned workers = 1) {
    if (levels < 2) throw ConfigError("refinement needs at least 2 levels");
    if (base == 0) throw ConfigError("base cell count must be positive");
    if (trials == 0) throw ConfigError("refinement needs at least one trial");
    const std::size_t m = fs.m();
    const std::size_t finest = base << (levels - 1);
    const GridSpec fine_grid = make_grid(s, t, finest, finest);
    std::vector<double> endpoints(trials * levels * m);
    parallel_for(trials, workers, [&](std::size_t tr) {
        const SheetSample fine = sample_sheet(fine_grid, fs.d(), seed, static_cast<std::uint32_t>(tr));
        for (std::size_t k = 0; k < levels; ++k) {
            const std::size_t n = base << k;
            const GridSpec g = make_grid(s, t, n, n);
            const SheetSample sh = n == finest ? fine : coarsen(fine, finest / n);
            const PathLattice p = solve_path(fs, g, sh, x0);
            const auto end = p.at(n, n);
            std::copy(end.begin(), end.end(), endpoints.begin() + static_cast<std::ptrdiff_t>((tr * levels + k) * m));
        }
    });
    ConvergenceReport rep;
    rep.trials = trials;
    for (std::size_t k = 0; k < levels; ++k) {
        ConvergenceLevel lv;
        lv.cells = base << k;
        lv.mean_endpoint.assign(m, 0.0);
        double sq = 0.0;
        for (std::size_t tr = 0; tr < trials; ++tr) {
            const double* e = &endpoints[(tr * levels + k) * m];
            for (std::size_t c = 0; c < m; ++c) lv.mean_endpoint[c] += e[c];
            if (k + 1 < levels) {
                const double* f = &endpoints[(tr * levels + k + 1) * m];
                for (std::size_t c = 0; c < m; ++c) sq += (e[c] - f[c]) * (e[c] - f[c]);
            }
        }
        for (double& v : lv.mean_endpoint) v /= static_cast<double>(trials);
        if (k + 1 < levels) lv.rms_difference = std::sqrt(sq / static_cast<double>(trials));
        rep.levels.push_back(std::move(lv));
    }
    return rep;
}

}  // namespace sheetlab
