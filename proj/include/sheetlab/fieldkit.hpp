#pragma once
//
// Time-dependent coefficient fields A_0..A_d, flat-space covariant
// derivatives, the bracket hierarchy and the restricted Hormander rank report.

#include "sheetlab/error.hpp"
#include "sheetlab/expr.hpp"
#include "sheetlab/field_program.hpp"
#include "sheetlab/stats.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sheetlab {

enum class Regime { elliptic, smooth, factorable, regular_holder, irregular_holder };

inline std::string to_string(Regime r) {
    switch (r) {
        case Regime::elliptic: return "elliptic";
        case Regime::smooth: return "smooth";
        case Regime::factorable: return "factorable";
        case Regime::regular_holder: return "regular-holder";
        case Regime::irregular_holder: return "irregular-holder";
    }
    return "?";
}

inline std::optional<Regime> parse_regime(std::string_view s) {
    if (s == "elliptic") return Regime::elliptic;
    if (s == "smooth") return Regime::smooth;
    if (s == "factorable") return Regime::factorable;
    if (s == "regular-holder" || s == "regular_holder") return Regime::regular_holder;
    if (s == "irregular-holder" || s == "irregular_holder") return Regime::irregular_holder;
    return std::nullopt;
}

// A vector field on R^m as m scalar expressions.
struct FieldExpr {
    std::vector<Expr> components;
    std::string label;

    [[nodiscard]] std::size_t dimension() const { return components.size(); }

    [[nodiscard]] bool is_zero() const {
        return std::all_of(components.begin(), components.end(),
                           [](const Expr& e) { return e.is_constant(0.0); });
    }
};

inline bool structurally_equal(const FieldExpr& a, const FieldExpr& b) {
    if (a.dimension() != b.dimension()) return false;
    for (std::size_t i = 0; i < a.dimension(); ++i)
        if (!structurally_equal(a.components[i], b.components[i])) return false;
    return true;
}

inline FieldExpr constant_field(std::vector<double> v, std::string label = {}) {
    FieldExpr f;
    f.label = std::move(label);
    for (double c : v) f.components.push_back(constant(c));
    return f;
}

inline FieldExpr unit_field(std::size_t m, std::size_t k, std::string label = {}) {
    std::vector<double> v(m, 0.0);
    v[k] = 1.0;
    return constant_field(std::move(v), std::move(label));
}

inline FieldExpr scale(const Expr& c, const FieldExpr& f) {
    FieldExpr r;
    r.label = f.label;
    for (const auto& e : f.components) r.components.push_back(c * e);
    return r;
}

// (a^nabla b)^i = sum_k a^k d_k b^i.
inline FieldExpr covariant_derivative(const FieldExpr& a, const FieldExpr& b) {
    if (a.dimension() != b.dimension())
        throw DimensionError("covariant derivative of fields of different dimension");
    const std::size_t m = a.dimension();
    FieldExpr r;
    r.label = "D_" + (a.label.empty() ? std::string("?") : a.label) + "(" +
              (b.label.empty() ? std::string("?") : b.label) + ")";
    r.components.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        Expr sum = constant(0.0);
        for (std::size_t k = 0; k < m; ++k)
            sum = sum + a.components[k] * partial(b.components[i], static_cast<int>(k));
        r.components.push_back(sum);
    }
    return r;
}

inline std::vector<std::vector<Expr>> component_lists(std::span<const FieldExpr> fields) {
    std::vector<std::vector<Expr>> out;
    out.reserve(fields.size());
    for (const auto& f : fields) out.push_back(f.components);
    return out;
}

inline Eigen::VectorXd eval_field(const FieldExpr& f, double th, double ta, std::span<const double> x) {
    if (x.size() != f.dimension())
        throw DimensionError("point has " + std::to_string(x.size()) + " coordinates, field has " +
                             std::to_string(f.dimension()));
    const FieldProgram prog({f.components}, f.dimension(), 0);
    auto buf = prog.make_buffer();
    prog.evaluate(th, ta, x, buf);
    Eigen::VectorXd v(f.dimension());
    for (std::size_t i = 0; i < f.dimension(); ++i) v(static_cast<Eigen::Index>(i)) = prog.value(buf, 0, i);
    return v;
}

// Entry (i, k) = d_k f^i, by forward-mode jets.
inline Eigen::MatrixXd jacobian_x(const FieldExpr& f, double th, double ta, std::span<const double> x) {
    if (x.size() != f.dimension())
        throw DimensionError("point has " + std::to_string(x.size()) + " coordinates, field has " +
                             std::to_string(f.dimension()));
    const std::size_t m = f.dimension();
    const FieldProgram prog({f.components}, m, 1);
    auto buf = prog.make_buffer();
    prog.evaluate(th, ta, x, buf);
    Eigen::MatrixXd J(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < m; ++k)
            J(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = prog.derivative(buf, 0, i, k);
    return J;
}

struct DeclaredBounds {
    double K = std::numeric_limits<double>::infinity();        // sup of spatial derivatives
    double gamma = 0.5;                                        // Holder exponent in t
    double K_gamma = std::numeric_limits<double>::infinity();  // Holder constant in t
    std::optional<double> beta;                                // Holder exponent in s
    double K_beta = std::numeric_limits<double>::infinity();
};

// Coefficients A_0 (drift) .. A_d (noise) with regime metadata and compiled
// evaluation tapes for values and Jacobians.
class FieldSet {
public:
    FieldSet() = default;

    FieldSet(std::string name, std::size_t m, std::vector<FieldExpr> coefficients, Regime regime,
             DeclaredBounds bounds = {})
        : name_(std::move(name)), m_(m), fields_(std::move(coefficients)), regime_(regime),
          bounds_(bounds) {
        if (m_ == 0) throw ConfigError("state dimension m must be positive");
        if (fields_.size() < 2) throw ConfigError("need a drift and at least one noise field");
        for (std::size_t l = 0; l < fields_.size(); ++l) {
            if (fields_[l].dimension() != m_)
                throw DimensionError("coefficient A" + std::to_string(l) + " has dimension " +
                                     std::to_string(fields_[l].dimension()) + ", expected " +
                                     std::to_string(m_));
            if (fields_[l].label.empty()) fields_[l].label = "A" + std::to_string(l);
        }
        validate_regime();
        const auto lists = component_lists(fields_);
        values_ = FieldProgram(lists, m_, 0);
        jacobians_ = FieldProgram(lists, m_, 1);
        for (std::size_t l = 0; l < fields_.size(); ++l) {
            zero_.push_back(fields_[l].is_zero());
            xconst_.push_back(values_.spatially_constant(l));
            bool time_free = true;
            for (const auto& e : fields_[l].components) time_free &= !e.depends_on_time();
            frozen_.push_back(xconst_.back() && time_free);
        }
    }

    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] std::size_t m() const { return m_; }
    [[nodiscard]] std::size_t d() const { return fields_.size() - 1; }
    [[nodiscard]] Regime regime() const { return regime_; }
    [[nodiscard]] const DeclaredBounds& bounds() const { return bounds_; }

    // l = 0 is the drift, 1..d the noise coefficients.
    [[nodiscard]] const FieldExpr& field(std::size_t l) const { return fields_.at(l); }
    [[nodiscard]] const std::vector<FieldExpr>& fields() const { return fields_; }
    [[nodiscard]] const FieldProgram& value_program() const { return values_; }
    [[nodiscard]] const FieldProgram& jacobian_program() const { return jacobians_; }

    [[nodiscard]] bool is_zero(std::size_t l) const { return zero_[l]; }
    [[nodiscard]] bool spatially_constant(std::size_t l) const { return xconst_[l]; }
    // Constant in (theta, tau, x).
    [[nodiscard]] bool frozen(std::size_t l) const { return frozen_[l]; }
    [[nodiscard]] bool all_jacobians_vanish() const {
        return std::all_of(xconst_.begin(), xconst_.end(), [](bool b) { return b; });
    }

private:
    void validate_regime() const {
        const double g = bounds_.gamma;
        if (!(g > 0.0 && g < 1.0)) throw ConfigError("Holder exponent gamma must lie in (0,1)");
        if (regime_ == Regime::regular_holder) {
            if (!bounds_.beta || !(*bounds_.beta > 0.5 && *bounds_.beta < 1.0))
                throw ConfigError("regular-holder regime requires beta in (1/2, 1)");
        }
        if (regime_ == Regime::irregular_holder) {
            if (!bounds_.beta || !(*bounds_.beta > 0.0 && *bounds_.beta <= 0.5))
                throw ConfigError("irregular-holder regime requires beta in (0, 1/2]");
        }
    }

    std::string name_;
    std::size_t m_ = 0;
    std::vector<FieldExpr> fields_;
    Regime regime_ = Regime::smooth;
    DeclaredBounds bounds_;
    FieldProgram values_;
    FieldProgram jacobians_;
    std::vector<bool> zero_;
    std::vector<bool> xconst_;
    std::vector<bool> frozen_;
};

struct BracketLevel {
    std::vector<FieldExpr> fields;  // after de-duplication
    std::size_t raw_count = 0;      // before de-duplication
};

struct BracketSet {
    std::vector<BracketLevel> levels;

    [[nodiscard]] std::vector<FieldExpr> cumulative(std::size_t through) const {
        std::vector<FieldExpr> all;
        for (std::size_t k = 0; k <= through && k < levels.size(); ++k)
            all.insert(all.end(), levels[k].fields.begin(), levels[k].fields.end());
        return all;
    }
};

namespace detail {

inline std::vector<FieldExpr> dedup(std::vector<FieldExpr> in) {
    std::vector<FieldExpr> out;
    for (auto& f : in) {
        const bool dup = std::any_of(out.begin(), out.end(),
                                     [&](const FieldExpr& g) { return structurally_equal(f, g); });
        if (!dup) out.push_back(std::move(f));
    }
    return out;
}

}  // namespace detail

// Sigma_0 = {A_1..A_d}; Sigma_{k+1} = {A_l^nabla V : 1 <= l <= d, V in Sigma_k}.
// The drift never enters.
inline BracketSet bracket_sets(const FieldSet& fs, std::size_t depth) {
    BracketSet set;
    std::vector<FieldExpr> level0;
    for (std::size_t l = 1; l <= fs.d(); ++l) level0.push_back(fs.field(l));
    set.levels.push_back({detail::dedup(level0), level0.size()});
    for (std::size_t k = 0; k < depth; ++k) {
        std::vector<FieldExpr> next;
        for (const auto& v : set.levels.back().fields)
            for (std::size_t l = 1; l <= fs.d(); ++l) next.push_back(covariant_derivative(fs.field(l), v));
        const std::size_t raw = next.size();
        set.levels.push_back({detail::dedup(std::move(next)), raw});
    }
    return set;
}

constexpr double kRankTolerance = 1e-9;

inline std::size_t numerical_rank(const Eigen::MatrixXd& columns, double rel_tol = kRankTolerance) {
    if (columns.cols() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(columns);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) <= 0.0) return 0;
    std::size_t rank = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
        if (sv(k) > rel_tol * sv(0)) ++rank;
    return rank;
}

// Smallest eigenvalue of sum_V V V^T, i.e. min over unit v of sum_V <v,V>^2.
inline double gram_min_eigenvalue(const Eigen::MatrixXd& columns) {
    const Eigen::MatrixXd G = columns * columns.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G, Eigen::EigenvaluesOnly);
    return std::max(0.0, eig.eigenvalues()(0));
}

struct Neighborhood {
    double s0 = 0.1;
    double radius = 0.1;
    std::size_t samples = 512;
};

struct HormanderLevel {
    std::size_t level = 0;
    std::size_t raw_count = 0;
    std::size_t distinct_count = 0;
    std::size_t cumulative_rank = 0;
    double c_estimate = 0.0;  // min eigenvalue of the cumulative Gram matrix
};

struct HormanderReport {
    std::size_t m = 0;
    double t = 0.0;
    std::vector<double> x0;
    std::vector<HormanderLevel> levels;
    double c_N = 0.0;
    std::optional<double> neighborhood_min;
    std::optional<Neighborhood> neighborhood;
    std::vector<std::string> spanning_fields;

    [[nodiscard]] bool full_rank() const { return !levels.empty() && levels.back().cumulative_rank == m; }
};

namespace detail {

inline Eigen::MatrixXd evaluate_columns(const FieldProgram& prog, std::vector<double>& buf, double th,
                                        double ta, std::span<const double> x) {
    prog.evaluate(th, ta, x, buf);
    const auto m = static_cast<Eigen::Index>(prog.dimension());
    Eigen::MatrixXd cols(m, static_cast<Eigen::Index>(prog.field_count()));
    for (std::size_t f = 0; f < prog.field_count(); ++f)
        for (std::size_t i = 0; i < prog.dimension(); ++i)
            cols(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = prog.value(buf, f, i);
    return cols;
}

inline double c_estimate(const Eigen::MatrixXd& cols, std::size_t m) {
    return numerical_rank(cols) == m ? gram_min_eigenvalue(cols) : 0.0;
}

}  // namespace detail

inline HormanderReport hormander_report(const FieldSet& fs, double t, std::span<const double> x0,
                                        std::size_t depth,
                                        std::optional<Neighborhood> neighborhood = std::nullopt) {
    if (x0.size() != fs.m()) throw DimensionError("x0 has wrong dimension");
    const BracketSet brackets = bracket_sets(fs, depth);
    const auto all = brackets.cumulative(depth);
    const FieldProgram prog(component_lists(all), fs.m(), 0);
    auto buf = prog.make_buffer();
    const Eigen::MatrixXd cols = detail::evaluate_columns(prog, buf, 0.0, t, x0);

    HormanderReport rep;
    rep.m = fs.m();
    rep.t = t;
    rep.x0.assign(x0.begin(), x0.end());
    Eigen::Index used = 0;
    for (std::size_t k = 0; k < brackets.levels.size(); ++k) {
        used += static_cast<Eigen::Index>(brackets.levels[k].fields.size());
        const Eigen::MatrixXd block = cols.leftCols(used);
        HormanderLevel lv;
        lv.level = k;
        lv.raw_count = brackets.levels[k].raw_count;
        lv.distinct_count = brackets.levels[k].fields.size();
        lv.cumulative_rank = numerical_rank(block);
        lv.c_estimate = detail::c_estimate(block, fs.m());
        rep.levels.push_back(lv);
    }
    rep.c_N = rep.levels.back().c_estimate;

    // Greedy spanning subset in hierarchy order.
    Eigen::MatrixXd chosen(static_cast<Eigen::Index>(fs.m()), 0);
    std::size_t rank = 0;
    for (Eigen::Index c = 0; c < cols.cols() && rank < fs.m(); ++c) {
        Eigen::MatrixXd trial(chosen.rows(), chosen.cols() + 1);
        trial << chosen, cols.col(c);
        const std::size_t r = numerical_rank(trial);
        if (r > rank) {
            chosen = trial;
            rank = r;
            rep.spanning_fields.push_back(all[static_cast<std::size_t>(c)].label);
        }
    }

    if (neighborhood) {
        rep.neighborhood = neighborhood;
        const std::size_t m = fs.m();
        double best = std::numeric_limits<double>::infinity();
        std::vector<double> y(m);
        std::size_t accepted = 0;
        for (std::uint64_t k = 1; accepted < neighborhood->samples && k < 64 * neighborhood->samples + 64; ++k) {
            const double th = neighborhood->s0 * halton(k, 0);
            double r2 = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double u = 2.0 * halton(k, static_cast<unsigned>(i + 1)) - 1.0;
                y[i] = x0[i] + neighborhood->radius * u;
                r2 += u * u;
            }
            if (r2 > 1.0) continue;
            ++accepted;
            best = std::min(best, detail::c_estimate(detail::evaluate_columns(prog, buf, th, t, y), m));
        }
        rep.neighborhood_min = best;
    }
    return rep;
}

// Empirical regularity of each coefficient over a deterministic probe set.
struct CoefficientCertificate {
    std::size_t index = 0;
    double t_holder = 0.0;     // max |A(th,t,x)-A(th,t',x)| / |t-t'|^gamma
    double s_holder = 0.0;     // same in s at exponent beta
    double s_lipschitz = 0.0;  // same in s at exponent 1
    double sup_value = 0.0;    // max |A|
    double inf_value = std::numeric_limits<double>::infinity();  // min |A|
    double sup_jacobian = 0.0;  // max |d_k A^i|
    bool t_holder_ok = true;
    bool s_holder_ok = true;
    bool jacobian_ok = true;
};

struct HolderCertificate {
    double gamma = 0.0;
    double beta = 0.0;
    std::vector<CoefficientCertificate> coefficients;

    [[nodiscard]] bool passed() const {
        return std::all_of(coefficients.begin(), coefficients.end(), [](const CoefficientCertificate& c) {
            return c.t_holder_ok && c.s_holder_ok && c.jacobian_ok;
        });
    }
};

// Time probes: a uniform grid on [0, extent] plus a geometric sequence
// accumulating at 0, where Holder quotients of root-type profiles peak.
inline std::vector<double> holder_probe_times(double extent, std::size_t count) {
    std::vector<double> ts;
    for (std::size_t k = 0; k < count; ++k)
        ts.push_back(extent * static_cast<double>(k) / static_cast<double>(count - 1));
    for (std::size_t k = 1; k <= count; ++k) ts.push_back(extent * std::ldexp(1.0, -static_cast<int>(k)));
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    return ts;
}

inline HolderCertificate holder_certificate(const FieldSet& fs, std::size_t probes, double s_extent = 1.0,
                                            double t_extent = 1.0,
                                            std::optional<double> beta_override = std::nullopt,
                                            std::optional<double> gamma_override = std::nullopt) {
    if (probes < 2) throw ConfigError("holder certificate needs at least 2 probes");
    const auto& b = fs.bounds();
    HolderCertificate cert;
    cert.gamma = gamma_override.value_or(b.gamma);
    cert.beta = beta_override.value_or(b.beta.value_or(1.0));
    const std::size_t m = fs.m();
    const FieldProgram& prog = fs.jacobian_program();
    auto buf = prog.make_buffer();

    std::vector<std::vector<double>> xs;
    xs.emplace_back(m, 0.0);
    for (std::uint64_t k = 1; k <= 4; ++k) {
        std::vector<double> x(m);
        for (std::size_t i = 0; i < m; ++i) x[i] = 2.0 * halton(k, static_cast<unsigned>(i)) - 1.0;
        xs.push_back(std::move(x));
    }
    const auto s_probe = holder_probe_times(s_extent, probes);
    const auto t_probe = holder_probe_times(t_extent, probes);
    const double s_fixed[] = {0.0, 0.5 * s_extent, s_extent};
    const double t_fixed[] = {0.0, 0.5 * t_extent, t_extent};

    for (std::size_t l = 0; l <= fs.d(); ++l) cert.coefficients.push_back({.index = l});

    // value table for fixed x and one free time argument
    auto sample = [&](double th, double ta, const std::vector<double>& x) {
        prog.evaluate(th, ta, x, buf);
        for (std::size_t l = 0; l <= fs.d(); ++l) {
            auto& c = cert.coefficients[l];
            double norm2 = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double v = prog.value(buf, l, i);
                norm2 += v * v;
                for (std::size_t k = 0; k < m; ++k)
                    c.sup_jacobian = std::max(c.sup_jacobian, std::abs(prog.derivative(buf, l, i, k)));
            }
            c.sup_value = std::max(c.sup_value, std::sqrt(norm2));
            c.inf_value = std::min(c.inf_value, std::sqrt(norm2));
        }
    };
    auto values = [&](double th, double ta, const std::vector<double>& x) {
        prog.evaluate(th, ta, x, buf);
        std::vector<double> v((fs.d() + 1) * m);
        for (std::size_t l = 0; l <= fs.d(); ++l)
            for (std::size_t i = 0; i < m; ++i) v[l * m + i] = prog.value(buf, l, i);
        return v;
    };
    auto quotient_update = [&](const std::vector<std::vector<double>>& table, const std::vector<double>& times,
                               double exponent, auto member) {
        for (std::size_t p = 0; p < times.size(); ++p)
            for (std::size_t q = p + 1; q < times.size(); ++q) {
                const double gap = std::pow(times[q] - times[p], exponent);
                if (!(gap > 0.0)) continue;
                for (std::size_t l = 0; l <= fs.d(); ++l) {
                    double diff2 = 0.0;
                    for (std::size_t i = 0; i < m; ++i) {
                        const double dv = table[q][l * m + i] - table[p][l * m + i];
                        diff2 += dv * dv;
                    }
                    auto& slot = cert.coefficients[l].*member;
                    slot = std::max(slot, std::sqrt(diff2) / gap);
                }
            }
    };

    for (const auto& x : xs) {
        for (double th : s_fixed) {
            std::vector<std::vector<double>> table;
            for (double ta : t_probe) {
                sample(th, ta, x);
                table.push_back(values(th, ta, x));
            }
            quotient_update(table, t_probe, cert.gamma, &CoefficientCertificate::t_holder);
        }
        for (double ta : t_fixed) {
            std::vector<std::vector<double>> table;
            for (double th : s_probe) {
                sample(th, ta, x);
                table.push_back(values(th, ta, x));
            }
            quotient_update(table, s_probe, cert.beta, &CoefficientCertificate::s_holder);
            quotient_update(table, s_probe, 1.0, &CoefficientCertificate::s_lipschitz);
        }
    }
    const double slack = 1.0 + 1e-9;
    for (auto& c : cert.coefficients) {
        c.t_holder_ok = c.t_holder <= b.K_gamma * slack;
        c.s_holder_ok = c.s_holder <= b.K_beta * slack;
        c.jacobian_ok = c.sup_jacobian <= b.K * slack;
    }
    return cert;
}

}  // namespace sheetlab
