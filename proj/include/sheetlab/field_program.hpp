#pragma once
//
// Compiles a batch of vector fields into a flat evaluation tape over jets.
// Each node is evaluated once per point at the smallest jet order its users
// need; nodes without spatial dependence are carried as plain scalars.

#include "sheetlab/error.hpp"
#include "sheetlab/expr.hpp"
#include "sheetlab/jet.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <unordered_map>
#include <vector>

namespace sheetlab {

class FieldProgram {
public:
    FieldProgram() = default;

    // `fields[f]` holds the m components of field f; `order` is the highest
    // spatial derivative order that will be read back.
    FieldProgram(const std::vector<std::vector<Expr>>& fields, std::size_t m, int order)
        : m_(m), nfields_(fields.size()), order_(order) {
        if (m == 0) throw DimensionError("field dimension must be positive");
        std::unordered_map<const ExprNode*, int> seen;
        for (const auto& f : fields) {
            if (f.size() != m) throw DimensionError("field has " + std::to_string(f.size()) +
                                                    " components, expected " + std::to_string(m));
            for (const auto& c : f) outputs_.push_back(visit(c.ptr().get(), seen));
        }
        for (int s : outputs_) slots_[static_cast<std::size_t>(s)].order = order;
        int max_order = std::max(order, 0);
        for (std::size_t k = slots_.size(); k-- > 0;) {
            Slot& s = slots_[k];
            const int need = s.order + (s.op == Op::partial ? 1 : 0);
            for (int child : {s.a, s.b}) {
                if (child < 0) continue;
                Slot& c = slots_[static_cast<std::size_t>(child)];
                c.order = std::max(c.order, need);
                max_order = std::max(max_order, c.order);
            }
        }
        space_ = &jet_space(m, max_order);
        std::size_t offset = 0;
        max_size_ = 1;
        for (Slot& s : slots_) {
            if (s.xconst) s.order = 0;
            s.offset = offset;
            s.size = space_->size(std::max(s.order, 0));
            offset += s.size;
            max_size_ = std::max(max_size_, s.size);
        }
        scratch_offset_ = offset;
        buffer_size_ = offset + 2 * max_size_;
        hess_index_.assign(m * m, 0);
        if (space_->order() >= 2) {
            for (std::size_t j = 0; j < m; ++j)
                for (std::size_t k = 0; k < m; ++k) {
                    std::vector<int> alpha(m, 0);
                    alpha[j] += 1;
                    alpha[k] += 1;
                    hess_index_[j * m + k] = space_->index_of(alpha);
                }
        }
    }

    [[nodiscard]] std::size_t dimension() const { return m_; }
    [[nodiscard]] std::size_t field_count() const { return nfields_; }
    [[nodiscard]] int order() const { return order_; }
    [[nodiscard]] std::size_t buffer_size() const { return buffer_size_; }
    [[nodiscard]] std::vector<double> make_buffer() const { return std::vector<double>(buffer_size_, 0.0); }

    void evaluate(double th, double ta, std::span<const double> x, std::span<double> buf) const {
        if (x.size() != m_)
            throw DimensionError("point has " + std::to_string(x.size()) + " coordinates, expected " +
                                 std::to_string(m_));
        for (const Slot& s : slots_) run(s, th, ta, x, buf);
    }

    [[nodiscard]] double value(std::span<const double> buf, std::size_t f, std::size_t i) const {
        return buf[slot(f, i).offset];
    }

    // d/dx_k of component i of field f (needs order >= 1).
    [[nodiscard]] double derivative(std::span<const double> buf, std::size_t f, std::size_t i,
                                    std::size_t k) const {
        const Slot& s = slot(f, i);
        if (s.xconst || s.order < 1) return 0.0;
        return buf[s.offset + 1 + k];
    }

    // d^2/dx_j dx_k of component i of field f (needs order >= 2).
    [[nodiscard]] double second_derivative(std::span<const double> buf, std::size_t f, std::size_t i,
                                           std::size_t j, std::size_t k) const {
        const Slot& s = slot(f, i);
        if (s.xconst || s.order < 2) return 0.0;
        const double c = buf[s.offset + hess_index_[j * m_ + k]];
        return j == k ? 2.0 * c : c;
    }

    // Field f has no spatial dependence in any component.
    [[nodiscard]] bool spatially_constant(std::size_t f) const {
        for (std::size_t i = 0; i < m_; ++i)
            if (!slot(f, i).xconst) return false;
        return true;
    }

private:
    struct Slot {
        Op op = Op::constant;
        double value = 0.0;
        int index = 0;
        int a = -1;
        int b = -1;
        int order = -1;
        bool xconst = true;
        std::size_t offset = 0;
        std::size_t size = 1;
    };

    int visit(const ExprNode* n, std::unordered_map<const ExprNode*, int>& seen) {
        if (auto it = seen.find(n); it != seen.end()) return it->second;
        Slot s;
        s.op = n->op;
        s.value = n->value;
        s.index = n->index;
        s.xconst = n->deps == 0;
        if (n->a) s.a = visit(n->a.get(), seen);
        if (n->b) s.b = visit(n->b.get(), seen);
        if (s.op == Op::coord && static_cast<std::size_t>(s.index) >= m_)
            throw DimensionError("expression uses x" + std::to_string(s.index + 1) +
                                 " in dimension " + std::to_string(m_));
        if (s.op == Op::partial && static_cast<std::size_t>(s.index) >= m_)
            throw DimensionError("derivative in x" + std::to_string(s.index + 1) + " in dimension " +
                                 std::to_string(m_));
        slots_.push_back(s);
        const int id = static_cast<int>(slots_.size() - 1);
        seen.emplace(n, id);
        return id;
    }

    [[nodiscard]] const Slot& slot(std::size_t f, std::size_t i) const {
        return slots_[static_cast<std::size_t>(outputs_[f * m_ + i])];
    }

    static double coeff(const Slot& s, std::span<const double> buf, std::size_t t) {
        return t < s.size ? buf[s.offset + t] : 0.0;
    }

    void mul_into(double* out, const double* a, const double* b, int order) const {
        const std::size_t n = space_->size(order);
        std::fill(out, out + n, 0.0);
        for (const auto& term : space_->mul_terms(order)) out[term.out] += a[term.a] * b[term.b];
    }

    // out = f(u) where derivs[n] = f^(n)(u_0).
    void compose(double* out, const double* u, const double* derivs, int order, double* h, double* p) const {
        const std::size_t n = space_->size(order);
        std::copy(u, u + n, h);
        h[0] = 0.0;
        std::fill(out, out + n, 0.0);
        out[0] = derivs[0];
        if (order == 0) return;
        std::copy(h, h + n, p);
        double factorial = 1.0;
        std::vector<double> next;
        for (int k = 1; k <= order; ++k) {
            factorial *= k;
            const double c = derivs[k] / factorial;
            if (c != 0.0)
                for (std::size_t t = 0; t < n; ++t) out[t] += c * p[t];
            if (k < order) {
                next.assign(n, 0.0);
                mul_into(next.data(), p, h, order);
                std::copy(next.begin(), next.end(), p);
            }
        }
    }

    static void unary_derivs(Op op, double u, double p, int order, double* d) {
        switch (op) {
            case Op::sin:
            case Op::cos: {
                const double s = std::sin(u), c = std::cos(u);
                const double cyc_sin[4] = {s, c, -s, -c};
                const double cyc_cos[4] = {c, -s, -c, s};
                for (int k = 0; k <= order; ++k) d[k] = op == Op::sin ? cyc_sin[k % 4] : cyc_cos[k % 4];
                break;
            }
            case Op::exp: {
                const double e = std::exp(u);
                for (int k = 0; k <= order; ++k) d[k] = e;
                break;
            }
            case Op::sqrt:
            case Op::pow: {
                const double q = op == Op::sqrt ? 0.5 : p;
                double falling = 1.0;
                for (int k = 0; k <= order; ++k) {
                    d[k] = falling == 0.0 ? 0.0 : falling * std::pow(u, q - k);
                    falling *= (q - k);
                }
                break;
            }
            default:
                break;
        }
    }

    void run(const Slot& s, double th, double ta, std::span<const double> x, std::span<double> buf) const {
        double* out = buf.data() + s.offset;
        const Slot* A = s.a >= 0 ? &slots_[static_cast<std::size_t>(s.a)] : nullptr;
        const Slot* B = s.b >= 0 ? &slots_[static_cast<std::size_t>(s.b)] : nullptr;
        const std::size_t n = s.size;
        switch (s.op) {
            case Op::constant:
                out[0] = s.value;
                return;
            case Op::theta:
                out[0] = th;
                return;
            case Op::tau:
                out[0] = ta;
                return;
            case Op::coord:
                std::fill(out, out + n, 0.0);
                out[0] = x[static_cast<std::size_t>(s.index)];
                if (s.order >= 1) out[1 + s.index] = 1.0;
                return;
            case Op::add:
                for (std::size_t t = 0; t < n; ++t) out[t] = coeff(*A, buf, t) + coeff(*B, buf, t);
                return;
            case Op::sub:
                for (std::size_t t = 0; t < n; ++t) out[t] = coeff(*A, buf, t) - coeff(*B, buf, t);
                return;
            case Op::neg:
                for (std::size_t t = 0; t < n; ++t) out[t] = -coeff(*A, buf, t);
                return;
            case Op::mul: {
                const double* a = buf.data() + A->offset;
                const double* b = buf.data() + B->offset;
                if (A->xconst) {
                    for (std::size_t t = 0; t < n; ++t) out[t] = a[0] * coeff(*B, buf, t);
                } else if (B->xconst) {
                    for (std::size_t t = 0; t < n; ++t) out[t] = coeff(*A, buf, t) * b[0];
                } else {
                    mul_into(out, a, b, s.order);
                }
                return;
            }
            case Op::sin:
            case Op::cos:
            case Op::exp:
            case Op::sqrt:
            case Op::pow: {
                const double* u = buf.data() + A->offset;
                double derivs[64] = {};
                const int order = A->xconst ? 0 : s.order;
                if (order >= 63) throw DimensionError("jet order too high");
                unary_derivs(s.op, u[0], s.value, order, derivs);
                if (order == 0) {
                    out[0] = derivs[0];
                    for (std::size_t t = 1; t < n; ++t) out[t] = 0.0;
                } else {
                    double* h = buf.data() + scratch_offset_;
                    compose(out, u, derivs, s.order, h, h + max_size_);
                }
                return;
            }
            case Op::partial: {
                std::fill(out, out + n, 0.0);
                if (A->xconst) return;
                const double* a = buf.data() + A->offset;
                for (const auto& term : space_->deriv_terms(static_cast<std::size_t>(s.index), s.order))
                    out[term.out] = term.factor * a[term.src];
                return;
            }
        }
    }

    std::size_t m_ = 0;
    std::size_t nfields_ = 0;
    int order_ = 0;
    const JetSpace* space_ = nullptr;
    std::vector<Slot> slots_;
    std::vector<int> outputs_;
    std::vector<std::size_t> hess_index_;
    std::size_t buffer_size_ = 0;
    std::size_t scratch_offset_ = 0;
    std::size_t max_size_ = 1;
};

}  // namespace sheetlab
