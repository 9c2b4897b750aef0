#pragma once
//
// Truncated multivariate Taylor jets: forward-mode differentiation of any
// order in m spatial variables. Coefficients are Taylor coefficients
// f_alpha = d^alpha f / alpha!, stored in graded order so that the jet of a
// lower order is a prefix of the jet of a higher order.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

namespace sheetlab {

class JetSpace {
public:
    struct MulTerm {
        std::uint32_t a, b, out;
    };
    struct DerivTerm {
        std::uint32_t src, out;
        double factor;
    };

    JetSpace(std::size_t m, int order) : m_(m), order_(order) {
        for (int deg = 0; deg <= order; ++deg) {
            std::vector<int> alpha(m, 0);
            enumerate(alpha, 0, deg);
            size_by_order_.push_back(exps_.size());
        }
        for (std::size_t k = 0; k < exps_.size(); ++k) index_[exps_[k]] = k;

        for (int deg = 0; deg <= order; ++deg) {
            for (std::size_t a = 0; a < exps_.size(); ++a) {
                const int da = degree_[a];
                if (da > deg) continue;
                for (std::size_t b = 0; b < exps_.size(); ++b) {
                    if (degree_[b] != deg - da) continue;
                    std::vector<int> sum(m);
                    for (std::size_t v = 0; v < m; ++v) sum[v] = exps_[a][v] + exps_[b][v];
                    mul_.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b),
                                    static_cast<std::uint32_t>(index_.at(sum))});
                }
            }
            mul_end_.push_back(mul_.size());
        }

        deriv_.resize(m);
        deriv_end_.resize(m);
        for (std::size_t v = 0; v < m; ++v) {
            for (int deg = 0; deg < order; ++deg) {
                for (std::size_t t = 0; t < exps_.size(); ++t) {
                    if (degree_[t] != deg) continue;
                    std::vector<int> src = exps_[t];
                    src[v] += 1;
                    deriv_[v].push_back({static_cast<std::uint32_t>(index_.at(src)),
                                         static_cast<std::uint32_t>(t),
                                         static_cast<double>(src[v])});
                }
                deriv_end_[v].push_back(deriv_[v].size());
            }
        }
    }

    [[nodiscard]] std::size_t dimension() const { return m_; }
    [[nodiscard]] int order() const { return order_; }
    [[nodiscard]] std::size_t size(int order) const { return size_by_order_[static_cast<std::size_t>(order)]; }
    [[nodiscard]] std::size_t index_of(const std::vector<int>& alpha) const { return index_.at(alpha); }
    [[nodiscard]] const std::vector<int>& exponent(std::size_t k) const { return exps_[k]; }

    // Terms contributing to a product truncated at `order`.
    [[nodiscard]] std::span<const MulTerm> mul_terms(int order) const {
        return {mul_.data(), mul_end_[static_cast<std::size_t>(order)]};
    }
    // Terms of d/dx_v producing a jet of `order` (input needs order + 1).
    [[nodiscard]] std::span<const DerivTerm> deriv_terms(std::size_t v, int order) const {
        if (order < 0) return {};
        return {deriv_[v].data(), deriv_end_[v][static_cast<std::size_t>(order)]};
    }

private:
    void enumerate(std::vector<int>& alpha, std::size_t var, int remaining) {
        if (var + 1 == alpha.size() || alpha.empty()) {
            if (!alpha.empty()) alpha[var] = remaining;
            if (alpha.empty() && remaining != 0) return;
            exps_.push_back(alpha);
            int deg = 0;
            for (int e : alpha) deg += e;
            degree_.push_back(deg);
            return;
        }
        for (int e = remaining; e >= 0; --e) {
            alpha[var] = e;
            enumerate(alpha, var + 1, remaining - e);
        }
        alpha[var] = 0;
    }

    std::size_t m_;
    int order_;
    std::vector<std::vector<int>> exps_;
    std::vector<int> degree_;
    std::vector<std::size_t> size_by_order_;
    std::map<std::vector<int>, std::size_t> index_;
    std::vector<MulTerm> mul_;
    std::vector<std::size_t> mul_end_;
    std::vector<std::vector<DerivTerm>> deriv_;
    std::vector<std::vector<std::size_t>> deriv_end_;
};

// Process-wide cache; spaces are immutable once built.
inline const JetSpace& jet_space(std::size_t m, int order) {
    static std::mutex mutex;
    static std::map<std::pair<std::size_t, int>, std::unique_ptr<JetSpace>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{m, order}];
    if (!slot) slot = std::make_unique<JetSpace>(m, order);
    return *slot;
}

}  // namespace sheetlab
