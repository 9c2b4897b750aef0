#pragma once
//
// Named coefficient catalogs covering the five regularity regimes.

#include "sheetlab/error.hpp"
#include "sheetlab/fieldkit.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace sheetlab::presets {

inline FieldExpr zero_field(std::size_t m) { return constant_field(std::vector<double>(m, 0.0)); }

// A_l = e_l for l = 1..m, no drift.
inline FieldSet additive(std::size_t m = 2, std::string name = "additive") {
    std::vector<FieldExpr> f{zero_field(m)};
    for (std::size_t l = 0; l < m; ++l) f.push_back(unit_field(m, l));
    DeclaredBounds b;
    b.K = 1.0;
    b.K_gamma = 0.0;
    return FieldSet(std::move(name), m, std::move(f), Regime::elliptic, b);
}

inline FieldSet zero(std::size_t m = 2, std::size_t d = 2) {
    std::vector<FieldExpr> f(d + 1, zero_field(m));
    DeclaredBounds b;
    b.K = 0.0;
    b.K_gamma = 0.0;
    return FieldSet("zero", m, std::move(f), Regime::smooth, b);
}

// Noiseless linear drift: X = 1 + int int X, solved by I_0(2 sqrt(st)).
inline FieldSet bessel() {
    FieldExpr drift{{coord(0)}, "A0"};
    DeclaredBounds b;
    b.K = 1.0;
    b.K_gamma = 0.0;
    return FieldSet("bessel", 1, {drift, zero_field(1)}, Regime::smooth, b);
}

// A_1 = (1, x1): rank 1 at the origin, spanning after one covariant derivative.
inline FieldSet grushin() {
    FieldExpr a1{{constant(1.0), coord(0)}, "A1"};
    DeclaredBounds b;
    b.K = 1.0;
    b.K_gamma = 0.0;
    return FieldSet("grushin", 2, {zero_field(2), a1}, Regime::smooth, b);
}

// A_1 = e_1 in R^2: every bracket vanishes.
inline FieldSet degenerate() {
    DeclaredBounds b;
    b.K = 0.0;
    b.K_gamma = 0.0;
    return FieldSet("degenerate", 2, {zero_field(2), unit_field(2, 0)}, Regime::smooth, b);
}

// Nonlinear, bounded-derivative coefficients with smooth (theta, tau) dependence.
inline FieldSet smooth() {
    const Expr x1 = coord(0), x2 = coord(1), th = theta(), ta = tau();
    FieldExpr a0{{-0.5 * x1 + 0.2 * sin(x2), -0.3 * x2 + 0.1 * cos(x1)}, "A0"};
    FieldExpr a1{{(1.0 + 0.1 * th) * (1.0 + 0.3 * sin(x2)), 0.4 * cos(x1) * (1.0 + 0.2 * ta)}, "A1"};
    FieldExpr a2{{0.2 * sin(x1 + x2), 0.8 + 0.2 * cos(x2) * exp(-0.5 * th)}, "A2"};
    DeclaredBounds b;
    b.K = 1.0;
    b.K_gamma = 1.0;
    return FieldSet("smooth", 2, {a0, a1, a2}, Regime::smooth, b);
}

// A_l = f(theta) e_l with f = 2 + sin theta, so 1 <= |f| <= 3.
inline FieldSet factorable() {
    const Expr f = 2.0 + sin(theta());
    std::vector<FieldExpr> fields{zero_field(2)};
    for (std::size_t l = 0; l < 2; ++l) {
        auto e = scale(f, unit_field(2, l));
        e.label = "A" + std::to_string(l + 1);
        fields.push_back(e);
    }
    DeclaredBounds b;
    b.K = 0.0;
    b.K_gamma = 0.0;
    b.beta = 1.0;
    b.K_beta = 1.0;
    return FieldSet("factorable", 2, std::move(fields), Regime::factorable, b);
}

// A_l = (1 + theta^{3/4} / 2) e_l: 3/4-Holder in s with constant 1/2.
inline FieldSet regular_holder() {
    const Expr f = 1.0 + 0.5 * pow(theta(), 0.75);
    std::vector<FieldExpr> fields{zero_field(2)};
    for (std::size_t l = 0; l < 2; ++l) {
        auto e = scale(f, unit_field(2, l));
        e.label = "A" + std::to_string(l + 1);
        fields.push_back(e);
    }
    DeclaredBounds b;
    b.K = 0.0;
    b.K_gamma = 0.0;
    b.beta = 0.75;
    b.K_beta = 0.5;
    return FieldSet("regular-holder", 2, std::move(fields), Regime::regular_holder, b);
}

// A_1 = 1 + sqrt(theta): exactly 1/2-Holder in s with constant 1.
inline FieldSet irregular_holder() {
    FieldExpr a1{{1.0 + sqrt(theta())}, "A1"};
    DeclaredBounds b;
    b.K = 0.0;
    b.K_gamma = 0.0;
    b.beta = 0.5;
    b.K_beta = 1.0;
    return FieldSet("irregular-holder", 1, {zero_field(1), a1}, Regime::irregular_holder, b);
}

inline std::vector<std::string> names() {
    return {"additive", "elliptic", "zero", "bessel", "grushin", "degenerate",
            "smooth", "factorable", "regular-holder", "irregular-holder"};
}

inline FieldSet by_name(std::string_view name, std::size_t m = 2) {
    if (name == "additive") return additive(m);
    if (name == "elliptic") return additive(m, "elliptic");
    if (name == "zero") return zero(m, m);
    if (name == "bessel") return bessel();
    if (name == "grushin") return grushin();
    if (name == "degenerate") return degenerate();
    if (name == "smooth") return smooth();
    if (name == "factorable") return factorable();
    if (name == "regular-holder") return regular_holder();
    if (name == "irregular-holder") return irregular_holder();
    throw ConfigError("unknown field preset '" + std::string(name) + "'");
}

}  // namespace sheetlab::presets
