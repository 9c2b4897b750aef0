#pragma once
//
// Scalar expressions over (theta, tau, x_1..x_m), shared as immutable DAGs.
// Nodes carry a structural hash and a bitmask of the spatial coordinates they
// depend on, which lets construction fold away derivatives that must vanish.
// Time arguments are opaque: nothing here ever differentiates in theta or tau.

#include "sheetlab/error.hpp"

#include <cctype>
#include <cstdlib>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace sheetlab {

enum class Op : std::uint8_t {
    constant,
    coord,
    theta,
    tau,
    add,
    sub,
    mul,
    neg,
    sin,
    cos,
    exp,
    sqrt,
    pow,
    partial,
};

struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    Op op = Op::constant;
    double value = 0.0;  // constant value, or the exponent of pow
    int index = 0;       // coordinate index for coord / partial
    NodePtr a;
    NodePtr b;
    std::uint64_t hash = 0;
    std::uint32_t deps = 0;  // bit k set: may depend on x_k
    bool time_dep = false;
};

namespace detail {

inline std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    return h;
}

inline std::uint64_t double_bits(double v) {
    if (v == 0.0) v = 0.0;  // -0 and +0 hash alike
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    return bits;
}

inline NodePtr make_node(Op op, double value, int index, NodePtr a, NodePtr b) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->value = value;
    n->index = index;
    std::uint64_t h = mix(static_cast<std::uint64_t>(op) + 1, double_bits(value));
    h = mix(h, static_cast<std::uint64_t>(index));
    if (a) {
        h = mix(h, a->hash);
        n->deps |= a->deps;
        n->time_dep |= a->time_dep;
    }
    if (b) {
        h = mix(h, b->hash);
        n->deps |= b->deps;
        n->time_dep |= b->time_dep;
    }
    n->a = std::move(a);
    n->b = std::move(b);
    n->hash = h;
    return n;
}

}  // namespace detail

class Expr {
public:
    Expr() : Expr(0.0) {}
    Expr(double c) : node_(detail::make_node(Op::constant, c, 0, nullptr, nullptr)) {}  // NOLINT
    explicit Expr(NodePtr node) : node_(std::move(node)) {}

    [[nodiscard]] const ExprNode& node() const { return *node_; }
    [[nodiscard]] const NodePtr& ptr() const { return node_; }
    [[nodiscard]] Op op() const { return node_->op; }
    [[nodiscard]] bool is_constant() const { return node_->op == Op::constant; }
    [[nodiscard]] bool is_constant(double c) const { return is_constant() && node_->value == c; }
    [[nodiscard]] double constant_value() const { return node_->value; }
    [[nodiscard]] std::uint32_t deps() const { return node_->deps; }
    [[nodiscard]] bool depends_on_x() const { return node_->deps != 0; }
    [[nodiscard]] bool depends_on_time() const { return node_->time_dep; }

private:
    NodePtr node_;
};

// Structural equality: same operator tree with the same constants.
inline bool structurally_equal(const ExprNode* a, const ExprNode* b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->hash != b->hash || a->op != b->op || a->index != b->index) return false;
    if (detail::double_bits(a->value) != detail::double_bits(b->value)) return false;
    return structurally_equal(a->a.get(), b->a.get()) && structurally_equal(a->b.get(), b->b.get());
}

inline bool structurally_equal(const Expr& a, const Expr& b) {
    return structurally_equal(a.ptr().get(), b.ptr().get());
}

inline Expr constant(double c) { return Expr(c); }

// Spatial coordinate x_k, k counted from 0.
inline Expr coord(int k) {
    if (k < 0 || k >= 32) throw DimensionError("coordinate index out of range (0..31)");
    auto n = detail::make_node(Op::coord, 0.0, k, nullptr, nullptr);
    std::const_pointer_cast<ExprNode>(n)->deps = 1u << k;
    return Expr(n);
}

inline Expr theta() {
    auto n = detail::make_node(Op::theta, 0.0, 0, nullptr, nullptr);
    std::const_pointer_cast<ExprNode>(n)->time_dep = true;
    return Expr(n);
}

inline Expr tau() {
    auto n = detail::make_node(Op::tau, 0.0, 0, nullptr, nullptr);
    std::const_pointer_cast<ExprNode>(n)->time_dep = true;
    return Expr(n);
}

inline Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return constant(a.constant_value() + b.constant_value());
    if (a.is_constant(0.0)) return b;
    if (b.is_constant(0.0)) return a;
    return Expr(detail::make_node(Op::add, 0.0, 0, a.ptr(), b.ptr()));
}

inline Expr operator-(const Expr& a) {
    if (a.is_constant()) return constant(-a.constant_value());
    if (a.op() == Op::neg) return Expr(a.node().a);
    return Expr(detail::make_node(Op::neg, 0.0, 0, a.ptr(), nullptr));
}

inline Expr operator-(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return constant(a.constant_value() - b.constant_value());
    if (b.is_constant(0.0)) return a;
    if (a.is_constant(0.0)) return -b;
    return Expr(detail::make_node(Op::sub, 0.0, 0, a.ptr(), b.ptr()));
}

inline Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) return constant(a.constant_value() * b.constant_value());
    if (a.is_constant(0.0) || b.is_constant(0.0)) return constant(0.0);
    if (a.is_constant(1.0)) return b;
    if (b.is_constant(1.0)) return a;
    if (a.is_constant(-1.0)) return -b;
    if (b.is_constant(-1.0)) return -a;
    return Expr(detail::make_node(Op::mul, 0.0, 0, a.ptr(), b.ptr()));
}

inline Expr& operator+=(Expr& a, const Expr& b) { return a = a + b; }

namespace detail {

inline Expr unary(Op op, const Expr& a, double (*f)(double)) {
    if (a.is_constant()) return constant(f(a.constant_value()));
    return Expr(make_node(op, 0.0, 0, a.ptr(), nullptr));
}

}  // namespace detail

inline Expr sin(const Expr& a) { return detail::unary(Op::sin, a, [](double v) { return std::sin(v); }); }
inline Expr cos(const Expr& a) { return detail::unary(Op::cos, a, [](double v) { return std::cos(v); }); }
inline Expr exp(const Expr& a) { return detail::unary(Op::exp, a, [](double v) { return std::exp(v); }); }
inline Expr sqrt(const Expr& a) { return detail::unary(Op::sqrt, a, [](double v) { return std::sqrt(v); }); }

inline Expr pow(const Expr& a, double p) {
    if (p == 0.0) return constant(1.0);
    if (p == 1.0) return a;
    if (a.is_constant()) return constant(std::pow(a.constant_value(), p));
    return Expr(detail::make_node(Op::pow, p, 0, a.ptr(), nullptr));
}

// d/dx_k of an expression. Folds the cases that are decidable structurally
// (no dependence, a coordinate, linear combinations, constant factors) and
// otherwise leaves a partial node for forward-mode evaluation.
inline Expr partial(const Expr& a, int k) {
    if (k < 0 || k >= 32) throw DimensionError("coordinate index out of range (0..31)");
    if ((a.deps() & (1u << k)) == 0) return constant(0.0);
    const ExprNode& n = a.node();
    switch (n.op) {
        case Op::coord:
            return constant(n.index == k ? 1.0 : 0.0);
        case Op::add:
            return partial(Expr(n.a), k) + partial(Expr(n.b), k);
        case Op::sub:
            return partial(Expr(n.a), k) - partial(Expr(n.b), k);
        case Op::neg:
            return -partial(Expr(n.a), k);
        case Op::mul:
            if (n.a->deps == 0) return Expr(n.a) * partial(Expr(n.b), k);
            if (n.b->deps == 0) return partial(Expr(n.a), k) * Expr(n.b);
            break;
        default:
            break;
    }
    return Expr(detail::make_node(Op::partial, 0.0, k, a.ptr(), nullptr));
}

// Prefix (s-expression) rendering; round-trips through parse_expr.
inline void print_expr(std::ostream& os, const ExprNode& n) {
    auto bin = [&](const char* name) {
        os << '(' << name << ' ';
        print_expr(os, *n.a);
        os << ' ';
        print_expr(os, *n.b);
        os << ')';
    };
    auto un = [&](const char* name) {
        os << '(' << name << ' ';
        print_expr(os, *n.a);
        os << ')';
    };
    switch (n.op) {
        case Op::constant: {
            std::ostringstream s;
            s.precision(17);
            s << n.value;
            os << s.str();
            break;
        }
        case Op::coord: os << 'x' << (n.index + 1); break;
        case Op::theta: os << "theta"; break;
        case Op::tau: os << "tau"; break;
        case Op::add: bin("+"); break;
        case Op::sub: bin("-"); break;
        case Op::mul: bin("*"); break;
        case Op::neg: un("-"); break;
        case Op::sin: un("sin"); break;
        case Op::cos: un("cos"); break;
        case Op::exp: un("exp"); break;
        case Op::sqrt: un("sqrt"); break;
        case Op::pow: {
            std::ostringstream s;
            s.precision(17);
            s << n.value;
            os << "(pow ";
            print_expr(os, *n.a);
            os << ' ' << s.str() << ')';
            break;
        }
        case Op::partial:
            os << "(d x" << (n.index + 1) << ' ';
            print_expr(os, *n.a);
            os << ')';
            break;
    }
}

inline std::string to_string(const Expr& e) {
    std::ostringstream os;
    print_expr(os, e.node());
    return os.str();
}

// Parses the prefix syntax:
//   number | pi | theta | tau | x<k> (1-based)
//   (+ e e ...) (* e e ...) (- e) (- e e) (sin e) (cos e) (exp e) (sqrt e)
//   (pow e <number>) (d x<k> e)
// `dimension` bounds the admissible coordinates.
class ExprParser {
public:
    ExprParser(std::string_view text, std::size_t dimension) : text_(text), dim_(dimension) {}

    Expr parse() {
        Expr e = parse_one();
        skip_space();
        if (pos_ != text_.size()) fail("trailing input");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& why) const {
        throw ConfigError("expression '" + std::string(text_) + "': " + why + " at offset " +
                          std::to_string(pos_));
    }

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    std::string atom() {
        skip_space();
        const std::size_t start = pos_;
        while (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')' &&
               !std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
        if (start == pos_) fail("expected a token");
        return std::string(text_.substr(start, pos_ - start));
    }

    int coordinate(const std::string& tok) const {
        if (tok.size() < 2 || tok[0] != 'x') return -1;
        int k = 0;
        for (std::size_t c = 1; c < tok.size(); ++c) {
            if (!std::isdigit(static_cast<unsigned char>(tok[c]))) return -1;
            k = k * 10 + (tok[c] - '0');
            if (k > 64) return -1;
        }
        if (k < 1 || static_cast<std::size_t>(k) > dim_)
            throw ConfigError("coordinate " + tok + " outside dimension " + std::to_string(dim_));
        return k - 1;
    }

    static bool number(const std::string& tok, double& out) {
        char* end = nullptr;
        out = std::strtod(tok.c_str(), &end);
        return end != tok.c_str() && *end == '\0';
    }

    Expr parse_atom(const std::string& tok) {
        double v;
        if (number(tok, v)) return constant(v);
        if (tok == "pi") return constant(std::numbers::pi);
        if (tok == "theta") return theta();
        if (tok == "tau") return tau();
        if (int k = coordinate(tok); k >= 0) return coord(k);
        fail("unknown symbol '" + tok + "'");
    }

    Expr parse_one() {
        skip_space();
        if (pos_ >= text_.size()) fail("unexpected end");
        if (text_[pos_] == ')') fail("unexpected ')'");
        if (text_[pos_] != '(') return parse_atom(atom());
        ++pos_;
        const std::string head = atom();
        std::vector<Expr> args;
        std::string raw_last;
        if (head == "d") {
            const std::string var = atom();
            const int k = coordinate(var);
            if (k < 0) fail("(d ...) expects a coordinate");
            Expr body = parse_one();
            close();
            return partial(body, k);
        }
        if (head == "pow") {
            Expr base = parse_one();
            double p;
            if (!number(atom(), p)) fail("pow exponent must be a number");
            close();
            return pow(base, p);
        }
        for (;;) {
            skip_space();
            if (pos_ < text_.size() && text_[pos_] == ')') break;
            args.push_back(parse_one());
        }
        close();
        auto need = [&](std::size_t lo, std::size_t hi) {
            if (args.size() < lo || args.size() > hi) fail("wrong arity for '" + head + "'");
        };
        if (head == "+") {
            need(1, 64);
            Expr r = args[0];
            for (std::size_t k = 1; k < args.size(); ++k) r = r + args[k];
            return r;
        }
        if (head == "*") {
            need(1, 64);
            Expr r = args[0];
            for (std::size_t k = 1; k < args.size(); ++k) r = r * args[k];
            return r;
        }
        if (head == "-") {
            need(1, 2);
            return args.size() == 1 ? -args[0] : args[0] - args[1];
        }
        need(1, 1);
        if (head == "sin") return sin(args[0]);
        if (head == "cos") return cos(args[0]);
        if (head == "exp") return exp(args[0]);
        if (head == "sqrt") return sqrt(args[0]);
        fail("unknown operator '" + head + "'");
    }

    void close() {
        skip_space();
        if (pos_ >= text_.size() || text_[pos_] != ')') fail("expected ')'");
        ++pos_;
    }

    std::string_view text_;
    std::size_t dim_;
    std::size_t pos_ = 0;
};

inline Expr parse_expr(std::string_view text, std::size_t dimension) {
    return ExprParser(text, dimension).parse();
}

}  // namespace sheetlab
