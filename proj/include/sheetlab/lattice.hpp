#pragma once
//
// Rectangular time grids on [0,S]x[0,T] and Brownian-sheet cell increments.
//
// Increment (l, i, j) belongs to the cell whose lower-left node is (i, j); it
// is N(0, ds*dt) and is drawn from the Philox stream keyed on the seed with
// counter (trial, l, i, j). Noise components are indexed from 0 in code.

#include "sheetlab/error.hpp"
#include "sheetlab/philox.hpp"

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace sheetlab {

struct Node {
    std::size_t i = 0;
    std::size_t j = 0;

    friend bool operator==(const Node&, const Node&) = default;
};

class GridSpec {
public:
    GridSpec() = default;

    [[nodiscard]] double s_max() const { return s_max_; }
    [[nodiscard]] double t_max() const { return t_max_; }
    [[nodiscard]] std::size_t n_s() const { return n_s_; }
    [[nodiscard]] std::size_t n_t() const { return n_t_; }
    [[nodiscard]] double ds() const { return s_max_ / static_cast<double>(n_s_); }
    [[nodiscard]] double dt() const { return t_max_ / static_cast<double>(n_t_); }
    [[nodiscard]] double cell_area() const { return ds() * dt(); }
    [[nodiscard]] std::size_t cell_count() const { return n_s_ * n_t_; }

    [[nodiscard]] double s_at(std::size_t i) const {
        return i == n_s_ ? s_max_ : static_cast<double>(i) * ds();
    }
    [[nodiscard]] double t_at(std::size_t j) const {
        return j == n_t_ ? t_max_ : static_cast<double>(j) * dt();
    }
    [[nodiscard]] bool contains(Node n) const { return n.i <= n_s_ && n.j <= n_t_; }

    // Nearest node to (s, t), clamped to the grid.
    [[nodiscard]] Node snap(double s, double t) const {
        auto nearest = [](double v, double step, std::size_t count) {
            const double k = std::round(v / step);
            if (!(k > 0.0)) return std::size_t{0};
            return std::min(count, static_cast<std::size_t>(k));
        };
        return {nearest(s, ds(), n_s_), nearest(t, dt(), n_t_)};
    }

    friend GridSpec make_grid(double s_max, double t_max, std::size_t n_s, std::size_t n_t);
    friend bool operator==(const GridSpec&, const GridSpec&) = default;

private:
    double s_max_ = 1.0;
    double t_max_ = 1.0;
    std::size_t n_s_ = 1;
    std::size_t n_t_ = 1;
};

inline GridSpec make_grid(double s_max, double t_max, std::size_t n_s, std::size_t n_t) {
    if (!(s_max > 0.0) || !(t_max > 0.0) || !std::isfinite(s_max) || !std::isfinite(t_max))
        throw ConfigError("grid extents must be positive and finite");
    if (n_s == 0 || n_t == 0) throw ConfigError("grid cell counts must be at least 1");
    GridSpec g;
    g.s_max_ = s_max;
    g.t_max_ = t_max;
    g.n_s_ = n_s;
    g.n_t_ = n_t;
    return g;
}

struct SheetSample {
    std::size_t d = 0;
    std::size_t n_s = 0;
    std::size_t n_t = 0;
    std::uint64_t seed = 0;
    std::uint32_t trial = 0;
    std::vector<double> increments;  // (l, i, j), l-major then i then j

    [[nodiscard]] std::size_t offset(std::size_t l, std::size_t i, std::size_t j) const {
        return (l * n_s + i) * n_t + j;
    }
    [[nodiscard]] double increment(std::size_t l, std::size_t i, std::size_t j) const {
        return increments[offset(l, i, j)];
    }
    [[nodiscard]] double& increment(std::size_t l, std::size_t i, std::size_t j) {
        return increments[offset(l, i, j)];
    }
};

inline double sheet_increment_draw(std::uint64_t seed, std::uint32_t trial, std::size_t l,
                                   std::size_t i, std::size_t j) {
    return philox_normal(seed, make_counter(Stream::sheet, trial, static_cast<std::uint32_t>(l),
                                            static_cast<std::uint32_t>(i),
                                            static_cast<std::uint32_t>(j)));
}

inline SheetSample sample_sheet(const GridSpec& grid, std::size_t d, std::uint64_t seed,
                                std::uint32_t trial = 0) {
    if (d == 0) throw ConfigError("sheet dimension d must be at least 1");
    if (d >= (1u << 24)) throw ConfigError("sheet dimension too large");
    SheetSample s;
    s.d = d;
    s.n_s = grid.n_s();
    s.n_t = grid.n_t();
    s.seed = seed;
    s.trial = trial;
    s.increments.resize(d * s.n_s * s.n_t);
    const double scale = std::sqrt(grid.cell_area());
    for (std::size_t l = 0; l < d; ++l)
        for (std::size_t i = 0; i < s.n_s; ++i)
            for (std::size_t j = 0; j < s.n_t; ++j)
                s.increment(l, i, j) = scale * sheet_increment_draw(seed, trial, l, i, j);
    return s;
}

// W(i ds, j dt): sum of increments over cells (i' < i, j' < j).
inline std::vector<double> sheet_value(const SheetSample& sample, const GridSpec& grid,
                                       std::size_t i, std::size_t j) {
    if (grid.n_s() != sample.n_s || grid.n_t() != sample.n_t)
        throw DimensionError("sheet sample does not match grid");
    if (i > sample.n_s || j > sample.n_t)
        throw IndexError("sheet node (" + std::to_string(i) + ", " + std::to_string(j) +
                         ") outside grid");
    std::vector<double> w(sample.d, 0.0);
    for (std::size_t l = 0; l < sample.d; ++l)
        for (std::size_t a = 0; a < i; ++a)
            for (std::size_t b = 0; b < j; ++b) w[l] += sample.increment(l, a, b);
    return w;
}

// Sums factor x factor blocks of a fine sheet, giving the same Brownian sheet
// on a grid with n_s/factor x n_t/factor cells.
inline SheetSample coarsen(const SheetSample& fine, std::size_t factor) {
    if (factor == 0 || fine.n_s % factor != 0 || fine.n_t % factor != 0)
        throw ConfigError("coarsening factor must divide both cell counts");
    SheetSample c;
    c.d = fine.d;
    c.n_s = fine.n_s / factor;
    c.n_t = fine.n_t / factor;
    c.seed = fine.seed;
    c.trial = fine.trial;
    c.increments.assign(c.d * c.n_s * c.n_t, 0.0);
    for (std::size_t l = 0; l < c.d; ++l)
        for (std::size_t i = 0; i < c.n_s; ++i)
            for (std::size_t j = 0; j < c.n_t; ++j) {
                double sum = 0.0;
                for (std::size_t a = 0; a < factor; ++a)
                    for (std::size_t b = 0; b < factor; ++b)
                        sum += fine.increment(l, i * factor + a, j * factor + b);
                c.increment(l, i, j) = sum;
            }
    return c;
}

// Binary dump: text line "SHEET1 d n_s n_t seed trial\n", then the increments
// as little-endian IEEE-754 doubles in (l, i, j) order.
inline void write_sheet(std::ostream& out, const SheetSample& s) {
    out << "SHEET1 " << s.d << ' ' << s.n_s << ' ' << s.n_t << ' ' << s.seed << ' ' << s.trial
        << '\n';
    for (double v : s.increments) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        unsigned char bytes[8];
        for (int k = 0; k < 8; ++k) bytes[k] = static_cast<unsigned char>(bits >> (8 * k));
        out.write(reinterpret_cast<const char*>(bytes), 8);
    }
}

inline SheetSample read_sheet(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty sheet dump");
    std::istringstream header(line);
    std::string magic;
    SheetSample s;
    header >> magic >> s.d >> s.n_s >> s.n_t >> s.seed;
    if (magic != "SHEET1" || header.fail()) throw ConfigError("bad sheet dump header");
    if (!(header >> s.trial)) s.trial = 0;
    s.increments.resize(s.d * s.n_s * s.n_t);
    for (double& v : s.increments) {
        unsigned char bytes[8];
        if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw ConfigError("truncated sheet dump");
        std::uint64_t bits = 0;
        for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes[k]) << (8 * k);
        std::memcpy(&v, &bits, sizeof v);
    }
    return s;
}

}  // namespace sheetlab
