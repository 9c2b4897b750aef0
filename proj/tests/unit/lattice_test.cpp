#include "sheetlab/lattice.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace sheetlab;

TEST(Grid, StepsAndEndpoints) {
    const GridSpec g = make_grid(0.5, 2.0, 4, 8);
    EXPECT_DOUBLE_EQ(g.ds(), 0.125);
    EXPECT_DOUBLE_EQ(g.dt(), 0.25);
    EXPECT_DOUBLE_EQ(g.cell_area(), 0.03125);
    EXPECT_EQ(g.cell_count(), 32u);
    EXPECT_EQ(g.s_at(4), 0.5);
    EXPECT_EQ(g.t_at(8), 2.0);
}

TEST(Grid, SnapClampsToNearestNode) {
    const GridSpec g = make_grid(1, 1, 10, 10);
    EXPECT_EQ(g.snap(0.5, 1.0), (Node{5, 10}));
    EXPECT_EQ(g.snap(-3, 7), (Node{0, 10}));
    EXPECT_EQ(g.snap(0.26, 0.04), (Node{3, 0}));
}

TEST(Grid, RejectsBadParameters) {
    EXPECT_THROW(make_grid(0, 1, 4, 4), ConfigError);
    EXPECT_THROW(make_grid(1, 1, 0, 4), ConfigError);
    EXPECT_THROW(make_grid(1, std::nan(""), 4, 4), ConfigError);
}

TEST(Sheet, IncrementsAreScaledPhiloxNormals) {
    const GridSpec g = make_grid(1, 2, 4, 4);
    const SheetSample s = sample_sheet(g, 2, 11, 3);
    const double scale = std::sqrt(0.25 * 0.5);
    EXPECT_EQ(s.increment(1, 2, 3), scale * sheet_increment_draw(11, 3, 1, 2, 3));
    EXPECT_EQ(s.increments.size(), 2u * 16u);
}

TEST(Sheet, ValueOnAxesVanishes) {
    const GridSpec g = make_grid(1, 1, 5, 5);
    const SheetSample s = sample_sheet(g, 2, 1);
    for (std::size_t k = 0; k <= 5; ++k) {
        EXPECT_EQ(sheet_value(s, g, 0, k), std::vector<double>(2, 0.0));
        EXPECT_EQ(sheet_value(s, g, k, 0), std::vector<double>(2, 0.0));
    }
}

// W(R) over a node rectangle equals the sum of its cell increments, exactly,
// on every grid in the matrix.
TEST(Sheet, RectangleIncrementIdentityIsExact) {
    for (std::size_t n_s : {1u, 3u, 8u}) {
        for (std::size_t n_t : {1u, 5u, 8u}) {
            const GridSpec g = make_grid(1.5, 0.5, n_s, n_t);
            const SheetSample s = sample_sheet(g, 2, 17);
            for (std::size_t i = 1; i <= n_s; ++i)
                for (std::size_t j = 1; j <= n_t; ++j) {
                    const auto w = sheet_value(s, g, i, j);
                    for (std::size_t l = 0; l < 2; ++l) {
                        double direct = 0.0;
                        for (std::size_t a = 0; a < i; ++a)
                            for (std::size_t b = 0; b < j; ++b) direct += s.increment(l, a, b);
                        EXPECT_EQ(w[l], direct);
                    }
                }
        }
    }
}

TEST(Sheet, CovarianceIsProductOfMinima) {
    // Cov(W(s,t), W(s',t')) = min(s,s') min(t,t'): check Var W(1,1) = 1 and
    // Cov(W(0.5,1), W(1,0.5)) = 0.25 over many trials.
    const GridSpec g = make_grid(1, 1, 4, 4);
    const int n = 20000;
    double v = 0, c = 0;
    for (int t = 0; t < n; ++t) {
        const SheetSample s = sample_sheet(g, 1, 5, static_cast<std::uint32_t>(t));
        const double a = sheet_value(s, g, 4, 4)[0];
        v += a * a;
        c += sheet_value(s, g, 2, 4)[0] * sheet_value(s, g, 4, 2)[0];
    }
    EXPECT_NEAR(v / n, 1.0, 4.0 * std::sqrt(2.0 / n));
    // Var(XY) = Var X Var Y + Cov^2 = 0.25 + 0.0625 for jointly Gaussian X, Y.
    EXPECT_NEAR(c / n, 0.25, 4.0 * std::sqrt(0.3125 / n));
}

TEST(Sheet, ErrorsOnBadIndexOrDimension) {
    const GridSpec g = make_grid(1, 1, 4, 4);
    const SheetSample s = sample_sheet(g, 1, 5);
    EXPECT_THROW(sheet_value(s, g, 5, 1), IndexError);
    EXPECT_THROW(sheet_value(s, make_grid(1, 1, 3, 4), 1, 1), DimensionError);
    EXPECT_THROW(sample_sheet(g, 0, 1), ConfigError);
}

TEST(Sheet, CoarseningPreservesRectangleValues) {
    const GridSpec fine = make_grid(1, 1, 8, 8);
    const GridSpec coarse = make_grid(1, 1, 2, 2);
    const SheetSample f = sample_sheet(fine, 2, 3);
    const SheetSample c = coarsen(f, 4);
    for (std::size_t l = 0; l < 2; ++l)
        EXPECT_NEAR(sheet_value(c, coarse, 2, 1)[l], sheet_value(f, fine, 8, 4)[l], 1e-14);
    EXPECT_THROW(coarsen(f, 3), ConfigError);
}

TEST(Sheet, DumpRoundTripsBitExactly) {
    const GridSpec g = make_grid(1, 1, 3, 5);
    const SheetSample s = sample_sheet(g, 2, 0xdeadbeefULL, 9);
    std::stringstream buf;
    write_sheet(buf, s);
    const SheetSample r = read_sheet(buf);
    EXPECT_EQ(r.d, 2u);
    EXPECT_EQ(r.n_s, 3u);
    EXPECT_EQ(r.n_t, 5u);
    EXPECT_EQ(r.seed, 0xdeadbeefULL);
    EXPECT_EQ(r.trial, 9u);
    EXPECT_EQ(r.increments, s.increments);
}

TEST(Sheet, DumpHeaderAndLittleEndianPayload) {
    SheetSample s;
    s.d = 1;
    s.n_s = 1;
    s.n_t = 1;
    s.seed = 4;
    s.increments = {1.0};
    std::stringstream buf;
    write_sheet(buf, s);
    const std::string bytes = buf.str();
    EXPECT_EQ(bytes.substr(0, 16), "SHEET1 1 1 1 4 0");
    // 1.0 = 0x3FF0000000000000, least significant byte first.
    EXPECT_EQ(static_cast<unsigned char>(bytes[bytes.size() - 1]), 0x3F);
    EXPECT_EQ(static_cast<unsigned char>(bytes[bytes.size() - 2]), 0xF0);
}

TEST(Sheet, TruncatedDumpIsRejected) {
    std::stringstream buf("SHEET1 1 2 2 0 0\nabc");
    EXPECT_THROW(read_sheet(buf), ConfigError);
}
