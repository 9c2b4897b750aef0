#include "sheetlab/philox.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace sheetlab;

// Known-answer vectors published with the Random123 distribution (kat_vectors).
TEST(Philox, KnownAnswerZero) {
    const auto r = philox4x32_10({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(r, (PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerAllOnes) {
    const auto r = philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    EXPECT_EQ(r, (PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPiDigits) {
    const auto r = philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    EXPECT_EQ(r, (PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Philox, SeedSplitsIntoKeyWords) {
    EXPECT_EQ(philox_key(0x0123456789abcdefULL), (PhiloxKey{0x89abcdefu, 0x01234567u}));
}

TEST(Philox, StreamsOccupyTopByteOfThirdWord) {
    const auto c = make_counter(Stream::directions, 7, 5, 3, 2);
    EXPECT_EQ(c, (PhiloxCounter{2u, 3u, 5u | (2u << 24), 7u}));
    EXPECT_NE(make_counter(Stream::sheet, 0, 0, 0, 0), make_counter(Stream::drivers, 0, 0, 0, 0));
}

TEST(Philox, UnitIntervalEndpoints) {
    EXPECT_EQ(to_unit(0, 0), 0.0);
    EXPECT_LT(to_unit(0xffffffffu, 0xffffffffu), 1.0);
    EXPECT_DOUBLE_EQ(to_unit(0x80000000u, 0), 0.5);
}

TEST(Philox, NormalIsPureFunctionOfCounter) {
    const auto c = make_counter(Stream::sheet, 3, 1, 4, 1);
    EXPECT_EQ(philox_normal(99, c), philox_normal(99, c));
    EXPECT_NE(philox_normal(99, c), philox_normal(100, c));
}

TEST(Philox, NormalMomentsMatchStandardGaussian) {
    const int n = 200000;
    double s = 0, s2 = 0, s4 = 0;
    for (int k = 0; k < n; ++k) {
        const double x = philox_normal(5, make_counter(Stream::sheet, 0, 0, 0, static_cast<std::uint32_t>(k)));
        s += x;
        s2 += x * x;
        s4 += x * x * x * x;
    }
    // Standard errors: mean 1/sqrt(n), second moment sqrt(2/n), fourth sqrt(96/n).
    EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
    EXPECT_NEAR(s4 / n, 3.0, 4.0 * std::sqrt(96.0 / n));
}
