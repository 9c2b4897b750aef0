#pragma once
//
// Philox4x32-10 counter-based generator (Salmon et al., SC'11) and the
// Gaussian draws built on top of it. Every draw is a pure function of
// (key, counter), so results never depend on traversal order or threading.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace sheetlab {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

namespace detail {

inline void mulhilo32(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

}  // namespace detail

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kPhiloxW0;
            key[1] += kPhiloxW1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        detail::mulhilo32(kPhiloxM0, ctr[0], hi0, lo0);
        detail::mulhilo32(kPhiloxM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

inline PhiloxKey philox_key(std::uint64_t seed) {
    return {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
}

// Independent stream families share a key but never a counter.
enum class Stream : std::uint32_t {
    sheet = 0,
    drivers = 1,
    directions = 2,
    subsample = 3,
};

// Counter layout: (c0, c1, c2 = index | stream << 24, c3 = trial).
inline PhiloxCounter make_counter(Stream stream, std::uint32_t trial, std::uint32_t index,
                                  std::uint32_t c1, std::uint32_t c0) {
    return {c0, c1, (index & 0x00FFFFFFu) | (static_cast<std::uint32_t>(stream) << 24), trial};
}

// Uniform on [0,1) with 53 random bits.
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// One standard normal per counter (Box-Muller, cosine branch).
inline double philox_normal(std::uint64_t seed, const PhiloxCounter& ctr) {
    const auto r = philox4x32_10(ctr, philox_key(seed));
    const double u1 = 1.0 - to_unit(r[0], r[1]);  // (0,1]
    const double u2 = to_unit(r[2], r[3]);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double philox_uniform(std::uint64_t seed, const PhiloxCounter& ctr) {
    const auto r = philox4x32_10(ctr, philox_key(seed));
    return to_unit(r[0], r[1]);
}

}  // namespace sheetlab
