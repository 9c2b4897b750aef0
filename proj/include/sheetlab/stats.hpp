#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <span>
#include <vector>

namespace sheetlab {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    [[nodiscard]] bool overlaps(const Interval& other) const {
        return lo <= other.hi && other.lo <= hi;
    }
};

// Wilson score interval for a binomial proportion (z = 1.96 by default).
inline Interval wilson_interval(std::size_t count, std::size_t trials, double z = 1.96) {
    if (trials == 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(count) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    std::vector<double> residuals;
};

// Ordinary least squares y = intercept + slope * x. Needs two distinct x.
inline std::optional<LineFit> fit_line(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) return std::nullopt;
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    if (sxx <= 0.0) return std::nullopt;
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.residuals.reserve(n);
    for (std::size_t k = 0; k < n; ++k) fit.residuals.push_back(y[k] - fit.intercept - fit.slope * x[k]);
    return fit;
}

struct MeanVar {
    double mean = 0.0;
    double variance = 0.0;  // unbiased
    std::size_t count = 0;

    [[nodiscard]] double std_error() const {
        return count > 0 ? std::sqrt(variance / static_cast<double>(count)) : 0.0;
    }
};

// Two-pass mean and unbiased variance, summed in index order.
inline MeanVar mean_var(std::span<const double> xs) {
    MeanVar r;
    r.count = xs.size();
    if (xs.empty()) return r;
    double s = 0.0;
    for (double x : xs) s += x;
    r.mean = s / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - r.mean) * (x - r.mean);
        r.variance = ss / static_cast<double>(xs.size() - 1);
    }
    return r;
}

// Radical inverse in a prime base; component `dim` of the k-th Halton point.
inline double halton(std::uint64_t k, unsigned dim) {
    static constexpr unsigned primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31,
                                          37, 41, 43, 47, 53, 59, 61, 67, 71, 73};
    const unsigned base = primes[dim % (sizeof(primes) / sizeof(primes[0]))];
    double f = 1.0, r = 0.0;
    while (k > 0) {
        f /= base;
        r += f * static_cast<double>(k % base);
        k /= base;
    }
    return r;
}

enum class Verdict { pass, fail, indeterminate };

inline std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "PASS";
        case Verdict::fail: return "FAIL";
        case Verdict::indeterminate: return "INDETERMINATE";
    }
    return "?";
}

constexpr std::size_t kMinEventsForFit = 5;

struct DecayPoint {
    double eps = 0.0;
    std::size_t count = 0;
    std::size_t trials = 0;
    double p_hat = 0.0;
    bool upper_bound = false;  // zero events: p_hat is the bound 1/trials
    Interval ci;
};

struct DecayFit {
    std::vector<DecayPoint> points;           // sorted by decreasing eps
    std::optional<double> slope;              // OLS over points with enough events
    double intercept = 0.0;
    std::vector<double> residuals;
    std::vector<double> local_slopes;         // between consecutive points
    std::vector<bool> local_slope_is_bound;   // involves an upper-bound point
    std::size_t points_used = 0;
    Verdict verdict = Verdict::indeterminate;
};

// Slope of log P-hat against log eps. Points with fewer than kMinEventsForFit
// events are left out of the regression; fewer than three usable points gives
// an indeterminate verdict. Otherwise PASS iff slope >= requested_p.
inline DecayFit fit_decay(std::span<const double> eps, std::span<const std::size_t> counts,
                          std::size_t trials, double requested_p) {
    DecayFit f;
    for (std::size_t k = 0; k < eps.size() && k < counts.size(); ++k) {
        DecayPoint p;
        p.eps = eps[k];
        p.count = counts[k];
        p.trials = trials;
        p.upper_bound = counts[k] == 0;
        p.p_hat = trials == 0 ? 0.0
                  : p.upper_bound ? 1.0 / static_cast<double>(trials)
                                  : static_cast<double>(counts[k]) / static_cast<double>(trials);
        p.ci = wilson_interval(counts[k], trials);
        f.points.push_back(p);
    }
    std::sort(f.points.begin(), f.points.end(),
              [](const DecayPoint& a, const DecayPoint& b) { return a.eps > b.eps; });
    for (std::size_t k = 0; k + 1 < f.points.size(); ++k) {
        const auto& a = f.points[k];
        const auto& b = f.points[k + 1];
        f.local_slopes.push_back((std::log(a.p_hat) - std::log(b.p_hat)) /
                                 (std::log(a.eps) - std::log(b.eps)));
        f.local_slope_is_bound.push_back(a.upper_bound || b.upper_bound);
    }
    std::vector<double> x, y;
    for (const auto& p : f.points)
        if (p.count >= kMinEventsForFit) {
            x.push_back(std::log(p.eps));
            y.push_back(std::log(p.p_hat));
        }
    f.points_used = x.size();
    if (x.size() < 3) return f;
    if (auto line = fit_line(x, y)) {
        f.slope = line->slope;
        f.intercept = line->intercept;
        f.residuals = std::move(line->residuals);
        f.verdict = line->slope >= requested_p ? Verdict::pass : Verdict::fail;
    }
    return f;
}

}  // namespace sheetlab
