#ifndef VITERBINET_BENCH_STATS_HPP
#define VITERBINET_BENCH_STATS_HPP

#include "viterbinet/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace viterbinet::bench {

/// Two-sided 95% normal quantile.
inline constexpr double kZ95 = 1.959963984540054;
/// One-sided 95% normal quantile.
inline constexpr double kZ95OneSided = 1.6448536269514722;

struct Interval {
    double low = 0.0;
    double high = 1.0;
};

/// Wilson score interval for a binomial proportion.
inline Interval wilson_interval(std::size_t errors, std::size_t trials, double z = kZ95)
{
    if (trials == 0)
        throw InvalidParameter("wilson_interval: zero trials");
    if (errors > trials)
        throw InvalidParameter("wilson_interval: more errors than trials");
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(errors) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    // the closed form is exact at the endpoints; clamp rounding
    Interval ci{std::max(0.0, centre - half), std::min(1.0, centre + half)};
    if (errors == 0)
        ci.low = 0.0;
    if (errors == trials)
        ci.high = 1.0;
    return ci;
}

/// Paired comparison of two detectors run on the same trials. `a_only` counts
/// trials where only A erred, `b_only` where only B erred. Positive values
/// favour A.
inline double mcnemar_z(std::size_t a_only, std::size_t b_only)
{
    const double d = static_cast<double>(a_only) + static_cast<double>(b_only);
    if (d == 0.0)
        return 0.0;
    return (static_cast<double>(b_only) - static_cast<double>(a_only)) / std::sqrt(d);
}

/// True when A makes significantly fewer errors than B (one-sided, 95%).
inline bool significantly_fewer(std::size_t a_only, std::size_t b_only, double z = kZ95OneSided)
{
    return mcnemar_z(a_only, b_only) > z;
}

} // namespace viterbinet::bench

#endif
