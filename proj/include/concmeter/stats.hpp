#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace concmeter {

/// Two-sided 95% normal quantile.
inline constexpr double kZ95 = 1.959963984540054;

/// Binomial 95% half-width, normal approximation with continuity correction.
double binomial_half_width(double p, std::size_t n);

/// One-sample Kolmogorov-Smirnov distance sup |F_N - F|.
double ks_statistic(std::span<const double> sample, const std::function<double(double)>& cdf);

/// Two-sample Kolmogorov-Smirnov distance.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Pool-adjacent-violators fit of a nonincreasing sequence (unit weights).
std::vector<double> isotonic_nonincreasing(std::span<const double> values);

/// Least-squares slope of y on x.
double least_squares_slope(std::span<const double> x, std::span<const double> y);

/// Sequential mean; summation order is fixed so results are reproducible.
double mean(std::span<const double> values);

}  // namespace concmeter
