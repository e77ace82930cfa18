#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "concmeter/measures.hpp"
#include "concmeter/normspace.hpp"

namespace concmeter {

inline constexpr std::size_t kMinMedianSamples = 100;

/// Sample median with a distribution-free 95% order-statistic interval.
struct MedianEstimate {
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t count = 0;

  double half_width() const noexcept { return std::max(value - ci_low, ci_high - value); }
};

/// Lower median x_(⌈N/2⌉). Requires N >= 100.
MedianEstimate empirical_median(std::span<const double> values);

/// {x : <theta, x> <= threshold}
struct Halfspace {
  std::vector<double> theta;
  double threshold = 0.0;

  bool contains(std::span<const double> x) const;
};

/// Exact ε-expansion of a half-space in the metric of `metric`: the threshold
/// grows by ε·‖θ‖_* where ‖·‖_* is the dual norm. Throws on θ = 0.
Halfspace halfspace_expansion(const Halfspace& h, double eps, const NormSpec& metric);

/// Coordinate axes plus `random` Gaussian directions drawn from `seed`.
struct DirectionFamily {
  bool axes = true;
  std::size_t random = 256;
  std::uint64_t seed = 0xd1ec7104u;

  std::size_t size(std::size_t dim) const noexcept { return (axes ? dim : 0) + random; }
};

std::vector<double> family_direction(const DirectionFamily& family, std::size_t dim, std::size_t id);

/// Empirical lower bound on the concentration function over a half-space family.
///
/// Each direction θ yields two admissible sets {<θ,x> <= t} and {<θ,x> >= t}
/// with t the lower empirical median, so both carry empirical mass >= 1/2.
/// alpha_raw(ε) is the largest empirical mass outside an ε-expansion; alpha_hat
/// is its nonincreasing (PAV) fit. `ci` adds the binomial half-width of the
/// estimate to that of the median cut, since true mass of the cut set is only
/// >= 1/2 up to sampling error.
struct ConcentrationCurve {
  std::vector<double> eps;
  std::vector<double> alpha_hat;
  std::vector<double> alpha_raw;
  std::vector<double> ci;
  /// k for the set {<θ_k,x> <= t}, -(k+1) for the mirrored set {<θ_k,x> >= t}.
  std::vector<long> direction_of_max;
  std::string metric;
  std::size_t family_size = 0;
  std::size_t sample_count = 0;
};

ConcentrationCurve concentration_lower_curve(const RowsView& rows, const NormSpec& metric,
                                             std::span<const double> eps_grid,
                                             const DirectionFamily& family = {});

/// Columns eps, alpha_hat, ci, direction_id_of_max, alpha_raw.
void write_curve_csv(std::ostream& out, const ConcentrationCurve& curve);

/// ε ↦ empirical mass of {|f - m_f| >= ε}.
struct DeviationCurve {
  std::vector<double> eps;
  std::vector<double> deviation;
  std::vector<double> ci;
  MedianEstimate median;
};

DeviationCurve lipschitz_deviation_curve(std::span<const double> values, std::span<const double> eps_grid);
DeviationCurve lipschitz_deviation_curve(const RowsView& rows,
                                         const std::function<double(std::span<const double>)>& f,
                                         std::span<const double> eps_grid);

/// alpha(ε) = C exp(-c ε² n).
struct AnalyticProfile {
  std::string name;
  double C = 1.0;
  double c = 1.0;
  double n = 1.0;

  double operator()(double eps) const;
};

struct ProfileOverrides {
  std::optional<double> C;
  std::optional<double> c;
  std::optional<double> n;
};

/// Catalog: sphere (C=1, c=1/4, n=dim), gaussian (C=1, c=1/2, n=1),
/// gamma1 (C=2, c=1/16, n=dim). "custom" needs at least C and c.
AnalyticProfile analytic_profile(const std::string& name, std::size_t dim, const ProfileOverrides& overrides = {});

}  // namespace concmeter
