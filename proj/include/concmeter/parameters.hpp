#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "concmeter/measures.hpp"
#include "concmeter/normspace.hpp"

namespace concmeter {

enum class BetaVariant {
  kMedian,  // β: ratio of medians
  kMean,    // β̃: ratio of expectations
};

const char* to_string(BetaVariant v) noexcept;

/// Candidate maps T for the weighted containment functionals. Each candidate
/// defines ‖x‖_{T⁻¹L} = ‖T x‖_L and is feasible when ‖·‖_K ≤ ‖·‖_{T⁻¹L}.
struct TransformFamily {
  enum class Kind { kScalar, kDiagonal };
  Kind kind = Kind::kScalar;
  /// Absolute scalars. Empty means s0·{1, 1.25, 1.5, 2} with s0 the smallest
  /// feasible scalar.
  std::vector<double> scalars;
  /// Diagonal entries, one vector per candidate.
  std::vector<std::vector<double>> diagonals;
};

/// Upper bound on the infimum over the family; T is the argmin.
struct BetaEstimate {
  BetaVariant variant = BetaVariant::kMedian;
  double value = 0.0;
  TransformFamily::Kind transform_kind = TransformFamily::Kind::kScalar;
  /// One entry for a scalar, n entries for a diagonal.
  std::vector<double> transform;
  /// Containment of K in T⁻¹L: scale·‖·‖_K ≤ ‖·‖_{T⁻¹L} ≤ scale·lambda·‖·‖_K.
  ContainmentConstant containment;
  /// λ used in the ratio, scale·lambda.
  double lambda = 1.0;
  /// m_K or E‖·‖_K, and the same for T⁻¹L, with 95% half-widths.
  double numerator = 0.0;
  double numerator_ci = 0.0;
  double denominator = 0.0;
  double denominator_ci = 0.0;
  /// Both statistics for the argmin, whichever variant was requested.
  double median_k = 0.0;
  double median_l = 0.0;
  double mean_k = 0.0;
  double mean_l = 0.0;
  std::size_t count = 0;
  std::size_t candidates = 0;
  std::size_t feasible = 0;
};

/// Streams `count` draws of `mu` (rows are never materialized together), so
/// large n is affordable. Throws kInfeasible when no candidate is feasible.
BetaEstimate estimate_beta(const MeasureSpec& mu, const NormSpec& k, const NormSpec& l, BetaVariant variant,
                           std::size_t count, std::uint64_t seed, const TransformFamily& family = {});

inline BetaEstimate beta(const MeasureSpec& mu, const NormSpec& k, const NormSpec& l, std::size_t count,
                         std::uint64_t seed, const TransformFamily& family = {}) {
  return estimate_beta(mu, k, l, BetaVariant::kMedian, count, seed, family);
}

inline BetaEstimate beta_tilde(const MeasureSpec& mu, const NormSpec& k, const NormSpec& l, std::size_t count,
                               std::uint64_t seed, const TransformFamily& family = {}) {
  return estimate_beta(mu, k, l, BetaVariant::kMean, count, seed, family);
}

struct EmbeddingBound {
  double value = 0.0;
  /// Set when alpha is 0; value is then +inf.
  bool infinite = false;
};

/// (1 - small_ball_mass) / (2 alpha).
EmbeddingBound embedding_lower_bound_N(double alpha_at_eps, double small_ball_mass);

/// (1 - small_ball_mass) / (2n).
double cube_concentration_floor(double small_ball_mass, std::size_t n);

struct CubeBetaBound {
  double value = 0.0;
  /// m_K must exceed this for the bound to apply.
  double median_threshold = 0.0;
};

/// √ln(16C)/28 · √(cn)/ln(64Cn). Requires C ≥ 1/16.
CubeBetaBound cube_beta_lower_bound(double C, double c, std::size_t n);

}  // namespace concmeter
