#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace concmeter {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Transforms whose condition number exceeds this are rejected as singular.
inline constexpr double kMaxConditionNumber = 1e8;

/// A norm ‖x‖ = scale · ‖T x‖_p on R^n, with T optional (identity when absent).
///
/// The ℓ_p exponent may be +inf. Instances are immutable and cheap to copy; the
/// transform, its inverse and condition number are shared between copies.
class NormSpec {
 public:
  static NormSpec lp(std::size_t dim, double p, double scale = 1.0);
  /// `matrix` is row-major n×n. Throws kSingularTransform when the condition
  /// number exceeds kMaxConditionNumber.
  static NormSpec transformed(std::size_t dim, double p, std::vector<double> matrix, double scale = 1.0);

  std::size_t dim() const noexcept { return dim_; }
  double p() const noexcept { return p_; }
  bool is_inf() const noexcept { return p_ == kInfinity; }
  double scale() const noexcept { return scale_; }
  bool has_transform() const noexcept { return static_cast<bool>(transform_); }
  /// Row-major T; empty when untransformed.
  std::span<const double> transform() const;
  std::span<const double> inverse_transform() const;
  /// 1 when untransformed.
  double condition_number() const;

  double operator()(std::span<const double> x) const;

  /// The norm multiplied by `factor` > 0.
  NormSpec scaled(double factor) const;
  /// x ↦ ‖M x‖, i.e. the norm of the body M^{-1}(unit ball).
  NormSpec composed(std::span<const double> matrix) const;
  /// Same exponent and transform; scales may differ.
  bool same_shape(const NormSpec& other) const;

  /// Short name such as "l2", "l1.5" or "linf" (scale and transform omitted).
  std::string label() const;

 private:
  struct Transform {
    std::vector<double> matrix;
    std::vector<double> inverse;
    double condition = 1.0;
  };

  NormSpec(std::size_t dim, double p, double scale, std::shared_ptr<const Transform> t);

  std::size_t dim_;
  double p_;
  double scale_;
  std::shared_ptr<const Transform> transform_;

  friend NormSpec dual_norm(const NormSpec& norm);
};

/// ℓ_p norm of x with max-rescaling; p may be infinite. Throws on non-finite input.
double lp_norm(std::span<const double> x, double p);

/// Evaluates ‖x‖. Throws kDimensionMismatch or kNonFinite.
double norm_eval(const NormSpec& norm, std::span<const double> x);

/// Conjugate exponent q with 1/p + 1/q = 1 (1 ↔ inf exactly).
double conjugate_exponent(double p);

/// The dual norm: scale⁻¹ · ‖T^{-T} θ‖_q.
NormSpec dual_norm(const NormSpec& norm);

/// scale·‖x‖_K ≤ ‖x‖_L ≤ scale·lambda·‖x‖_K.
struct ContainmentConstant {
  double lambda = 1.0;
  double scale = 1.0;
  /// False when estimated by direction search, in which case lambda is a lower
  /// bound on the true constant.
  bool exact = true;
};

/// Closed form for untransformed ℓ_p/ℓ_q pairs, heuristic direction search
/// otherwise (random Gaussian directions, basis vectors, the all-ones diagonal
/// and their images under both inverse transforms).
ContainmentConstant containment_lambda(const NormSpec& k, const NormSpec& l,
                                       std::size_t random_directions = 4096,
                                       std::uint64_t seed = 0x5eedu);

/// L rescaled so that ‖·‖_K ≤ ‖·‖_L ≤ λ‖·‖_K holds with unit scale.
struct NormalizedPair {
  NormSpec l;
  ContainmentConstant containment;
};
NormalizedPair normalize_containment(const NormSpec& k, const NormSpec& l);

}  // namespace concmeter
