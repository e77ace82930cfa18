#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "concmeter/normspace.hpp"

namespace concmeter {

enum class Family {
  kUniformBall,
  kConeSurface,
  kGeneralizedGaussian,
  kStandardGaussian,
  kHaarSphere,
};

/// Declarative description of one of the catalog probability measures on R^n.
class MeasureSpec {
 public:
  /// Normalized Lebesgue measure on the unit ball of `norm`.
  static MeasureSpec uniform_ball(const NormSpec& norm);
  /// Cone measure on the boundary of the unit ball of `norm`.
  static MeasureSpec cone_surface(const NormSpec& norm);
  /// Product of densities exp(-|t|^p / p) / c_p, p in [1, 2].
  static MeasureSpec generalized_gaussian(std::size_t dim, double p);
  static MeasureSpec standard_gaussian(std::size_t dim);
  static MeasureSpec haar_sphere(std::size_t dim);

  Family family() const noexcept { return family_; }
  std::size_t dim() const noexcept { return dim_; }
  /// Exponent of the generalized Gaussian, or of the ball/cone norm.
  double p() const noexcept { return p_; }
  /// Present for ball and cone families.
  const std::optional<NormSpec>& norm() const noexcept { return norm_; }
  /// True for every catalog family; all catalog measures are centrally symmetric.
  bool symmetric() const noexcept { return true; }

  std::string label() const;

 private:
  MeasureSpec(Family family, std::size_t dim, double p, std::optional<NormSpec> norm);

  Family family_;
  std::size_t dim_;
  double p_;
  std::optional<NormSpec> norm_;
};

/// c_p = 2 Γ(1 + 1/p) p^{1/p}, the per-coordinate normalizer of exp(-|t|^p / p).
double generalized_gaussian_normalizer(double p);

/// Non-owning row-major view of `count` points in R^dim.
struct RowsView {
  std::span<const double> data;
  std::size_t dim = 0;

  std::size_t count() const noexcept { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const double> row(std::size_t i) const { return data.subspan(i * dim, dim); }
};

/// Immutable N×n matrix of i.i.d. draws together with the inputs that reproduce it.
class SampleBatch {
 public:
  SampleBatch(MeasureSpec measure, std::uint64_t seed, std::size_t count, std::vector<double> data);

  const MeasureSpec& measure() const noexcept { return measure_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t count() const noexcept { return count_; }
  std::size_t dim() const noexcept { return measure_.dim(); }
  std::span<const double> row(std::size_t i) const;
  RowsView view() const;

 private:
  MeasureSpec measure_;
  std::uint64_t seed_;
  std::size_t count_;
  std::shared_ptr<const std::vector<double>> data_;
};

/// Draws sample `index` of the stream (measure, seed) into `out`. Each
/// coordinate j uses its own counter stream keyed by (seed, index, j).
void sample_row(const MeasureSpec& measure, std::uint64_t seed, std::uint64_t index, std::span<double> out);

/// N i.i.d. draws; bit-identical for equal arguments whatever the worker count.
SampleBatch sample(const MeasureSpec& measure, std::size_t count, std::uint64_t seed);

/// One sample per row, columns x0..x{n-1}, round-trip precision.
void write_rows_csv(std::ostream& out, const RowsView& rows);

/// Distribution function of ‖X‖ for a radially symmetric measure.
class RadialCdf {
 public:
  enum class Source { kAnalytic, kEmpirical };

  /// F(r) = min(r / radius, 1)^n.
  static RadialCdf uniform_ball(std::size_t dim, double radius = 1.0);
  /// ‖X‖ = radius · (p W)^{1/p} with W ~ Gamma(n/p, 1).
  static RadialCdf gamma_power(std::size_t dim, double p, double radius = 1.0);
  /// Piecewise-linear through (0, 0) and (r_(i), (i - 0.5)/N).
  static RadialCdf empirical(std::vector<double> radii);

  double eval(double r) const;
  double log_eval(double r) const;
  double quantile(double u) const;
  /// Quantile of exp(log_u); keeps precision where F underflows.
  double quantile_log(double log_u) const;

  Source source() const noexcept { return source_; }
  std::string description() const;
  /// Sorted radii for empirical CDFs (empty otherwise).
  std::span<const double> radii() const noexcept { return radii_; }

 private:
  enum class Kind { kUniformBall, kGammaPower, kEmpirical };
  RadialCdf(Kind kind, Source source) : kind_(kind), source_(source) {}

  Kind kind_;
  Source source_;
  std::size_t dim_ = 0;
  double p_ = 1.0;
  double radius_ = 1.0;
  std::vector<double> radii_;
};

/// Analytic radial law when (measure, norm) is a catalog pair, otherwise the
/// empirical law of ‖X‖ over a fresh sample of `empirical_count` points.
RadialCdf radial_cdf(const MeasureSpec& measure, const NormSpec& norm,
                     std::size_t empirical_count = 100000, std::uint64_t seed = 0x7ad1a1u);

}  // namespace concmeter
