#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "concmeter/measures.hpp"
#include "concmeter/normspace.hpp"

namespace concmeter {

/// Nondecreasing u: [0, ∞) → [0, ∞) with u(0) = 0, stored as a piecewise-linear
/// interpolant and extrapolated linearly past the last knot.
///
/// When built from radial laws the map keeps the exact evaluator used to fill
/// the knots; lipschitz_constant() refines against it.
class MonotoneMap {
 public:
  MonotoneMap(std::vector<double> knots, std::vector<double> values,
              std::function<double(double)> exact = {}, std::string descriptor = "piecewise_linear");

  static MonotoneMap identity(double r_max = 1.0);
  /// u(r) = factor · r.
  static MonotoneMap linear(double factor, double r_max = 1.0);

  double operator()(double r) const;
  /// Exact evaluator when available, interpolant otherwise.
  double evaluate_exact(double r) const;
  bool has_exact() const noexcept { return static_cast<bool>(exact_); }

  std::span<const double> knots() const noexcept { return knots_; }
  std::span<const double> values() const noexcept { return values_; }
  const std::string& descriptor() const noexcept { return descriptor_; }

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
  std::function<double(double)> exact_;
  std::string descriptor_;
};

/// Two columns r, u(r).
void write_map_csv(std::ostream& out, const MonotoneMap& u);

/// π(x) = x · ‖x‖_K / ‖x‖_L, with π(0) = 0. Maps ∂K onto ∂L.
std::vector<double> pi_map(const NormSpec& k, const NormSpec& l, std::span<const double> x);

/// U(x) = x · u(‖x‖_L) / ‖x‖_L, with U(0) = 0.
std::vector<double> u_map(const MonotoneMap& u, const NormSpec& l, std::span<const double> x);

struct PiLipschitzEstimate {
  /// sup ‖πx - πy‖_L / ‖x - y‖_K over the probed pairs.
  double estimate = 0.0;
  double lambda = 1.0;
  /// 2λ + 1
  double bound = 3.0;
  std::size_t violations = 0;
  std::size_t pairs = 0;
  std::size_t skipped = 0;
  /// The other metric pairings (domain → codomain), reported only.
  double k_to_k = 0.0;
  double l_to_l = 0.0;
  double l_to_k = 0.0;
};

/// Probes `pairs` pairs: even-numbered pairs are independent draws from the
/// batch, odd-numbered ones perturb a batch point by at most 1e-3·m_K in ‖·‖_K.
/// Requires unit-scale containment ‖·‖_K ≤ ‖·‖_L ≤ λ‖·‖_K (kPrecondition otherwise).
PiLipschitzEstimate pi_lipschitz_estimate(const NormSpec& k, const NormSpec& l, const RowsView& batch,
                                          std::size_t pairs, std::uint64_t seed = 0x11b5u);

struct TransportOptions {
  std::size_t knots = 4096;
};

/// u = F_ν⁻¹ ∘ F_μ evaluated in log-probability space on a grid made of μ's
/// quantiles, a geometric lower tail and a geometric upper tail. Refuses
/// (kPrecondition) when either CDF has a flat region or atoms.
MonotoneMap radial_transport(const RadialCdf& f_mu, const RadialCdf& f_nu, const TransportOptions& options = {});

/// Largest knot-interval slope, refined three times by a factor of ten around
/// the current argmax using the exact evaluator. Requires at least 3 knots.
double lipschitz_constant(const MonotoneMap& u);

struct IdentityMap {};
struct ScaleMap {
  double factor = 1.0;
};
/// Keeps the first k coordinates and zeroes the rest.
struct ProjectionMap {
  std::size_t k = 1;
};
struct PiMap {
  NormSpec k;
  NormSpec l;
};
struct RadialMap {
  MonotoneMap u;
  NormSpec l;
};
using PushforwardMap = std::variant<IdentityMap, ScaleMap, ProjectionMap, PiMap, RadialMap>;

std::vector<double> apply_map(const PushforwardMap& map, std::span<const double> x);
std::string map_descriptor(const PushforwardMap& map);

/// Row-wise image of a batch; row i of the image is the map applied to row i.
class PushforwardBatch {
 public:
  PushforwardBatch(SampleBatch source, std::vector<double> image, std::string descriptor);

  const SampleBatch& source() const noexcept { return source_; }
  RowsView image() const;
  std::size_t count() const noexcept { return source_.count(); }
  const std::string& descriptor() const noexcept { return descriptor_; }

 private:
  SampleBatch source_;
  std::shared_ptr<const std::vector<double>> image_;
  std::string descriptor_;
};

PushforwardBatch pushforward_batch(const PushforwardMap& map, const SampleBatch& batch);

/// Empirical sup of d_out(φx, φy) / d_in(x, y) over independent and nearby pairs.
double map_lipschitz_estimate(const PushforwardMap& map, const RowsView& batch, const NormSpec& domain_metric,
                              const NormSpec& codomain_metric, std::size_t pairs, std::uint64_t seed = 0x11b6u);

}  // namespace concmeter
