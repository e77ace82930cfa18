#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "concmeter/concentration.hpp"
#include "concmeter/measures.hpp"
#include "concmeter/normspace.hpp"
#include "concmeter/transport.hpp"

namespace concmeter {

enum class Verdict { kPass, kFail, kNotApplicable };

const char* to_string(Verdict v) noexcept;

/// Which side of the inequality the left-hand side must stay on.
enum class Relation {
  kAtMost,   // lhs - slack <= rhs
  kAtLeast,  // lhs + slack >= rhs
};

/// Machine-readable outcome of one theorem check.
///
/// The verdict is pass iff no grid point with a satisfied precondition is
/// violated, not-applicable when no grid point satisfies it.
struct CheckReport {
  std::string check_id;
  nlohmann::json inputs = nlohmann::json::object();
  nlohmann::json quantities = nlohmann::json::object();
  Relation relation = Relation::kAtMost;
  std::vector<double> eps;
  std::vector<double> lhs;
  std::vector<double> rhs;
  std::vector<double> slack;
  std::vector<bool> precondition;
  /// Pointwise probes evaluated outside the grid.
  std::size_t extra_violations = 0;
  std::size_t extra_applicable = 0;
  std::optional<double> extra_worst_margin;
  std::size_t violations = 0;
  std::size_t applicable = 0;
  /// Largest signed excess over applicable points; positive means violated.
  std::optional<double> worst_margin;
  Verdict verdict = Verdict::kNotApplicable;
  std::vector<std::string> notes;
  nlohmann::json sensitivity = nlohmann::json::object();

  /// Recomputes violations, applicable, worst_margin and verdict from the grid.
  void finalize();
  nlohmann::json to_json() const;
};

/// Columns eps, lhs, rhs, slack, precondition.
void write_grid_csv(std::ostream& out, const CheckReport& report);

struct PropDecOptions {
  MeasureSpec measure;
  NormSpec domain_metric;
  NormSpec codomain_metric;
  PushforwardMap map;
  double lip = 1.0;
  AnalyticProfile profile;
  std::vector<double> eps;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  std::size_t pairs = 10000;
  DirectionFamily directions;
};

/// alpha_hat_ν(r) - ci <= profile_μ(r / lip), after an empirical check that
/// the map is lip-Lipschitz (kPrecondition otherwise).
CheckReport check_prop_dec(const PropDecOptions& o);

struct ThmMainOptions {
  MeasureSpec measure;
  NormSpec k;
  NormSpec l;
  AnalyticProfile profile;
  std::vector<double> eps;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  DirectionFamily directions;
};

/// Pushes μ forward by π after rescaling L to unit-scale containment and
/// compares alpha_hat_ν with 16·profile(ε m_L / (14 λ m_K)) wherever
/// 16·profile(ε m_L / (7 λ m_K)) <= 1.
CheckReport check_thm_main(const ThmMainOptions& o);

struct InclusionOptions {
  MeasureSpec measure;
  NormSpec k;
  NormSpec l;
  double eps = 0.5;
  /// Direction of the half-space A = {<θ, y> <= t} in the image; t is the
  /// image median of <θ, y>. Empty means e_1.
  std::vector<double> theta;
  std::size_t samples = 100000;
  std::size_t probes = 100000;
  std::uint64_t seed = 1;
};

/// Pointwise check of the inclusion chain: for y in J and ‖x - y‖_K <= δ m_L / λ,
/// ‖πx - πy‖_L <= 7 δ m_K and πx lies in A_ε.
CheckReport check_inclusion_lemma(const InclusionOptions& o);

struct LedouxOptions {
  MeasureSpec measure;
  NormSpec metric;
  AnalyticProfile profile;
  std::size_t pairs = 1000;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
};

/// μ(A)μ(B) - ci <= 4 profile(dist(A, B) / 2) over parallel half-space pairs.
CheckReport check_ledoux_lemma(const LedouxOptions& o);

struct CorFarlinfOptions {
  std::size_t n = 2;
  /// Symmetric measure on the unit cube; defaults to the uniform one.
  std::optional<MeasureSpec> nu;
  std::vector<double> eps;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  DirectionFamily directions;
};

/// alpha_hat(ε) + ci >= (1 - ν(εB_∞)) / (2n) in the ℓ_∞ metric.
CheckReport check_cor_farlinf(const CorFarlinfOptions& o);

struct ThmFarlinfOptions {
  MeasureSpec measure;
  NormSpec x_norm;
  /// Row-major N×n matrix of functionals f_i.
  std::vector<double> functionals;
  double d = 1.0;
  AnalyticProfile profile;
  std::vector<double> eps;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
};

/// N >= (1 - μ(dεK)) / (2 profile(ε)) for 0 < ε < 1/d, after checking
/// d⁻¹‖x‖ <= max|f_i(x)| <= ‖x‖ on the sample (kPrecondition otherwise).
CheckReport check_thm_farlinf(const ThmFarlinfOptions& o);

struct ThmMain1Options {
  double p = 1.0;
  std::size_t n = 16;
  AnalyticProfile profile;
  /// Optional second norm K with containment against L = ℓ_p. The two-norm
  /// variant is reported but not asserted.
  std::optional<NormSpec> k;
  std::vector<double> eps;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  std::size_t knots = 4096;
  DirectionFamily directions;
};

/// μ = γ_p^n, ν = uniform ℓ_p ball, u the radial transport. Compares
/// alpha_hat_ν with 16 profile(ε / (14 ‖u‖_Lip λ)) where the two-term
/// precondition holds, and fits ν's curve by exp(-c ε² n).
CheckReport check_thm_main1(const ThmMain1Options& o);

struct SandwichOptions {
  MeasureSpec measure;
  NormSpec k;
  NormSpec l;
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
};

/// m_K <= m_L <= λ m_K within the median CIs, L rescaled to unit-scale containment.
CheckReport check_median_sandwich(const SandwichOptions& o);

struct PiLipschitzOptions {
  MeasureSpec measure;
  NormSpec k;
  NormSpec l;
  std::size_t pairs = 100000;
  std::size_t samples = 10000;
  std::uint64_t seed = 1;
};

/// sup ‖πx - πy‖_L / ‖x - y‖_K <= 2λ + 1 + 1e-9, L rescaled to unit-scale containment.
CheckReport check_pi_lipschitz(const PiLipschitzOptions& o);

}  // namespace concmeter
