#include "concmeter/parameters.hpp"

#include <algorithm>
#include <cmath>

#include "concmeter/concentration.hpp"
#include "concmeter/error.hpp"
#include "concmeter/parallel.hpp"
#include "concmeter/stats.hpp"

namespace concmeter {

const char* to_string(BetaVariant v) noexcept { return v == BetaVariant::kMedian ? "beta" : "beta_tilde"; }

namespace {

struct Candidate {
  NormSpec norm;
  std::vector<double> transform;
  ContainmentConstant containment;
};

struct Summary {
  double median = 0.0;
  double median_ci = 0.0;
  double mean = 0.0;
  double mean_ci = 0.0;
};

Summary summarize(std::span<const double> v) {
  Summary s;
  const MedianEstimate m = empirical_median(v);
  s.median = m.value;
  s.median_ci = m.half_width();
  s.mean = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  const double nd = static_cast<double>(v.size());
  s.mean_ci = kZ95 * std::sqrt(ss / (nd - 1.0) / nd);
  return s;
}

std::vector<Candidate> build_candidates(const NormSpec& k, const NormSpec& l, const TransformFamily& family) {
  std::vector<Candidate> out;
  if (family.kind == TransformFamily::Kind::kScalar) {
    std::vector<double> scalars = family.scalars;
    const ContainmentConstant base = containment_lambda(k, l);
    if (scalars.empty()) {
      const double s0 = 1.0 / base.scale;
      scalars = {s0, 1.25 * s0, 1.5 * s0, 2.0 * s0};
    }
    std::sort(scalars.begin(), scalars.end());
    for (double s : scalars) {
      if (!(s > 0.0) || !std::isfinite(s)) {
        throw Error(ErrorCode::kInvalidArgument, "beta: scalar transforms must be positive and finite");
      }
      ContainmentConstant cc = base;
      cc.scale = base.scale * s;
      out.push_back({l.scaled(s), {s}, cc});
    }
    return out;
  }
  if (family.diagonals.empty()) throw Error(ErrorCode::kInvalidArgument, "beta: empty diagonal family");
  const std::size_t n = k.dim();
  for (const auto& d : family.diagonals) {
    if (d.size() != n) throw Error(ErrorCode::kDimensionMismatch, "beta: diagonal transform has wrong length");
    std::vector<double> matrix(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(d[i] > 0.0) || !std::isfinite(d[i])) {
        throw Error(ErrorCode::kInvalidArgument, "beta: diagonal entries must be positive and finite");
      }
      matrix[i * n + i] = d[i];
    }
    const NormSpec lt = l.composed(matrix);
    out.push_back({lt, d, containment_lambda(k, lt)});
  }
  return out;
}

}  // namespace

BetaEstimate estimate_beta(const MeasureSpec& mu, const NormSpec& k, const NormSpec& l, BetaVariant variant,
                           std::size_t count, std::uint64_t seed, const TransformFamily& family) {
  const std::size_t n = mu.dim();
  if (k.dim() != n || l.dim() != n) throw Error(ErrorCode::kDimensionMismatch, "beta: dimension mismatch");
  if (count < kMinMedianSamples) throw Error(ErrorCode::kInsufficientData, "beta: need at least 100 samples");
  const std::vector<Candidate> candidates = build_candidates(k, l, family);
  std::vector<std::size_t> feasible;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    if (candidates[c].containment.scale >= 1.0 - 1e-12) feasible.push_back(c);
  }
  if (feasible.empty()) {
    throw Error(ErrorCode::kInfeasible, "beta: no transform in the family satisfies L ⊆ TK ⊆ λL");
  }

  const std::size_t columns = 1 + feasible.size();
  std::vector<double> norms(columns * count);
  parallel_for(count, [&](std::size_t i) {
    std::vector<double> x(n);
    sample_row(mu, seed, i, x);
    norms[i] = norm_eval(k, x);
    for (std::size_t c = 0; c < feasible.size(); ++c) {
      norms[(c + 1) * count + i] = norm_eval(candidates[feasible[c]].norm, x);
    }
  });

  const Summary sk = summarize(std::span<const double>(norms).subspan(0, count));
  BetaEstimate best;
  best.variant = variant;
  best.transform_kind = family.kind;
  best.count = count;
  best.candidates = candidates.size();
  best.feasible = feasible.size();
  bool have = false;
  for (std::size_t c = 0; c < feasible.size(); ++c) {
    const Candidate& cand = candidates[feasible[c]];
    const Summary sl = summarize(std::span<const double>(norms).subspan((c + 1) * count, count));
    const double lambda = cand.containment.scale * cand.containment.lambda;
    const bool med = variant == BetaVariant::kMedian;
    const double num = med ? sk.median : sk.mean;
    const double den = med ? sl.median : sl.mean;
    if (!(den > 0.0)) throw Error(ErrorCode::kPrecondition, "beta: denominator statistic is zero");
    const double value = lambda * num / den;
    // Relative tolerance keeps the smallest scalar on rounding-level ties.
    if (have && !(value < best.value * (1.0 - 1e-12))) continue;
    have = true;
    best.value = value;
    best.transform = cand.transform;
    best.containment = cand.containment;
    best.lambda = lambda;
    best.numerator = num;
    best.numerator_ci = med ? sk.median_ci : sk.mean_ci;
    best.denominator = den;
    best.denominator_ci = med ? sl.median_ci : sl.mean_ci;
    best.median_k = sk.median;
    best.median_l = sl.median;
    best.mean_k = sk.mean;
    best.mean_l = sl.mean;
  }
  return best;
}

EmbeddingBound embedding_lower_bound_N(double alpha_at_eps, double small_ball_mass) {
  if (!std::isfinite(alpha_at_eps) || !std::isfinite(small_ball_mass)) {
    throw Error(ErrorCode::kNonFinite, "embedding_lower_bound_N: non-finite input");
  }
  if (alpha_at_eps < 0.0) throw Error(ErrorCode::kInvalidArgument, "embedding_lower_bound_N: alpha must be >= 0");
  if (small_ball_mass < 0.0 || small_ball_mass > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "embedding_lower_bound_N: mass must lie in [0, 1]");
  }
  if (alpha_at_eps == 0.0) {
    if (small_ball_mass == 1.0) return {0.0, false};
    return {kInfinity, true};
  }
  return {(1.0 - small_ball_mass) / (2.0 * alpha_at_eps), false};
}

double cube_concentration_floor(double small_ball_mass, std::size_t n) {
  if (!(small_ball_mass >= 0.0 && small_ball_mass <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "cube_concentration_floor: mass must lie in [0, 1]");
  }
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "cube_concentration_floor: n must be positive");
  return (1.0 - small_ball_mass) / (2.0 * static_cast<double>(n));
}

CubeBetaBound cube_beta_lower_bound(double C, double c, std::size_t n) {
  if (!std::isfinite(C) || !std::isfinite(c)) throw Error(ErrorCode::kNonFinite, "cube_beta_lower_bound: non-finite");
  if (C < 1.0 / 16.0) throw Error(ErrorCode::kInvalidArgument, "cube_beta_lower_bound: requires C >= 1/16");
  if (!(c > 0.0) || n == 0) throw Error(ErrorCode::kInvalidArgument, "cube_beta_lower_bound: need c > 0, n >= 1");
  const double nd = static_cast<double>(n);
  const double l16 = std::log(16.0 * C);
  const double l64 = std::log(64.0 * C * nd);
  return {std::sqrt(l16) / 28.0 * std::sqrt(c * nd) / l64, 0.5 * std::sqrt(l16 / l64)};
}

}  // namespace concmeter
