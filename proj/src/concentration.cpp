#include "concmeter/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "concmeter/error.hpp"
#include "concmeter/parallel.hpp"
#include "concmeter/rng.hpp"
#include "concmeter/stats.hpp"

namespace concmeter {

MedianEstimate empirical_median(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < kMinMedianSamples) {
    throw Error(ErrorCode::kInsufficientData, "empirical_median: need at least 100 samples");
  }
  std::vector<double> sorted(values.begin(), values.end());
  for (double v : sorted) {
    if (std::isnan(v)) throw Error(ErrorCode::kNonFinite, "empirical_median: NaN value");
  }
  std::sort(sorted.begin(), sorted.end());
  const double nd = static_cast<double>(n);
  const std::size_t k = (n + 1) / 2;  // ⌈N/2⌉, 1-based
  const double spread = 0.5 * kZ95 * std::sqrt(nd);
  const auto lo = static_cast<std::size_t>(std::max(1.0, std::floor(0.5 * nd - spread)));
  const auto hi = static_cast<std::size_t>(std::min(nd, std::ceil(0.5 * nd + 1.0 + spread)));
  return {sorted[k - 1], sorted[std::min(lo, k) - 1], sorted[std::max(hi, k) - 1], n};
}

bool Halfspace::contains(std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += theta[i] * x[i];
  return s <= threshold;
}

Halfspace halfspace_expansion(const Halfspace& h, double eps, const NormSpec& metric) {
  if (h.theta.size() != metric.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "halfspace_expansion: direction/metric dimension mismatch");
  }
  if (!(eps >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "halfspace_expansion: eps must be >= 0");
  const double dual = norm_eval(dual_norm(metric), h.theta);
  if (dual == 0.0) throw Error(ErrorCode::kInvalidArgument, "halfspace_expansion: zero direction");
  return {h.theta, h.threshold + eps * dual};
}

std::vector<double> family_direction(const DirectionFamily& family, std::size_t dim, std::size_t id) {
  std::vector<double> theta(dim, 0.0);
  if (family.axes && id < dim) {
    theta[id] = 1.0;
    return theta;
  }
  const std::size_t r = family.axes ? id - dim : id;
  double s = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    CounterRng rng(family.seed, r, static_cast<std::uint32_t>(j));
    theta[j] = rng.normal();
    s += theta[j] * theta[j];
  }
  const double inv = 1.0 / std::sqrt(s);
  for (double& v : theta) v *= inv;
  return theta;
}

ConcentrationCurve concentration_lower_curve(const RowsView& rows, const NormSpec& metric,
                                             std::span<const double> eps_grid, const DirectionFamily& family) {
  if (eps_grid.empty()) throw Error(ErrorCode::kInvalidArgument, "concentration_lower_curve: empty eps grid");
  for (std::size_t i = 0; i < eps_grid.size(); ++i) {
    if (!(eps_grid[i] >= 0.0) || !std::isfinite(eps_grid[i]) || (i > 0 && eps_grid[i] <= eps_grid[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "concentration_lower_curve: eps grid must be increasing and >= 0");
    }
  }
  if (metric.dim() != rows.dim) {
    throw Error(ErrorCode::kDimensionMismatch, "concentration_lower_curve: metric dimension mismatch");
  }
  const std::size_t count = rows.count();
  if (count < kMinMedianSamples) {
    throw Error(ErrorCode::kInsufficientData, "concentration_lower_curve: need at least 100 samples");
  }
  const std::size_t n = rows.dim;
  const std::size_t directions = family.size(n);
  if (directions == 0) throw Error(ErrorCode::kInvalidArgument, "concentration_lower_curve: empty direction family");
  const std::size_t grid = eps_grid.size();
  const NormSpec dual = dual_norm(metric);

  // outside[d][e][side] = number of samples outside the expansion
  std::vector<std::size_t> outside(directions * grid * 2, 0);
  parallel_for(directions, [&](std::size_t d) {
    const auto theta = family_direction(family, n, d);
    std::vector<double> proj(count);
    if (family.axes && d < n) {
      for (std::size_t i = 0; i < count; ++i) proj[i] = rows.data[i * n + d];
    } else {
      for (std::size_t i = 0; i < count; ++i) {
        const double* x = rows.data.data() + i * n;
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += theta[j] * x[j];
        proj[i] = s;
      }
    }
    std::sort(proj.begin(), proj.end());
    const double t = proj[(count + 1) / 2 - 1];
    const double width = norm_eval(dual, theta);
    for (std::size_t e = 0; e < grid; ++e) {
      const double shift = eps_grid[e] * width;
      const auto above = std::upper_bound(proj.begin(), proj.end(), t + shift);
      const auto below = std::lower_bound(proj.begin(), proj.end(), t - shift);
      outside[(d * grid + e) * 2 + 0] = static_cast<std::size_t>(proj.end() - above);
      outside[(d * grid + e) * 2 + 1] = static_cast<std::size_t>(below - proj.begin());
    }
  });

  ConcentrationCurve curve;
  curve.eps.assign(eps_grid.begin(), eps_grid.end());
  curve.metric = metric.label();
  curve.family_size = directions;
  curve.sample_count = count;
  curve.alpha_raw.resize(grid);
  curve.direction_of_max.resize(grid);
  const double nd = static_cast<double>(count);
  for (std::size_t e = 0; e < grid; ++e) {
    std::size_t best = 0;
    long best_id = 0;
    bool first = true;
    for (std::size_t d = 0; d < directions; ++d) {
      for (std::size_t side = 0; side < 2; ++side) {
        const std::size_t v = outside[(d * grid + e) * 2 + side];
        if (first || v > best) {
          best = v;
          best_id = side == 0 ? static_cast<long>(d) : -static_cast<long>(d) - 1;
          first = false;
        }
      }
    }
    curve.alpha_raw[e] = static_cast<double>(best) / nd;
    curve.direction_of_max[e] = best_id;
  }
  curve.alpha_hat = isotonic_nonincreasing(curve.alpha_raw);
  curve.ci.resize(grid);
  const double cut_ci = binomial_half_width(0.5, count);
  for (std::size_t e = 0; e < grid; ++e) {
    curve.ci[e] = binomial_half_width(curve.alpha_hat[e], count) + cut_ci;
  }
  return curve;
}

void write_curve_csv(std::ostream& out, const ConcentrationCurve& curve) {
  out << "eps,alpha_hat,ci,direction_id_of_max,alpha_raw\n";
  char buf[160];
  for (std::size_t e = 0; e < curve.eps.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%ld,%.17g\n", curve.eps[e], curve.alpha_hat[e], curve.ci[e],
                  curve.direction_of_max[e], curve.alpha_raw[e]);
    out << buf;
  }
}

DeviationCurve lipschitz_deviation_curve(std::span<const double> values, std::span<const double> eps_grid) {
  DeviationCurve out;
  out.median = empirical_median(values);
  std::vector<double> dev(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) dev[i] = std::fabs(values[i] - out.median.value);
  std::sort(dev.begin(), dev.end());
  const double nd = static_cast<double>(values.size());
  out.eps.assign(eps_grid.begin(), eps_grid.end());
  for (double e : eps_grid) {
    const auto it = std::lower_bound(dev.begin(), dev.end(), e);
    const double frac = static_cast<double>(dev.end() - it) / nd;
    out.deviation.push_back(frac);
    out.ci.push_back(binomial_half_width(frac, values.size()));
  }
  return out;
}

DeviationCurve lipschitz_deviation_curve(const RowsView& rows,
                                         const std::function<double(std::span<const double>)>& f,
                                         std::span<const double> eps_grid) {
  std::vector<double> values(rows.count());
  parallel_for(rows.count(), [&](std::size_t i) { values[i] = f(rows.row(i)); });
  return lipschitz_deviation_curve(values, eps_grid);
}

double AnalyticProfile::operator()(double eps) const { return C * std::exp(-c * eps * eps * n); }

AnalyticProfile analytic_profile(const std::string& name, std::size_t dim, const ProfileOverrides& overrides) {
  AnalyticProfile p;
  p.name = name;
  const double nd = static_cast<double>(dim);
  if (name == "sphere") {
    p.C = 1.0, p.c = 0.25, p.n = nd;
  } else if (name == "gaussian") {
    p.C = 1.0, p.c = 0.5, p.n = 1.0;
  } else if (name == "gamma1") {
    p.C = 2.0, p.c = 1.0 / 16.0, p.n = nd;
  } else if (name == "custom") {
    if (!overrides.C || !overrides.c) {
      throw Error(ErrorCode::kInvalidArgument, "analytic_profile: custom profile needs C and c");
    }
    p.n = nd;
  } else if (!overrides.C || !overrides.c) {
    throw Error(ErrorCode::kInvalidArgument, "analytic_profile: unknown profile '" + name + "'");
  } else {
    p.n = nd;
  }
  if (overrides.C) p.C = *overrides.C;
  if (overrides.c) p.c = *overrides.c;
  if (overrides.n) p.n = *overrides.n;
  if (!(p.C > 0.0) || !(p.c > 0.0) || !(p.n > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "analytic_profile: C, c and n must be positive");
  }
  return p;
}

}  // namespace concmeter
