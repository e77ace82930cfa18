#include "concmeter/special.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "concmeter/error.hpp"

namespace concmeter {

namespace {

constexpr int kMaxIterations = 200000;
constexpr double kEps = 1e-17;
constexpr double kTiny = 1e-300;

void validate(double shape, double x) {
  if (!std::isfinite(shape) || !std::isfinite(x)) {
    throw Error(ErrorCode::kNonFinite, "gamma_cdf: non-finite argument");
  }
  if (shape <= 0.0) throw Error(ErrorCode::kInvalidArgument, "gamma_cdf: shape must be > 0");
  if (x < 0.0) throw Error(ErrorCode::kInvalidArgument, "gamma_cdf: x must be >= 0");
}

// log Γ*(a) where Γ(a+1) = sqrt(2πa) (a/e)^a Γ*(a).
double stirling_correction(double a) {
  const double inv = 1.0 / a;
  const double inv2 = inv * inv;
  return inv * (1.0 / 12.0 -
                inv2 * (1.0 / 360.0 -
                        inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 * (1.0 / 1188.0)))));
}

// log(x^a e^{-x} / Γ(a+1))
double log_prefactor(double a, double x) {
  if (x == 0.0) return -std::numeric_limits<double>::infinity();
  if (a < 10.0) return a * std::log(x) - x - std::lgamma(a + 1.0);
  const double t = (x - a) / a;
  // log1p(t) loses everything as t -> -1, i.e. for x << a.
  const double log_ratio = x < 0.5 * a ? std::log(x / a) : std::log1p(t);
  return a * (log_ratio - t) - 0.5 * std::log(2.0 * std::numbers::pi * a) -
         stirling_correction(a);
}

// Σ_k x^k / ((a+1)...(a+k)); P = prefactor * series.
double lower_series(double a, double x) {
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < kMaxIterations; ++k) {
    term *= x / (a + k);
    sum += term;
    if (term < sum * kEps) return sum;
  }
  throw Error(ErrorCode::kInvalidArgument, "gamma_cdf: series did not converge");
}

// Continued fraction for Q = a * prefactor * cf.
double upper_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) return h;
  }
  throw Error(ErrorCode::kInvalidArgument, "gamma_cdf: continued fraction did not converge");
}

}  // namespace

double gamma_cdf(double shape, double x) {
  validate(shape, x);
  if (x == 0.0) return 0.0;
  const double lp = log_prefactor(shape, x);
  if (x < shape + 1.0) return std::min(1.0, std::exp(lp) * lower_series(shape, x));
  return std::max(0.0, 1.0 - shape * std::exp(lp) * upper_fraction(shape, x));
}

double gamma_cdf_upper(double shape, double x) {
  validate(shape, x);
  if (x == 0.0) return 1.0;
  const double lp = log_prefactor(shape, x);
  if (x < shape + 1.0) return std::max(0.0, 1.0 - std::exp(lp) * lower_series(shape, x));
  return std::min(1.0, shape * std::exp(lp) * upper_fraction(shape, x));
}

double log_gamma_cdf(double shape, double x) {
  validate(shape, x);
  if (x == 0.0) return -std::numeric_limits<double>::infinity();
  const double lp = log_prefactor(shape, x);
  if (x < shape + 1.0) return std::min(0.0, lp + std::log(lower_series(shape, x)));
  const double q = shape * std::exp(lp) * upper_fraction(shape, x);
  return std::log1p(-std::min(q, 1.0));
}

double gamma_quantile_log(double shape, double log_u) {
  if (!std::isfinite(shape) || std::isnan(log_u)) {
    throw Error(ErrorCode::kNonFinite, "gamma_quantile: non-finite argument");
  }
  if (shape <= 0.0) throw Error(ErrorCode::kInvalidArgument, "gamma_quantile: shape must be > 0");
  if (log_u >= 0.0) return std::numeric_limits<double>::infinity();
  if (log_u == -std::numeric_limits<double>::infinity()) return 0.0;

  // Newton iteration in y = log x, where log P is close to linear in the lower
  // tail. Bracket [ylo, yhi] with g(ylo) < 0 < g(yhi) guards every step.
  auto g = [&](double y) { return log_gamma_cdf(shape, std::exp(y)) - log_u; };
  double y = log_u > -1.0 ? std::log(shape)
                          : std::min(std::log(shape), (log_u + std::lgamma(shape + 1.0)) / shape);
  double ylo = y, yhi = y;
  double glo = g(ylo), ghi = glo;
  while (glo > 0.0) {
    yhi = ylo;
    ghi = glo;
    ylo -= 1.0;
    if (ylo < -745.0) return 0.0;
    glo = g(ylo);
  }
  while (ghi < 0.0) {
    ylo = yhi;
    glo = ghi;
    yhi += 1.0;
    ghi = g(yhi);
  }
  y = 0.5 * (ylo + yhi);
  for (int it = 0; it < 200; ++it) {
    const double x = std::exp(y);
    const double lp = log_gamma_cdf(shape, x);
    const double gy = lp - log_u;
    if (gy == 0.0) return x;
    if (gy < 0.0) ylo = y; else yhi = y;
    // d/dy log P = x * pdf / P
    const double log_pdf = (shape - 1.0) * std::log(x) - x - std::lgamma(shape);
    const double slope = std::exp(std::log(x) + log_pdf - lp);
    double next = y - gy / slope;
    if (!std::isfinite(next) || next <= ylo || next >= yhi) next = 0.5 * (ylo + yhi);
    if (std::fabs(next - y) < 1e-15 * std::max(1.0, std::fabs(y))) return std::exp(next);
    y = next;
    if (yhi - ylo < 1e-15 * std::max(1.0, std::fabs(y))) break;
  }
  return std::exp(y);
}

double gamma_quantile(double shape, double u) {
  if (std::isnan(u)) throw Error(ErrorCode::kNonFinite, "gamma_quantile: NaN probability");
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return std::numeric_limits<double>::infinity();
  return gamma_quantile_log(shape, std::log(u));
}

}  // namespace concmeter
