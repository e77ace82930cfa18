#include "concmeter/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "concmeter/error.hpp"
#include "concmeter/parallel.hpp"
#include "concmeter/rng.hpp"
#include "concmeter/special.hpp"

namespace concmeter {

MeasureSpec::MeasureSpec(Family family, std::size_t dim, double p, std::optional<NormSpec> norm)
    : family_(family), dim_(dim), p_(p), norm_(std::move(norm)) {
  if (dim_ == 0) throw Error(ErrorCode::kInvalidArgument, "measure dimension must be positive");
}

MeasureSpec MeasureSpec::uniform_ball(const NormSpec& norm) {
  return MeasureSpec(Family::kUniformBall, norm.dim(), norm.p(), norm);
}

MeasureSpec MeasureSpec::cone_surface(const NormSpec& norm) {
  return MeasureSpec(Family::kConeSurface, norm.dim(), norm.p(), norm);
}

MeasureSpec MeasureSpec::generalized_gaussian(std::size_t dim, double p) {
  if (!(p >= 1.0 && p <= 2.0)) {
    throw Error(ErrorCode::kUnsupported, "generalized Gaussian product requires p in [1, 2]");
  }
  return MeasureSpec(Family::kGeneralizedGaussian, dim, p, std::nullopt);
}

MeasureSpec MeasureSpec::standard_gaussian(std::size_t dim) {
  return MeasureSpec(Family::kStandardGaussian, dim, 2.0, std::nullopt);
}

MeasureSpec MeasureSpec::haar_sphere(std::size_t dim) {
  return MeasureSpec(Family::kHaarSphere, dim, 2.0, std::nullopt);
}

std::string MeasureSpec::label() const {
  std::ostringstream out;
  switch (family_) {
    case Family::kUniformBall: out << "uniform_ball(" << norm_->label() << ")"; break;
    case Family::kConeSurface: out << "cone_surface(" << norm_->label() << ")"; break;
    case Family::kGeneralizedGaussian: out << "ggp(p=" << p_ << ")"; break;
    case Family::kStandardGaussian: out << "gaussian"; break;
    case Family::kHaarSphere: out << "haar_sphere"; break;
  }
  out << "[n=" << dim_ << "]";
  return out.str();
}

double generalized_gaussian_normalizer(double p) {
  return 2.0 * std::tgamma(1.0 + 1.0 / p) * std::pow(p, 1.0 / p);
}

SampleBatch::SampleBatch(MeasureSpec measure, std::uint64_t seed, std::size_t count, std::vector<double> data)
    : measure_(std::move(measure)),
      seed_(seed),
      count_(count),
      data_(std::make_shared<const std::vector<double>>(std::move(data))) {
  if (data_->size() != count_ * measure_.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "SampleBatch: data size does not match count x dim");
  }
}

std::span<const double> SampleBatch::row(std::size_t i) const {
  return std::span<const double>(*data_).subspan(i * dim(), dim());
}

RowsView SampleBatch::view() const { return RowsView{std::span<const double>(*data_), dim()}; }

namespace {

// Fills out with points of the unit ℓ_p ball (cone=false) or sphere (cone=true).
// With |g_j| = W_j^{1/p}, W_j ~ Gamma(1/p), g has density ∝ exp(-‖g‖_p^p); for the
// ball an extra Exp(1) variable Z gives g / (‖g‖_p^p + Z)^{1/p}.
void unit_lp_point(double p, bool cone, std::uint64_t seed, std::uint64_t index, std::span<double> out) {
  const std::size_t n = out.size();
  if (p == kInfinity) {
    double m = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      CounterRng rng(seed, index, static_cast<std::uint32_t>(j));
      out[j] = 2.0 * rng.uniform() - 1.0;
      m = std::max(m, std::fabs(out[j]));
    }
    if (cone) {
      for (double& v : out) v /= m;
    }
    return;
  }
  const double shape = 1.0 / p;
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    CounterRng rng(seed, index, static_cast<std::uint32_t>(j));
    const double w = rng.gamma(shape);
    out[j] = rng.uniform() < 0.5 ? -w : w;
    total += w;
  }
  if (!cone) {
    CounterRng rng(seed, index, static_cast<std::uint32_t>(n));
    total += rng.exponential();
  }
  for (double& v : out) {
    const double r = std::pow(std::fabs(v) / total, shape);
    v = v < 0.0 ? -r : r;
  }
}

void map_to_body(const NormSpec& norm, std::span<double> point) {
  if (norm.has_transform()) {
    const std::size_t n = point.size();
    const auto inv = norm.inverse_transform();
    std::vector<double> y(point.begin(), point.end());
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += inv[i * n + j] * y[j];
      point[i] = s;
    }
  }
  if (norm.scale() != 1.0) {
    for (double& v : point) v /= norm.scale();
  }
}

}  // namespace

void sample_row(const MeasureSpec& measure, std::uint64_t seed, std::uint64_t index, std::span<double> out) {
  const std::size_t n = measure.dim();
  if (out.size() != n) throw Error(ErrorCode::kDimensionMismatch, "sample_row: output size mismatch");
  switch (measure.family()) {
    case Family::kUniformBall:
    case Family::kConeSurface: {
      const NormSpec& norm = *measure.norm();
      unit_lp_point(norm.p(), measure.family() == Family::kConeSurface, seed, index, out);
      map_to_body(norm, out);
      return;
    }
    case Family::kGeneralizedGaussian: {
      const double p = measure.p();
      for (std::size_t j = 0; j < n; ++j) {
        CounterRng rng(seed, index, static_cast<std::uint32_t>(j));
        const double t = std::pow(p * rng.gamma(1.0 / p), 1.0 / p);
        out[j] = rng.uniform() < 0.5 ? -t : t;
      }
      return;
    }
    case Family::kStandardGaussian:
      for (std::size_t j = 0; j < n; ++j) {
        CounterRng rng(seed, index, static_cast<std::uint32_t>(j));
        out[j] = rng.normal();
      }
      return;
    case Family::kHaarSphere: {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        CounterRng rng(seed, index, static_cast<std::uint32_t>(j));
        out[j] = rng.normal();
        s += out[j] * out[j];
      }
      const double r = std::sqrt(s);
      for (double& v : out) v /= r;
      return;
    }
  }
  throw Error(ErrorCode::kUnsupported, "sample_row: unsupported family");
}

SampleBatch sample(const MeasureSpec& measure, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw Error(ErrorCode::kInvalidArgument, "sample: count must be >= 1");
  const std::size_t n = measure.dim();
  std::vector<double> data(count * n);
  parallel_for(count, [&](std::size_t i) {
    sample_row(measure, seed, i, std::span<double>(data).subspan(i * n, n));
  });
  return SampleBatch(measure, seed, count, std::move(data));
}

void write_rows_csv(std::ostream& out, const RowsView& rows) {
  for (std::size_t j = 0; j < rows.dim; ++j) out << (j ? "," : "") << "x" << j;
  out << "\n";
  char buf[32];
  for (std::size_t i = 0; i < rows.count(); ++i) {
    const auto r = rows.row(i);
    for (std::size_t j = 0; j < rows.dim; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", r[j]);
      out << (j ? "," : "") << buf;
    }
    out << "\n";
  }
}

RadialCdf RadialCdf::uniform_ball(std::size_t dim, double radius) {
  RadialCdf f(Kind::kUniformBall, Source::kAnalytic);
  f.dim_ = dim;
  f.radius_ = radius;
  return f;
}

RadialCdf RadialCdf::gamma_power(std::size_t dim, double p, double radius) {
  RadialCdf f(Kind::kGammaPower, Source::kAnalytic);
  f.dim_ = dim;
  f.p_ = p;
  f.radius_ = radius;
  return f;
}

RadialCdf RadialCdf::empirical(std::vector<double> radii) {
  if (radii.empty()) throw Error(ErrorCode::kInsufficientData, "empirical radial CDF needs samples");
  for (double r : radii) {
    if (!std::isfinite(r) || r < 0.0) throw Error(ErrorCode::kNonFinite, "radii must be finite and >= 0");
  }
  RadialCdf f(Kind::kEmpirical, Source::kEmpirical);
  std::sort(radii.begin(), radii.end());
  f.radii_ = std::move(radii);
  f.dim_ = 0;
  return f;
}

double RadialCdf::eval(double r) const {
  if (!(r > 0.0)) return 0.0;
  switch (kind_) {
    case Kind::kUniformBall:
      return r >= radius_ ? 1.0 : std::pow(r / radius_, static_cast<double>(dim_));
    case Kind::kGammaPower: {
      const double t = r / radius_;
      return gamma_cdf(static_cast<double>(dim_) / p_, std::pow(t, p_) / p_);
    }
    case Kind::kEmpirical: {
      const double n = static_cast<double>(radii_.size());
      const auto it = std::upper_bound(radii_.begin(), radii_.end(), r);
      const std::size_t k = static_cast<std::size_t>(it - radii_.begin());  // #radii <= r
      if (k == radii_.size()) return 1.0;
      const double x1 = radii_[k];
      const double y1 = (static_cast<double>(k) + 0.5) / n;
      const double x0 = k == 0 ? 0.0 : radii_[k - 1];
      const double y0 = k == 0 ? 0.0 : (static_cast<double>(k) - 0.5) / n;
      if (x1 <= x0) return y1;
      return y0 + (y1 - y0) * (r - x0) / (x1 - x0);
    }
  }
  return 0.0;
}

double RadialCdf::log_eval(double r) const {
  if (!(r > 0.0)) return -kInfinity;
  switch (kind_) {
    case Kind::kUniformBall:
      return r >= radius_ ? 0.0 : static_cast<double>(dim_) * std::log(r / radius_);
    case Kind::kGammaPower: {
      const double t = r / radius_;
      return log_gamma_cdf(static_cast<double>(dim_) / p_, std::pow(t, p_) / p_);
    }
    case Kind::kEmpirical:
      return std::log(eval(r));
  }
  return -kInfinity;
}

double RadialCdf::quantile(double u) const {
  if (std::isnan(u)) throw Error(ErrorCode::kNonFinite, "quantile: NaN probability");
  if (u <= 0.0) return 0.0;
  if (kind_ == Kind::kEmpirical) {
    const double n = static_cast<double>(radii_.size());
    const double first = 0.5 / n;
    if (u <= first) return radii_.front() * (u / first);
    if (u >= (n - 0.5) / n) return radii_.back();
    const double k = u * n + 0.5;  // 1-based fractional order statistic
    const std::size_t i = static_cast<std::size_t>(std::floor(k));
    const double frac = k - static_cast<double>(i);
    return radii_[i - 1] + frac * (radii_[i] - radii_[i - 1]);
  }
  return quantile_log(std::log(u));
}

double RadialCdf::quantile_log(double log_u) const {
  if (std::isnan(log_u)) throw Error(ErrorCode::kNonFinite, "quantile: NaN probability");
  switch (kind_) {
    case Kind::kUniformBall:
      return log_u >= 0.0 ? radius_ : radius_ * std::exp(log_u / static_cast<double>(dim_));
    case Kind::kGammaPower: {
      const double w = gamma_quantile_log(static_cast<double>(dim_) / p_, log_u);
      return radius_ * std::pow(p_ * w, 1.0 / p_);
    }
    case Kind::kEmpirical:
      return quantile(std::exp(log_u));
  }
  return 0.0;
}

std::string RadialCdf::description() const {
  std::ostringstream out;
  switch (kind_) {
    case Kind::kUniformBall: out << "analytic:uniform_ball(n=" << dim_ << ",radius=" << radius_ << ")"; break;
    case Kind::kGammaPower:
      out << "analytic:gamma_power(n=" << dim_ << ",p=" << p_ << ",radius=" << radius_ << ")";
      break;
    case Kind::kEmpirical: out << "empirical(N=" << radii_.size() << ")"; break;
  }
  return out.str();
}

RadialCdf radial_cdf(const MeasureSpec& measure, const NormSpec& norm, std::size_t empirical_count,
                     std::uint64_t seed) {
  if (norm.dim() != measure.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "radial_cdf: norm and measure dimensions differ");
  }
  const std::size_t n = measure.dim();
  switch (measure.family()) {
    case Family::kUniformBall:
      if (measure.norm()->same_shape(norm)) {
        return RadialCdf::uniform_ball(n, norm.scale() / measure.norm()->scale());
      }
      break;
    case Family::kGeneralizedGaussian:
      if (!norm.has_transform() && norm.p() == measure.p()) {
        return RadialCdf::gamma_power(n, measure.p(), norm.scale());
      }
      break;
    case Family::kStandardGaussian:
      if (!norm.has_transform() && norm.p() == 2.0) return RadialCdf::gamma_power(n, 2.0, norm.scale());
      break;
    default: break;
  }
  const SampleBatch batch = sample(measure, empirical_count, seed);
  std::vector<double> radii(batch.count());
  parallel_for(batch.count(), [&](std::size_t i) { radii[i] = norm_eval(norm, batch.row(i)); });
  return RadialCdf::empirical(std::move(radii));
}

}  // namespace concmeter
