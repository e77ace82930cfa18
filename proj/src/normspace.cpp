#include "concmeter/normspace.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "concmeter/error.hpp"
#include "concmeter/rng.hpp"

namespace concmeter {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_exponent(double p) {
  if (std::isnan(p) || p < 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "norm exponent p must lie in [1, inf]");
  }
}

void check_scale(double scale) {
  if (!std::isfinite(scale) || scale <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "norm scale must be a positive finite number");
  }
}

std::vector<double> apply(std::span<const double> row_major, std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<double> y(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    const double* row = row_major.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) s += row[j] * x[j];
    y[i] = s;
  }
  return y;
}

}  // namespace

NormSpec::NormSpec(std::size_t dim, double p, double scale, std::shared_ptr<const Transform> t)
    : dim_(dim), p_(p), scale_(scale), transform_(std::move(t)) {}

NormSpec NormSpec::lp(std::size_t dim, double p, double scale) {
  if (dim == 0) throw Error(ErrorCode::kInvalidArgument, "norm dimension must be positive");
  check_exponent(p);
  check_scale(scale);
  return NormSpec(dim, p, scale, nullptr);
}

NormSpec NormSpec::transformed(std::size_t dim, double p, std::vector<double> matrix, double scale) {
  if (dim == 0) throw Error(ErrorCode::kInvalidArgument, "norm dimension must be positive");
  check_exponent(p);
  check_scale(scale);
  if (matrix.size() != dim * dim) {
    throw Error(ErrorCode::kDimensionMismatch, "transform must be a row-major dim x dim matrix");
  }
  for (double v : matrix) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "transform has a non-finite entry");
  }
  const Eigen::Map<const RowMatrix> m(matrix.data(), static_cast<Eigen::Index>(dim),
                                      static_cast<Eigen::Index>(dim));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  const double condition = smin > 0.0 ? smax / smin : kInfinity;
  if (!(condition <= kMaxConditionNumber)) {
    std::ostringstream msg;
    msg << "transform is singular or ill-conditioned (condition number " << condition << " > 1e8)";
    throw Error(ErrorCode::kSingularTransform, msg.str());
  }
  auto t = std::make_shared<Transform>();
  RowMatrix inv = m.inverse();
  t->inverse.assign(inv.data(), inv.data() + inv.size());
  t->matrix = std::move(matrix);
  t->condition = condition;
  return NormSpec(dim, p, scale, std::move(t));
}

std::span<const double> NormSpec::transform() const {
  return transform_ ? std::span<const double>(transform_->matrix) : std::span<const double>();
}

std::span<const double> NormSpec::inverse_transform() const {
  return transform_ ? std::span<const double>(transform_->inverse) : std::span<const double>();
}

double NormSpec::condition_number() const { return transform_ ? transform_->condition : 1.0; }

double NormSpec::operator()(std::span<const double> x) const { return norm_eval(*this, x); }

NormSpec NormSpec::scaled(double factor) const {
  check_scale(factor);
  return NormSpec(dim_, p_, scale_ * factor, transform_);
}

NormSpec NormSpec::composed(std::span<const double> matrix) const {
  if (matrix.size() != dim_ * dim_) {
    throw Error(ErrorCode::kDimensionMismatch, "composed: matrix must be dim x dim");
  }
  std::vector<double> product(dim_ * dim_, 0.0);
  if (!transform_) {
    product.assign(matrix.begin(), matrix.end());
  } else {
    const auto& t = transform_->matrix;
    for (std::size_t i = 0; i < dim_; ++i)
      for (std::size_t k = 0; k < dim_; ++k)
        for (std::size_t j = 0; j < dim_; ++j) product[i * dim_ + j] += t[i * dim_ + k] * matrix[k * dim_ + j];
  }
  return transformed(dim_, p_, std::move(product), scale_);
}

bool NormSpec::same_shape(const NormSpec& other) const {
  if (dim_ != other.dim_ || p_ != other.p_) return false;
  if (!transform_ && !other.transform_) return true;
  if (!transform_ || !other.transform_) return false;
  return transform_ == other.transform_ || transform_->matrix == other.transform_->matrix;
}

std::string NormSpec::label() const {
  if (is_inf()) return "linf";
  std::ostringstream out;
  out << "l" << p_;
  return out.str();
}

double lp_norm(std::span<const double> x, double p) {
  double m = 0.0;
  for (double v : x) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "norm_eval: non-finite component");
    m = std::max(m, std::fabs(v));
  }
  if (m == 0.0 || p == kInfinity) return m;
  if (p == 1.0) {
    double s = 0.0;
    for (double v : x) s += std::fabs(v);
    return s;
  }
  const double inv = 1.0 / m;
  double s = 0.0;
  if (p == 2.0) {
    for (double v : x) {
      const double r = v * inv;
      s += r * r;
    }
    return m * std::sqrt(s);
  }
  for (double v : x) s += std::pow(std::fabs(v) * inv, p);
  return m * std::pow(s, 1.0 / p);
}

double norm_eval(const NormSpec& norm, std::span<const double> x) {
  if (x.size() != norm.dim()) {
    std::ostringstream msg;
    msg << "norm_eval: vector has dimension " << x.size() << ", norm expects " << norm.dim();
    throw Error(ErrorCode::kDimensionMismatch, msg.str());
  }
  if (!norm.has_transform()) return norm.scale() * lp_norm(x, norm.p());
  for (double v : x) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kNonFinite, "norm_eval: non-finite component");
  }
  const auto y = apply(norm.transform(), x);
  return norm.scale() * lp_norm(y, norm.p());
}

double conjugate_exponent(double p) {
  check_exponent(p);
  if (p == 1.0) return kInfinity;
  if (p == kInfinity) return 1.0;
  if (p == 2.0) return 2.0;
  return p / (p - 1.0);
}

NormSpec dual_norm(const NormSpec& norm) {
  const double q = conjugate_exponent(norm.p());
  if (!norm.has_transform()) return NormSpec(norm.dim(), q, 1.0 / norm.scale(), nullptr);
  // sup_{‖Tx‖_p ≤ 1} <θ, x> = ‖T^{-T} θ‖_q
  const std::size_t n = norm.dim();
  auto t = std::make_shared<NormSpec::Transform>();
  t->matrix.resize(n * n);
  t->inverse.resize(n * n);
  const auto inv = norm.inverse_transform();
  const auto fwd = norm.transform();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      t->matrix[i * n + j] = inv[j * n + i];
      t->inverse[i * n + j] = fwd[j * n + i];
    }
  }
  t->condition = norm.condition_number();
  return NormSpec(n, q, 1.0 / norm.scale(), std::move(t));
}

ContainmentConstant containment_lambda(const NormSpec& k, const NormSpec& l,
                                       std::size_t random_directions, std::uint64_t seed) {
  if (k.dim() != l.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "containment_lambda: norms have different dimensions");
  }
  const std::size_t n = k.dim();
  const double nd = static_cast<double>(n);

  if (!k.has_transform() && !l.has_transform()) {
    // ‖x‖_q / ‖x‖_p ranges over [n^{1/q-1/p}, 1] for p <= q, [1, n^{1/q-1/p}] otherwise.
    const double inv_p = k.is_inf() ? 0.0 : 1.0 / k.p();
    const double inv_q = l.is_inf() ? 0.0 : 1.0 / l.p();
    const double extreme = std::pow(nd, inv_q - inv_p);
    const double lo = std::min(1.0, extreme);
    const double hi = std::max(1.0, extreme);
    const double base = l.scale() / k.scale();
    return {hi / lo, base * lo, true};
  }

  std::vector<std::vector<double>> candidates;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> e(n, 0.0);
    e[i] = 1.0;
    candidates.push_back(std::move(e));
  }
  candidates.emplace_back(n, 1.0);
  for (const NormSpec* norm : {&k, &l}) {
    if (!norm->has_transform()) continue;
    const auto inv = norm->inverse_transform();
    const std::size_t base_count = n + 1;
    for (std::size_t c = 0; c < base_count; ++c) candidates.push_back(concmeter::apply(inv, candidates[c]));
  }
  for (std::size_t r = 0; r < random_directions; ++r) {
    std::vector<double> g(n);
    for (std::size_t j = 0; j < n; ++j) {
      CounterRng rng(seed, r, static_cast<std::uint32_t>(j));
      g[j] = rng.normal();
    }
    candidates.push_back(std::move(g));
  }
  double lo = kInfinity, hi = 0.0;
  for (const auto& x : candidates) {
    const double nk = norm_eval(k, x);
    if (nk == 0.0) continue;
    const double ratio = norm_eval(l, x) / nk;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  return {hi / lo, lo, false};
}

NormalizedPair normalize_containment(const NormSpec& k, const NormSpec& l) {
  const ContainmentConstant c = containment_lambda(k, l);
  return {l.scaled(1.0 / c.scale), {c.lambda, 1.0, c.exact}};
}

}  // namespace concmeter
