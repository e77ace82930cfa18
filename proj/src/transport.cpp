#include "concmeter/transport.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "concmeter/error.hpp"
#include "concmeter/parallel.hpp"
#include "concmeter/rng.hpp"

namespace concmeter {

MonotoneMap::MonotoneMap(std::vector<double> knots, std::vector<double> values, std::function<double(double)> exact,
                         std::string descriptor)
    : knots_(std::move(knots)), values_(std::move(values)), exact_(std::move(exact)), descriptor_(std::move(descriptor)) {
  if (knots_.size() < 2 || knots_.size() != values_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "MonotoneMap: need at least 2 knots and one value per knot");
  }
  if (knots_.front() != 0.0 || values_.front() != 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "MonotoneMap: u(0) = 0 is required");
  }
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (!std::isfinite(knots_[i]) || !std::isfinite(values_[i])) {
      throw Error(ErrorCode::kNonFinite, "MonotoneMap: non-finite knot or value");
    }
    if (!(knots_[i] > knots_[i - 1])) throw Error(ErrorCode::kInvalidArgument, "MonotoneMap: knots must increase");
    if (values_[i] < values_[i - 1]) throw Error(ErrorCode::kInvalidArgument, "MonotoneMap: values must not decrease");
  }
}

MonotoneMap MonotoneMap::identity(double r_max) { return linear(1.0, r_max); }

MonotoneMap MonotoneMap::linear(double factor, double r_max) {
  if (!(factor >= 0.0) || !(r_max > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "MonotoneMap::linear: need factor >= 0 and r_max > 0");
  }
  std::ostringstream name;
  name << "linear(" << factor << ")";
  return MonotoneMap({0.0, 0.5 * r_max, r_max}, {0.0, 0.5 * factor * r_max, factor * r_max},
                     [factor](double r) { return factor * std::max(r, 0.0); }, name.str());
}

double MonotoneMap::operator()(double r) const {
  if (std::isnan(r)) throw Error(ErrorCode::kNonFinite, "MonotoneMap: NaN argument");
  if (r <= 0.0) return 0.0;
  auto it = std::upper_bound(knots_.begin(), knots_.end(), r);
  std::size_t hi = static_cast<std::size_t>(it - knots_.begin());
  if (hi >= knots_.size()) hi = knots_.size() - 1;
  const std::size_t lo = hi - 1;
  const double slope = (values_[hi] - values_[lo]) / (knots_[hi] - knots_[lo]);
  return values_[lo] + slope * (r - knots_[lo]);
}

double MonotoneMap::evaluate_exact(double r) const { return exact_ ? exact_(r) : (*this)(r); }

void write_map_csv(std::ostream& out, const MonotoneMap& u) {
  out << "r,u\n";
  char buf[80];
  for (std::size_t i = 0; i < u.knots().size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", u.knots()[i], u.values()[i]);
    out << buf;
  }
}

std::vector<double> pi_map(const NormSpec& k, const NormSpec& l, std::span<const double> x) {
  if (k.dim() != l.dim()) throw Error(ErrorCode::kDimensionMismatch, "pi_map: K and L dimensions differ");
  const double nl = norm_eval(l, x);
  std::vector<double> y(x.begin(), x.end());
  if (nl == 0.0) {
    std::fill(y.begin(), y.end(), 0.0);
    return y;
  }
  const double ratio = norm_eval(k, x) / nl;
  for (double& v : y) v *= ratio;
  return y;
}

std::vector<double> u_map(const MonotoneMap& u, const NormSpec& l, std::span<const double> x) {
  const double r = norm_eval(l, x);
  std::vector<double> y(x.begin(), x.end());
  if (r == 0.0) {
    std::fill(y.begin(), y.end(), 0.0);
    return y;
  }
  const double f = u(r) / r;
  for (double& v : y) v *= f;
  return y;
}

namespace {

double distance(const NormSpec& norm, std::span<const double> a, std::span<const double> b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return norm_eval(norm, d);
}

double median_norm(const NormSpec& norm, const RowsView& rows) {
  std::vector<double> v(rows.count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = norm_eval(norm, rows.row(i));
  std::sort(v.begin(), v.end());
  return v[(v.size() + 1) / 2 - 1];
}

// Fills x, y for probe pair `pair`; returns false for a coincident pair.
bool probe_pair(const RowsView& rows, const NormSpec& metric, double scale, std::uint64_t seed, std::size_t pair,
                std::vector<double>& x, std::vector<double>& y) {
  const std::size_t n = rows.dim;
  const std::size_t count = rows.count();
  CounterRng rng(seed, pair, 0);
  const std::size_t i = static_cast<std::size_t>(rng.next_u64() % count);
  const auto xi = rows.row(i);
  x.assign(xi.begin(), xi.end());
  if (pair % 2 == 0) {
    const std::size_t j = static_cast<std::size_t>(rng.next_u64() % count);
    const auto yj = rows.row(j);
    y.assign(yj.begin(), yj.end());
  } else {
    std::vector<double> v(n);
    for (std::size_t c = 0; c < n; ++c) {
      CounterRng dir(seed, pair, static_cast<std::uint32_t>(c + 1));
      v[c] = dir.normal();
    }
    const double nv = norm_eval(metric, v);
    if (nv == 0.0) return false;
    const double h = scale * rng.uniform() / nv;
    y.resize(n);
    for (std::size_t c = 0; c < n; ++c) y[c] = x[c] + h * v[c];
  }
  return x != y;
}

}  // namespace

PiLipschitzEstimate pi_lipschitz_estimate(const NormSpec& k, const NormSpec& l, const RowsView& batch,
                                          std::size_t pairs, std::uint64_t seed) {
  if (k.dim() != l.dim() || batch.dim != k.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "pi_lipschitz_estimate: dimension mismatch");
  }
  if (batch.count() == 0) throw Error(ErrorCode::kInsufficientData, "pi_lipschitz_estimate: empty batch");
  const ContainmentConstant cc = containment_lambda(k, l);
  if (std::fabs(cc.scale - 1.0) > 1e-12) {
    throw Error(ErrorCode::kPrecondition,
                "pi_lipschitz_estimate: containment must hold with unit scale; normalize L first");
  }
  const double m_k = median_norm(k, batch);
  const double h = 1e-3 * m_k;

  struct Ratios {
    double kl = 0.0, kk = 0.0, ll = 0.0, lk = 0.0;
    bool used = false;
  };
  std::vector<Ratios> out(pairs);
  parallel_for(pairs, [&](std::size_t p) {
    std::vector<double> x, y;
    if (!probe_pair(batch, k, h, seed, p, x, y)) return;
    const double dk = distance(k, x, y);
    const double dl = distance(l, x, y);
    if (dk == 0.0 || dl == 0.0) return;
    const auto px = pi_map(k, l, x);
    const auto py = pi_map(k, l, y);
    const double ik = distance(k, px, py);
    const double il = distance(l, px, py);
    out[p] = {il / dk, ik / dk, il / dl, ik / dl, true};
  });

  PiLipschitzEstimate est;
  est.lambda = cc.lambda;
  est.bound = 2.0 * cc.lambda + 1.0;
  for (const auto& r : out) {
    if (!r.used) {
      ++est.skipped;
      continue;
    }
    ++est.pairs;
    est.estimate = std::max(est.estimate, r.kl);
    est.k_to_k = std::max(est.k_to_k, r.kk);
    est.l_to_l = std::max(est.l_to_l, r.ll);
    est.l_to_k = std::max(est.l_to_k, r.lk);
    if (r.kl > est.bound + 1e-9) ++est.violations;
  }
  return est;
}

namespace {

void check_radial_law(const RadialCdf& f, const char* which) {
  if (f.source() != RadialCdf::Source::kEmpirical) return;
  const auto radii = f.radii();
  if (radii.size() < 2 || radii.back() <= radii.front()) {
    throw Error(ErrorCode::kPrecondition, std::string("radial_transport: degenerate ") + which + " law");
  }
  std::size_t ties = 0;
  for (std::size_t i = 1; i < radii.size(); ++i) {
    if (radii[i] == radii[i - 1]) ++ties;
  }
  if (static_cast<double>(ties) > 0.01 * static_cast<double>(radii.size())) {
    throw Error(ErrorCode::kPrecondition, std::string("radial_transport: ") + which +
                                              " law has atoms; quantile matching is not well defined");
  }
}

}  // namespace

MonotoneMap radial_transport(const RadialCdf& f_mu, const RadialCdf& f_nu, const TransportOptions& options) {
  check_radial_law(f_mu, "source");
  check_radial_law(f_nu, "target");
  const std::size_t main = std::max<std::size_t>(options.knots, 16);
  const std::size_t tail = std::max<std::size_t>(main / 32, 8);

  std::vector<double> grid;
  grid.reserve(main + 2 * tail + 1);
  for (std::size_t i = 1; i <= main; ++i) {
    grid.push_back(f_mu.quantile(static_cast<double>(i) / static_cast<double>(main + 1)));
  }
  const double first = grid.front();
  if (!(first > 0.0) || !std::isfinite(first)) {
    throw Error(ErrorCode::kPrecondition, "radial_transport: source law has an atom at 0");
  }
  for (std::size_t i = 0; i < tail; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(tail);
    grid.push_back(first * std::pow(1e-6, 1.0 - t));
  }
  const double top = 1.0 / static_cast<double>(main + 1);
  for (std::size_t i = 1; i <= tail; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(tail);
    const double q = top * std::pow(1e-12 / top, t);  // upper-tail mass, down to 1e-12
    grid.push_back(f_mu.quantile_log(std::log1p(-q)));
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  auto exact = [f_mu, f_nu](double r) -> double {
    if (!(r > 0.0)) return 0.0;
    return f_nu.quantile_log(f_mu.log_eval(r));
  };

  std::vector<double> knots{0.0};
  std::vector<double> values{0.0};
  std::vector<double> u(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) { u[i] = exact(grid[i]); });
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0) || !std::isfinite(grid[i])) continue;
    if (!std::isfinite(u[i])) {
      // Only the far upper tail may overflow the target quantile.
      if (grid[i] > f_mu.quantile(0.999)) break;
      throw Error(ErrorCode::kPrecondition, "radial_transport: target quantile failed inside the support");
    }
    knots.push_back(grid[i]);
    values.push_back(std::max(u[i], values.back()));
  }
  if (knots.size() < 3) throw Error(ErrorCode::kPrecondition, "radial_transport: source law is degenerate");
  return MonotoneMap(std::move(knots), std::move(values), exact,
                     "radial_transport(" + f_mu.description() + " -> " + f_nu.description() + ")");
}

double lipschitz_constant(const MonotoneMap& u) {
  const auto r = u.knots();
  const auto v = u.values();
  if (r.size() < 3) throw Error(ErrorCode::kInvalidArgument, "lipschitz_constant: need at least 3 knots");
  double best = 0.0;
  std::size_t arg = 1;
  for (std::size_t i = 1; i < r.size(); ++i) {
    const double s = (v[i] - v[i - 1]) / (r[i] - r[i - 1]);
    if (s > best) best = s, arg = i;
  }
  if (!u.has_exact()) return best;
  double lo = r[arg - 1];
  double hi = arg + 1 < r.size() ? r[arg + 1] : r[arg];
  for (int round = 0; round < 3; ++round) {
    constexpr int kSteps = 20;
    const double step = (hi - lo) / kSteps;
    if (!(step > 0.0)) break;
    double prev = u.evaluate_exact(lo);
    int at = 0;
    for (int s = 1; s <= kSteps; ++s) {
      const double x = lo + step * s;
      const double cur = u.evaluate_exact(x);
      const double slope = (cur - prev) / step;
      if (slope > best) best = slope, at = s;
      prev = cur;
    }
    if (at == 0) break;
    const double centre = lo + step * (at - 0.5);
    lo = std::max(0.0, centre - step);
    hi = centre + step;
  }
  return best;
}

std::vector<double> apply_map(const PushforwardMap& map, std::span<const double> x) {
  return std::visit(
      [&](const auto& m) -> std::vector<double> {
        using T = std::decay_t<decltype(m)>;
        std::vector<double> y(x.begin(), x.end());
        if constexpr (std::is_same_v<T, IdentityMap>) {
          return y;
        } else if constexpr (std::is_same_v<T, ScaleMap>) {
          for (double& v : y) v *= m.factor;
          return y;
        } else if constexpr (std::is_same_v<T, ProjectionMap>) {
          for (std::size_t i = m.k; i < y.size(); ++i) y[i] = 0.0;
          return y;
        } else if constexpr (std::is_same_v<T, PiMap>) {
          return pi_map(m.k, m.l, x);
        } else {
          return u_map(m.u, m.l, x);
        }
      },
      map);
}

std::string map_descriptor(const PushforwardMap& map) {
  return std::visit(
      [](const auto& m) -> std::string {
        using T = std::decay_t<decltype(m)>;
        std::ostringstream out;
        if constexpr (std::is_same_v<T, IdentityMap>) {
          out << "identity";
        } else if constexpr (std::is_same_v<T, ScaleMap>) {
          out << "scale(" << m.factor << ")";
        } else if constexpr (std::is_same_v<T, ProjectionMap>) {
          out << "projection(" << m.k << ")";
        } else if constexpr (std::is_same_v<T, PiMap>) {
          out << "pi(K=" << m.k.label() << ",L=" << m.l.label() << ")";
        } else {
          out << "U(L=" << m.l.label() << "," << m.u.descriptor() << ")";
        }
        return out.str();
      },
      map);
}

PushforwardBatch::PushforwardBatch(SampleBatch source, std::vector<double> image, std::string descriptor)
    : source_(std::move(source)),
      image_(std::make_shared<const std::vector<double>>(std::move(image))),
      descriptor_(std::move(descriptor)) {
  if (image_->size() != source_.count() * source_.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "PushforwardBatch: image size differs from source");
  }
}

RowsView PushforwardBatch::image() const { return RowsView{std::span<const double>(*image_), source_.dim()}; }

PushforwardBatch pushforward_batch(const PushforwardMap& map, const SampleBatch& batch) {
  const std::size_t n = batch.dim();
  std::vector<double> image(batch.count() * n);
  parallel_for(batch.count(), [&](std::size_t i) {
    const auto y = apply_map(map, batch.row(i));
    if (y.size() != n) throw Error(ErrorCode::kDimensionMismatch, "pushforward_batch: map changes dimension");
    std::copy(y.begin(), y.end(), image.begin() + static_cast<std::ptrdiff_t>(i * n));
  });
  return PushforwardBatch(batch, std::move(image), map_descriptor(map));
}

double map_lipschitz_estimate(const PushforwardMap& map, const RowsView& batch, const NormSpec& domain_metric,
                              const NormSpec& codomain_metric, std::size_t pairs, std::uint64_t seed) {
  if (batch.dim != domain_metric.dim() || batch.dim != codomain_metric.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "map_lipschitz_estimate: dimension mismatch");
  }
  if (batch.count() == 0) throw Error(ErrorCode::kInsufficientData, "map_lipschitz_estimate: empty batch");
  const double h = 1e-3 * median_norm(domain_metric, batch);
  std::vector<double> ratio(pairs, 0.0);
  parallel_for(pairs, [&](std::size_t p) {
    std::vector<double> x, y;
    if (!probe_pair(batch, domain_metric, h, seed, p, x, y)) return;
    const double d = distance(domain_metric, x, y);
    if (d == 0.0) return;
    ratio[p] = distance(codomain_metric, apply_map(map, x), apply_map(map, y)) / d;
  });
  double best = 0.0;
  for (double r : ratio) best = std::max(best, r);
  return best;
}

}  // namespace concmeter
