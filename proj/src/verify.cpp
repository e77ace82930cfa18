#include "concmeter/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "concmeter/error.hpp"
#include "concmeter/parallel.hpp"
#include "concmeter/parameters.hpp"
#include "concmeter/rng.hpp"
#include "concmeter/stats.hpp"

namespace concmeter {

using nlohmann::json;

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::kPass: return "pass";
    case Verdict::kFail: return "fail";
    case Verdict::kNotApplicable: return "not-applicable";
  }
  return "not-applicable";
}

void CheckReport::finalize() {
  violations = extra_violations;
  applicable = 0;
  worst_margin.reset();
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    if (!precondition[i]) continue;
    ++applicable;
    const double margin = relation == Relation::kAtMost ? (lhs[i] - slack[i]) - rhs[i] : rhs[i] - (lhs[i] + slack[i]);
    // NaN margins count as violations.
    if (!(margin <= 0.0)) ++violations;
    if (!worst_margin || !(margin <= *worst_margin)) worst_margin = margin;
  }
  if (extra_applicable > 0) {
    applicable += extra_applicable;
    if (extra_worst_margin && (!worst_margin || *extra_worst_margin > *worst_margin)) worst_margin = extra_worst_margin;
  }
  if (violations > 0) {
    verdict = Verdict::kFail;
  } else {
    verdict = applicable > 0 ? Verdict::kPass : Verdict::kNotApplicable;
  }
}

json CheckReport::to_json() const {
  json grid = json::object();
  grid["eps"] = eps;
  grid["lhs"] = lhs;
  grid["rhs"] = rhs;
  grid["slack"] = slack;
  grid["precondition_satisfied"] = precondition;
  std::vector<double> excluded;
  for (std::size_t i = 0; i < precondition.size(); ++i) {
    if (!precondition[i]) excluded.push_back(eps[i]);
  }
  grid["excluded_eps"] = excluded;
  json out = json::object();
  out["check_id"] = check_id;
  out["inputs"] = inputs;
  out["quantities"] = quantities;
  out["relation"] = relation == Relation::kAtMost ? "lhs - slack <= rhs" : "lhs + slack >= rhs";
  out["grid"] = grid;
  out["violations"] = {{"count", violations},
                       {"worst_margin", worst_margin ? json(*worst_margin) : json(nullptr)}};
  out["applicable"] = applicable;
  out["verdict"] = to_string(verdict);
  out["notes"] = notes;
  out["sensitivity"] = sensitivity;
  return out;
}

void write_grid_csv(std::ostream& out, const CheckReport& report) {
  out << "eps,lhs,rhs,slack,precondition\n";
  char buf[160];
  for (std::size_t i = 0; i < report.lhs.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%d\n", report.eps[i], report.lhs[i], report.rhs[i],
                  report.slack[i], report.precondition[i] ? 1 : 0);
    out << buf;
  }
}

namespace {

json profile_json(const AnalyticProfile& p) { return {{"name", p.name}, {"C", p.C}, {"c", p.c}, {"n", p.n}}; }

json median_json(const MedianEstimate& m) {
  return {{"value", m.value}, {"ci_low", m.ci_low}, {"ci_high", m.ci_high}, {"N", m.count}};
}

json containment_json(const ContainmentConstant& c) {
  return {{"lambda", c.lambda}, {"scale", c.scale}, {"exact", c.exact}};
}

json curve_json(const ConcentrationCurve& c) {
  return {{"alpha_hat", c.alpha_hat},
          {"alpha_raw", c.alpha_raw},
          {"ci", c.ci},
          {"direction_id_of_max", c.direction_of_max},
          {"metric", c.metric},
          {"family_size", c.family_size},
          {"label", "empirical lower bound on the concentration function (half-space family)"}};
}

void require_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw Error(ErrorCode::kDimensionMismatch, std::string(what) + ": dimension mismatch");
}

void resize_grid(CheckReport& r, std::span<const double> eps) {
  r.eps.assign(eps.begin(), eps.end());
  r.lhs.assign(eps.size(), 0.0);
  r.rhs.assign(eps.size(), 0.0);
  r.slack.assign(eps.size(), 0.0);
  r.precondition.assign(eps.size(), true);
}

AnalyticProfile with_c(AnalyticProfile p, double factor) {
  p.c *= factor;
  return p;
}

// Re-evaluates the right-hand side with c halved and doubled.
template <class Fill>
void add_sensitivity(CheckReport& r, const AnalyticProfile& profile, Fill fill) {
  const std::pair<const char*, double> variants[] = {{"c_x0.5", 0.5}, {"c_x2", 2.0}};
  for (const auto& [key, factor] : variants) {
    CheckReport t;
    t.relation = r.relation;
    t.eps = r.eps;
    t.lhs = r.lhs;
    t.rhs = r.rhs;
    t.slack = r.slack;
    t.precondition = r.precondition;
    t.extra_violations = r.extra_violations;
    t.extra_applicable = r.extra_applicable;
    t.extra_worst_margin = r.extra_worst_margin;
    const AnalyticProfile p = with_c(profile, factor);
    fill(t, p);
    t.finalize();
    r.sensitivity[key] = {{"c", p.c},
                          {"violations", t.violations},
                          {"applicable", t.applicable},
                          {"verdict", to_string(t.verdict)}};
  }
}

std::vector<double> row_norms(const NormSpec& norm, const RowsView& rows) {
  std::vector<double> out(rows.count());
  parallel_for(rows.count(), [&](std::size_t i) { out[i] = norm_eval(norm, rows.row(i)); });
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

CheckReport check_prop_dec(const PropDecOptions& o) {
  const std::size_t n = o.measure.dim();
  require_dim(o.domain_metric.dim(), n, "check_prop_dec");
  require_dim(o.codomain_metric.dim(), n, "check_prop_dec");
  if (!(o.lip > 0.0)) throw Error(ErrorCode::kInvalidArgument, "check_prop_dec: lip must be positive");

  const SampleBatch batch = sample(o.measure, o.samples, o.seed);
  const double lip_est = map_lipschitz_estimate(o.map, batch.view(), o.domain_metric, o.codomain_metric, o.pairs,
                                                derive_seed(o.seed, 1));
  if (lip_est > o.lip * (1.0 + 1e-9)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "check_prop_dec: map is not %.6g-Lipschitz (empirical ratio %.6g)", o.lip, lip_est);
    throw Error(ErrorCode::kPrecondition, buf);
  }
  const PushforwardBatch image = pushforward_batch(o.map, batch);
  const ConcentrationCurve curve = concentration_lower_curve(image.image(), o.codomain_metric, o.eps, o.directions);

  CheckReport r;
  r.check_id = "prop_dec";
  resize_grid(r, o.eps);
  r.lhs = curve.alpha_hat;
  r.slack = curve.ci;
  auto fill = [&](CheckReport& t, const AnalyticProfile& prof) {
    for (std::size_t i = 0; i < t.eps.size(); ++i) t.rhs[i] = prof(t.eps[i] / o.lip);
  };
  fill(r, o.profile);
  r.finalize();
  add_sensitivity(r, o.profile, fill);
  r.quantities = {{"lip", o.lip},
                  {"lip_estimate", lip_est},
                  {"map", image.descriptor()},
                  {"profile", profile_json(o.profile)},
                  {"nu_curve", curve_json(curve)}};
  return r;
}

CheckReport check_thm_main(const ThmMainOptions& o) {
  const std::size_t n = o.measure.dim();
  require_dim(o.k.dim(), n, "check_thm_main");
  require_dim(o.l.dim(), n, "check_thm_main");
  const NormalizedPair np = normalize_containment(o.k, o.l);
  const NormSpec& l = np.l;
  const double lambda = np.containment.lambda;

  const SampleBatch batch = sample(o.measure, o.samples, o.seed);
  const MedianEstimate mk = empirical_median(row_norms(o.k, batch.view()));
  const MedianEstimate ml = empirical_median(row_norms(l, batch.view()));
  if (!(mk.value > 0.0)) throw Error(ErrorCode::kPrecondition, "check_thm_main: the median m_K must be positive");

  const PushforwardBatch image = pushforward_batch(PiMap{o.k, l}, batch);
  const ConcentrationCurve curve = concentration_lower_curve(image.image(), l, o.eps, o.directions);

  CheckReport r;
  r.check_id = "thm_main";
  resize_grid(r, o.eps);
  r.lhs = curve.alpha_hat;
  const double hk = mk.half_width();
  const double hl = ml.half_width();
  auto fill = [&](CheckReport& t, const AnalyticProfile& prof) {
    auto rhs = [&](double e, double m_k, double m_l) { return 16.0 * prof(e * m_l / (14.0 * lambda * m_k)); };
    for (std::size_t i = 0; i < t.eps.size(); ++i) {
      const double e = t.eps[i];
      t.precondition[i] = e > 0.0 && 16.0 * prof(e * ml.value / (7.0 * lambda * mk.value)) <= 1.0;
      t.rhs[i] = rhs(e, mk.value, ml.value);
      const double dl = std::fabs(rhs(e, mk.value, ml.value + hl) - rhs(e, mk.value, ml.value - hl)) / 2.0;
      const double dk = std::fabs(rhs(e, mk.value + hk, ml.value) - rhs(e, mk.value - hk, ml.value)) / 2.0;
      t.slack[i] = curve.ci[i] + dl + dk;
    }
  };
  fill(r, o.profile);
  r.finalize();
  add_sensitivity(r, o.profile, fill);
  const bool sandwich = mk.value <= ml.value + hk + hl && ml.value <= lambda * mk.value + hl + lambda * hk;
  r.quantities = {{"m_K", median_json(mk)},
                  {"m_L", median_json(ml)},
                  {"lambda", lambda},
                  {"containment", containment_json(np.containment)},
                  {"L_normalized", {{"p", l.p()}, {"scale", l.scale()}}},
                  {"beta_identity", lambda * mk.value / ml.value},
                  {"median_sandwich_holds", sandwich},
                  {"map", image.descriptor()},
                  {"profile", profile_json(o.profile)},
                  {"nu_curve", curve_json(curve)}};
  if (r.verdict == Verdict::kNotApplicable) {
    r.notes.push_back("no grid point satisfies 16*profile(eps*m_L/(7*lambda*m_K)) <= 1");
  }
  return r;
}

CheckReport check_inclusion_lemma(const InclusionOptions& o) {
  const std::size_t n = o.measure.dim();
  require_dim(o.k.dim(), n, "check_inclusion_lemma");
  require_dim(o.l.dim(), n, "check_inclusion_lemma");
  if (!(o.eps > 0.0)) throw Error(ErrorCode::kInvalidArgument, "check_inclusion_lemma: eps must be positive");
  std::vector<double> theta = o.theta;
  if (theta.empty()) {
    theta.assign(n, 0.0);
    theta[0] = 1.0;
  }
  require_dim(theta.size(), n, "check_inclusion_lemma");

  const NormalizedPair np = normalize_containment(o.k, o.l);
  const NormSpec& l = np.l;
  const double lambda = np.containment.lambda;
  const SampleBatch batch = sample(o.measure, o.samples, o.seed);
  const RowsView rows = batch.view();
  const std::vector<double> nk = row_norms(o.k, rows);
  const std::vector<double> nl = row_norms(l, rows);
  const MedianEstimate mk = empirical_median(nk);
  const MedianEstimate ml = empirical_median(nl);
  const double delta = o.eps / (7.0 * mk.value);

  const PushforwardBatch image = pushforward_batch(PiMap{o.k, l}, batch);
  const RowsView img = image.image();
  std::vector<double> proj(rows.count());
  for (std::size_t i = 0; i < proj.size(); ++i) proj[i] = dot(theta, img.row(i));
  std::vector<double> sorted = proj;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>((sorted.size() + 1) / 2 - 1),
                   sorted.end());
  const double t = sorted[(sorted.size() + 1) / 2 - 1];
  const double t_eps = t + o.eps * norm_eval(dual_norm(l), theta);

  std::vector<std::size_t> j_members;
  for (std::size_t i = 0; i < proj.size(); ++i) {
    if (proj[i] <= t && std::fabs(nk[i] - mk.value) < delta * mk.value && std::fabs(nl[i] - ml.value) < delta * ml.value) {
      j_members.push_back(i);
    }
  }

  CheckReport r;
  r.check_id = "inclusion_lemma";
  const double radius = delta * ml.value / lambda;
  const double bound = 7.0 * delta * mk.value;
  const double tol = 1e-12 * std::max(1.0, bound);
  std::size_t distance_violations = 0;
  std::size_t membership_violations = 0;
  double max_distance = 0.0;
  double max_excess = -kInfinity;
  if (!j_members.empty()) {
    struct Probe {
      double distance = 0.0;
      double excess = 0.0;
      bool member = true;
    };
    std::vector<Probe> probes(o.probes);
    const std::uint64_t pseed = derive_seed(o.seed, 2);
    parallel_for(o.probes, [&](std::size_t q) {
      CounterRng rng(pseed, q, 0);
      const std::size_t yi = j_members[rng.next_u64() % j_members.size()];
      const auto y = rows.row(yi);
      std::vector<double> x(y.begin(), y.end());
      switch (q % 4) {
        case 0: break;
        case 1: {
          const double f = 1.0 + radius * (1.0 - 1e-12) / nk[yi];
          for (double& v : x) v *= f;
          break;
        }
        default: {
          std::vector<double> v(n);
          for (std::size_t c = 0; c < n; ++c) v[c] = CounterRng(pseed, q, static_cast<std::uint32_t>(c + 1)).normal();
          const double step = radius * (1.0 - 1e-12) * (q % 4 == 2 ? 1.0 : rng.uniform()) / norm_eval(o.k, v);
          for (std::size_t c = 0; c < n; ++c) x[c] += step * v[c];
          break;
        }
      }
      const auto px = pi_map(o.k, l, x);
      const auto py = img.row(yi);
      std::vector<double> diff(n);
      for (std::size_t c = 0; c < n; ++c) diff[c] = px[c] - py[c];
      const double d = norm_eval(l, diff);
      probes[q] = {d, d - bound, dot(theta, px) <= t_eps + tol};
    });
    for (const Probe& p : probes) {
      max_distance = std::max(max_distance, p.distance);
      max_excess = std::max(max_excess, p.excess);
      if (p.excess > tol) ++distance_violations;
      if (!p.member) ++membership_violations;
    }
    r.extra_applicable = o.probes;
    r.extra_violations = distance_violations + membership_violations;
    r.extra_worst_margin = max_excess - tol;
  } else {
    r.notes.push_back("J is empty on the sample");
  }
  r.finalize();
  r.quantities = {{"m_K", median_json(mk)},
                  {"m_L", median_json(ml)},
                  {"lambda", lambda},
                  {"containment", containment_json(np.containment)},
                  {"delta", delta},
                  {"eps", o.eps},
                  {"probe_radius", radius},
                  {"distance_bound", bound},
                  {"max_distance", max_distance},
                  {"J_size", j_members.size()},
                  {"A_threshold", t},
                  {"A_eps_threshold", t_eps},
                  {"probes", j_members.empty() ? 0 : o.probes},
                  {"distance_violations", distance_violations},
                  {"membership_violations", membership_violations},
                  {"tolerance", tol}};
  return r;
}

CheckReport check_ledoux_lemma(const LedouxOptions& o) {
  const std::size_t n = o.measure.dim();
  require_dim(o.metric.dim(), n, "check_ledoux_lemma");
  if (o.pairs == 0) throw Error(ErrorCode::kInvalidArgument, "check_ledoux_lemma: need at least one pair");
  const SampleBatch batch = sample(o.measure, o.samples, o.seed);
  const RowsView rows = batch.view();
  const std::size_t count = rows.count();
  if (count < kMinMedianSamples) throw Error(ErrorCode::kInsufficientData, "check_ledoux_lemma: need >= 100 samples");
  const NormSpec dual = dual_norm(o.metric);
  const DirectionFamily family{false, o.pairs, derive_seed(o.seed, 3)};
  const std::uint64_t qseed = derive_seed(o.seed, 4);

  struct Pair {
    double dist = 0.0, mass_a = 0.0, mass_b = 0.0;
  };
  std::vector<Pair> pairs(o.pairs);
  parallel_for(o.pairs, [&](std::size_t k) {
    const auto theta = family_direction(family, n, k);
    std::vector<double> proj(count);
    for (std::size_t i = 0; i < count; ++i) proj[i] = dot(theta, rows.row(i));
    double qa = 0.5, qb = 0.5;
    if (k > 0) {
      CounterRng rng(qseed, k, 0);
      qa = 0.01 + 0.98 * rng.uniform();
      qb = qa + (0.99 - qa) * rng.uniform();
    }
    auto order_stat = [&](double q) {
      const auto idx = static_cast<std::size_t>(std::min<double>(static_cast<double>(count - 1),
                                                                 std::floor(q * static_cast<double>(count))));
      std::nth_element(proj.begin(), proj.begin() + static_cast<std::ptrdiff_t>(idx), proj.end());
      return proj[idx];
    };
    const double a = order_stat(qa);
    const double b = order_stat(qb);
    std::size_t in_a = 0, in_b = 0;
    for (double v : proj) {
      in_a += v <= a;
      in_b += v >= b;
    }
    const double nd = static_cast<double>(count);
    pairs[k] = {(b - a) / norm_eval(dual, theta), static_cast<double>(in_a) / nd, static_cast<double>(in_b) / nd};
  });

  CheckReport r;
  r.check_id = "ledoux_lemma";
  r.eps.resize(o.pairs);
  r.lhs.resize(o.pairs);
  r.slack.resize(o.pairs);
  r.rhs.resize(o.pairs);
  r.precondition.assign(o.pairs, true);
  for (std::size_t k = 0; k < o.pairs; ++k) {
    const Pair& p = pairs[k];
    const double ha = binomial_half_width(p.mass_a, count);
    const double hb = binomial_half_width(p.mass_b, count);
    r.eps[k] = p.dist;
    r.lhs[k] = p.mass_a * p.mass_b;
    r.slack[k] = (p.mass_a + ha) * (p.mass_b + hb) - r.lhs[k];
  }
  auto fill = [&](CheckReport& t, const AnalyticProfile& prof) {
    for (std::size_t k = 0; k < t.eps.size(); ++k) t.rhs[k] = 4.0 * prof(t.eps[k] / 2.0);
  };
  fill(r, o.profile);
  r.finalize();
  add_sensitivity(r, o.profile, fill);
  r.quantities = {{"pairs", o.pairs},
                  {"metric", o.metric.label()},
                  {"profile", profile_json(o.profile)},
                  {"touching_pair_index", 0}};
  r.notes.push_back("grid eps holds dist(A, B) per pair; pair 0 is the touching pair at the median");
  return r;
}

CheckReport check_cor_farlinf(const CorFarlinfOptions& o) {
  if (o.n == 0) throw Error(ErrorCode::kInvalidArgument, "check_cor_farlinf: n must be positive");
  const NormSpec cube = NormSpec::lp(o.n, kInfinity);
  const MeasureSpec nu = o.nu ? *o.nu : MeasureSpec::uniform_ball(cube);
  require_dim(nu.dim(), o.n, "check_cor_farlinf");
  const SampleBatch batch = sample(nu, o.samples, o.seed);
  const std::vector<double> radii = row_norms(cube, batch.view());
  for (double v : radii) {
    if (v > 1.0 + 1e-12) throw Error(ErrorCode::kPrecondition, "check_cor_farlinf: measure is not supported on B_inf");
  }
  std::vector<double> sorted = radii;
  std::sort(sorted.begin(), sorted.end());
  const ConcentrationCurve curve = concentration_lower_curve(batch.view(), cube, o.eps, o.directions);

  CheckReport r;
  r.check_id = "cor_farlinf";
  r.relation = Relation::kAtLeast;
  resize_grid(r, o.eps);
  std::vector<double> masses(o.eps.size());
  const double nd = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < o.eps.size(); ++i) {
    const double e = o.eps[i];
    const double mass =
        static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), e) - sorted.begin()) / nd;
    masses[i] = mass;
    r.precondition[i] = e > 0.0 && e < 1.0;
    r.lhs[i] = curve.alpha_hat[i];
    r.rhs[i] = cube_concentration_floor(mass, o.n);
    r.slack[i] = curve.ci[i] + binomial_half_width(mass, sorted.size()) / (2.0 * static_cast<double>(o.n));
  }
  r.finalize();
  r.quantities = {{"n", o.n},
                  {"nu", nu.label()},
                  {"small_ball_mass", masses},
                  {"nu_curve", curve_json(curve)}};
  r.notes.push_back("no analytic profile enters this check; sensitivity omitted");
  return r;
}

CheckReport check_thm_farlinf(const ThmFarlinfOptions& o) {
  const std::size_t n = o.measure.dim();
  require_dim(o.x_norm.dim(), n, "check_thm_farlinf");
  if (o.functionals.empty() || o.functionals.size() % n != 0) {
    throw Error(ErrorCode::kDimensionMismatch, "check_thm_farlinf: functionals must be an N x n matrix");
  }
  if (!(o.d >= 1.0)) throw Error(ErrorCode::kInvalidArgument, "check_thm_farlinf: d must be >= 1");
  const std::size_t m = o.functionals.size() / n;
  const SampleBatch batch = sample(o.measure, o.samples, o.seed);
  const RowsView rows = batch.view();
  const std::vector<double> radii = row_norms(o.x_norm, rows);

  auto embed = [&](std::span<const double> x) {
    double best = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      best = std::max(best, std::fabs(dot(std::span<const double>(o.functionals).subspan(i * n, n), x)));
    }
    return best;
  };
  std::size_t support_failures = 0;
  std::size_t embedding_failures = 0;
  auto check_point = [&](std::span<const double> x, double norm) {
    const double e = embed(x);
    if (e > norm * (1.0 + 1e-12) || norm / o.d > e * (1.0 + 1e-12)) ++embedding_failures;
  };
  for (std::size_t i = 0; i < rows.count(); ++i) {
    if (radii[i] > 1.0 + 1e-12) ++support_failures;
    check_point(rows.row(i), radii[i]);
  }
  std::vector<double> e(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(e.begin(), e.end(), 0.0);
    e[j] = 1.0;
    check_point(e, norm_eval(o.x_norm, e));
  }
  std::fill(e.begin(), e.end(), 1.0);
  check_point(e, norm_eval(o.x_norm, e));
  if (support_failures > 0) {
    throw Error(ErrorCode::kPrecondition, "check_thm_farlinf: measure is not supported on the unit ball of X");
  }
  if (embedding_failures > 0) {
    throw Error(ErrorCode::kPrecondition, "check_thm_farlinf: functionals are not a d-embedding on " +
                                              std::to_string(embedding_failures) + " probe points");
  }

  std::vector<double> sorted = radii;
  std::sort(sorted.begin(), sorted.end());
  const double nd = static_cast<double>(sorted.size());
  const ConcentrationCurve curve = concentration_lower_curve(rows, o.x_norm, o.eps, DirectionFamily{});
  std::vector<double> masses(o.eps.size());
  std::vector<double> mass_hw(o.eps.size());
  for (std::size_t i = 0; i < o.eps.size(); ++i) {
    masses[i] = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), o.d * o.eps[i]) - sorted.begin()) / nd;
    mass_hw[i] = binomial_half_width(masses[i], sorted.size());
  }

  CheckReport r;
  r.check_id = "thm_farlinf";
  r.relation = Relation::kAtLeast;
  resize_grid(r, o.eps);
  auto fill = [&](CheckReport& t, const AnalyticProfile& prof) {
    for (std::size_t i = 0; i < t.eps.size(); ++i) {
      const double eps = t.eps[i];
      const double a = prof(eps);
      t.precondition[i] = eps > 0.0 && eps < 1.0 / o.d && a > 0.0;
      t.lhs[i] = static_cast<double>(m);
      if (!(a > 0.0)) {
        t.rhs[i] = kInfinity;
        continue;
      }
      const double b = embedding_lower_bound_N(a, masses[i]).value;
      const double b_hi = embedding_lower_bound_N(a, std::min(1.0, masses[i] + mass_hw[i])).value;
      t.rhs[i] = b;
      t.slack[i] = b - b_hi;
    }
  };
  fill(r, o.profile);
  r.finalize();
  add_sensitivity(r, o.profile, fill);
  std::vector<json> from_hat;
  for (std::size_t i = 0; i < o.eps.size(); ++i) {
    const EmbeddingBound b = embedding_lower_bound_N(curve.alpha_hat[i], masses[i]);
    from_hat.push_back(b.infinite ? json(nullptr) : json(b.value));
  }
  r.quantities = {{"N_functionals", m},
                  {"d", o.d},
                  {"small_ball_mass", masses},
                  {"profile", profile_json(o.profile)},
                  {"bound_from_alpha_hat", from_hat},
                  {"alpha_hat", curve.alpha_hat}};
  r.notes.push_back("bound_from_alpha_hat uses the empirical lower bound on alpha and is not asserted");
  return r;
}

CheckReport check_thm_main1(const ThmMain1Options& o) {
  if (!(o.p >= 1.0 && o.p <= 2.0)) throw Error(ErrorCode::kUnsupported, "check_thm_main1: p must lie in [1, 2]");
  const std::size_t n = o.n;
  const NormSpec l = NormSpec::lp(n, o.p);
  double lambda = 1.0;
  json containment = containment_json(ContainmentConstant{});
  if (o.k) {
    require_dim(o.k->dim(), n, "check_thm_main1");
    const ContainmentConstant cc = containment_lambda(*o.k, l);
    lambda = cc.lambda;
    containment = containment_json(cc);
  }
  const MeasureSpec mu = MeasureSpec::generalized_gaussian(n, o.p);
  const MeasureSpec nu = MeasureSpec::uniform_ball(l);
  const RadialCdf f_mu = radial_cdf(mu, l);
  const RadialCdf f_nu = radial_cdf(nu, l);
  const MonotoneMap u = radial_transport(f_mu, f_nu, TransportOptions{o.knots});
  const double lip = lipschitz_constant(u);

  const SampleBatch batch = sample(mu, o.samples, o.seed);
  const std::vector<double> radii = row_norms(l, batch.view());
  std::vector<double> moved(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) moved[i] = u(radii[i]);
  const MedianEstimate ml = empirical_median(radii);
  const MedianEstimate m = empirical_median(moved);
  const double ks = ks_statistic(moved, [&](double r) { return f_nu.eval(r); });

  const PushforwardBatch image = pushforward_batch(RadialMap{u, l}, batch);
  const ConcentrationCurve curve = concentration_lower_curve(image.image(), l, o.eps, o.directions);

  CheckReport r;
  r.check_id = "thm_main1";
  resize_grid(r, o.eps);
  r.lhs = curve.alpha_hat;
  r.slack = curve.ci;
  auto fill = [&](CheckReport& t, const AnalyticProfile& prof) {
    for (std::size_t i = 0; i < t.eps.size(); ++i) {
      const double e = t.eps[i];
      const double pre = 8.0 * (prof(e / (7.0 * lip * lambda)) + prof(e * m.value / (7.0 * lip * lip * ml.value)));
      t.precondition[i] = e > 0.0 && pre <= 1.0;
      t.rhs[i] = 16.0 * prof(e / (14.0 * lip * lambda));
    }
  };
  fill(r, o.profile);
  r.finalize();
  add_sensitivity(r, o.profile, fill);

  // Largest c with alpha_hat(ε) <= exp(-c ε² n) on the resolved part of the curve.
  std::optional<double> c_fit;
  for (std::size_t i = 0; i < o.eps.size(); ++i) {
    const double a = curve.alpha_hat[i];
    const double e = o.eps[i];
    if (e <= 0.0 || a < 1e-3) continue;
    const double c = -std::log(a) / (e * e * static_cast<double>(n));
    if (!c_fit || c < *c_fit) c_fit = c;
  }
  r.quantities = {{"p", o.p},
                  {"n", n},
                  {"lip_u", lip},
                  {"n_times_lip_u", static_cast<double>(n) * lip},
                  {"m_L", median_json(ml)},
                  {"m", median_json(m)},
                  {"lambda", lambda},
                  {"containment", containment},
                  {"u", u.descriptor()},
                  {"u_knots", u.knots().size()},
                  {"radial_source", f_mu.description()},
                  {"radial_target", f_nu.description()},
                  {"image_radial_ks", ks},
                  {"subgaussian_fit", {{"K", 1.0}, {"c", c_fit ? json(*c_fit) : json(nullptr)}, {"min_alpha", 1e-3}}},
                  {"profile", profile_json(o.profile)},
                  {"nu_curve", curve_json(curve)}};
  if (o.k) {
    r.quantities["asserted"] = false;
    r.notes.push_back("two-norm variant: grid reported, verdict not asserted");
    r.verdict = Verdict::kNotApplicable;
  } else if (r.verdict == Verdict::kNotApplicable) {
    r.notes.push_back("no grid point satisfies the two-term precondition");
  }
  return r;
}

CheckReport check_median_sandwich(const SandwichOptions& o) {
  const std::size_t n = o.measure.dim();
  require_dim(o.k.dim(), n, "check_median_sandwich");
  require_dim(o.l.dim(), n, "check_median_sandwich");
  const NormalizedPair np = normalize_containment(o.k, o.l);
  const double lambda = np.containment.lambda;
  const SampleBatch batch = sample(o.measure, o.samples, o.seed);
  const MedianEstimate mk = empirical_median(row_norms(o.k, batch.view()));
  const MedianEstimate ml = empirical_median(row_norms(np.l, batch.view()));
  const double hk = mk.half_width();
  const double hl = ml.half_width();
  const double lower = mk.value - ml.value - (hk + hl);
  const double upper = ml.value - lambda * mk.value - (hl + lambda * hk);

  CheckReport r;
  r.check_id = "median_sandwich";
  r.extra_applicable = 2;
  r.extra_violations = (lower > 0.0) + (upper > 0.0);
  r.extra_worst_margin = std::max(lower, upper);
  r.finalize();
  r.quantities = {{"m_K", median_json(mk)},
                  {"m_L", median_json(ml)},
                  {"lambda", lambda},
                  {"containment", containment_json(np.containment)},
                  {"lower_margin", lower},
                  {"upper_margin", upper}};
  return r;
}

CheckReport check_pi_lipschitz(const PiLipschitzOptions& o) {
  const std::size_t n = o.measure.dim();
  require_dim(o.k.dim(), n, "check_pi_lipschitz");
  require_dim(o.l.dim(), n, "check_pi_lipschitz");
  const NormalizedPair np = normalize_containment(o.k, o.l);
  const SampleBatch batch = sample(o.measure, o.samples, o.seed);
  const PiLipschitzEstimate est = pi_lipschitz_estimate(o.k, np.l, batch.view(), o.pairs, derive_seed(o.seed, 5));

  CheckReport r;
  r.check_id = "pi_lipschitz";
  r.extra_applicable = est.pairs;
  r.extra_violations = est.violations;
  r.extra_worst_margin = est.estimate - est.bound - 1e-9;
  r.finalize();
  r.quantities = {{"estimate", est.estimate},
                  {"bound", est.bound},
                  {"lambda", est.lambda},
                  {"containment", containment_json(np.containment)},
                  {"pairs", est.pairs},
                  {"skipped", est.skipped},
                  {"other_pairings", {{"K_to_K", est.k_to_k}, {"L_to_L", est.l_to_l}, {"L_to_K", est.l_to_k}}}};
  r.notes.push_back("asserted pairing: domain metric d_K, codomain metric d_L");
  return r;
}

}  // namespace concmeter
