// Acceptance suite: one PASS/FAIL line per criterion, tolerances as specified.
// Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "concmeter/concentration.hpp"
#include "concmeter/jobs.hpp"
#include "concmeter/measures.hpp"
#include "concmeter/normspace.hpp"
#include "concmeter/parameters.hpp"
#include "concmeter/stats.hpp"
#include "concmeter/transport.hpp"
#include "concmeter/verify.hpp"

using namespace concmeter;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kN = 100000;
constexpr std::uint64_t kSeed = 20240601;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<double> grid(double start, double stop, double step) {
  std::vector<double> out;
  for (long i = 0;; ++i) {
    const double e = std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12;
    if (e > stop + 1e-12) break;
    out.push_back(e);
  }
  return out;
}

double n_lip_oracle(std::size_t n) {
  const double a = static_cast<double>(n);
  return a * std::exp(-std::lgamma(a + 1.0) / a);
}

Outcome median_law() {
  double worst = 0.0;
  std::string at;
  for (std::size_t n : {2, 8, 32}) {
    for (double p : {1.0, 2.0, kInfinity}) {
      const NormSpec k = NormSpec::lp(n, p);
      const auto batch = sample(MeasureSpec::uniform_ball(k), kN, kSeed + n);
      std::vector<double> r(batch.count());
      for (std::size_t i = 0; i < r.size(); ++i) r[i] = k(batch.row(i));
      const double err = std::abs(empirical_median(r).value - std::pow(2.0, -1.0 / static_cast<double>(n)));
      if (err >= worst) {
        worst = err;
        at = fmt("n=%zu p=%g", n, p);
      }
    }
  }
  return {worst <= 0.01, fmt("max |m - 2^(-1/n)| = %.4f at %s (tol 0.01)", worst, at.c_str())};
}

Outcome median_sandwich() {
  const double ps[] = {1.0, 1.5, 2.0, 4.0, kInfinity};
  std::size_t checks = 0, violations = 0;
  for (std::size_t n : {4, 16}) {
    for (double pk : ps) {
      for (double pl : ps) {
        if (pk == pl) continue;
        const NormSpec k = NormSpec::lp(n, pk);
        const auto r = check_median_sandwich({MeasureSpec::uniform_ball(k), k, NormSpec::lp(n, pl), kN, kSeed + checks});
        ++checks;
        violations += r.violations;
      }
    }
  }
  return {violations == 0, fmt("%zu violations over %zu ordered l_p pairs, p in {1,1.5,2,4,inf}, n in {4,16}",
                               violations, checks)};
}

Outcome pi_lipschitz() {
  std::size_t violations = 0;
  std::string ratios;
  for (std::size_t n : {2, 4, 8, 16}) {
    const NormSpec k = NormSpec::lp(n, 2.0);
    const auto r = check_pi_lipschitz({MeasureSpec::uniform_ball(k), k,
                                       NormSpec::lp(n, 1.0, 1.0 / std::sqrt(static_cast<double>(n))), kN, 10000,
                                       kSeed + n});
    violations += r.violations;
    ratios += fmt(" n=%zu:%.3f/%.3f", n, r.quantities["estimate"].get<double>(), r.quantities["bound"].get<double>());
  }
  return {violations == 0, fmt("%zu violations over 1e5 pairs each; sup/bound%s", violations, ratios.c_str())};
}

Outcome inclusion() {
  const NormSpec k = NormSpec::lp(16, 2.0);
  const auto r =
      check_inclusion_lemma({MeasureSpec::haar_sphere(16), k, NormSpec::lp(16, 1.0, 0.25), 0.5, {}, kN, kN, kSeed});
  return {r.violations == 0 && r.applicable > 0,
          fmt("%zu violations over %zu applicable probes, verdict %s", r.violations, r.applicable, to_string(r.verdict))};
}

Outcome thm_main() {
  struct Case {
    MeasureSpec mu;
    double p;
  };
  std::size_t violations = 0, applicable = 0;
  std::string detail;
  const std::vector<std::pair<std::size_t, Case>> cases = {
      {32, {MeasureSpec::haar_sphere(32), 1.0}},
      {64, {MeasureSpec::haar_sphere(64), 1.0}},
      {32, {MeasureSpec::uniform_ball(NormSpec::lp(32, 2.0)), 1.5}},
  };
  for (const auto& [n, c] : cases) {
    const NormSpec k = NormSpec::lp(n, 2.0);
    const auto r = check_thm_main(
        {c.mu, k, NormSpec::lp(n, c.p), analytic_profile("sphere", n), grid(0.05, 1.0, 0.05), kN, kSeed + n, {}});
    violations += r.violations;
    applicable += r.applicable;
    detail += fmt(" %s->l%g n=%zu: %s;", c.mu.label().c_str(), c.p, n, to_string(r.verdict));
  }
  std::string note = applicable == 0 ? " vacuous: the precondition holds at no grid point" : "";
  return {violations == 0,
          fmt("%zu violations, %zu applicable points;%s%s", violations, applicable, detail.c_str(), note.c_str())};
}

Outcome cube_floor() {
  std::size_t violations = 0, applicable = 0;
  for (std::size_t n : {2, 8, 32}) {
    const auto r = check_cor_farlinf({n, std::nullopt, grid(0.1, 0.9, 0.1), kN, kSeed + n, {}});
    violations += r.violations;
    applicable += r.applicable;
  }
  return {violations == 0 && applicable == 27, fmt("%zu violations over %zu grid points", violations, applicable)};
}

Outcome radial_transport_check() {
  bool ok = true;
  std::string detail;
  double prev = 0.0;
  for (std::size_t n : {4, 16, 64}) {
    const auto u = radial_transport(RadialCdf::gamma_power(n, 1.0), RadialCdf::uniform_ball(n));
    const NormSpec l1 = NormSpec::lp(n, 1.0);
    const auto batch = sample(MeasureSpec::generalized_gaussian(n, 1.0), kN, kSeed + n);
    std::vector<double> r(batch.count());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = u(l1(batch.row(i)));
    const double nd = static_cast<double>(n);
    const double ks = ks_statistic(r, [&](double x) { return std::pow(std::clamp(x, 0.0, 1.0), nd); });
    const double scaled = nd * lipschitz_constant(u);
    const double expected = n_lip_oracle(n);
    ok = ok && ks <= 0.01 && std::abs(scaled - expected) <= 0.02 && scaled > prev && scaled < std::exp(1.0);
    prev = scaled;
    detail += fmt(" n=%zu: KS %.4f, n*Lip %.4f vs %.4f;", n, ks, scaled, expected);
  }
  return {ok, "KS <= 0.01, |n*Lip - n(n!)^(-1/n)| <= 0.02, increasing below e:" + detail};
}

Outcome beta_scaling() {
  auto bt = [](std::size_t n, double p) {
    const NormSpec k = NormSpec::lp(n, 2.0);
    return beta_tilde(MeasureSpec::cone_surface(k), k, NormSpec::lp(n, p), kN, kSeed + n).value;
  };
  bool ok = true;
  std::string detail;

  const double target = std::sqrt(std::numbers::pi / 2.0);
  double lo = 1e300, hi = 0.0, worst = 0.0;
  for (std::size_t n = 32; n <= 512; n *= 2) {
    const double v = bt(n, 1.0);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    worst = std::max(worst, std::abs(v / target - 1.0));
  }
  const bool l1_ok = worst <= 0.05 && hi / lo - 1.0 <= 0.10;
  ok = ok && l1_ok;
  detail += fmt(" [%s] l1: max rel. dev. %.3f (tol 0.05), spread %.3f (tol 0.10);", l1_ok ? "ok" : "fail", worst,
                hi / lo - 1.0);

  std::vector<double> logn, logv4, logv8;
  double worst_inf = 0.0;
  std::string per_n;
  for (std::size_t n = 16; n <= 1024; n *= 2) {
    const double nd = static_cast<double>(n);
    const double rel = bt(n, kInfinity) / std::sqrt(nd / (2.0 * std::log(nd))) - 1.0;
    worst_inf = std::max(worst_inf, std::abs(rel));
    per_n += fmt(" %zu:%+.3f", n, rel);
    logn.push_back(std::log(nd));
    logv4.push_back(std::log(bt(n, 4.0)));
    logv8.push_back(std::log(bt(n, 8.0)));
  }
  const bool inf_ok = worst_inf <= 0.10;
  ok = ok && inf_ok;
  detail += fmt(" [%s] linf: rel. dev. from sqrt(n/(2 ln n)) by n%s (tol 0.10);", inf_ok ? "ok" : "fail",
                per_n.c_str());

  const double s4 = least_squares_slope(logn, logv4), s8 = least_squares_slope(logn, logv8);
  const bool slope_ok = std::abs(s4 - 0.25) <= 0.05 && std::abs(s8 - 0.375) <= 0.05;
  ok = ok && slope_ok;
  detail += fmt(" [%s] slopes n=16..1024: l4 %.3f vs 0.25, l8 %.3f vs 0.375 (tol 0.05)", slope_ok ? "ok" : "fail", s4,
                s8);
  return {ok, detail};
}

Outcome thm_main1() {
  std::size_t violations = 0, applicable = 0;
  std::string detail;
  std::vector<double> fits;
  const auto eps = grid(0.02, 2.0, 0.02);
  for (double p : {1.0, 2.0}) {
    for (std::size_t n : {16, 32, 64}) {
      const auto profile = analytic_profile(p == 1.0 ? "gamma1" : "gaussian", n);
      const auto r = check_thm_main1({p, n, profile, std::nullopt, eps, kN, kSeed + n, 4096, {}});
      violations += r.violations;
      applicable += r.applicable;
      detail += fmt(" p=%g n=%zu %s;", p, n, to_string(r.verdict));
      const json& c = r.quantities["subgaussian_fit"]["c"];
      if (p == 1.0 && c.is_number()) fits.push_back(c.get<double>());
    }
  }
  bool stable = fits.size() == 3;
  double spread = 0.0;
  if (stable) {
    const double m = mean(fits);
    for (double c : fits) spread = std::max(spread, std::abs(c / m - 1.0));
    stable = m > 0.0 && spread <= 0.25;
  }
  std::string cs;
  for (double c : fits) cs += fmt(" %.3f", c);
  return {violations == 0 && stable, fmt("%zu violations, %zu applicable points;%s p=1 fitted c:%s, max dev. from mean "
                                         "%.3f (tol 0.25)",
                                         violations, applicable, detail.c_str(), cs.c_str(), spread)};
}

Outcome ledoux() {
  const auto r = check_ledoux_lemma(
      {MeasureSpec::haar_sphere(64), NormSpec::lp(64, 2.0), analytic_profile("sphere", 64), 1000, kN, kSeed});
  return {r.violations == 0 && r.applicable == 1000,
          fmt("%zu violations over %zu pairs", r.violations, r.applicable)};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

// One job per criterion, run at reduced N with 1 and 4 workers and repeated.
Outcome determinism() {
  const json config = {
      {"seed", kSeed},
      {"jobs",
       {{{"type", "median"}, {"n", {2, 8}}, {"N", 20000}, {"measure", {{"family", "uniform_ball"}, {"p", 1}}}},
        {{"type", "median_sandwich"}, {"n", 8}, {"N", 20000}, {"K", "l2"}, {"L", "l1"}},
        {{"type", "pi_lipschitz"}, {"n", 8}, {"N", 5000}, {"pairs", 20000}, {"K", "l2"}, {"L", "l1"}},
        {{"type", "inclusion_lemma"}, {"n", 16}, {"N", 20000}, {"probes", 20000}, {"K", "l2"}, {"L", "l1"}},
        {{"type", "thm_main"}, {"n", 32}, {"N", 20000}, {"K", "l2"}, {"L", "l1"}},
        {{"type", "cor_farlinf"}, {"n", {2, 8}}, {"N", 20000}},
        {{"type", "transport"}, {"n", 16}, {"N", 20000}},
        {{"type", "beta"}, {"n", 64}, {"N", 20000}, {"K", "l2"}, {"L", "l1"}, {"variant", "beta_tilde"},
         {"measure", {{"family", "cone_surface"}, {"p", 2}}}},
        {{"type", "thm_main1"}, {"n", 32}, {"N", 20000}, {"p", 1}},
        {{"type", "ledoux_lemma"}, {"n", 64}, {"N", 20000}, {"pairs", 200}}}}};
  const json resolved = resolve_config(config, std::nullopt);
  const fs::path root = fs::temp_directory_path() / "concmeter-acceptance";
  fs::remove_all(root);
  const auto a = run_config(resolved, (root / "w1").string(), 1);
  const auto b = run_config(resolved, (root / "w1-again").string(), 1);
  const auto c = run_config(resolved, (root / "w4").string(), 4);
  std::size_t differing = 0;
  bool same_files = a.files == b.files && a.files == c.files;
  for (const auto& f : a.files) {
    const std::string ref = slurp(root / "w1" / f);
    if (ref != slurp(root / "w1-again" / f) || ref != slurp(root / "w4" / f)) ++differing;
  }
  fs::remove_all(root);
  return {same_files && differing == 0 && a.exit_code != 1,
          fmt("%zu of %zu files differ across repeat and --jobs 1/4 (exit %d)", differing, a.files.size(), a.exit_code)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "median law", 10, median_law},
      {2, "median sandwich", 30, median_sandwich},
      {3, "pi Lipschitz", 30, pi_lipschitz},
      {4, "inclusion chain", 60, inclusion},
      {5, "main theorem end-to-end", 300, thm_main},
      {6, "cube floor", 60, cube_floor},
      {7, "radial transport", 60, radial_transport_check},
      {8, "beta_tilde scaling", 600, beta_scaling},
      {9, "main1 theorem", 300, thm_main1},
      {10, "Ledoux lemma", 60, ledoux},
      {11, "determinism", 600, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.budget_s;
    const bool pass = o.pass && in_time;
    failed += pass ? 0 : 1;
    std::printf("%s %2d %s: %s [%.1f s of %.0f s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                c.budget_s);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
