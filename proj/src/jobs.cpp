#include "concmeter/jobs.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "concmeter/error.hpp"
#include "concmeter/parallel.hpp"
#include "concmeter/parameters.hpp"
#include "concmeter/rng.hpp"
#include "concmeter/stats.hpp"

namespace concmeter {

using nlohmann::json;

namespace {

constexpr std::size_t kDefaultSamples = 100000;

[[noreturn]] void config_error(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::kConfig, path + ": " + msg);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Reads an object field by field and rejects keys nobody asked for.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) config_error(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string at(const std::string& key) const { return path_ + "." + key; }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key) && !j_[key].is_null();
  }
  const json& get(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }
  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    if (!has(key)) {
      if (!fallback) config_error(at(key), "missing required field");
      return *fallback;
    }
    const json& v = get(key);
    if (!v.is_number()) config_error(at(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) config_error(at(key), "expected a finite number");
    return d;
  }
  std::uint64_t integer(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt,
                        std::uint64_t min = 0) {
    if (!has(key)) {
      if (!fallback) config_error(at(key), "missing required field");
      return *fallback;
    }
    const json& v = get(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
      config_error(at(key), "expected a non-negative integer");
    }
    const auto out = v.get<std::uint64_t>();
    if (out < min) config_error(at(key), "must be >= " + std::to_string(min));
    return out;
  }
  std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    if (!has(key)) {
      if (!fallback) config_error(at(key), "missing required field");
      return *fallback;
    }
    const json& v = get(key);
    if (!v.is_string()) config_error(at(key), "expected a string");
    return v.get<std::string>();
  }
  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = get(key);
    if (!v.is_boolean()) config_error(at(key), "expected true or false");
    return v.get<bool>();
  }
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) config_error(path_, "unknown key '" + it.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

double parse_exponent(const json& v, const std::string& path) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "infinity") return kInfinity;
    config_error(path, "expected a number >= 1 or \"inf\"");
  }
  if (!v.is_number()) config_error(path, "expected a number >= 1 or \"inf\"");
  const double p = v.get<double>();
  if (!(p >= 1.0)) config_error(path, "exponent must be >= 1");
  return p;
}

json exponent_json(double p) { return std::isinf(p) ? json("inf") : json(p); }

// "l2", "l1.5", "linf"
std::optional<double> parse_norm_shorthand(const std::string& s) {
  if (s.size() < 2 || s[0] != 'l') return std::nullopt;
  const std::string rest = s.substr(1);
  if (rest == "inf") return kInfinity;
  char* end = nullptr;
  const double p = std::strtod(rest.c_str(), &end);
  if (end == rest.c_str() || *end != '\0' || !(p >= 1.0) || !std::isfinite(p)) return std::nullopt;
  return p;
}

std::vector<double> parse_matrix(const json& v, std::size_t rows_hint, std::size_t n, const std::string& path) {
  std::vector<double> out;
  if (!v.is_array() || v.empty()) config_error(path, "expected a matrix");
  if (v[0].is_array()) {
    for (std::size_t r = 0; r < v.size(); ++r) {
      if (!v[r].is_array() || v[r].size() != n) {
        config_error(path + "[" + std::to_string(r) + "]", "expected a row of length " + std::to_string(n));
      }
      for (const auto& x : v[r]) {
        if (!x.is_number()) config_error(path, "matrix entries must be numbers");
        out.push_back(x.get<double>());
      }
    }
  } else {
    for (const auto& x : v) {
      if (!x.is_number()) config_error(path, "matrix entries must be numbers");
      out.push_back(x.get<double>());
    }
    if (out.size() % n != 0) config_error(path, "flat matrix length must be a multiple of n");
  }
  if (rows_hint > 0 && out.size() != rows_hint * n) {
    config_error(path, "expected a " + std::to_string(rows_hint) + "x" + std::to_string(n) + " matrix");
  }
  for (double x : out) {
    if (!std::isfinite(x)) config_error(path, "matrix entries must be finite");
  }
  return out;
}

json resolve_norm(const json& v, std::size_t n, const std::string& path) {
  if (v.is_string()) {
    const auto p = parse_norm_shorthand(v.get<std::string>());
    if (!p) config_error(path, "unknown norm '" + v.get<std::string>() + "' (use l1, l2, l1.5, linf, ...)");
    return {{"kind", "lp"}, {"p", exponent_json(*p)}, {"dim", n}, {"scale", 1.0}};
  }
  Reader r(v, path);
  const std::string kind = r.string("kind", "lp");
  if (kind != "lp") config_error(r.at("kind"), "unknown norm kind '" + kind + "'");
  if (!r.has("p")) config_error(r.at("p"), "missing required field");
  const double p = parse_exponent(r.get("p"), r.at("p"));
  const std::uint64_t dim = r.integer("dim", n, 1);
  if (dim != n) config_error(r.at("dim"), "must equal the job dimension n=" + std::to_string(n));
  const double scale = r.number("scale", 1.0);
  if (!(scale > 0.0)) config_error(r.at("scale"), "must be positive");
  json out = {{"kind", "lp"}, {"p", exponent_json(p)}, {"dim", n}, {"scale", scale}};
  if (r.has("transform")) {
    const auto m = parse_matrix(r.get("transform"), n, n, r.at("transform"));
    out["transform"] = m;
    try {
      (void)NormSpec::transformed(n, p, m, scale);
    } catch (const Error& e) {
      config_error(r.at("transform"), e.what());
    }
  }
  r.finish();
  return out;
}

NormSpec make_norm(const json& c) {
  const std::size_t n = c.at("dim").get<std::size_t>();
  const double p = c.at("p").is_string() ? kInfinity : c.at("p").get<double>();
  const double scale = c.at("scale").get<double>();
  if (c.contains("transform")) return NormSpec::transformed(n, p, c.at("transform").get<std::vector<double>>(), scale);
  return NormSpec::lp(n, p, scale);
}

const std::set<std::string> kFamilies = {"uniform_ball", "cone_surface", "ggp", "gaussian", "haar_sphere"};

json resolve_measure(const json& v, std::size_t n, const std::string& path) {
  json src = v;
  if (v.is_string()) src = json{{"family", v}};
  Reader r(src, path);
  const std::string family = r.string("family");
  if (!kFamilies.count(family)) {
    config_error(r.at("family"), "unknown family '" + family +
                                     "' (expected uniform_ball, cone_surface, ggp, gaussian or haar_sphere)");
  }
  const std::uint64_t dim = r.integer("dim", n, 1);
  if (dim != n) config_error(r.at("dim"), "must equal the job dimension n=" + std::to_string(n));
  json out = {{"family", family}, {"dim", n}};
  if (family == "uniform_ball" || family == "cone_surface") {
    json norm;
    if (r.has("norm")) {
      norm = resolve_norm(r.get("norm"), n, r.at("norm"));
      // The resolved form carries both; they must agree.
      if (r.has("p") && parse_exponent(r.get("p"), r.at("p")) != parse_exponent(norm["p"], r.at("norm"))) {
        config_error(r.at("p"), "disagrees with norm.p");
      }
    } else {
      const double p = r.has("p") ? parse_exponent(r.get("p"), r.at("p")) : 2.0;
      norm = {{"kind", "lp"}, {"p", exponent_json(p)}, {"dim", n}, {"scale", 1.0}};
    }
    out["p"] = norm["p"];
    out["norm"] = norm;
  } else if (family == "ggp") {
    const double p = r.has("p") ? parse_exponent(r.get("p"), r.at("p")) : 1.0;
    if (!(p >= 1.0 && p <= 2.0)) config_error(r.at("p"), "ggp requires p in [1, 2]");
    out["p"] = p;
  } else if (r.has("p") || r.has("norm")) {
    config_error(path, "family '" + family + "' takes no p or norm");
  }
  r.finish();
  return out;
}

MeasureSpec make_measure(const json& c) {
  const std::string family = c.at("family").get<std::string>();
  const std::size_t n = c.at("dim").get<std::size_t>();
  if (family == "uniform_ball") return MeasureSpec::uniform_ball(make_norm(c.at("norm")));
  if (family == "cone_surface") return MeasureSpec::cone_surface(make_norm(c.at("norm")));
  if (family == "ggp") return MeasureSpec::generalized_gaussian(n, c.at("p").get<double>());
  if (family == "gaussian") return MeasureSpec::standard_gaussian(n);
  return MeasureSpec::haar_sphere(n);
}

bool is_plain_norm(const json& norm, double p) {
  return !norm.contains("transform") && norm.at("scale").get<double>() == 1.0 &&
         (std::isinf(p) ? norm.at("p").is_string() : (norm.at("p").is_number() && norm.at("p").get<double>() == p));
}

// Catalog profile that bounds the concentration function of `measure` in its natural metric.
json default_profile(const json& measure, const std::string& path) {
  const std::string family = measure.at("family").get<std::string>();
  if (family == "haar_sphere") return "sphere";
  if (family == "gaussian") return "gaussian";
  if (family == "ggp") return measure.at("p").get<double>() == 2.0 ? json("gaussian") : json("gamma1");
  if (family == "uniform_ball" || family == "cone_surface") {
    const json& norm = measure.at("norm");
    if (is_plain_norm(norm, 2.0)) return "sphere";
    if (family == "uniform_ball" && is_plain_norm(norm, kInfinity)) {
      // The uniform cube is a sqrt(2/pi)-Lipschitz image of the standard Gaussian.
      return json{{"name", "custom"}, {"C", 1.0}, {"c", std::numbers::pi / 4.0}, {"n", 1.0}};
    }
  }
  config_error(path, "no catalog profile for this measure; give profile explicitly");
}

json resolve_profile(const json* v, std::size_t n, const json& measure, const std::string& path) {
  const json src = v ? *v : default_profile(measure, path);
  std::string name;
  ProfileOverrides o;
  if (src.is_string()) {
    name = src.get<std::string>();
  } else {
    json copy = src;
    Reader r(copy, path);
    name = r.string("name", "custom");
    if (r.has("C")) o.C = r.number("C");
    if (r.has("c")) o.c = r.number("c");
    if (r.has("n")) o.n = r.number("n");
    r.finish();
  }
  AnalyticProfile p;
  try {
    p = analytic_profile(name, n, o);
  } catch (const Error& e) {
    config_error(path, e.what());
  }
  return {{"name", p.name}, {"C", p.C}, {"c", p.c}, {"n", p.n}};
}

AnalyticProfile make_profile(const json& c) {
  ProfileOverrides o{c.at("C").get<double>(), c.at("c").get<double>(), c.at("n").get<double>()};
  return analytic_profile(c.at("name").get<std::string>(), 1, o);
}

json eps_range(double start, double stop, double step) {
  std::vector<double> out;
  for (std::size_t i = 0;; ++i) {
    double v = start + step * static_cast<double>(i);
    if (v > stop + 1e-9 * step) break;
    v = std::round(v * 1e12) / 1e12;
    out.push_back(v);
    if (out.size() > 100000) break;
  }
  return out;
}

json resolve_eps(const json* v, const json& fallback, const std::string& path) {
  if (!v) return fallback;
  std::vector<double> out;
  if (v->is_array()) {
    for (const auto& x : *v) {
      if (!x.is_number()) config_error(path, "eps entries must be numbers");
      out.push_back(x.get<double>());
    }
  } else if (v->is_object()) {
    Reader r(*v, path);
    const double start = r.number("start");
    const double stop = r.number("stop");
    const double step = r.number("step");
    r.finish();
    if (!(step > 0.0) || stop < start) config_error(path, "need step > 0 and stop >= start");
    out = eps_range(start, stop, step).get<std::vector<double>>();
  } else {
    config_error(path, "expected an array or {start, stop, step}");
  }
  if (out.empty()) config_error(path, "eps grid is empty");
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out[i]) || out[i] < 0.0) config_error(path, "eps values must be finite and >= 0");
    if (i > 0 && out[i] <= out[i - 1]) config_error(path, "eps values must be strictly increasing");
  }
  return out;
}

json resolve_directions(const json* v, std::uint64_t seed, const std::string& path) {
  json out = {{"axes", true}, {"random", 256}, {"seed", derive_seed(seed, 7)}};
  if (!v) return out;
  Reader r(*v, path);
  out["axes"] = r.boolean("axes", true);
  out["random"] = r.integer("random", 256);
  out["seed"] = r.integer("seed", derive_seed(seed, 7));
  r.finish();
  if (!out["axes"].get<bool>() && out["random"].get<std::uint64_t>() == 0) {
    config_error(path, "direction family is empty");
  }
  return out;
}

DirectionFamily make_directions(const json& c) {
  return {c.at("axes").get<bool>(), c.at("random").get<std::size_t>(), c.at("seed").get<std::uint64_t>()};
}

json resolve_map(const json& v, std::size_t n, const std::string& path) {
  json src = v.is_string() ? json{{"kind", v}} : v;
  Reader r(src, path);
  const std::string kind = r.string("kind");
  json out = {{"kind", kind}};
  if (kind == "identity") {
  } else if (kind == "scale") {
    const double f = r.number("factor");
    if (!(f > 0.0)) config_error(r.at("factor"), "must be positive");
    out["factor"] = f;
  } else if (kind == "projection") {
    const auto k = r.integer("k", std::nullopt, 1);
    if (k > n) config_error(r.at("k"), "must be <= n");
    out["k"] = k;
  } else if (kind == "pi") {
    out["K"] = resolve_norm(r.has("K") ? r.get("K") : json("l2"), n, r.at("K"));
    out["L"] = resolve_norm(r.has("L") ? r.get("L") : json("l1"), n, r.at("L"));
  } else if (kind == "radial") {
    out["target"] = resolve_measure(r.get("target"), n, r.at("target"));
    out["L"] = resolve_norm(r.has("L") ? r.get("L") : json("l2"), n, r.at("L"));
    out["knots"] = r.integer("knots", 4096, 3);
  } else {
    config_error(r.at("kind"), "unknown map kind '" + kind + "' (identity, scale, projection, pi, radial)");
  }
  r.finish();
  return out;
}

PushforwardMap make_map(const json& c, const MeasureSpec& source) {
  const std::string kind = c.at("kind").get<std::string>();
  if (kind == "identity") return IdentityMap{};
  if (kind == "scale") return ScaleMap{c.at("factor").get<double>()};
  if (kind == "projection") return ProjectionMap{c.at("k").get<std::size_t>()};
  if (kind == "pi") return PiMap{make_norm(c.at("K")), make_norm(c.at("L"))};
  const NormSpec l = make_norm(c.at("L"));
  const MeasureSpec target = make_measure(c.at("target"));
  MonotoneMap u = radial_transport(radial_cdf(source, l), radial_cdf(target, l),
                                   TransportOptions{c.at("knots").get<std::size_t>()});
  return RadialMap{std::move(u), l};
}

const std::map<std::string, std::set<std::string>> kJobKeys = {
    {"alpha", {"measure", "metric", "eps", "directions"}},
    {"median", {"measure", "norm"}},
    {"beta", {"measure", "K", "L", "variant", "transforms", "profile"}},
    {"transport", {"source", "target", "L", "knots"}},
    {"pushforward", {"measure", "map", "write_rows"}},
    {"prop_dec", {"measure", "domain_metric", "codomain_metric", "map", "lip", "profile", "eps", "pairs", "directions"}},
    {"thm_main", {"measure", "K", "L", "profile", "eps", "directions"}},
    {"inclusion_lemma", {"measure", "K", "L", "eps", "theta", "probes"}},
    {"ledoux_lemma", {"measure", "metric", "profile", "pairs"}},
    {"cor_farlinf", {"nu", "eps", "directions"}},
    {"thm_farlinf", {"measure", "X", "functionals", "d", "profile", "eps"}},
    {"thm_main1", {"p", "K", "profile", "eps", "knots", "directions"}},
    {"median_sandwich", {"measure", "K", "L"}},
    {"pi_lipschitz", {"measure", "K", "L", "pairs"}},
};

std::string known_types() {
  std::string s;
  for (const auto& [k, _] : kJobKeys) s += (s.empty() ? "" : ", ") + k;
  return s;
}

}  // namespace

namespace {

std::size_t dim_of(const json& j, std::optional<std::size_t> dim, const std::string& what) {
  if (j.is_object() && j.contains("dim")) {
    if (!j["dim"].is_number_unsigned() || j["dim"].get<std::size_t>() == 0) config_error(what + ".dim", "expected a positive integer");
    return j["dim"].get<std::size_t>();
  }
  if (!dim) config_error(what, "missing dim");
  return *dim;
}

}  // namespace

NormSpec norm_from_json(const json& j, std::optional<std::size_t> dim) {
  return make_norm(resolve_norm(j, dim_of(j, dim, "norm"), "norm"));
}

MeasureSpec measure_from_json(const json& j, std::optional<std::size_t> dim) {
  return make_measure(resolve_measure(j, dim_of(j, dim, "measure"), "measure"));
}

std::string comment_line(const std::string& label, const json& value) { return "# " + label + ": " + value.dump() + "\n"; }

json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    const auto pos = what.find("syntax error");
    if (pos != std::string::npos) what = what.substr(pos);
    throw Error(ErrorCode::kConfig, source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + what);
  }
}

json resolve_job(const json& job, std::uint64_t default_seed, std::optional<std::uint64_t> seed_override,
                 const std::string& path) {
  Reader r(job, path);
  const std::string type = r.string("type");
  const auto keys = kJobKeys.find(type);
  if (keys == kJobKeys.end()) config_error(r.at("type"), "unknown job type '" + type + "' (expected " + known_types() + ")");
  const std::size_t n = r.integer("n", std::nullopt, 1);
  if (n > 4096) config_error(r.at("n"), "dimension above 4096 is not supported");
  std::uint64_t seed = r.integer("seed", default_seed);
  if (seed_override) seed = *seed_override;
  const std::size_t samples = r.integer("N", kDefaultSamples, 1);

  json out = {{"type", type}, {"n", n}, {"seed", seed}, {"N", samples}};
  out["id"] = r.string("id", type);

  auto opt = [&](const std::string& key) -> const json* {
    if (!keys->second.count(key)) return nullptr;
    return r.has(key) ? &r.get(key) : nullptr;
  };
  auto norm_or = [&](const std::string& key, const char* fallback) {
    const json* v = opt(key);
    return resolve_norm(v ? *v : json(fallback), n, r.at(key));
  };
  auto measure_or = [&](const std::string& key, const json& fallback) {
    const json* v = opt(key);
    return resolve_measure(v ? *v : fallback, n, r.at(key));
  };
  auto profile_for = [&](const json& measure) { return resolve_profile(opt("profile"), n, measure, r.at("profile")); };
  auto count_or = [&](const std::string& key, std::uint64_t fallback, std::uint64_t min) {
    return keys->second.count(key) ? r.integer(key, fallback, min) : fallback;
  };
  const json default_grid = eps_range(0.05, 1.0, 0.05);

  if (type == "alpha") {
    out["measure"] = measure_or("measure", "haar_sphere");
    out["metric"] = norm_or("metric", "l2");
    out["eps"] = resolve_eps(opt("eps"), default_grid, r.at("eps"));
    out["directions"] = resolve_directions(opt("directions"), seed, r.at("directions"));
  } else if (type == "median") {
    out["measure"] = measure_or("measure", json{{"family", "uniform_ball"}, {"p", 2}});
    out["norm"] = opt("norm") ? norm_or("norm", "l2") : out["measure"].value("norm", resolve_norm("l2", n, path));
  } else if (type == "beta") {
    out["K"] = norm_or("K", "l2");
    out["L"] = norm_or("L", "l1");
    out["measure"] = measure_or("measure", json{{"family", "cone_surface"}, {"norm", out["K"]}});
    const std::string variant = opt("variant") ? r.string("variant") : "beta_tilde";
    if (variant != "beta" && variant != "beta_tilde") config_error(r.at("variant"), "expected beta or beta_tilde");
    out["variant"] = variant;
    json transforms = {{"kind", "scalar"}, {"values", json::array()}};
    if (const json* t = opt("transforms")) {
      Reader tr(*t, r.at("transforms"));
      const std::string kind = tr.string("kind", "scalar");
      if (kind != "scalar" && kind != "diagonal") config_error(tr.at("kind"), "expected scalar or diagonal");
      transforms["kind"] = kind;
      if (tr.has("values")) {
        const json& v = tr.get("values");
        if (!v.is_array()) config_error(tr.at("values"), "expected an array");
        if (kind == "scalar") {
          for (const auto& x : v) {
            if (!x.is_number() || !(x.get<double>() > 0.0)) config_error(tr.at("values"), "scalars must be positive numbers");
          }
          transforms["values"] = v;
        } else {
          json rows = json::array();
          for (const auto& d : v) {
            if (!d.is_array() || d.size() != n) config_error(tr.at("values"), "each diagonal needs n entries");
            for (const auto& x : d) {
              if (!x.is_number() || !(x.get<double>() > 0.0)) config_error(tr.at("values"), "diagonal entries must be positive");
            }
            rows.push_back(d);
          }
          transforms["values"] = rows;
        }
      } else if (kind == "diagonal") {
        config_error(tr.at("values"), "a diagonal family needs explicit values");
      }
      tr.finish();
    }
    out["transforms"] = transforms;
    if (opt("profile")) out["profile"] = profile_for(out["measure"]);
  } else if (type == "transport") {
    out["source"] = measure_or("source", json{{"family", "ggp"}, {"p", 1}});
    out["target"] = measure_or("target", json{{"family", "uniform_ball"}, {"p", 1}});
    out["L"] = norm_or("L", "l1");
    out["knots"] = count_or("knots", 4096, 3);
  } else if (type == "pushforward") {
    out["measure"] = measure_or("measure", "haar_sphere");
    out["map"] = resolve_map(opt("map") ? *opt("map") : json{{"kind", "pi"}}, n, r.at("map"));
    out["write_rows"] = r.boolean("write_rows", false);
  } else if (type == "prop_dec") {
    out["measure"] = measure_or("measure", "gaussian");
    out["domain_metric"] = norm_or("domain_metric", "l2");
    out["codomain_metric"] = norm_or("codomain_metric", "l2");
    out["map"] = resolve_map(opt("map") ? *opt("map") : json("identity"), n, r.at("map"));
    out["lip"] = r.number("lip", 1.0);
    if (!(out["lip"].get<double>() > 0.0)) config_error(r.at("lip"), "must be positive");
    out["profile"] = profile_for(out["measure"]);
    out["eps"] = resolve_eps(opt("eps"), default_grid, r.at("eps"));
    out["pairs"] = count_or("pairs", 10000, 1);
    out["directions"] = resolve_directions(opt("directions"), seed, r.at("directions"));
  } else if (type == "thm_main") {
    out["measure"] = measure_or("measure", "haar_sphere");
    out["K"] = norm_or("K", "l2");
    out["L"] = norm_or("L", "l1");
    out["profile"] = profile_for(out["measure"]);
    out["eps"] = resolve_eps(opt("eps"), default_grid, r.at("eps"));
    out["directions"] = resolve_directions(opt("directions"), seed, r.at("directions"));
  } else if (type == "inclusion_lemma") {
    out["measure"] = measure_or("measure", "haar_sphere");
    out["K"] = norm_or("K", "l2");
    out["L"] = norm_or("L", "l1");
    out["eps"] = r.number("eps", 0.5);
    if (!(out["eps"].get<double>() > 0.0)) config_error(r.at("eps"), "must be positive");
    std::vector<double> theta(n, 0.0);
    theta[0] = 1.0;
    if (const json* t = opt("theta")) {
      theta = parse_matrix(*t, 1, n, r.at("theta"));
      bool nonzero = false;
      for (double x : theta) nonzero |= x != 0.0;
      if (!nonzero) config_error(r.at("theta"), "direction must be nonzero");
    }
    out["theta"] = theta;
    out["probes"] = count_or("probes", 100000, 1);
  } else if (type == "ledoux_lemma") {
    out["measure"] = measure_or("measure", "haar_sphere");
    out["metric"] = norm_or("metric", "l2");
    out["profile"] = profile_for(out["measure"]);
    out["pairs"] = count_or("pairs", 1000, 1);
  } else if (type == "cor_farlinf") {
    out["nu"] = measure_or("nu", json{{"family", "uniform_ball"}, {"p", "inf"}});
    out["eps"] = resolve_eps(opt("eps"), eps_range(0.1, 0.9, 0.1), r.at("eps"));
    out["directions"] = resolve_directions(opt("directions"), seed, r.at("directions"));
  } else if (type == "thm_farlinf") {
    out["X"] = norm_or("X", "l2");
    out["measure"] = measure_or("measure", json{{"family", "uniform_ball"}, {"norm", out["X"]}});
    std::vector<double> f;
    double d_default = 0.0;
    const json* fv = opt("functionals");
    if (!fv || (fv->is_string() && fv->get<std::string>() == "coordinates")) {
      f.assign(n * n, 0.0);
      for (std::size_t i = 0; i < n; ++i) f[i * n + i] = 1.0;
      if (!out["X"].contains("transform") && out["X"]["scale"].get<double>() == 1.0) {
        const double p = out["X"]["p"].is_string() ? kInfinity : out["X"]["p"].get<double>();
        d_default = std::isinf(p) ? 1.0 : std::pow(static_cast<double>(n), 1.0 / p);
      }
    } else {
      f = parse_matrix(*fv, 0, n, r.at("functionals"));
    }
    out["functionals"] = f;
    if (opt("d")) {
      out["d"] = r.number("d");
    } else if (d_default > 0.0) {
      out["d"] = d_default;
    } else {
      config_error(r.at("d"), "missing required field (no closed form for these functionals)");
    }
    const double d = out["d"].get<double>();
    if (!(d >= 1.0)) config_error(r.at("d"), "must be >= 1");
    out["profile"] = profile_for(out["measure"]);
    out["eps"] = resolve_eps(opt("eps"), json::array({std::round(0.5 / d * 1e12) / 1e12}), r.at("eps"));
  } else if (type == "thm_main1") {
    const double p = opt("p") ? parse_exponent(*opt("p"), r.at("p")) : 1.0;
    if (!(p >= 1.0 && p <= 2.0)) config_error(r.at("p"), "must lie in [1, 2]");
    out["p"] = p;
    if (opt("K")) out["K"] = norm_or("K", "l2");
    out["profile"] = profile_for(json{{"family", "ggp"}, {"p", p}, {"dim", n}});
    out["eps"] = resolve_eps(opt("eps"), eps_range(0.02, 2.0, 0.02), r.at("eps"));
    out["knots"] = count_or("knots", 4096, 3);
    out["directions"] = resolve_directions(opt("directions"), seed, r.at("directions"));
  } else if (type == "median_sandwich") {
    out["K"] = norm_or("K", "l2");
    out["L"] = norm_or("L", "l1");
    out["measure"] = measure_or("measure", json{{"family", "uniform_ball"}, {"norm", out["K"]}});
  } else if (type == "pi_lipschitz") {
    out["K"] = norm_or("K", "l2");
    out["L"] = norm_or("L", "l1");
    out["measure"] = measure_or("measure", json{{"family", "uniform_ball"}, {"norm", out["K"]}});
    out["pairs"] = count_or("pairs", 100000, 1);
  }
  r.finish();
  return out;
}

json resolve_config(const json& config, std::optional<std::uint64_t> seed_override) {
  Reader r(config, "config");
  std::uint64_t seed = r.integer("seed", 1);
  if (seed_override) seed = *seed_override;
  const std::string out_dir = r.string("output_dir", "concmeter-out");
  json jobs = json::array();
  if (r.has("jobs")) {
    const json& list = r.get("jobs");
    if (!list.is_array()) config_error("config.jobs", "expected an array");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string path = "config.jobs[" + std::to_string(i) + "]";
      const json& job = list[i];
      if (!job.is_object()) config_error(path, "expected an object");
      std::vector<json> variants;
      std::string base = job.value("id", job.contains("type") && job["type"].is_string()
                                              ? job["type"].get<std::string>() + "_" + std::to_string(i)
                                              : "job_" + std::to_string(i));
      if (job.contains("n") && job["n"].is_array()) {
        if (job["n"].empty()) config_error(path + ".n", "empty dimension list");
        for (std::size_t k = 0; k < job["n"].size(); ++k) {
          json single = job;
          single["n"] = job["n"][k];
          if (!job["n"][k].is_number_integer()) config_error(path + ".n[" + std::to_string(k) + "]", "expected an integer");
          single["id"] = base + "_n" + std::to_string(job["n"][k].get<long long>());
          variants.push_back(single);
        }
      } else {
        json single = job;
        single["id"] = base;
        variants.push_back(single);
      }
      for (const json& v : variants) {
        json resolved = resolve_job(v, seed, seed_override, path);
        const std::string id = resolved["id"].get<std::string>();
        if (id.empty() || id.find_first_of("/\\") != std::string::npos || id == "summary") {
          config_error(path + ".id", "invalid job id '" + id + "'");
        }
        if (!ids.insert(id).second) config_error(path + ".id", "duplicate job id '" + id + "'");
        jobs.push_back(std::move(resolved));
      }
    }
  }
  r.finish();
  return {{"output_dir", out_dir}, {"seed", seed}, {"jobs", jobs}};
}

namespace {

CheckReport estimate_report(const std::string& id) {
  CheckReport r;
  r.check_id = id;
  r.finalize();
  r.notes.push_back("estimate only; nothing asserted");
  return r;
}

std::string median_csv(std::size_t n, const MedianEstimate& m, double mean_value) {
  std::ostringstream out;
  out << "n,value,ci_low,ci_high,N,mean\n";
  out << n << "," << fmt(m.value) << "," << fmt(m.ci_low) << "," << fmt(m.ci_high) << "," << m.count << ","
      << fmt(mean_value) << "\n";
  return out.str();
}

JobResult run_estimate(const json& job, bool want_csv) {
  const std::string type = job.at("type").get<std::string>();
  const std::size_t n = job.at("n").get<std::size_t>();
  const std::size_t samples = job.at("N").get<std::size_t>();
  const std::uint64_t seed = job.at("seed").get<std::uint64_t>();
  JobResult out;
  out.report = estimate_report(type);
  json& q = out.report.quantities;

  if (type == "alpha") {
    const SampleBatch batch = sample(make_measure(job["measure"]), samples, seed);
    const auto eps = job["eps"].get<std::vector<double>>();
    const ConcentrationCurve curve =
        concentration_lower_curve(batch.view(), make_norm(job["metric"]), eps, make_directions(job["directions"]));
    q = {{"eps", curve.eps},
         {"alpha_hat", curve.alpha_hat},
         {"alpha_raw", curve.alpha_raw},
         {"ci", curve.ci},
         {"direction_id_of_max", curve.direction_of_max},
         {"family_size", curve.family_size},
         {"metric", curve.metric},
         {"label", "empirical lower bound on the concentration function (half-space family)"}};
    if (want_csv) {
      std::ostringstream csv;
      write_curve_csv(csv, curve);
      out.csv = csv.str();
      out.csv_suffix = ".curve.csv";
    }
  } else if (type == "median") {
    const MeasureSpec mu = make_measure(job["measure"]);
    const NormSpec norm = make_norm(job["norm"]);
    std::vector<double> v(samples);
    parallel_for(samples, [&](std::size_t i) {
      std::vector<double> x(n);
      sample_row(mu, seed, i, x);
      v[i] = norm_eval(norm, x);
    });
    const MedianEstimate m = empirical_median(v);
    const double mv = mean(v);
    q = {{"median", {{"value", m.value}, {"ci_low", m.ci_low}, {"ci_high", m.ci_high}, {"N", m.count}}},
         {"mean", mv},
         {"norm", norm.label()},
         {"measure", mu.label()}};
    if (mu.family() == Family::kUniformBall && mu.norm()->same_shape(norm)) {
      q["expected_median"] = std::pow(2.0, -1.0 / static_cast<double>(n)) * norm.scale() / mu.norm()->scale();
    }
    if (want_csv) {
      out.csv = median_csv(n, m, mv);
      out.csv_suffix = ".median.csv";
    }
  } else if (type == "beta") {
    TransformFamily family;
    const json& t = job["transforms"];
    if (t["kind"] == "diagonal") {
      family.kind = TransformFamily::Kind::kDiagonal;
      family.diagonals = t["values"].get<std::vector<std::vector<double>>>();
    } else {
      family.scalars = t["values"].get<std::vector<double>>();
    }
    const BetaVariant variant = job["variant"] == "beta" ? BetaVariant::kMedian : BetaVariant::kMean;
    const BetaEstimate b =
        estimate_beta(make_measure(job["measure"]), make_norm(job["K"]), make_norm(job["L"]), variant, samples, seed, family);
    q = {{"variant", to_string(b.variant)},
         {"value", b.value},
         {"label", "upper bound on the infimum over the transform family"},
         {"transform", {{"kind", t["kind"]}, {"values", b.transform}}},
         {"lambda", b.lambda},
         {"containment", {{"lambda", b.containment.lambda}, {"scale", b.containment.scale}, {"exact", b.containment.exact}}},
         {"numerator", b.numerator},
         {"numerator_ci", b.numerator_ci},
         {"denominator", b.denominator},
         {"denominator_ci", b.denominator_ci},
         {"median_K", b.median_k},
         {"median_L", b.median_l},
         {"mean_K", b.mean_k},
         {"mean_L", b.mean_l},
         {"mean_to_median_K", b.mean_k / b.median_k},
         {"mean_to_median_L", b.mean_l / b.median_l},
         {"N", b.count},
         {"candidates", b.candidates},
         {"feasible", b.feasible}};
    if (job.contains("profile")) {
      const AnalyticProfile p = make_profile(job["profile"]);
      const CubeBetaBound cb = cube_beta_lower_bound(p.C, p.c, n);
      q["cube_beta_lower_bound"] = {{"value", cb.value},
                                    {"median_threshold", cb.median_threshold},
                                    {"hypothesis_holds", b.median_k > cb.median_threshold},
                                    {"profile", job["profile"]}};
    }
    if (want_csv) {
      std::ostringstream csv;
      csv << "n,variant,value,lambda,transform,numerator,numerator_ci,denominator,denominator_ci,median_K,median_L,"
             "mean_K,mean_L,N\n";
      std::string tr;
      for (std::size_t i = 0; i < b.transform.size(); ++i) tr += (i ? ";" : "") + fmt(b.transform[i]);
      csv << n << "," << to_string(b.variant) << "," << fmt(b.value) << "," << fmt(b.lambda) << "," << tr << ","
          << fmt(b.numerator) << "," << fmt(b.numerator_ci) << "," << fmt(b.denominator) << ","
          << fmt(b.denominator_ci) << "," << fmt(b.median_k) << "," << fmt(b.median_l) << "," << fmt(b.mean_k)
          << "," << fmt(b.mean_l) << "," << b.count << "\n";
      out.csv = csv.str();
      out.csv_suffix = ".beta.csv";
    }
  } else if (type == "transport") {
    const MeasureSpec src = make_measure(job["source"]);
    const MeasureSpec dst = make_measure(job["target"]);
    const NormSpec l = make_norm(job["L"]);
    const RadialCdf f_mu = radial_cdf(src, l, samples, derive_seed(seed, 8));
    const RadialCdf f_nu = radial_cdf(dst, l, samples, derive_seed(seed, 9));
    const MonotoneMap u = radial_transport(f_mu, f_nu, TransportOptions{job["knots"].get<std::size_t>()});
    const double lip = lipschitz_constant(u);
    std::vector<double> moved(samples);
    parallel_for(samples, [&](std::size_t i) {
      std::vector<double> x(n);
      sample_row(src, seed, i, x);
      moved[i] = u(norm_eval(l, x));
    });
    q = {{"lip_u", lip},
         {"n_times_lip_u", static_cast<double>(n) * lip},
         {"knots", u.knots().size()},
         {"u", u.descriptor()},
         {"radial_source", f_mu.description()},
         {"radial_target", f_nu.description()},
         {"transported_radial_ks", ks_statistic(moved, [&](double r) { return f_nu.eval(r); })}};
    if (want_csv) {
      std::ostringstream csv;
      write_map_csv(csv, u);
      out.csv = csv.str();
      out.csv_suffix = ".map.csv";
    }
  } else if (type == "pushforward") {
    const MeasureSpec mu = make_measure(job["measure"]);
    const PushforwardMap map = make_map(job["map"], mu);
    const SampleBatch batch = sample(mu, samples, seed);
    const PushforwardBatch image = pushforward_batch(map, batch);
    q = {{"map", image.descriptor()}, {"rows", image.count()}};
    const json& mj = job["map"];
    if ((mj["kind"] == "pi" || mj["kind"] == "radial") && image.count() >= kMinMedianSamples) {
      const NormSpec l = make_norm(mj["L"]);
      std::vector<double> radii(image.count());
      parallel_for(image.count(), [&](std::size_t i) { radii[i] = norm_eval(l, image.image().row(i)); });
      const MedianEstimate m = empirical_median(radii);
      q["image_median_L"] = {{"value", m.value}, {"ci_low", m.ci_low}, {"ci_high", m.ci_high}};
      if (mj["kind"] == "radial") {
        const RadialCdf f_nu = radial_cdf(make_measure(mj["target"]), l, samples, derive_seed(seed, 9));
        q["image_radial_ks"] = ks_statistic(radii, [&](double r) { return f_nu.eval(r); });
      }
    }
    if (want_csv) {
      std::ostringstream csv;
      write_rows_csv(csv, image.image());
      out.csv = csv.str();
      out.csv_suffix = ".image.csv";
    }
  }
  return out;
}

JobResult run_check(const json& job, bool want_csv) {
  const std::string type = job.at("type").get<std::string>();
  const std::size_t n = job.at("n").get<std::size_t>();
  const std::size_t samples = job.at("N").get<std::size_t>();
  const std::uint64_t seed = job.at("seed").get<std::uint64_t>();
  auto eps = [&] { return job.at("eps").get<std::vector<double>>(); };
  JobResult out;
  CheckReport& r = out.report;
  if (type == "prop_dec") {
    const MeasureSpec mu = make_measure(job["measure"]);
    r = check_prop_dec({mu, make_norm(job["domain_metric"]), make_norm(job["codomain_metric"]),
                        make_map(job["map"], mu), job["lip"].get<double>(), make_profile(job["profile"]), eps(),
                        samples, seed, job["pairs"].get<std::size_t>(), make_directions(job["directions"])});
  } else if (type == "thm_main") {
    r = check_thm_main({make_measure(job["measure"]), make_norm(job["K"]), make_norm(job["L"]),
                        make_profile(job["profile"]), eps(), samples, seed, make_directions(job["directions"])});
  } else if (type == "inclusion_lemma") {
    r = check_inclusion_lemma({make_measure(job["measure"]), make_norm(job["K"]), make_norm(job["L"]),
                               job["eps"].get<double>(), job["theta"].get<std::vector<double>>(), samples,
                               job["probes"].get<std::size_t>(), seed});
  } else if (type == "ledoux_lemma") {
    r = check_ledoux_lemma({make_measure(job["measure"]), make_norm(job["metric"]), make_profile(job["profile"]),
                            job["pairs"].get<std::size_t>(), samples, seed});
  } else if (type == "cor_farlinf") {
    r = check_cor_farlinf({n, make_measure(job["nu"]), eps(), samples, seed, make_directions(job["directions"])});
  } else if (type == "thm_farlinf") {
    r = check_thm_farlinf({make_measure(job["measure"]), make_norm(job["X"]),
                           job["functionals"].get<std::vector<double>>(), job["d"].get<double>(),
                           make_profile(job["profile"]), eps(), samples, seed});
  } else if (type == "thm_main1") {
    ThmMain1Options o;
    o.p = job["p"].get<double>();
    o.n = n;
    o.profile = make_profile(job["profile"]);
    if (job.contains("K")) o.k = make_norm(job["K"]);
    o.eps = eps();
    o.samples = samples;
    o.seed = seed;
    o.knots = job["knots"].get<std::size_t>();
    o.directions = make_directions(job["directions"]);
    r = check_thm_main1(o);
  } else if (type == "median_sandwich") {
    r = check_median_sandwich({make_measure(job["measure"]), make_norm(job["K"]), make_norm(job["L"]), samples, seed});
  } else if (type == "pi_lipschitz") {
    r = check_pi_lipschitz(
        {make_measure(job["measure"]), make_norm(job["K"]), make_norm(job["L"]), job["pairs"].get<std::size_t>(), samples, seed});
  }
  if (want_csv && !r.lhs.empty()) {
    std::ostringstream csv;
    write_grid_csv(csv, r);
    out.csv = csv.str();
    out.csv_suffix = ".grid.csv";
  }
  return out;
}

bool is_estimate(const std::string& type) {
  return type == "alpha" || type == "median" || type == "beta" || type == "transport" || type == "pushforward";
}

json report_json(const JobResult& r, const json& job) {
  if (r.error) {
    return {{"check_id", job["type"]},
            {"inputs", job},
            {"verdict", "error"},
            {"error", {{"code", r.error->first}, {"message", r.error->second}}}};
  }
  json j = r.report.to_json();
  j["inputs"] = job;
  return j;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  f << body;
  if (!f) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace

JobResult run_job(const json& resolved, bool want_csv) {
  JobResult out;
  try {
    const std::string type = resolved.at("type").get<std::string>();
    out = is_estimate(type) ? run_estimate(resolved, want_csv) : run_check(resolved, want_csv);
    out.report.inputs = resolved;
  } catch (const Error& e) {
    out.error = std::make_pair(static_cast<int>(e.code()), std::string(e.what()));
  } catch (const std::exception& e) {
    out.error = std::make_pair(static_cast<int>(ErrorCode::kInvalidArgument), std::string(e.what()));
  }
  return out;
}

RunSummary run_config(const json& resolved_config, const std::string& out_dir, unsigned workers) {
  const json& jobs = resolved_config.at("jobs");
  const std::size_t count = jobs.size();
  std::vector<JobResult> results(count);
  const unsigned total = workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : workers;
  const unsigned pool = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(total, count)));
  const unsigned inner = std::max(1u, total / pool);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    ScopedWorkerCount scoped(inner);
    for (std::size_t i = next++; i < count; i = next++) {
      const json& job = jobs[i];
      results[i] = run_job(job, is_estimate(job["type"]) ? job.value("write_rows", true) : true);
    }
  };
  if (pool <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (unsigned t = 0; t < pool; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create output directory " + out_dir + ": " + ec.message());
  RunSummary summary;
  std::ostringstream csv;
  csv << comment_line("config", resolved_config);
  csv << "id,type,n,seed,verdict,violations,applicable,worst_margin,report\n";
  for (std::size_t i = 0; i < count; ++i) {
    const json& job = jobs[i];
    const JobResult& r = results[i];
    const std::string id = job["id"].get<std::string>();
    const std::string report_name = id + ".json";
    write_file(fs::path(out_dir) / report_name, report_json(r, job).dump(2) + "\n");
    summary.files.push_back(report_name);
    if (!r.error && !r.csv.empty()) {
      const std::string name = id + r.csv_suffix;
      write_file(fs::path(out_dir) / name, comment_line("job", job) + r.csv);
      summary.files.push_back(name);
    }
    std::string verdict = r.error ? "error" : to_string(r.report.verdict);
    csv << id << "," << job["type"].get<std::string>() << "," << job["n"].get<std::size_t>() << ","
        << job["seed"].get<std::uint64_t>() << "," << verdict << ",";
    if (r.error) {
      csv << ",,,";
    } else {
      csv << r.report.violations << "," << r.report.applicable << ","
          << (r.report.worst_margin ? fmt(*r.report.worst_margin) : std::string()) << ",";
    }
    csv << report_name << "\n";
    if (r.error) {
      summary.exit_code = 1;
    } else if (r.report.verdict == Verdict::kFail && summary.exit_code == 0) {
      summary.exit_code = 2;
    }
  }
  write_file(fs::path(out_dir) / "summary.csv", csv.str());
  summary.files.push_back("summary.csv");
  return summary;
}

}  // namespace concmeter
