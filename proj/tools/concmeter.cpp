// concmeter command-line front end. Talks to the library only through concmeter.h.

#include <concmeter.h>

#include <CLI11.hpp>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ApiError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(cm_status s) {
  if (s != CM_OK) throw ApiError(std::string(cm_status_name(s)) + ": " + cm_last_error());
}

struct Owned {
  char* p = nullptr;
  ~Owned() { cm_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

struct Flags {
  std::string n = "16";
  std::optional<std::size_t> samples;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> eps;
  std::optional<std::string> measure;
  std::optional<std::string> p;
  std::optional<std::string> metric;
  std::optional<std::string> k;
  std::optional<std::string> l;
  std::optional<std::string> target;
  std::optional<std::string> profile;
  std::optional<double> big_c;
  std::optional<double> small_c;
  std::optional<std::string> variant;
  std::optional<std::string> map;
  std::optional<double> factor;
  std::optional<std::size_t> proj_k;
  std::optional<std::size_t> directions;
  std::optional<std::size_t> pairs;
  std::vector<std::string> job_json;
  std::string out;
  std::string report;
  std::string csv;
  unsigned jobs = 0;
};

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("CONCMETER_SEED");
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const unsigned long long s = std::strtoull(v, &end, 10);
  if (errno != 0 || *end != '\0' || v[0] == '-') throw UsageError(std::string("CONCMETER_SEED is not an unsigned integer: ") + v);
  return s;
}

double parse_double(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw UsageError(what + ": not a number: '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

// "0.1,0.2,0.5" or "start:stop:step"
json parse_eps(const std::string& text) {
  if (text.empty()) throw UsageError("--eps: empty grid");
  if (text.find(':') != std::string::npos) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw UsageError("--eps: expected start:stop:step");
    return {{"start", parse_double(parts[0], "--eps")},
            {"stop", parse_double(parts[1], "--eps")},
            {"step", parse_double(parts[2], "--eps")}};
  }
  json out = json::array();
  for (const auto& part : split(text, ',')) out.push_back(parse_double(part, "--eps"));
  return out;
}

std::vector<std::size_t> parse_dims(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& part : split(text, ',')) {
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(part, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != part.size() || v == 0 || part[0] == '-') throw UsageError("--n: expected positive integers, got '" + text + "'");
    out.push_back(v);
  }
  if (out.empty()) throw UsageError("--n: empty list");
  return out;
}

json exponent(const std::string& p) {
  if (p == "inf") return "inf";
  return parse_double(p, "--p");
}

json norm_flag(const std::string& s) {
  if (!s.empty() && s.front() == '{') return json::parse(s);
  return s;
}

json measure_flag(const Flags& f, const std::optional<std::string>& norm_for_body) {
  if (!f.measure) return nullptr;
  if (!f.measure->empty() && f.measure->front() == '{') return json::parse(*f.measure);
  json m = {{"family", *f.measure}};
  if (f.p) {
    m["p"] = exponent(*f.p);
  } else if (norm_for_body && (*f.measure == "uniform_ball" || *f.measure == "cone_surface")) {
    m["norm"] = norm_flag(*norm_for_body);
  }
  return m;
}

json profile_flag(const Flags& f) {
  if (!f.profile && !f.big_c && !f.small_c) return nullptr;
  if (!f.big_c && !f.small_c) return *f.profile;
  json p = {{"name", f.profile.value_or("custom")}};
  if (f.big_c) p["C"] = *f.big_c;
  if (f.small_c) p["c"] = *f.small_c;
  return p;
}

void merge_job_json(json& job, const Flags& f) {
  for (const auto& text : f.job_json) {
    json patch;
    try {
      patch = json::parse(text);
    } catch (const json::parse_error& e) {
      throw UsageError(std::string("--job: ") + e.what());
    }
    if (!patch.is_object()) throw UsageError("--job: expected a JSON object");
    job.merge_patch(patch);
  }
}

// Builds the job entry for `type` from flags. Keys a type does not accept are
// left out so that the library reports only genuine conflicts.
json build_job(const std::string& type, const Flags& f, std::size_t n) {
  json job = {{"type", type}, {"n", n}};
  if (f.samples) job["N"] = *f.samples;
  if (f.seed) job["seed"] = *f.seed;
  if (f.eps) job["eps"] = parse_eps(*f.eps);
  const json profile = profile_flag(f);
  const std::optional<std::string> body = f.k ? f.k : (f.metric ? f.metric : std::nullopt);
  const json measure = measure_flag(f, body);
  auto put = [&](const char* key, const json& v) {
    if (!v.is_null()) job[key] = v;
  };

  if (type == "alpha") {
    put("measure", measure);
    if (f.metric) job["metric"] = norm_flag(*f.metric);
  } else if (type == "median") {
    put("measure", measure);
    if (f.metric) job["norm"] = norm_flag(*f.metric);
  } else if (type == "beta") {
    put("measure", measure);
    if (f.variant) job["variant"] = *f.variant;
    put("profile", profile);
  } else if (type == "transport") {
    put("source", measure);
    if (f.target) job["target"] = f.target->front() == '{' ? json::parse(*f.target) : json{{"family", *f.target}};
  } else if (type == "pushforward") {
    put("measure", measure);
    json map = {{"kind", f.map.value_or("pi")}};
    if (f.factor) map["factor"] = *f.factor;
    if (f.proj_k) map["k"] = *f.proj_k;
    if (map["kind"] == "pi" || map["kind"] == "radial") {
      if (f.k && map["kind"] == "pi") map["K"] = norm_flag(*f.k);
      if (f.l) map["L"] = norm_flag(*f.l);
    }
    if (f.target) map["target"] = f.target->front() == '{' ? json::parse(*f.target) : json{{"family", *f.target}};
    job["map"] = map;
    job["write_rows"] = true;
  } else if (type == "cor_farlinf") {
    put("nu", measure);
  } else if (type == "thm_main1") {
    if (f.p) job["p"] = exponent(*f.p);
    put("profile", profile);
  } else if (type == "thm_farlinf") {
    put("measure", measure);
    if (f.k) job["X"] = norm_flag(*f.k);
    put("profile", profile);
  } else if (type == "ledoux_lemma") {
    put("measure", measure);
    if (f.metric) job["metric"] = norm_flag(*f.metric);
    put("profile", profile);
    if (f.pairs) job["pairs"] = *f.pairs;
  } else if (type == "prop_dec") {
    put("measure", measure);
    if (f.metric) job["domain_metric"] = job["codomain_metric"] = norm_flag(*f.metric);
    put("profile", profile);
    if (f.pairs) job["pairs"] = *f.pairs;
  } else {
    put("measure", measure);
    if (type == "thm_main") put("profile", profile);
    if (type == "pi_lipschitz" && f.pairs) job["pairs"] = *f.pairs;
    if (type == "inclusion_lemma" && f.pairs) job["probes"] = *f.pairs;
  }
  const bool has_kl = type == "beta" || type == "thm_main" || type == "inclusion_lemma" ||
                      type == "median_sandwich" || type == "pi_lipschitz" || type == "thm_main1";
  if (has_kl && f.k) job["K"] = norm_flag(*f.k);
  if (has_kl && f.l && type != "thm_main1") job["L"] = norm_flag(*f.l);
  if (type == "transport" && f.l) job["L"] = norm_flag(*f.l);
  if (f.directions && (type == "alpha" || type == "thm_main" || type == "prop_dec" || type == "cor_farlinf" ||
                       type == "thm_main1")) {
    job["directions"] = {{"random", *f.directions}};
  }
  merge_job_json(job, f);
  return job;
}

struct Ran {
  std::string report;
  std::string csv;
  cm_verdict verdict = CM_VERDICT_NOT_APPLICABLE;
};

Ran run_one(const json& job, const std::optional<std::uint64_t>& seed_override, bool want_csv) {
  Owned report, csv;
  Ran r;
  const std::uint64_t* so = seed_override ? &*seed_override : nullptr;
  check(cm_job_run(job.dump().c_str(), so, &report.p, want_csv ? &csv.p : nullptr, &r.verdict));
  r.report = report.str();
  r.csv = csv.str();
  return r;
}

void emit(const std::string& path, const std::string& body) {
  if (path.empty() || path == "-") {
    std::cout << body;
    std::cout.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw ApiError("io: cannot write " + path);
  f << body;
  if (!f) throw ApiError("io: write failed for " + path);
}

// Splits "# job: ...\nheader\nrows..." into its comment, header and rows.
void split_csv(const std::string& csv, std::string& comment, std::string& header, std::string& rows) {
  std::istringstream in(csv);
  std::string line;
  comment.clear();
  header.clear();
  rows.clear();
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') {
      comment += line + "\n";
    } else if (header.empty()) {
      header = line + "\n";
    } else {
      rows += line + "\n";
    }
  }
}

std::optional<std::uint64_t> seed_override_for(const Flags& f) {
  // An explicit --seed wins; otherwise the environment overrides job seeds.
  if (f.seed) return std::nullopt;
  return env_seed();
}

int cmd_single(const std::string& type, const Flags& f) {
  const auto dims = parse_dims(f.n);
  if (dims.size() != 1) throw UsageError("--n: " + type + " takes a single dimension");
  check(cm_set_threads(f.jobs));
  const Ran r = run_one(build_job(type, f, dims[0]), seed_override_for(f), true);
  emit(f.out, r.csv);
  if (!f.report.empty()) emit(f.report, r.report);
  return 0;
}

int cmd_table(const std::string& type, const Flags& f) {
  const auto dims = parse_dims(f.n);
  check(cm_set_threads(f.jobs));
  std::string comments, header, rows;
  json reports = json::array();
  for (std::size_t n : dims) {
    const Ran r = run_one(build_job(type, f, n), seed_override_for(f), true);
    std::string c, h, body;
    split_csv(r.csv, c, h, body);
    comments += c;
    if (header.empty()) header = h;
    rows += body;
    reports.push_back(json::parse(r.report));
  }
  emit(f.out, comments + header + rows);
  if (!f.report.empty()) emit(f.report, reports.dump(2) + "\n");
  return 0;
}

int cmd_verify(const std::string& check_id, const Flags& f) {
  const auto dims = parse_dims(f.n);
  check(cm_set_threads(f.jobs));
  int code = 0;
  json reports = json::array();
  std::string comments, header, rows;
  for (std::size_t n : dims) {
    const Ran r = run_one(build_job(check_id, f, n), seed_override_for(f), !f.csv.empty());
    if (r.verdict == CM_VERDICT_FAIL) code = 2;
    reports.push_back(json::parse(r.report));
    if (!f.csv.empty()) {
      std::string c, h, body;
      split_csv(r.csv, c, h, body);
      comments += c;
      if (header.empty()) header = h.empty() ? "" : "n," + h;
      std::istringstream in(body);
      std::string line;
      while (std::getline(in, line)) rows += std::to_string(n) + "," + line + "\n";
    }
  }
  const std::string out = f.report.empty() ? f.out : f.report;
  emit(out, (dims.size() == 1 ? reports[0] : reports).dump(2) + "\n");
  if (!f.csv.empty()) emit(f.csv, comments + header + rows);
  return code;
}

int cmd_run(const std::string& path, const Flags& f) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ApiError("io: cannot read " + path);
  std::stringstream text;
  text << in.rdbuf();
  const auto seed = env_seed();
  int exit_code = 1;
  check(cm_run_config(text.str().c_str(), f.out.empty() ? nullptr : f.out.c_str(), f.jobs, seed ? &*seed : nullptr,
                      &exit_code));
  return exit_code;
}

void add_measure_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--n", f.n, "dimension, or comma-separated list where supported");
  sub->add_option("--N", f.samples, "sample count");
  sub->add_option("--seed", f.seed, "RNG seed (overrides CONCMETER_SEED)");
  sub->add_option("--measure", f.measure,
                  "uniform_ball | cone_surface | ggp | gaussian | haar_sphere, or a JSON object");
  sub->add_option("--p", f.p, "exponent for the measure family (number or inf)");
  sub->add_option("--job", f.job_json, "JSON object merged into the job after the flags");
  sub->add_option("--jobs", f.jobs, "worker threads (0: logical CPUs)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"concmeter: Monte Carlo concentration-of-measure checks"};
  app.require_subcommand(1);
  Flags f;
  std::string config_path;
  std::string check_id;

  auto* run = app.add_subcommand("run", "run every job of a JSON config");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("--out", f.out, "output directory (default: the config's output_dir)");
  run->add_option("--jobs", f.jobs, "parallel jobs (0: logical CPUs)");

  auto* alpha = app.add_subcommand("alpha", "empirical concentration curve as CSV");
  add_measure_flags(alpha, f);
  alpha->add_option("--metric", f.metric, "metric norm, e.g. l2, l1, linf");
  alpha->add_option("--eps", f.eps, "grid: a,b,c or start:stop:step");
  alpha->add_option("--directions", f.directions, "random half-space directions besides the axes");
  alpha->add_option("--out", f.out, "CSV path (default stdout)");
  alpha->add_option("--report", f.report, "also write the JSON report here");

  auto* beta = app.add_subcommand("beta", "table of beta or beta_tilde estimates against n");
  add_measure_flags(beta, f);
  beta->add_option("--K", f.k, "norm K");
  beta->add_option("--L", f.l, "norm L");
  beta->add_option("--variant", f.variant, "beta | beta_tilde")->check(CLI::IsMember({"beta", "beta_tilde"}));
  beta->add_option("--profile", f.profile, "profile for the cube lower bound column");
  beta->add_option("--C", f.big_c, "profile constant C");
  beta->add_option("--c", f.small_c, "profile constant c");
  beta->add_option("--out", f.out, "CSV path (default stdout)");
  beta->add_option("--report", f.report, "also write the JSON reports here");

  auto* median = app.add_subcommand("median", "empirical medians of a norm against n");
  add_measure_flags(median, f);
  median->add_option("--metric,--norm", f.metric, "norm whose median is estimated");
  median->add_option("--out", f.out, "CSV path (default stdout)");
  median->add_option("--report", f.report, "also write the JSON reports here");

  auto* push = app.add_subcommand("pushforward", "image of a sample under a map, as CSV rows");
  add_measure_flags(push, f);
  push->add_option("--map", f.map, "identity | scale | projection | pi | radial");
  push->add_option("--K", f.k, "norm K of the pi map");
  push->add_option("--L", f.l, "norm L of the pi or radial map");
  push->add_option("--target", f.target, "target measure of the radial map");
  push->add_option("--factor", f.factor, "scale factor");
  push->add_option("--k", f.proj_k, "projection rank");
  push->add_option("--out", f.out, "CSV path (default stdout)");
  push->add_option("--report", f.report, "also write the JSON report here");

  auto* transport = app.add_subcommand("transport", "radial transport map u as CSV");
  add_measure_flags(transport, f);
  transport->add_option("--target", f.target, "target measure family or JSON object");
  transport->add_option("--L", f.l, "norm for radii");
  transport->add_option("--out", f.out, "CSV path (default stdout)");
  transport->add_option("--report", f.report, "also write the JSON report here");

  auto* verify = app.add_subcommand("verify", "run one theorem check and print its JSON report");
  verify->add_option("check-id", check_id,
                     "prop_dec | thm_main | inclusion_lemma | ledoux_lemma | cor_farlinf | thm_farlinf | "
                     "thm_main1 | median_sandwich | pi_lipschitz")
      ->required();
  add_measure_flags(verify, f);
  verify->add_option("--metric", f.metric, "metric norm");
  verify->add_option("--K", f.k, "norm K");
  verify->add_option("--L", f.l, "norm L");
  verify->add_option("--eps", f.eps, "grid: a,b,c or start:stop:step");
  verify->add_option("--profile", f.profile, "sphere | gaussian | gamma1 | custom");
  verify->add_option("--C", f.big_c, "profile constant C");
  verify->add_option("--c", f.small_c, "profile constant c");
  verify->add_option("--directions", f.directions, "random half-space directions besides the axes");
  verify->add_option("--pairs", f.pairs, "pairs or probes where the check uses them");
  verify->add_option("--report,--out", f.report, "JSON report path (default stdout)");
  verify->add_option("--csv", f.csv, "grid CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*run) return cmd_run(config_path, f);
    if (*alpha) return cmd_single("alpha", f);
    if (*beta) return cmd_table("beta", f);
    if (*median) return cmd_table("median", f);
    if (*push) return cmd_single("pushforward", f);
    if (*transport) return cmd_single("transport", f);
    if (*verify) {
      static const std::vector<std::string> checks = {"prop_dec",      "thm_main",    "inclusion_lemma",
                                                      "ledoux_lemma",  "cor_farlinf", "thm_farlinf",
                                                      "thm_main1",     "median_sandwich", "pi_lipschitz"};
      if (std::find(checks.begin(), checks.end(), check_id) == checks.end()) {
        throw UsageError("verify: unknown check id '" + check_id + "'");
      }
      return cmd_verify(check_id, f);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const ApiError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "error: invalid JSON argument: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
