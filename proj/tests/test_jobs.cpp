#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "concmeter/error.hpp"
#include "concmeter/jobs.hpp"

using namespace concmeter;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string config_error(const json& config) {
  try {
    resolve_config(config, std::nullopt);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    return e.what();
  }
  ADD_FAILURE() << "no error for " << config.dump();
  return {};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("concmeter-test-" + name);
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Config, ParseErrorsCarryLineAndColumn) {
  try {
    parse_json_text("{\n  \"jobs\": [,]\n}", "cfg.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    EXPECT_EQ(std::string(e.what()).rfind("cfg.json:2:", 0), 0u) << e.what();
  }
}

TEST(Config, UnknownKeysAndFieldsAreNamed) {
  EXPECT_NE(config_error({{"jobs", json::array()}, {"bogus", 1}}).find("unknown key 'bogus'"), std::string::npos);
  EXPECT_NE(config_error({{"jobs", {{{"type", "alpha"}, {"n", 4}, {"colour", "red"}}}}}).find("config.jobs[0]"),
            std::string::npos);
  const auto family = config_error({{"jobs", {{{"type", "alpha"}, {"n", 4}, {"measure", {{"family", "cauchy"}}}}}}});
  EXPECT_NE(family.find("family"), std::string::npos) << family;
  EXPECT_NE(config_error({{"jobs", {{{"type", "nope"}, {"n", 4}}}}}).find("unknown job type"), std::string::npos);
  config_error({{"jobs", {{{"type", "alpha"}}}}});
  config_error({{"jobs", {{{"type", "alpha"}, {"n", 5000}}}}});
  config_error({{"jobs", {{{"type", "alpha"}, {"n", 4}, {"eps", json::array()}}}}});
  config_error({{"jobs", {{{"type", "thm_main1"}, {"n", 4}, {"p", 3}}}}});
  config_error({{"jobs", "alpha"}});
}

TEST(Config, EmptyJobListIsValid) {
  const auto r = resolve_config(json::object(), std::nullopt);
  EXPECT_TRUE(r["jobs"].empty());
  EXPECT_EQ(r["output_dir"], "concmeter-out");
  const fs::path dir = scratch("empty");
  const auto s = run_config(r, dir.string(), 2);
  EXPECT_EQ(s.exit_code, 0);
  const std::string summary = slurp(dir / "summary.csv");
  EXPECT_NE(summary.find("id,type,n,seed,verdict,violations,applicable,worst_margin,report\n"), std::string::npos);
  EXPECT_EQ(summary.substr(summary.find("report\n") + 7), "");
  fs::remove_all(dir);
}

TEST(Config, DimensionListsExpandAndIdsAreUnique) {
  const json config = {{"seed", 5},
                       {"jobs", {{{"type", "cor_farlinf"}, {"n", {2, 8}}}, {{"type", "alpha"}, {"n", 3}, {"id", "a"}}}}};
  const auto r = resolve_config(config, std::nullopt);
  ASSERT_EQ(r["jobs"].size(), 3u);
  EXPECT_EQ(r["jobs"][0]["id"], "cor_farlinf_0_n2");
  EXPECT_EQ(r["jobs"][1]["id"], "cor_farlinf_0_n8");
  EXPECT_EQ(r["jobs"][1]["n"], 8);
  EXPECT_EQ(r["jobs"][2]["id"], "a");
  EXPECT_EQ(r["jobs"][2]["seed"], 5);
  const auto overridden = resolve_config(config, 99);
  EXPECT_EQ(overridden["jobs"][0]["seed"], 99);
  EXPECT_EQ(overridden["seed"], 99);
  config_error({{"jobs", {{{"type", "alpha"}, {"n", 3}, {"id", "a"}}, {{"type", "median"}, {"n", 3}, {"id", "a"}}}}});
  config_error({{"jobs", {{{"type", "alpha"}, {"n", 3}, {"id", "../x"}}}}});
  config_error({{"jobs", {{{"type", "alpha"}, {"n", 3}, {"id", "summary"}}}}});
}

TEST(Config, ResolutionIsIdempotent) {
  const json config = {{"jobs",
                        {{{"type", "thm_main"}, {"n", 8}, {"K", "l2"}, {"L", "l1"}, {"eps", {{"start", 0.1}, {"stop", 0.5}, {"step", 0.1}}}},
                         {{"type", "beta"}, {"n", 8}, {"K", "l2"}, {"L", "linf"}, {"variant", "beta_tilde"}}}}};
  const auto once = resolve_config(config, std::nullopt);
  const auto twice = resolve_config(once, std::nullopt);
  EXPECT_EQ(once, twice);
  EXPECT_EQ(once["jobs"][0]["eps"].size(), 5u);
  json all = {{"jobs", json::array()}};
  for (const char* type : {"alpha", "median", "beta", "transport", "pushforward", "prop_dec", "thm_main",
                           "inclusion_lemma", "ledoux_lemma", "cor_farlinf", "thm_farlinf", "thm_main1",
                           "median_sandwich", "pi_lipschitz"}) {
    all["jobs"].push_back({{"type", type}, {"n", 4}});
  }
  const auto every = resolve_config(all, std::nullopt);
  EXPECT_EQ(resolve_config(every, std::nullopt), every);
  EXPECT_DOUBLE_EQ(once["jobs"][0]["eps"][2].get<double>(), 0.3);
}

TEST(Config, ReportsReRunFromTheirInputs) {
  const json config = {{"jobs", {{{"type", "median_sandwich"}, {"n", 6}, {"N", 2000}, {"K", "l2"}, {"L", "l1"}}}}};
  const auto resolved = resolve_config(config, std::nullopt);
  const auto a = run_job(resolved["jobs"][0]);
  ASSERT_FALSE(a.error);
  const auto b = run_job(resolve_job(a.report.inputs, 1, std::nullopt));
  EXPECT_EQ(a.report.to_json().dump(), b.report.to_json().dump());
}

TEST(Run, WritesReportsCsvAndSummary) {
  const json config = {{"jobs",
                        {{{"type", "cor_farlinf"}, {"n", 2}, {"N", 5000}, {"id", "cube"}},
                         {{"type", "alpha"}, {"n", 3}, {"N", 2000}, {"id", "curve"}, {"eps", {0.1, 0.2}}}}}};
  const auto resolved = resolve_config(config, std::nullopt);
  const fs::path dir = scratch("run");
  const auto s = run_config(resolved, dir.string(), 2);
  EXPECT_EQ(s.exit_code, 0);
  const json report = json::parse(slurp(dir / "cube.json"));
  EXPECT_EQ(report["verdict"], "pass");
  EXPECT_EQ(report["check_id"], "cor_farlinf");
  const json estimate = json::parse(slurp(dir / "curve.json"));
  EXPECT_EQ(estimate["verdict"], "not-applicable");
  const std::string curve = slurp(dir / "curve.curve.csv");
  EXPECT_EQ(curve.rfind("# job: ", 0), 0u);
  EXPECT_NE(curve.find("\neps,alpha_hat,ci,direction_id_of_max,alpha_raw\n"), std::string::npos);
  const std::string summary = slurp(dir / "summary.csv");
  EXPECT_NE(summary.find("\ncube,cor_farlinf,2,1,pass,0,"), std::string::npos) << summary;
  EXPECT_NE(summary.find("\ncurve,alpha,3,1,not-applicable,0,0,,curve.json\n"), std::string::npos) << summary;
  fs::remove_all(dir);
}

TEST(Run, ExitCodes) {
  // A custom profile with a tiny C cannot dominate the empirical curve.
  const json failing = {{"jobs",
                         {{{"type", "prop_dec"}, {"n", 4}, {"N", 5000}, {"measure", "haar_sphere"},
                           {"profile", {{"name", "custom"}, {"C", 0.001}, {"c", 1.0}}}, {"pairs", 500}}}}};
  const fs::path dir = scratch("codes");
  EXPECT_EQ(run_config(resolve_config(failing, std::nullopt), dir.string(), 1).exit_code, 2);
  // Lipschitz constant below the map's: execution error, exit 1.
  const json erroring = {{"jobs",
                          {{{"type", "prop_dec"}, {"n", 4}, {"N", 5000}, {"map", {{"kind", "scale"}, {"factor", 2.0}}},
                            {"lip", 1.0}, {"pairs", 500}},
                           {{"type", "prop_dec"}, {"n", 4}, {"N", 5000}, {"measure", "haar_sphere"},
                            {"profile", {{"name", "custom"}, {"C", 0.001}, {"c", 1.0}}}, {"pairs", 500}}}}};
  EXPECT_EQ(run_config(resolve_config(erroring, std::nullopt), dir.string(), 2).exit_code, 1);
  const json report = json::parse(slurp(dir / "prop_dec_0.json"));
  EXPECT_EQ(report["verdict"], "error");
  EXPECT_NE(slurp(dir / "summary.csv").find("prop_dec_0,prop_dec,4,1,error,,,,"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Run, OutputBytesIndependentOfWorkers) {
  const json config = {{"jobs",
                        {{{"type", "cor_farlinf"}, {"n", {2, 4}}, {"N", 3000}},
                         {{"type", "median"}, {"n", 5}, {"N", 3000}},
                         {{"type", "thm_main"}, {"n", 8}, {"N", 3000}, {"K", "l2"}, {"L", "l1"}}}}};
  const auto resolved = resolve_config(config, std::nullopt);
  const fs::path a = scratch("w1"), b = scratch("w4");
  const auto sa = run_config(resolved, a.string(), 1);
  const auto sb = run_config(resolved, b.string(), 4);
  ASSERT_EQ(sa.files, sb.files);
  for (const auto& f : sa.files) EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  fs::remove_all(a);
  fs::remove_all(b);
}
