#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "concmeter.h"

namespace fs = std::filesystem;

TEST(CApi, StatusNamesAndVersion) {
  EXPECT_STREQ(cm_status_name(CM_OK), "ok");
  EXPECT_STREQ(cm_status_name(CM_ERR_CONFIG), "config");
  EXPECT_STREQ(cm_status_name(CM_ERR_INFEASIBLE), "infeasible");
  EXPECT_STREQ(cm_status_name(static_cast<cm_status>(42)), "internal");
  EXPECT_STRNE(cm_version(), "");
}

TEST(CApi, NormHandles) {
  cm_norm* l1 = nullptr;
  ASSERT_EQ(cm_norm_from_json("\"l1\"", 3, &l1), CM_OK);
  size_t dim = 0;
  ASSERT_EQ(cm_norm_dim(l1, &dim), CM_OK);
  EXPECT_EQ(dim, 3u);
  const double x[] = {1.0, -2.0, 0.5};
  double v = 0.0;
  ASSERT_EQ(cm_norm_eval(l1, x, 3, &v), CM_OK);
  EXPECT_DOUBLE_EQ(v, 3.5);
  EXPECT_EQ(cm_norm_eval(l1, x, 2, &v), CM_ERR_DIMENSION_MISMATCH);
  EXPECT_NE(std::string(cm_last_error()).find("wrong length"), std::string::npos);

  cm_norm* dual = nullptr;
  ASSERT_EQ(cm_norm_dual(l1, &dual), CM_OK);
  ASSERT_EQ(cm_norm_eval(dual, x, 3, &v), CM_OK);
  EXPECT_DOUBLE_EQ(v, 2.0);
  EXPECT_STREQ(cm_last_error(), "");

  cm_norm* l2 = nullptr;
  ASSERT_EQ(cm_norm_from_json(R"({"kind":"lp","p":2,"dim":3})", 0, &l2), CM_OK);
  double lambda = 0.0, scale = 0.0;
  int exact = 0;
  ASSERT_EQ(cm_norm_containment(l2, l1, &lambda, &scale, &exact), CM_OK);
  EXPECT_NEAR(lambda, std::sqrt(3.0), 1e-12);
  EXPECT_DOUBLE_EQ(scale, 1.0);
  EXPECT_EQ(exact, 1);

  cm_norm* bad = nullptr;
  EXPECT_EQ(cm_norm_from_json(R"({"kind":"lp","p":0.5,"dim":3})", 0, &bad), CM_ERR_CONFIG);
  EXPECT_EQ(bad, nullptr);
  EXPECT_EQ(cm_norm_from_json("{", 0, &bad), CM_ERR_CONFIG);
  EXPECT_EQ(cm_norm_from_json(nullptr, 0, &bad), CM_ERR_INVALID_ARGUMENT);
  cm_norm_destroy(l1);
  cm_norm_destroy(dual);
  cm_norm_destroy(l2);
  cm_norm_destroy(nullptr);
}

TEST(CApi, SamplingMedianAndCurve) {
  cm_measure* m = nullptr;
  ASSERT_EQ(cm_measure_from_json(R"({"family":"uniform_ball","p":2})", 8, &m), CM_OK);
  cm_batch* b = nullptr;
  ASSERT_EQ(cm_sample(m, 20000, 7, &b), CM_OK);
  size_t count = 0, dim = 0;
  ASSERT_EQ(cm_batch_shape(b, &count, &dim), CM_OK);
  EXPECT_EQ(count, 20000u);
  EXPECT_EQ(dim, 8u);
  const double* data = nullptr;
  ASSERT_EQ(cm_batch_data(b, &data), CM_OK);
  cm_batch* again = nullptr;
  ASSERT_EQ(cm_sample(m, 20000, 7, &again), CM_OK);
  const double* data2 = nullptr;
  ASSERT_EQ(cm_batch_data(again, &data2), CM_OK);
  EXPECT_EQ(std::vector<double>(data, data + 8 * count), std::vector<double>(data2, data2 + 8 * count));

  cm_norm* l2 = nullptr;
  ASSERT_EQ(cm_norm_from_json("\"l2\"", 8, &l2), CM_OK);
  double med = 0.0, lo = 0.0, hi = 0.0;
  ASSERT_EQ(cm_batch_median(b, l2, &med, &lo, &hi), CM_OK);
  EXPECT_LE(lo, med);
  EXPECT_LE(med, hi);
  EXPECT_NEAR(med, std::pow(2.0, -1.0 / 8.0), 0.01);

  const double eps[] = {0.1, 0.5};
  cm_curve* c = nullptr;
  ASSERT_EQ(cm_alpha_curve(b, l2, eps, 2, 1, 16, 3, &c), CM_OK);
  size_t size = 0;
  ASSERT_EQ(cm_curve_size(c, &size), CM_OK);
  ASSERT_EQ(size, 2u);
  double e = 0.0, a0 = 0.0, a1 = 0.0, ci = 0.0;
  ASSERT_EQ(cm_curve_point(c, 0, &e, &a0, &ci), CM_OK);
  ASSERT_EQ(cm_curve_point(c, 1, &e, &a1, &ci), CM_OK);
  EXPECT_EQ(e, 0.5);
  EXPECT_GE(a0, a1);
  EXPECT_EQ(cm_curve_point(c, 2, &e, &a0, &ci), CM_ERR_INVALID_ARGUMENT);

  const fs::path dir = fs::temp_directory_path() / "concmeter-capi";
  fs::create_directories(dir);
  ASSERT_EQ(cm_curve_write_csv(c, (dir / "c.csv").c_str()), CM_OK);
  ASSERT_EQ(cm_batch_write_csv(b, (dir / "b.csv").c_str()), CM_OK);
  EXPECT_EQ(cm_batch_write_csv(b, (dir / "missing" / "b.csv").c_str()), CM_ERR_IO);
  std::ifstream f(dir / "c.csv");
  std::string header;
  std::getline(f, header);
  EXPECT_EQ(header, "eps,alpha_hat,ci,direction_id_of_max,alpha_raw");

  cm_norm* l3 = nullptr;
  ASSERT_EQ(cm_norm_from_json("\"l2\"", 3, &l3), CM_OK);
  EXPECT_EQ(cm_batch_median(b, l3, &med, nullptr, nullptr), CM_ERR_DIMENSION_MISMATCH);
  cm_curve_destroy(c);
  cm_batch_destroy(b);
  cm_batch_destroy(again);
  cm_measure_destroy(m);
  cm_norm_destroy(l2);
  cm_norm_destroy(l3);
  fs::remove_all(dir);
}

TEST(CApi, ThreadCountDoesNotChangeResults) {
  cm_measure* m = nullptr;
  ASSERT_EQ(cm_measure_from_json(R"({"family":"ggp","p":1})", 5, &m), CM_OK);
  std::vector<double> first;
  for (unsigned w : {1u, 3u, 0u}) {
    ASSERT_EQ(cm_set_threads(w), CM_OK);
    cm_batch* b = nullptr;
    ASSERT_EQ(cm_sample(m, 5000, 11, &b), CM_OK);
    const double* d = nullptr;
    cm_batch_data(b, &d);
    std::vector<double> v(d, d + 5 * 5000);
    if (first.empty()) first = v;
    EXPECT_EQ(v, first) << w;
    cm_batch_destroy(b);
  }
  cm_measure_destroy(m);
}

TEST(CApi, JobsAndConfigs) {
  char* resolved = nullptr;
  const uint64_t seed = 77;
  ASSERT_EQ(cm_resolve_config(R"({"jobs":[{"type":"cor_farlinf","n":[2,3]}]})", &seed, &resolved), CM_OK);
  const std::string text = resolved;
  cm_string_free(resolved);
  EXPECT_NE(text.find("cor_farlinf_0_n3"), std::string::npos);
  EXPECT_NE(text.find("\"seed\": 77"), std::string::npos);

  resolved = nullptr;
  EXPECT_EQ(cm_resolve_config(R"({"jobs":[{"type":"cor_farlinf","n":2,"wat":1}]})", nullptr, &resolved), CM_ERR_CONFIG);
  EXPECT_EQ(resolved, nullptr);
  EXPECT_NE(std::string(cm_last_error()).find("unknown key 'wat'"), std::string::npos);

  char* report = nullptr;
  char* csv = nullptr;
  cm_verdict verdict = CM_VERDICT_FAIL;
  ASSERT_EQ(cm_job_run(R"({"type":"cor_farlinf","n":4,"N":5000})", nullptr, &report, &csv, &verdict), CM_OK);
  EXPECT_EQ(verdict, CM_VERDICT_PASS);
  EXPECT_NE(std::string(report).find("\"verdict\": \"pass\""), std::string::npos);
  EXPECT_EQ(std::string(csv).rfind("# job: ", 0), 0u);
  cm_string_free(report);
  cm_string_free(csv);

  ASSERT_EQ(cm_job_run(R"({"type":"alpha","n":3,"N":500,"eps":[0.2]})", nullptr, nullptr, nullptr, &verdict), CM_OK);
  EXPECT_EQ(verdict, CM_VERDICT_NOT_APPLICABLE);
  EXPECT_EQ(cm_job_run(R"({"type":"prop_dec","n":3,"N":500,"map":{"kind":"scale","factor":3},"lip":1})", nullptr,
                       nullptr, nullptr, &verdict),
            CM_ERR_PRECONDITION);

  const fs::path dir = fs::temp_directory_path() / "concmeter-capi-run";
  fs::remove_all(dir);
  int code = -1;
  ASSERT_EQ(cm_run_config(R"({"jobs":[{"type":"cor_farlinf","n":2,"N":2000}]})", dir.c_str(), 2, nullptr, &code),
            CM_OK);
  EXPECT_EQ(code, 0);
  EXPECT_TRUE(fs::exists(dir / "summary.csv"));
  EXPECT_TRUE(fs::exists(dir / "cor_farlinf_0.json"));
  fs::remove_all(dir);
}
