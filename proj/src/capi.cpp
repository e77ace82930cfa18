#include "concmeter.h"

#include <cstring>
#include <fstream>
#include <new>
#include <string>

#include "concmeter/concentration.hpp"
#include "concmeter/error.hpp"
#include "concmeter/jobs.hpp"
#include "concmeter/measures.hpp"
#include "concmeter/normspace.hpp"
#include "concmeter/parallel.hpp"

struct cm_norm {
  concmeter::NormSpec spec;
};
struct cm_measure {
  concmeter::MeasureSpec spec;
};
struct cm_batch {
  concmeter::SampleBatch batch;
};
struct cm_curve {
  concmeter::ConcentrationCurve curve;
};

namespace {

thread_local std::string g_last_error;

cm_status fail(cm_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <class F>
cm_status guarded(F&& f) {
  g_last_error.clear();
  try {
    f();
    return CM_OK;
  } catch (const concmeter::Error& e) {
    return fail(static_cast<cm_status>(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(CM_ERR_CONFIG, e.what());
  } catch (const std::bad_alloc&) {
    return fail(CM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(CM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(CM_ERR_INTERNAL, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw concmeter::Error(concmeter::ErrorCode::kInvalidArgument, what);
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::optional<std::size_t> dim_hint(std::size_t dim) {
  return dim == 0 ? std::nullopt : std::optional<std::size_t>(dim);
}

std::optional<std::uint64_t> seed_of(const std::uint64_t* p) {
  return p ? std::optional<std::uint64_t>(*p) : std::nullopt;
}

std::ofstream open_out(const char* path) {
  require(path != nullptr, "path is null");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw concmeter::Error(concmeter::ErrorCode::kIo, std::string("cannot open ") + path);
  return f;
}

cm_verdict to_c(concmeter::Verdict v) {
  switch (v) {
    case concmeter::Verdict::kPass:
      return CM_VERDICT_PASS;
    case concmeter::Verdict::kFail:
      return CM_VERDICT_FAIL;
    default:
      return CM_VERDICT_NOT_APPLICABLE;
  }
}

}  // namespace

extern "C" {

const char* cm_version(void) { return "0.1.0"; }

const char* cm_last_error(void) { return g_last_error.c_str(); }

const char* cm_status_name(cm_status status) {
  switch (status) {
    case CM_OK:
      return "ok";
    case CM_ERR_INVALID_ARGUMENT:
      return "invalid_argument";
    case CM_ERR_DIMENSION_MISMATCH:
      return "dimension_mismatch";
    case CM_ERR_NON_FINITE:
      return "non_finite";
    case CM_ERR_SINGULAR_TRANSFORM:
      return "singular_transform";
    case CM_ERR_UNSUPPORTED:
      return "unsupported";
    case CM_ERR_INSUFFICIENT_DATA:
      return "insufficient_data";
    case CM_ERR_INFEASIBLE:
      return "infeasible";
    case CM_ERR_PRECONDITION:
      return "precondition";
    case CM_ERR_CONFIG:
      return "config";
    case CM_ERR_IO:
      return "io";
    default:
      return "internal";
  }
}

void cm_string_free(char* s) { std::free(s); }

cm_status cm_set_threads(unsigned workers) {
  return guarded([&] { concmeter::set_worker_count(workers); });
}

cm_status cm_norm_from_json(const char* json, size_t dim, cm_norm** out) {
  return guarded([&] {
    require(json && out, "null argument");
    const auto j = concmeter::parse_json_text(json, "norm");
    *out = new cm_norm{concmeter::norm_from_json(j, dim_hint(dim))};
  });
}

void cm_norm_destroy(cm_norm* norm) { delete norm; }

cm_status cm_norm_dim(const cm_norm* norm, size_t* dim) {
  return guarded([&] {
    require(norm && dim, "null argument");
    *dim = norm->spec.dim();
  });
}

cm_status cm_norm_eval(const cm_norm* norm, const double* x, size_t n, double* value) {
  return guarded([&] {
    require(norm && x && value, "null argument");
    if (n != norm->spec.dim()) throw concmeter::Error(concmeter::ErrorCode::kDimensionMismatch, "norm_eval: wrong length");
    *value = concmeter::norm_eval(norm->spec, std::span<const double>(x, n));
  });
}

cm_status cm_norm_dual(const cm_norm* norm, cm_norm** out) {
  return guarded([&] {
    require(norm && out, "null argument");
    *out = new cm_norm{concmeter::dual_norm(norm->spec)};
  });
}

cm_status cm_norm_containment(const cm_norm* k, const cm_norm* l, double* lambda, double* scale, int* exact) {
  return guarded([&] {
    require(k && l, "null argument");
    const auto c = concmeter::containment_lambda(k->spec, l->spec);
    if (lambda) *lambda = c.lambda;
    if (scale) *scale = c.scale;
    if (exact) *exact = c.exact ? 1 : 0;
  });
}

cm_status cm_measure_from_json(const char* json, size_t dim, cm_measure** out) {
  return guarded([&] {
    require(json && out, "null argument");
    const auto j = concmeter::parse_json_text(json, "measure");
    *out = new cm_measure{concmeter::measure_from_json(j, dim_hint(dim))};
  });
}

void cm_measure_destroy(cm_measure* measure) { delete measure; }

cm_status cm_sample(const cm_measure* measure, size_t count, uint64_t seed, cm_batch** out) {
  return guarded([&] {
    require(measure && out, "null argument");
    *out = new cm_batch{concmeter::sample(measure->spec, count, seed)};
  });
}

void cm_batch_destroy(cm_batch* batch) { delete batch; }

cm_status cm_batch_shape(const cm_batch* batch, size_t* count, size_t* dim) {
  return guarded([&] {
    require(batch, "null argument");
    if (count) *count = batch->batch.count();
    if (dim) *dim = batch->batch.dim();
  });
}

cm_status cm_batch_data(const cm_batch* batch, const double** data) {
  return guarded([&] {
    require(batch && data, "null argument");
    *data = batch->batch.view().data.data();
  });
}

cm_status cm_batch_write_csv(const cm_batch* batch, const char* path) {
  return guarded([&] {
    require(batch != nullptr, "null argument");
    auto f = open_out(path);
    concmeter::write_rows_csv(f, batch->batch.view());
    if (!f) throw concmeter::Error(concmeter::ErrorCode::kIo, std::string("write failed for ") + path);
  });
}

cm_status cm_batch_median(const cm_batch* batch, const cm_norm* norm, double* value, double* ci_low,
                          double* ci_high) {
  return guarded([&] {
    require(batch && norm, "null argument");
    if (norm->spec.dim() != batch->batch.dim()) {
      throw concmeter::Error(concmeter::ErrorCode::kDimensionMismatch, "batch_median: dimension mismatch");
    }
    std::vector<double> v(batch->batch.count());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = concmeter::norm_eval(norm->spec, batch->batch.row(i));
    const auto m = concmeter::empirical_median(v);
    if (value) *value = m.value;
    if (ci_low) *ci_low = m.ci_low;
    if (ci_high) *ci_high = m.ci_high;
  });
}

cm_status cm_alpha_curve(const cm_batch* batch, const cm_norm* metric, const double* eps, size_t eps_count, int axes,
                         size_t random_directions, uint64_t direction_seed, cm_curve** out) {
  return guarded([&] {
    require(batch && metric && out && (eps || eps_count == 0), "null argument");
    const concmeter::DirectionFamily family{axes != 0, random_directions, direction_seed};
    *out = new cm_curve{concmeter::concentration_lower_curve(batch->batch.view(), metric->spec,
                                                             std::span<const double>(eps, eps_count), family)};
  });
}

void cm_curve_destroy(cm_curve* curve) { delete curve; }

cm_status cm_curve_size(const cm_curve* curve, size_t* size) {
  return guarded([&] {
    require(curve && size, "null argument");
    *size = curve->curve.eps.size();
  });
}

cm_status cm_curve_point(const cm_curve* curve, size_t i, double* eps, double* alpha_hat, double* ci) {
  return guarded([&] {
    require(curve != nullptr, "null argument");
    require(i < curve->curve.eps.size(), "curve index out of range");
    if (eps) *eps = curve->curve.eps[i];
    if (alpha_hat) *alpha_hat = curve->curve.alpha_hat[i];
    if (ci) *ci = curve->curve.ci[i];
  });
}

cm_status cm_curve_write_csv(const cm_curve* curve, const char* path) {
  return guarded([&] {
    require(curve != nullptr, "null argument");
    auto f = open_out(path);
    concmeter::write_curve_csv(f, curve->curve);
    if (!f) throw concmeter::Error(concmeter::ErrorCode::kIo, std::string("write failed for ") + path);
  });
}

cm_status cm_resolve_config(const char* config_json, const uint64_t* seed_override, char** resolved_json) {
  return guarded([&] {
    require(config_json && resolved_json, "null argument");
    const auto config = concmeter::parse_json_text(config_json, "config");
    *resolved_json = dup(concmeter::resolve_config(config, seed_of(seed_override)).dump(2));
  });
}

cm_status cm_job_run(const char* job_json, const uint64_t* seed_override, char** report_json, char** csv,
                     cm_verdict* verdict) {
  return guarded([&] {
    require(job_json != nullptr, "null argument");
    const auto raw = concmeter::parse_json_text(job_json, "job");
    const auto job = concmeter::resolve_job(raw, 1, seed_of(seed_override));
    const auto result = concmeter::run_job(job, csv != nullptr);
    if (result.error) {
      throw concmeter::Error(static_cast<concmeter::ErrorCode>(result.error->first), result.error->second);
    }
    nlohmann::json report = result.report.to_json();
    report["inputs"] = job;
    std::string csv_text;
    if (csv && !result.csv.empty()) csv_text = concmeter::comment_line("job", job) + result.csv;
    char* r = report_json ? dup(report.dump(2) + "\n") : nullptr;
    char* c = nullptr;
    try {
      if (csv) c = dup(csv_text);
    } catch (...) {
      std::free(r);
      throw;
    }
    if (report_json) *report_json = r;
    if (csv) *csv = c;
    if (verdict) *verdict = to_c(result.report.verdict);
  });
}

cm_status cm_run_config(const char* config_json, const char* out_dir, unsigned workers, const uint64_t* seed_override,
                        int* exit_code) {
  return guarded([&] {
    require(config_json != nullptr, "null argument");
    const auto config = concmeter::parse_json_text(config_json, "config");
    const auto resolved = concmeter::resolve_config(config, seed_of(seed_override));
    const std::string dir = out_dir ? std::string(out_dir) : resolved["output_dir"].get<std::string>();
    const auto summary = concmeter::run_config(resolved, dir, workers);
    if (exit_code) *exit_code = summary.exit_code;
  });
}

}  // extern "C"
