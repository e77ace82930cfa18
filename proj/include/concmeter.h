/* concmeter C API.
 *
 * Every function returns a cm_status. On failure, cm_last_error() returns a
 * message for the calling thread, valid until that thread's next API call.
 * Handles are opaque and immutable once created; a handle may be shared
 * between threads for reading. Strings returned through char** out-params are
 * owned by the caller and released with cm_string_free.
 */
#ifndef CONCMETER_H
#define CONCMETER_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CM_API __declspec(dllexport)
#else
#define CM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cm_status {
  CM_OK = 0,
  CM_ERR_INVALID_ARGUMENT = 1,
  CM_ERR_DIMENSION_MISMATCH = 2,
  CM_ERR_NON_FINITE = 3,
  CM_ERR_SINGULAR_TRANSFORM = 4,
  CM_ERR_UNSUPPORTED = 5,
  CM_ERR_INSUFFICIENT_DATA = 6,
  CM_ERR_INFEASIBLE = 7,
  CM_ERR_PRECONDITION = 8,
  CM_ERR_CONFIG = 9,
  CM_ERR_IO = 10,
  CM_ERR_INTERNAL = 99
} cm_status;

typedef enum cm_verdict {
  CM_VERDICT_PASS = 0,
  CM_VERDICT_FAIL = 1,
  CM_VERDICT_NOT_APPLICABLE = 2
} cm_verdict;

typedef struct cm_norm cm_norm;
typedef struct cm_measure cm_measure;
typedef struct cm_batch cm_batch;
typedef struct cm_curve cm_curve;

CM_API const char* cm_version(void);
CM_API const char* cm_last_error(void);
CM_API const char* cm_status_name(cm_status status);
CM_API void cm_string_free(char* s);

/* Worker count for parallel loops; 0 selects the number of logical CPUs.
 * Results do not depend on it. */
CM_API cm_status cm_set_threads(unsigned workers);

/* Norms: {"kind":"lp","p":2|"inf","dim":n,"scale":1,"transform":[...]} or a
 * shorthand string such as "l1.5" (then dim must be passed; 0 means absent). */
CM_API cm_status cm_norm_from_json(const char* json, size_t dim, cm_norm** out);
CM_API void cm_norm_destroy(cm_norm* norm);
CM_API cm_status cm_norm_dim(const cm_norm* norm, size_t* dim);
CM_API cm_status cm_norm_eval(const cm_norm* norm, const double* x, size_t n, double* value);
CM_API cm_status cm_norm_dual(const cm_norm* norm, cm_norm** out);
/* Smallest lambda and scale s with s‖x‖_K <= ‖x‖_L <= s·lambda‖x‖_K.
 * exact is set to 1 when the value is closed-form. */
CM_API cm_status cm_norm_containment(const cm_norm* k, const cm_norm* l, double* lambda, double* scale, int* exact);

/* Measures: {"family":"uniform_ball"|"cone_surface"|"ggp"|"gaussian"|"haar_sphere",
 * "dim":n, "p":..., "norm":...}. */
CM_API cm_status cm_measure_from_json(const char* json, size_t dim, cm_measure** out);
CM_API void cm_measure_destroy(cm_measure* measure);

CM_API cm_status cm_sample(const cm_measure* measure, size_t count, uint64_t seed, cm_batch** out);
CM_API void cm_batch_destroy(cm_batch* batch);
CM_API cm_status cm_batch_shape(const cm_batch* batch, size_t* count, size_t* dim);
/* Row-major count×dim view, valid while the batch lives. */
CM_API cm_status cm_batch_data(const cm_batch* batch, const double** data);
CM_API cm_status cm_batch_write_csv(const cm_batch* batch, const char* path);
/* Empirical median of ‖X‖ over the batch with its 95% order-statistic interval. */
CM_API cm_status cm_batch_median(const cm_batch* batch, const cm_norm* norm, double* value, double* ci_low,
                                 double* ci_high);

/* Half-space lower bound on the concentration function over the coordinate
 * axes (if axes != 0) plus `random_directions` Gaussian directions. */
CM_API cm_status cm_alpha_curve(const cm_batch* batch, const cm_norm* metric, const double* eps, size_t eps_count,
                                int axes, size_t random_directions, uint64_t direction_seed, cm_curve** out);
CM_API void cm_curve_destroy(cm_curve* curve);
CM_API cm_status cm_curve_size(const cm_curve* curve, size_t* size);
CM_API cm_status cm_curve_point(const cm_curve* curve, size_t i, double* eps, double* alpha_hat, double* ci);
CM_API cm_status cm_curve_write_csv(const cm_curve* curve, const char* path);

/* Validates a config and returns it with every default filled in. */
CM_API cm_status cm_resolve_config(const char* config_json, const uint64_t* seed_override, char** resolved_json);

/* Runs one job (a config "jobs" entry with a single n). report_json gets the
 * CheckReport; csv gets the job's data file (may be empty) with its leading
 * "# job:" line; either out-param may be NULL. Execution failures return the
 * error status and leave outputs untouched. */
CM_API cm_status cm_job_run(const char* job_json, const uint64_t* seed_override, char** report_json, char** csv,
                            cm_verdict* verdict);

/* Runs a whole config on `workers` job threads (0: logical CPUs) and writes
 * reports and summary.csv into out_dir (NULL: the config's output_dir).
 * exit_code receives 0 (all pass or not-applicable), 2 (any fail) or 1 (a job
 * raised an error). */
CM_API cm_status cm_run_config(const char* config_json, const char* out_dir, unsigned workers,
                               const uint64_t* seed_override, int* exit_code);

#ifdef __cplusplus
}
#endif

#endif
