/* C interface to the EMTR-SSC registration engine.
 *
 * Every function returns an emtr_status; on failure emtr_last_error() holds
 * a message for the calling thread. Handles are opaque and owned by the
 * caller, who releases them with the matching *_free function. Strings
 * returned through char** must be released with emtr_string_free. */
#ifndef EMTR_EMTR_H
#define EMTR_EMTR_H

#include <stddef.h>
#include <stdint.h>

#if defined(EMTR_BUILDING_LIBRARY)
#define EMTR_API __attribute__((visibility("default")))
#else
#define EMTR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum emtr_status {
  EMTR_OK = 0,
  EMTR_ERR_INVALID_ARGUMENT = 1,
  EMTR_ERR_IO = 2,
  EMTR_ERR_PARSE = 3,
  EMTR_ERR_DEGENERATE = 4,
  EMTR_ERR_NO_CORRESPONDENCE = 5,
  EMTR_ERR_STAGE = 6,
  EMTR_ERR_INTERNAL = 7
} emtr_status;

typedef enum emtr_mode { EMTR_MODE_EMTR_SSC = 0, EMTR_MODE_SINGLE_TASK_PSO = 1 } emtr_mode;

typedef enum emtr_format { EMTR_FORMAT_JSON = 0, EMTR_FORMAT_CSV = 1 } emtr_format;

typedef struct emtr_cloud emtr_cloud;
typedef struct emtr_trace emtr_trace;
typedef struct emtr_report emtr_report;

/* Tunable subset of the engine configuration. Start from
 * emtr_config_default and change fields as needed. */
typedef struct emtr_config {
  int max_it;
  size_t pop_size;
  double rmp;
  double delta;
  int sparse_to_dense;
  double c_scale;
  double tau_scale;
  size_t max_tims;
  int max_it_kc;
  double tukey_scale;
  size_t dense_cap;
  size_t sparse_cap;
  size_t feature_cap;
  int transfer_overwrite;
} emtr_config;

/* Row-major 3x4 [R | t]. */
typedef struct emtr_transform {
  double m[12];
} emtr_transform;

typedef struct emtr_result {
  double pose[6];              /* theta1, theta2, theta3, tx, ty, tz in normalized space */
  emtr_transform normalized;   /* the same pose as a matrix */
  emtr_transform raw;          /* maps the raw source onto the raw target */
  double fitness;
  int has_errors;              /* 1 when a ground truth was supplied */
  double rotation_error_deg;
  double translation_error;    /* normalized units */
  uint64_t swarm_nns_calls;
  uint64_t total_nns_calls;
} emtr_result;

EMTR_API const char* emtr_last_error(void);
EMTR_API const char* emtr_version(void);
EMTR_API void emtr_string_free(char* s);

EMTR_API emtr_status emtr_cloud_load(const char* path, emtr_cloud** out);
EMTR_API emtr_status emtr_cloud_save(const emtr_cloud* cloud, const char* path);
EMTR_API emtr_status emtr_cloud_from_points(const double* xyz, size_t count, emtr_cloud** out);
EMTR_API emtr_status emtr_cloud_synthetic(size_t count, uint64_t seed, emtr_cloud** out);
EMTR_API size_t emtr_cloud_size(const emtr_cloud* cloud);
/* Copies up to `capacity` points (3 doubles each) into xyz. */
EMTR_API emtr_status emtr_cloud_points(const emtr_cloud* cloud, double* xyz, size_t capacity);
EMTR_API void emtr_cloud_free(emtr_cloud* cloud);

EMTR_API void emtr_config_default(emtr_config* config);

/* Registers source onto target. `ground_truth` (raw coordinates, may be
 * NULL) enables the error fields. `trace` may be NULL. */
EMTR_API emtr_status emtr_register(const emtr_cloud* source, const emtr_cloud* target,
                                   const emtr_config* config, emtr_mode mode, uint64_t seed,
                                   const emtr_transform* ground_truth, emtr_result* result,
                                   emtr_trace** trace);

EMTR_API emtr_status emtr_trace_to_json(const emtr_trace* trace, char** json);
EMTR_API void emtr_trace_free(emtr_trace* trace);

/* Runs an experiment described by a JSON spec (see docs/schemas.md). */
EMTR_API emtr_status emtr_experiment_run(const char* spec_json, emtr_report** out);
/* Runs the spec once per value of `param` ("rmp" or "delta"); reports[i]
 * receives the handle for values[i]. */
EMTR_API emtr_status emtr_sweep_run(const char* spec_json, const char* param, const double* values,
                                    size_t count, emtr_report** reports);
EMTR_API emtr_status emtr_report_write(const emtr_report* report, const char* path, emtr_format format);
EMTR_API emtr_status emtr_report_to_json(const emtr_report* report, char** json);
EMTR_API double emtr_report_success_ratio(const emtr_report* report);
EMTR_API size_t emtr_report_trial_count(const emtr_report* report);
EMTR_API void emtr_report_free(emtr_report* report);

/* Writes "point_index,rmse" rows: distance between the estimated and the
 * true position of each source point. */
EMTR_API emtr_status emtr_write_rmse_csv(const emtr_cloud* source, const emtr_transform* estimate,
                                         const emtr_transform* ground_truth, const char* path);

#ifdef __cplusplus
}
#endif

#endif
