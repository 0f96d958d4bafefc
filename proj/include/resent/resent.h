#ifndef RESENT_RESENT_H
#define RESENT_RESENT_H

/* C interface to the restoration-entropy toolkit.
 *
 * Every function returns a resent_status. On failure the message is
 * available from resent_last_error() on the calling thread until the next
 * call on that thread. Strings returned through char** out-parameters are
 * owned by the caller and released with resent_free_string(). */

#include <stddef.h>

#if defined(_WIN32)
#  ifdef RESENT_BUILDING_LIBRARY
#    define RESENT_API __declspec(dllexport)
#  else
#    define RESENT_API __declspec(dllimport)
#  endif
#else
#  define RESENT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum resent_status {
  RESENT_OK = 0,
  RESENT_ERR_INVALID_ARGUMENT = 1,
  RESENT_ERR_CONFIG = 2,
  RESENT_ERR_NUMERICAL = 3,
  RESENT_ERR_UNKNOWN_SYSTEM = 4,
  RESENT_ERR_NO_REFERENCE = 5,
  RESENT_ERR_INTERNAL = 6
} resent_status;

typedef struct resent_case resent_case;
typedef struct resent_metric resent_metric;
typedef struct resent_run resent_run;

RESENT_API const char* resent_version(void);
RESENT_API const char* resent_last_error(void);
RESENT_API const char* resent_status_name(resent_status status);
RESENT_API void resent_free_string(char* s);

/* ---- systems ---------------------------------------------------------- */

/* Writes f(x) (n values) or Df(x) (n*n values, row-major) into out.
 * Return 0 on success; anything else aborts the evaluation. */
typedef int (*resent_vector_fn)(const double* x, double* out, void* user);

/* params_json: object of numeric overrides, or NULL. */
RESENT_API resent_status resent_case_create(const char* name, const char* params_json,
                                            resent_case** out);
RESENT_API void resent_case_free(resent_case* c);
RESENT_API int resent_case_dim(const resent_case* c);
RESENT_API int resent_case_is_discrete(const resent_case* c);

/* Closed-form entropy and/or bounds as JSON; RESENT_ERR_NO_REFERENCE when the
 * system has none. */
RESENT_API resent_status resent_case_bounds_json(const resent_case* c, char** out);

/* JSON array of registered system names. */
RESENT_API resent_status resent_systems_json(char** out);

/* Registers a user system on the box [lower, upper] under `name`.
 * `jacobian` may be NULL, in which case central differences are used.
 * Callbacks may be invoked from several threads at once. The registered
 * case takes no parameters; defaults are degree 0, 101 points per axis,
 * step 1/k and 100 iterations. */
RESENT_API resent_status resent_register_system(const char* name, int dim, int discrete,
                                                resent_vector_fn field,
                                                resent_vector_fn jacobian, void* user,
                                                const double* lower, const double* upper);

/* ---- metrics ---------------------------------------------------------- */

/* a = 0, p = I in the basis of the given degree. */
RESENT_API resent_status resent_metric_identity(const resent_case* c, int degree,
                                                int include_constant, resent_metric** out);
/* Parses a best_metric.json document. Refuses unknown ordering tags. */
RESENT_API resent_status resent_metric_from_json(const char* json, resent_metric** out);
RESENT_API void resent_metric_free(resent_metric* m);
/* {"system", "params", "grid"} as stored in the metric document, when present. */
RESENT_API resent_status resent_metric_origin_json(const resent_metric* m, char** out);
RESENT_API resent_status resent_metric_to_json(const resent_case* c, const resent_metric* m,
                                               char** out);

/* Maximizes the pointwise functional over the grid and reports the entropy
 * estimate. grid_json: {"counts": [...], "refine": bool, "workers": int};
 * NULL or missing fields fall back to the system defaults. Result:
 * {"value", "x_star", "k_star", "gap_ok", "from_refinement", "spectrum"}. */
RESENT_API resent_status resent_evaluate(const resent_case* c, const resent_metric* m,
                                         const char* grid_json, char** out);

/* ---- runs ------------------------------------------------------------- */

typedef struct resent_record {
  int k;
  double theta;
  double value;
  double best_value;
  int k_star;
  double subgrad_norm;
  int gap_ok;
  double wall_time_ms;
} resent_record;

typedef void (*resent_progress_fn)(const resent_record* record, void* user);

/* Runs the optimizer described by a config document. On a numerical abort
 * the status is RESENT_ERR_NUMERICAL and *out still receives the run with
 * its partial records. */
RESENT_API resent_status resent_run_create(const char* config_json, resent_progress_fn progress,
                                           void* user, resent_run** out);
RESENT_API void resent_run_free(resent_run* r);

RESENT_API double resent_run_best_value(const resent_run* r);
RESENT_API int resent_run_best_iteration(const resent_run* r);
RESENT_API size_t resent_run_record_count(const resent_run* r);
RESENT_API resent_status resent_run_record(const resent_run* r, size_t index, resent_record* out);
/* NULL when the run completed. Owned by the run. */
RESENT_API const char* resent_run_abort_reason(const resent_run* r);

RESENT_API resent_status resent_run_iterations_csv(const resent_run* r, char** out);
RESENT_API resent_status resent_run_timing_csv(const resent_run* r, char** out);
RESENT_API resent_status resent_run_summary_json(const resent_run* r, char** out);
RESENT_API resent_status resent_run_best_metric_json(const resent_run* r, char** out);
RESENT_API resent_status resent_run_convergence_svg(const resent_run* r, char** out);

/* Renders the convergence plot from an iterations.csv document. */
RESENT_API resent_status resent_plot_svg_from_csv(const char* csv, const char* title, char** out);

#ifdef __cplusplus
}
#endif

#endif
