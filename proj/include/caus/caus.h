/* C interface to the contextual uncertainty-set library.
 *
 * Every function returns a caus_status. On failure the message is available
 * from caus_last_error() on the same thread until the next call. Strings
 * returned through char** out-parameters are owned by the caller and must be
 * released with caus_string_free(). Handles are released with their *_free
 * function; passing NULL to a *_free function is a no-op.
 */
#ifndef CAUS_CAUS_H
#define CAUS_CAUS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CAUS_API __declspec(dllexport)
#else
#define CAUS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum caus_status {
  CAUS_OK = 0,
  CAUS_INVALID_ARGUMENT = 1,
  CAUS_DIMENSION_MISMATCH = 2,
  CAUS_NON_FINITE_INPUT = 3,
  CAUS_TOO_FEW_SAMPLES = 4,
  CAUS_DEGENERATE_DATA = 5,
  CAUS_SINGULAR_COVARIATE_BLOCK = 6,
  CAUS_SINGULAR_CHOLESKY = 7,
  CAUS_RANK_UNATTAINABLE = 8,
  CAUS_TOO_FEW_DIRECTIONS = 9,
  CAUS_MISSING_BIG_M = 10,
  CAUS_ENUMERATION_TOO_LARGE = 11,
  CAUS_EMPTY_BOUNDS = 12,
  CAUS_INCONSISTENT_INSTANCE = 13,
  CAUS_SOLVER_FAILURE = 14,
  CAUS_BACKEND_UNAVAILABLE = 15,
  CAUS_NUMERICAL_FAILURE = 16,
  CAUS_ITERATION_LIMIT = 17,
  CAUS_PARSE_ERROR = 18,
  CAUS_MISSING_INPUT = 19,
  CAUS_IO_ERROR = 20,
  CAUS_INTERNAL_ERROR = 100
} caus_status;

CAUS_API const char* caus_version(void);
CAUS_API const char* caus_status_name(caus_status status);
CAUS_API const char* caus_last_error(void);
CAUS_API void caus_string_free(char* s);
/* Process exit code the command-line tool uses for a status. */
CAUS_API int caus_exit_code(caus_status status);

typedef struct caus_model caus_model;             /* joint mixture over (x, xi) */
typedef struct caus_conditional caus_conditional; /* mixture over xi alone */
typedef struct caus_set caus_set;                 /* per-period unions of polytopes */
typedef struct caus_instance caus_instance;       /* assembled unit commitment */

typedef struct caus_radius {
  double gamma;
  double epsilon;
  int kappa;
  int n_samples;
  uint64_t seed;
  int period;
} caus_radius;

/* Mixture models */
CAUS_API caus_status caus_model_fit_csv(const char* history_path, int k, uint64_t seed,
                                        caus_model** out);
CAUS_API caus_status caus_model_from_json(const char* json, caus_model** out);
CAUS_API caus_status caus_model_to_json(const caus_model* model, char** json_out);
CAUS_API caus_status caus_model_dims(const caus_model* model, int* n, int* m, int* k);
CAUS_API void caus_model_free(caus_model* model);

CAUS_API caus_status caus_model_condition(const caus_model* model, const double* x, size_t n,
                                          caus_conditional** out);
CAUS_API caus_status caus_model_marginal(const caus_model* model, caus_conditional** out);
CAUS_API caus_status caus_conditional_dims(const caus_conditional* model, int* m, int* k);
/* Writes m values. */
CAUS_API caus_status caus_conditional_mean(const caus_conditional* model, double* out);
CAUS_API caus_status caus_conditional_score(const caus_conditional* model, const double* xi,
                                            size_t m, double* score);
/* Writes count * m values, one draw per row. */
CAUS_API caus_status caus_conditional_sample(const caus_conditional* model, int count,
                                             uint64_t seed, double* out);
CAUS_API void caus_conditional_free(caus_conditional* model);

/* Calibration */
CAUS_API caus_status caus_order_statistic_rank(double epsilon, int n_samples, int* kappa);
CAUS_API caus_status caus_calibrate(const caus_conditional* model, int n_samples, double epsilon,
                                    uint64_t seed, caus_radius* out);

/* Uncertainty sets. Trajectories are periods x m, row-major. */
CAUS_API caus_status caus_set_build_caus(const caus_conditional* const* models,
                                         const caus_radius* radii, int periods, int j,
                                         uint64_t direction_seed, caus_set** out);
CAUS_API caus_status caus_set_build_box(const double* lower, const double* upper, int periods,
                                        int m, caus_set** out);
CAUS_API caus_status caus_set_from_json(const char* json, caus_set** out);
CAUS_API caus_status caus_set_to_json(const caus_set* set, char** json_out);
CAUS_API caus_status caus_set_contains(const caus_set* set, const double* trajectory,
                                       int periods, int m, int* member);
CAUS_API caus_status caus_set_encoding_size(const caus_set* set, int* binaries,
                                            int* auxiliaries);
/* Mixed-binary encoding in the plain-text constraint-list format. */
CAUS_API caus_status caus_set_encoding_text(const caus_set* set, char** text_out);
CAUS_API void caus_set_free(caus_set* set);

/* Unit commitment */
CAUS_API caus_status caus_instance_from_json(const char* json, caus_instance** out);
CAUS_API caus_status caus_instance_dimensions(const caus_instance* instance, char** json_out);
/* xi holds periods * farms values, period-major. */
CAUS_API caus_status caus_instance_solve_deterministic(const caus_instance* instance,
                                                       const double* xi, size_t length,
                                                       double* cost);
/* Returns CAUS_ITERATION_LIMIT, with the solution still written, when the
   gap tolerance was not reached. */
CAUS_API caus_status caus_instance_solve_robust(const caus_instance* instance,
                                                const caus_set* set, double tolerance,
                                                int max_iterations, int use_enumeration,
                                                char** solution_json);
CAUS_API void caus_instance_free(caus_instance* instance);

/* Pipeline commands: "fit", "calibrate", "build-set", "solve", "evaluate",
   "compare", "synth". Options and result are JSON; the result is
   {"artifact": {...}, "extras": {"<suffix>": "<file content>", ...}}. */
CAUS_API caus_status caus_command(const char* name, const char* options_json, char** result_json);

#ifdef __cplusplus
}
#endif

#endif /* CAUS_CAUS_H */
