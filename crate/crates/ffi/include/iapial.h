#ifndef IAPIAL_H
#define IAPIAL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IapialRestart {
  IAPIAL_RESTART_WARM = 0,
  IAPIAL_RESTART_COLD = 1,
} IapialRestart;

typedef enum IapialStatus {
  IAPIAL_STATUS_OK = 0,
  IAPIAL_STATUS_NULL_POINTER = 1,
  IAPIAL_STATUS_INVALID_UTF8 = 2,
  IAPIAL_STATUS_PARSE = 3,
  IAPIAL_STATUS_INVALID_ARGUMENT = 4,
  /**
   * The solver stopped at the cycle cap; a result handle is still returned.
   */
  IAPIAL_STATUS_CYCLE_CAP = 5,
  /**
   * The time limit was hit; a result handle is still returned.
   */
  IAPIAL_STATUS_TIMEOUT = 6,
  IAPIAL_STATUS_SOLVER = 7,
  IAPIAL_STATUS_BUFFER_TOO_SMALL = 8,
  IAPIAL_STATUS_PANIC = 9,
} IapialStatus;

/**
 * Opaque problem handle.
 */
typedef struct IapialProblem IapialProblem;

/**
 * Opaque result handle.
 */
typedef struct IapialResult IapialResult;

/**
 * Solver settings. Start from [`iapial_options_default`].
 */
typedef struct IapialOptions {
  double rho;
  double eta;
  double nu;
  double sigma;
  double c1;
  enum IapialRestart restart;
  size_t max_cycles;
  /**
   * Outer iterations per cycle; 0 uses the default.
   */
  size_t max_outer;
  /**
   * Seconds; 0 or negative means no limit.
   */
  double time_limit;
} IapialOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next call into the library from the same thread.
 */
const char *iapial_last_error(void);

struct IapialOptions iapial_options_default(void);

/**
 * Parses a problem file (JSON text).
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum IapialStatus iapial_problem_from_json(const char *json, struct IapialProblem **out);

/**
 * Generates an instance from a generator spec (JSON text).
 *
 * # Safety
 * `spec` must be a NUL-terminated string and `out` a valid pointer.
 */
enum IapialStatus iapial_problem_generate(const char *spec, struct IapialProblem **out);

/**
 * # Safety
 * `problem` must come from this library or be NULL.
 */
void iapial_problem_free(struct IapialProblem *problem);

/**
 * # Safety
 * `problem` must be a live handle; `n` and `l` valid pointers.
 */
enum IapialStatus iapial_problem_dims(const struct IapialProblem *problem, size_t *n, size_t *l);

/**
 * Serializes the problem back to JSON. Free with [`iapial_string_free`].
 *
 * # Safety
 * `problem` must be a live handle and `out` a valid pointer.
 */
enum IapialStatus iapial_problem_to_json(const struct IapialProblem *problem, char **out);

/**
 * Runs the solver. On `Ok`, `CycleCap` and `Timeout` a result handle is
 * stored in `out`; otherwise `out` is set to NULL.
 *
 * # Safety
 * `problem` must be a live handle, `options` NULL or valid, `out` valid.
 */
enum IapialStatus iapial_solve(const struct IapialProblem *problem,
                               const struct IapialOptions *options,
                               struct IapialResult **out);

/**
 * # Safety
 * `result` must come from this library or be NULL.
 */
void iapial_result_free(struct IapialResult *result);

/**
 * 1 if an approximate stationary triple was found, 0 if not, -1 on NULL.
 *
 * # Safety
 * `result` must be a live handle or NULL.
 */
int iapial_result_success(const struct IapialResult *result);

/**
 * Number of penalty cycles run, 0 on NULL.
 *
 * # Safety
 * `result` must be a live handle or NULL.
 */
size_t iapial_result_cycles(const struct IapialResult *result);

/**
 * Penalty of the last cycle run, NaN if none.
 *
 * # Safety
 * `result` must be a live handle or NULL.
 */
double iapial_result_final_penalty(const struct IapialResult *result);

/**
 * Writes `||w||`, `||A z - b||` and the inclusion residual of the triple.
 *
 * # Safety
 * `result` must be a live handle; the out pointers valid or NULL.
 */
enum IapialStatus iapial_result_residuals(const struct IapialResult *result,
                                          double *w_norm,
                                          double *feasibility,
                                          double *inclusion);

/**
 * Copies the triple `(z, w, p)` into caller buffers of lengths `n`, `n`, `l`.
 *
 * # Safety
 * `result` must be a live handle; each buffer must hold its stated length.
 */
enum IapialStatus iapial_result_triple(const struct IapialResult *result,
                                       double *z,
                                       size_t z_len,
                                       double *w,
                                       size_t w_len,
                                       double *p,
                                       size_t p_len);

/**
 * Summary JSON of the run. Free with [`iapial_string_free`].
 *
 * # Safety
 * `result` must be a live handle and `out` a valid pointer.
 */
enum IapialStatus iapial_result_summary_json(const struct IapialResult *result, char **out);

/**
 * # Safety
 * `s` must be a string returned by this library or NULL.
 */
void iapial_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IAPIAL_H */
