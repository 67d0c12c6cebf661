#ifndef CURVEFLOW_H
#define CURVEFLOW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define CF_OK 0

#define CF_NULL_POINTER 1

#define CF_INVALID_UTF8 2

/**
 * Malformed configuration, expression or JSON.
 */
#define CF_CONFIG 3

/**
 * Argument outside the domain (annulus, positivity, ...).
 */
#define CF_DOMAIN 4

#define CF_PARAMETER 5

#define CF_UNSUPPORTED 6

#define CF_NO_BARRIER 7

/**
 * Convexity loss, stall or oracle failure.
 */
#define CF_NUMERICAL 8

#define CF_BUFFER_TOO_SMALL 9

#define CF_PANIC 10

#define CF_EUCLID 0

#define CF_SPHERE 1

#define CF_HYPERBOLIC 2

#define CF_DE_SITTER 3

/**
 * A validated problem with its barriers and run options.
 */
typedef struct CfProblem CfProblem;

/**
 * Outcome of `cf_solve`.
 */
typedef struct CfResult CfResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread; empty after success.
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *cf_last_error_message(void);

/**
 * Parses a run configuration (the CLI's JSON schema) and searches barriers.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `out` must be writable.
 */
int32_t cf_problem_new(const char *config_json, struct CfProblem **out);

/**
 * # Safety
 * `problem` must come from `cf_problem_new` and not be freed twice.
 */
void cf_problem_free(struct CfProblem *problem);

/**
 * Barrier radii of a problem.
 *
 * # Safety
 * `problem` must be a live handle; `lower` and `upper` must be writable.
 */
int32_t cf_problem_barriers(const struct CfProblem *problem, double *lower, double *upper);

/**
 * Runs the flow. A non-converged run still succeeds and yields a result;
 * query `cf_result_converged`.
 *
 * # Safety
 * `problem` must be a live handle; `out` must be writable.
 */
int32_t cf_solve(const struct CfProblem *problem, struct CfResult **out);

/**
 * # Safety
 * `result` must come from `cf_solve` and not be freed twice.
 */
void cf_result_free(struct CfResult *result);

/**
 * Writes 1 if the run converged, 0 otherwise.
 *
 * # Safety
 * `result` must be a live handle; `out` must be writable.
 */
int32_t cf_result_converged(const struct CfResult *result, int32_t *out);

/**
 * Final `sup |F − f|` and number of accepted steps.
 *
 * # Safety
 * `result` must be a live handle; `residual` and `steps` must be writable.
 */
int32_t cf_result_stats(const struct CfResult *result, double *residual, uint64_t *steps);

/**
 * Number of profile nodes.
 *
 * # Safety
 * `result` must be a live handle; `out` must be writable.
 */
int32_t cf_result_profile_len(const struct CfResult *result, uintptr_t *out);

/**
 * Copies the profile values into `buf`, which must hold at least the
 * length reported by `cf_result_profile_len`.
 *
 * # Safety
 * `result` must be a live handle; `buf` must point to `len` writable doubles.
 */
int32_t cf_result_profile_copy(const struct CfResult *result, double *buf, uintptr_t len);

/**
 * Serializes the full result as JSON; release with `cf_string_free`.
 *
 * # Safety
 * `result` must be a live handle; `out` must be writable.
 */
int32_t cf_result_to_json(const struct CfResult *result, char **out);

/**
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void cf_string_free(char *s);

/**
 * Evaluates a curvature function, given as JSON such as
 * `{"family": "power_mean", "k": 2, "n": 3}`, at `kappa[0..len]`.
 *
 * # Safety
 * `function_json` must be NUL-terminated; `kappa` must point to `len`
 * doubles; `out` must be writable.
 */
int32_t cf_curvature_eval(const char *function_json,
                          const double *kappa,
                          uintptr_t len,
                          double *out);

/**
 * Largest admissible constant `c` of the power-law data `c·s^{1−q}φ` on the
 * annulus `(a, b)`, anchored at `anchor` (hemisphere and de Sitter space).
 *
 * # Safety
 * `out` must be writable.
 */
int32_t cf_admissible_constant(int32_t kind,
                               uintptr_t n,
                               double a,
                               double b,
                               double phi_sup,
                               double q,
                               double anchor,
                               double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CURVEFLOW_H */
