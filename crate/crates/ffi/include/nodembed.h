#ifndef NODEMBED_H
#define NODEMBED_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call. Values 2 to 4 match the CLI exit codes.
 */
typedef enum NodembedStatus {
  NODEMBED_STATUS_OK = 0,
  NODEMBED_STATUS_VERIFICATION_FAILED = 2,
  NODEMBED_STATUS_INVALID_INPUT = 3,
  NODEMBED_STATUS_NUMERICAL = 4,
  NODEMBED_STATUS_NULL_POINTER = 5,
  NODEMBED_STATUS_INVALID_UTF8 = 6,
  NODEMBED_STATUS_LENGTH_MISMATCH = 7,
  NODEMBED_STATUS_PANIC = 8,
} NodembedStatus;

/**
 * Opaque neural-ODE architecture.
 */
typedef struct NodembedArchitecture NodembedArchitecture;

/**
 * Opaque map `ℝⁿ → ℝᵖ`.
 */
typedef struct NodembedFuncSpec NodembedFuncSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null.
 *
 * The pointer stays valid until the next call into this library on the
 * same thread.
 */
const char *nodembed_last_error_message(void);

/**
 * Release a string returned by this library. Null is ignored.
 */
void nodembed_string_free(char *s);

/**
 * Map from its JSON description.
 */
enum NodembedStatus nodembed_funcspec_from_json(const char *json, struct NodembedFuncSpec **out);

/**
 * Map with `n_in` inputs from expression strings in `x0`, `x1`, ...
 */
enum NodembedStatus nodembed_funcspec_parse(uintptr_t n_in,
                                            const char *const *components,
                                            uintptr_t n_components,
                                            struct NodembedFuncSpec **out);

/**
 * Number of inputs, or 0 for a null handle.
 */
uintptr_t nodembed_funcspec_n_in(const struct NodembedFuncSpec *spec);

/**
 * Number of outputs, or 0 for a null handle.
 */
uintptr_t nodembed_funcspec_n_out(const struct NodembedFuncSpec *spec);

/**
 * Evaluate the map at `x` (length `n_in`) into `out` (length `n_out`).
 */
enum NodembedStatus nodembed_funcspec_eval(const struct NodembedFuncSpec *spec,
                                           const double *x,
                                           uintptr_t x_len,
                                           double *out,
                                           uintptr_t out_len);

/**
 * JSON description of the map.
 */
enum NodembedStatus nodembed_funcspec_to_json(const struct NodembedFuncSpec *spec, char **out);

/**
 * Release a map handle. Null is ignored.
 */
void nodembed_funcspec_free(struct NodembedFuncSpec *spec);

/**
 * Build an explicit embedding.
 *
 * `id` is one of linear, monomial, moebius, negation, polynomial or
 * universal. `params_json` holds `c`, `alpha`, `coeffs`, `phi` and `T`
 * as needed (null means `{}`). The target map is written to `out_target`
 * unless it is null.
 */
enum NodembedStatus nodembed_embed(const char *id,
                                   const char *params_json,
                                   struct NodembedArchitecture **out_arch,
                                   struct NodembedFuncSpec **out_target);

/**
 * Architecture from its JSON description.
 */
enum NodembedStatus nodembed_architecture_from_json(const char *json,
                                                    struct NodembedArchitecture **out);

/**
 * JSON description of the architecture.
 */
enum NodembedStatus nodembed_architecture_to_json(const struct NodembedArchitecture *arch,
                                                  char **out);

/**
 * Input dimension, or 0 for a null handle.
 */
uintptr_t nodembed_architecture_n_in(const struct NodembedArchitecture *arch);

/**
 * Output dimension, or 0 for a null handle.
 */
uintptr_t nodembed_architecture_n_out(const struct NodembedArchitecture *arch);

/**
 * Evaluate the architecture's time-T map at `x` into `out`.
 */
enum NodembedStatus nodembed_architecture_evaluate(const struct NodembedArchitecture *arch,
                                                   const double *x,
                                                   uintptr_t x_len,
                                                   double *out,
                                                   uintptr_t out_len);

/**
 * Release an architecture handle. Null is ignored.
 */
void nodembed_architecture_free(struct NodembedArchitecture *arch);

/**
 * Compare `arch` with `target` on a grid over the architecture's input
 * domain.
 *
 * `grid` uses the CLI syntax (`lo:hi:n,...` or a count; null for the
 * default). Returns `VerificationFailed` when the maximal error exceeds
 * `tol`; the report JSON is written to `out_report` (if non-null) either way.
 */
enum NodembedStatus nodembed_verify(const struct NodembedArchitecture *arch,
                                    const struct NodembedFuncSpec *target,
                                    const char *grid,
                                    double tol,
                                    char **out_report);

/**
 * Obstruction report for `phi` as JSON.
 */
enum NodembedStatus nodembed_diagnose(const struct NodembedFuncSpec *phi,
                                      const char *grid,
                                      char **out_report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NODEMBED_H */
