/* SPDX-License-Identifier: Apache-2.0 */

#ifndef QTM_H
#define QTM_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum QtmStatus {
  QTM_STATUS_OK = 0,
  QTM_STATUS_NULL_POINTER = 1,
  QTM_STATUS_INVALID_UTF8 = 2,
  QTM_STATUS_SYNTAX_ERROR = 3,
  QTM_STATUS_INVALID_MACHINE = 4,
  QTM_STATUS_UNVALIDATED_MACHINE = 5,
  QTM_STATUS_INVALID_INPUT = 6,
  QTM_STATUS_NOT_NORMALIZED = 7,
  QTM_STATUS_INVALID_SCHEDULE = 8,
  QTM_STATUS_BUDGET_EXCEEDED = 9,
  QTM_STATUS_DOMAIN_ERROR = 10,
  QTM_STATUS_PANIC = 11,
} QtmStatus;

/**
 * How `qtm_compute_output` stopped.
 */
typedef enum QtmOutputStatus {
  QTM_OUTPUT_STATUS_FINITARY = 0,
  QTM_OUTPUT_STATUS_CONVERGED = 1,
  QTM_OUTPUT_STATUS_HORIZON_REACHED = 2,
} QtmOutputStatus;

/**
 * A parsed machine. Evolution is available only if it passed validation.
 */
typedef struct QtmMachine QtmMachine;

/**
 * A partial probability distribution over the naturals.
 */
typedef struct QtmPpd QtmPpd;

/**
 * A superposition of configurations of one machine.
 */
typedef struct QtmState QtmState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. Owned by the library;
 * valid until the next call on this thread.
 */
const char *qtm_last_error_message(void);

/**
 * Parses a machine file. Invalid machines parse successfully; check
 * `qtm_machine_validate` before evolving.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum QtmStatus qtm_machine_parse(const char *text_ptr, struct QtmMachine **out_machine);

/**
 * # Safety
 * `m` must be null or a handle from `qtm_machine_parse` not yet freed.
 */
void qtm_machine_free(struct QtmMachine *m);

/**
 * Evaluates the local conditions at `tolerance`.
 *
 * # Safety
 * `m` must be a live handle; output pointers must be writable.
 */
enum QtmStatus qtm_machine_validate(const struct QtmMachine *m,
                                    double tolerance,
                                    bool *out_valid,
                                    double *out_max_residual);

/**
 * Parses an initial superposition in ket notation for machine `m`.
 *
 * # Safety
 * `m` must be a live handle, `text` NUL-terminated, `out` writable.
 */
enum QtmStatus qtm_state_parse(const struct QtmMachine *m,
                               const char *text_ptr,
                               struct QtmState **out_state);

/**
 * # Safety
 * `s` must be null or a live state handle.
 */
void qtm_state_free(struct QtmState *s);

/**
 * Number of basis terms with non-zero amplitude.
 *
 * # Safety
 * `s` must be a live state handle or null (returns 0).
 */
size_t qtm_state_len(const struct QtmState *s);

/**
 * # Safety
 * `s` must be a live state handle or null (returns NaN).
 */
double qtm_state_norm(const struct QtmState *s);

/**
 * Renders a state, one `amplitude<TAB>configuration` line per term.
 * Release with `qtm_string_free`.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum QtmStatus qtm_state_render(const struct QtmMachine *m,
                                const struct QtmState *s,
                                char **out_text);

/**
 * # Safety
 * `p` must be null or a string returned by this library.
 */
void qtm_string_free(char *p);

/**
 * `U^steps` applied to `s`, as a new state.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum QtmStatus qtm_evolve(const struct QtmMachine *m,
                          const struct QtmState *s,
                          size_t steps,
                          struct QtmState **out_state);

/**
 * One application of the adjoint evolution, as a new state.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum QtmStatus qtm_step_backward(const struct QtmMachine *m,
                                 const struct QtmState *s,
                                 struct QtmState **out_state);

/**
 * Output distribution of the final part of `s`.
 *
 * # Safety
 * Handles must be live; `out` writable.
 */
enum QtmStatus qtm_ppd_of(const struct QtmMachine *m,
                          const struct QtmState *s,
                          struct QtmPpd **out_ppd);

/**
 * Iterates until finitary, converged, or the horizon; see the library's
 * `compute_output` for the stopping rules.
 *
 * # Safety
 * Handles must be live; output pointers writable.
 */
enum QtmStatus qtm_compute_output(const struct QtmMachine *m,
                                  const struct QtmState *s,
                                  double epsilon,
                                  size_t window,
                                  size_t horizon,
                                  struct QtmPpd **out_ppd,
                                  enum QtmOutputStatus *out_status,
                                  size_t *out_step);

/**
 * Empirical distribution of observed outputs over `runs` sampled runs.
 *
 * # Safety
 * Handles must be live, `tau` NUL-terminated, `out` writable.
 */
enum QtmStatus qtm_sample(const struct QtmMachine *m,
                          const struct QtmState *s,
                          const char *tau,
                          size_t horizon,
                          size_t runs,
                          uint64_t seed,
                          struct QtmPpd **out_ppd);

/**
 * Enumerates every observed run and reports the largest gap between the
 * exact observed distribution and the unobserved output distribution at
 * the depths following each observation.
 *
 * # Safety
 * Handles must be live, `tau` NUL-terminated, `out` writable.
 */
enum QtmStatus qtm_consistency_residual(const struct QtmMachine *m,
                                        const struct QtmState *s,
                                        const char *tau,
                                        size_t horizon,
                                        size_t budget,
                                        double *out_residual);

/**
 * # Safety
 * `p` must be null or a live distribution handle.
 */
void qtm_ppd_free(struct QtmPpd *p);

/**
 * Probability of `n` (0 outside the support).
 *
 * # Safety
 * `p` must be a live distribution handle or null (returns NaN).
 */
double qtm_ppd_get(const struct QtmPpd *p, uint64_t n);

/**
 * Missing mass `1 − Σ P(n)`.
 *
 * # Safety
 * `p` must be a live distribution handle or null (returns NaN).
 */
double qtm_ppd_bottom(const struct QtmPpd *p);

/**
 * Size of the support.
 *
 * # Safety
 * `p` must be a live distribution handle or null (returns 0).
 */
size_t qtm_ppd_len(const struct QtmPpd *p);

/**
 * The `index`-th support element in increasing order.
 *
 * # Safety
 * `p` must be a live distribution handle; output pointers writable.
 */
enum QtmStatus qtm_ppd_entry(const struct QtmPpd *p,
                             size_t index,
                             uint64_t *out_n,
                             double *out_probability);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QTM_H */
