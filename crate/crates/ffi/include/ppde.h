/* C interface of the ppde laboratory; generated by cbindgen. */

#ifndef PPDE_H
#define PPDE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Optimization direction for [`ppde_expectation`].
 */
typedef enum PpdeMode {
  PpdeMode_Sup = 0,
  PpdeMode_Inf = 1,
  PpdeMode_PureStop = 2,
} PpdeMode;

/**
 * Status codes shared by every entry point.
 */
typedef enum PpdeStatus {
  PpdeStatus_Ok = 0,
  PpdeStatus_NullPointer = 1,
  PpdeStatus_InvalidInput = 2,
  PpdeStatus_GridMismatch = 3,
  PpdeStatus_BudgetExceeded = 4,
  PpdeStatus_Utf8 = 5,
  PpdeStatus_Internal = 6,
} PpdeStatus;

/**
 * Opaque path handle.
 */
typedef struct PpdePath PpdePath;

/**
 * Scalar lattice description for the expectation entry points.
 */
typedef struct PpdeLattice {
  double l_bound;
  uintptr_t n_steps;
  double dt;
  const double *drift;
  uintptr_t drift_len;
  const double *var;
  uintptr_t var_len;
  /**
   * node budget cap; 0 keeps the default
   */
  uint64_t max_nodes;
} PpdeLattice;

/**
 * Membership report of one jet test.
 */
typedef struct PpdeJetReport {
  /**
   * 1 when the jet belongs to the tested half-jet
   */
  uint8_t member;
  double value_gap;
  double delta_used;
  double tol_used;
} PpdeJetReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message attached to the most recent failure on this thread.
 */
const char *ppde_last_error(void);

/**
 * Library version as a static string.
 */
const char *ppde_version(void);

/**
 * Build a path from `(n_steps + 1) × m` row-major samples; `values[0..m]`
 * must be the origin.
 *
 * # Safety
 * `values` must point to `len * m` readable doubles and `out` to a
 * writable pointer slot.
 */
enum PpdeStatus ppde_path_new(const double *values,
                              uintptr_t len,
                              uintptr_t m,
                              double dt,
                              struct PpdePath **out);

/**
 * Release a path handle.
 *
 * # Safety
 * `path` must come from [`ppde_path_new`] and not be freed twice.
 */
void ppde_path_free(struct PpdePath *path);

/**
 * First grid index where `s + max|ω| ≥ delta`, clipped at the horizon.
 *
 * # Safety
 * `path` must be a live handle; `out` must be writable.
 */
enum PpdeStatus ppde_hitting_index(const struct PpdePath *path, double delta, uintptr_t *out);

/**
 * Quadratic test monomial `α·t + ⟨β, ω_t⟩ + ½⟨γ ω_t, ω_t⟩`.
 *
 * # Safety
 * `beta` must hold `m` doubles and `gamma` `m*m` row-major doubles;
 * `path` must be a live handle of dimension `m`.
 */
enum PpdeStatus ppde_test_monomial(double alpha,
                                   const double *beta,
                                   const double *gamma,
                                   uintptr_t m,
                                   uintptr_t t_index,
                                   const struct PpdePath *path,
                                   double *out);

/**
 * Uniform pseudo-metric between two stopped points.
 *
 * # Safety
 * Both handles must be live; `out` must be writable.
 */
enum PpdeStatus ppde_sup_metric(uintptr_t t_a,
                                const struct PpdePath *path_a,
                                uintptr_t t_b,
                                const struct PpdePath *path_b,
                                double *out);

/**
 * Backward p-metric between two points.
 *
 * # Safety
 * Both handles must be live; `out` must be writable.
 */
enum PpdeStatus ppde_backward_metric(double p,
                                     uintptr_t t_a,
                                     const struct PpdePath *path_a,
                                     uintptr_t t_b,
                                     const struct PpdePath *path_b,
                                     double *out);

/**
 * Optimize a named payoff over the scalar lattice control family.
 * `delta < 0` disables the hitting-index clip. The policy digest (65
 * bytes including the terminator) identifies the argmax policy.
 *
 * # Safety
 * `payoff_name` must be a NUL-terminated string; `lattice` must describe
 * live grid arrays; `out_value` must be writable; `out_digest`, when
 * non-null, must hold at least 65 writable bytes.
 */
enum PpdeStatus ppde_expectation(const struct PpdeLattice *lattice,
                                 const char *payoff_name,
                                 double delta,
                                 enum PpdeMode mode,
                                 double *out_value,
                                 char *out_digest);

/**
 * Test a scalar jet against the subjet (`superjet = 0`) or superjet
 * (`superjet = 1`) of a named functional at the given point.
 *
 * # Safety
 * `u_name` must be NUL-terminated; `path` must be a live handle;
 * `out` must point to a writable report.
 */
enum PpdeStatus ppde_jet_check(const struct PpdeLattice *lattice,
                               const char *u_name,
                               uintptr_t t_index,
                               const struct PpdePath *path,
                               double alpha,
                               double beta,
                               double gamma,
                               double delta,
                               uint8_t superjet,
                               struct PpdeJetReport *out);

/**
 * Resolvent-weighted norm of a lifted state `(x0, x1)`; `x1` holds
 * `x1_len` samples ending at s = 0 with step `dt` (scalar case).
 *
 * # Safety
 * `x1` must hold `x1_len` readable doubles; `out` must be writable.
 */
enum PpdeStatus ppde_resolvent_norm(double x0,
                                    const double *x1,
                                    uintptr_t x1_len,
                                    double dt,
                                    double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PPDE_H */
