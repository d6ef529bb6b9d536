#ifndef KSDUO_H
#define KSDUO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KsduoField {
  KSDUO_FIELD_U = 0,
  KSDUO_FIELD_V = 1,
  KSDUO_FIELD_W = 2,
} KsduoField;

typedef enum KsduoLossType {
  KSDUO_LOSS_TYPE_STEADY_STATE = 0,
  KSDUO_LOSS_TYPE_HOPF = 1,
  KSDUO_LOSS_TYPE_DEGENERATE = 2,
} KsduoLossType;

typedef enum KsduoStability {
  KSDUO_STABILITY_STABLE = 0,
  KSDUO_STABILITY_UNSTABLE = 1,
  KSDUO_STABILITY_NOT_APPLICABLE = 2,
} KsduoStability;

/**
 * Result code of every fallible call.
 */
typedef enum KsduoStatus {
  KSDUO_STATUS_OK = 0,
  KSDUO_STATUS_NULL_POINTER = 1,
  /**
   * Unknown name, bad index, or a buffer that is too small.
   */
  KSDUO_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Parameters violate a model constraint.
   */
  KSDUO_STATUS_INVALID_PARAMS = 3,
  /**
   * Solver settings are invalid.
   */
  KSDUO_STATUS_INVALID_CONFIG = 4,
  /**
   * A linear system was singular or nearly so.
   */
  KSDUO_STATUS_SINGULAR = 5,
  /**
   * The time integration blew up.
   */
  KSDUO_STATUS_BLOW_UP = 6,
  /**
   * A Rust panic was caught; the library state is otherwise unchanged.
   */
  KSDUO_STATUS_INTERNAL = 7,
} KsduoStatus;

typedef enum KsduoTermination {
  KSDUO_TERMINATION_T_END = 0,
  KSDUO_TERMINATION_STEADY = 1,
} KsduoTermination;

/**
 * Opaque parameter set.
 */
typedef struct KsduoParams KsduoParams;

/**
 * Opaque simulation result.
 */
typedef struct KsduoTrajectory KsduoTrajectory;

/**
 * Homogeneous steady state.
 */
typedef struct KsduoEquilibrium {
  double u;
  double v;
  double w;
} KsduoEquilibrium;

/**
 * Outcome of the mode scan for the critical taxis strength.
 */
typedef struct KsduoCritical {
  double chi0;
  uint32_t argmin_k;
  enum KsduoLossType loss_type;
  /**
   * Classification of the equilibrium at the handle's `chi`.
   */
  enum KsduoStability stability;
} KsduoCritical;

/**
 * Local branch data at the bifurcation point of one mode.
 */
typedef struct KsduoBranch {
  double chi_k;
  double p_k;
  double q_k;
  double k2;
  double lambda_star;
  int8_t k2_asymptotic_sign;
  enum KsduoStability predicted_stability;
} KsduoBranch;

/**
 * Solver settings. Obtain defaults from [`ksduo_solver_options_default`].
 */
typedef struct KsduoSolverOptions {
  double dx;
  double dt;
  double t_end;
  /**
   * Nonzero selects the fully explicit scheme.
   */
  uint8_t explicit_scheme;
  /**
   * Nonzero selects upwind face densities for the taxis flux.
   */
  uint8_t upwind;
  size_t snapshot_every;
  double steady_tol;
  uint8_t stop_when_steady;
  /**
   * Initial perturbation `amplitude * cos(wavenumber * pi * x)`.
   */
  double amplitude;
  double wavenumber;
} KsduoSolverOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread. Valid until the next
 * failing call on the same thread; empty if none.
 */
const char *ksduo_last_error(void);

/**
 * Static name of a status code.
 */
const char *ksduo_status_name(enum KsduoStatus status);

/**
 * New parameter set holding the library defaults (`chi = 0`, `L = 0.5`).
 */
struct KsduoParams *ksduo_params_new(void);

/**
 * Independent copy of `p`, or null if `p` is null.
 *
 * # Safety
 * `p` is null or a live handle.
 */
struct KsduoParams *ksduo_params_clone(const struct KsduoParams *p);

/**
 * # Safety
 * `p` is null or a handle from this library not yet freed.
 */
void ksduo_params_free(struct KsduoParams *p);

/**
 * Sets one of `d1 d2 chi xi mu1 mu2 a1 a2 lambda L`. Constraints are
 * checked by the calls that use the parameters, not here.
 *
 * # Safety
 * `p` is a live handle and `key` a NUL-terminated string.
 */
enum KsduoStatus ksduo_params_set(struct KsduoParams *p, const char *key, double value);

/**
 * # Safety
 * `p` is a live handle, `key` a NUL-terminated string, `out` writable.
 */
enum KsduoStatus ksduo_params_get(const struct KsduoParams *p, const char *key, double *out);

/**
 * Checks every parameter constraint; the message names the first violation.
 *
 * # Safety
 * `p` is a live handle.
 */
enum KsduoStatus ksduo_params_validate(const struct KsduoParams *p);

/**
 * # Safety
 * `p` is a live handle and `out` writable.
 */
enum KsduoStatus ksduo_equilibrium(const struct KsduoParams *p, struct KsduoEquilibrium *out);

/**
 * Steady-state threshold of mode `k >= 1`.
 *
 * # Safety
 * `p` is a live handle and `out` writable.
 */
enum KsduoStatus ksduo_chi_tilde(const struct KsduoParams *p, uint32_t k, double *out);

/**
 * Hopf threshold of mode `k >= 1`.
 *
 * # Safety
 * `p` is a live handle and `out` writable.
 */
enum KsduoStatus ksduo_chi_hat(const struct KsduoParams *p, uint32_t k, double *out);

/**
 * Scans modes `1..=kmax` for the critical taxis strength and classifies the
 * equilibrium at the handle's `chi`.
 *
 * # Safety
 * `p` is a live handle and `out` writable.
 */
enum KsduoStatus ksduo_critical_chi(const struct KsduoParams *p,
                                    uint32_t kmax,
                                    struct KsduoCritical *out);

/**
 * Branch coefficients of mode `k`. A (near-)singular system returns
 * `KSDUO_STATUS_SINGULAR` and leaves `out` untouched.
 *
 * # Safety
 * `p` is a live handle and `out` writable.
 */
enum KsduoStatus ksduo_branch(const struct KsduoParams *p, uint32_t k, struct KsduoBranch *out);

/**
 * Library default solver settings with a 0.01 perturbation of wavenumber 2.4.
 */
struct KsduoSolverOptions ksduo_solver_options_default(void);

/**
 * Integrates from the perturbed equilibrium. On success `*out` owns a new
 * trajectory; on failure it is set to null.
 *
 * # Safety
 * `p` is a live handle, `opts` readable, `out` writable.
 */
enum KsduoStatus ksduo_simulate(const struct KsduoParams *p,
                                const struct KsduoSolverOptions *opts,
                                struct KsduoTrajectory **out);

/**
 * # Safety
 * `t` is null or a handle from this library not yet freed.
 */
void ksduo_trajectory_free(struct KsduoTrajectory *t);

/**
 * Number of grid cells, or 0 for a null handle.
 *
 * # Safety
 * `t` is null or a live handle.
 */
size_t ksduo_trajectory_cells(const struct KsduoTrajectory *t);

/**
 * Number of stored snapshots (initial and final included), or 0 for null.
 *
 * # Safety
 * `t` is null or a live handle.
 */
size_t ksduo_trajectory_snapshots(const struct KsduoTrajectory *t);

/**
 * # Safety
 * `t` is a live handle and `out` writable.
 */
enum KsduoStatus ksduo_trajectory_termination(const struct KsduoTrajectory *t,
                                              enum KsduoTermination *out);

/**
 * Time of snapshot `index`.
 *
 * # Safety
 * `t` is a live handle and `out` writable.
 */
enum KsduoStatus ksduo_trajectory_time(const struct KsduoTrajectory *t, size_t index, double *out);

/**
 * Copies one field of snapshot `index` into `buf`, which must hold at least
 * `ksduo_trajectory_cells` values.
 *
 * # Safety
 * `t` is a live handle and `buf` is writable for `len` doubles.
 */
enum KsduoStatus ksduo_trajectory_field(const struct KsduoTrajectory *t,
                                        size_t index,
                                        enum KsduoField field,
                                        double *buf,
                                        size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KSDUO_H */
