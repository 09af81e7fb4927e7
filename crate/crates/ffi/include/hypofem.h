#ifndef HYPOFEM_H
#define HYPOFEM_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HfStatus {
  HF_STATUS_OK = 0,
  HF_STATUS_NULL_POINTER = 1,
  HF_STATUS_INVALID_ARGUMENT = 2,
  HF_STATUS_MESH_ERROR = 3,
  HF_STATUS_SOLVER_ERROR = 4,
  HF_STATUS_CERTIFICATE_FAILED = 5,
  HF_STATUS_IO_ERROR = 6,
  HF_STATUS_BUFFER_TOO_SMALL = 7,
  HF_STATUS_PANIC = 8,
} HfStatus;

typedef enum HfScheme {
  HF_SCHEME_PARABOLIC = 0,
  HF_SCHEME_ELLIPTIC = 1,
  HF_SCHEME_BASELINE = 2,
} HfScheme;

/**
 * Assembled discrete system.
 */
typedef struct HfSystem HfSystem;

/**
 * Recorded decay trajectory.
 */
typedef struct HfTrajectory HfTrajectory;

/**
 * Mesh and discretisation parameters. `c_tau <= 0` selects the automatic penalty.
 */
typedef struct HfSetup {
  double x_lo;
  double x_hi;
  double y_lo;
  double y_hi;
  size_t nx;
  size_t ny;
  double perturb;
  uint64_t seed;
  size_t p;
  enum HfScheme scheme;
  double alpha;
  double c_tau;
  double kappa;
  double lambda;
} HfSetup;

/**
 * Decay run parameters; `initial_hypoelliptic != 0` starts from the
 * hypoelliptic projection instead of the L2 projection.
 */
typedef struct HfDecayParams {
  double theta;
  double dt;
  double t_final;
  double fit_start;
  double bound_tol;
  int32_t initial_hypoelliptic;
} HfDecayParams;

typedef struct HfDecaySummary {
  double cpf;
  double c0;
  double certified_rate;
  /**
   * NaN when the trajectory is zero.
   */
  double fitted_rate;
  /**
   * First step breaking the pointwise bound, or -1.
   */
  int64_t bound_violation_step;
  /**
   * First step where the energy grows, or -1.
   */
  int64_t energy_increase_step;
  size_t steps;
} HfDecaySummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *hf_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length
 * without the terminator, 0 when there is no message.
 */
size_t hf_last_error_message(char *buf, size_t len);

/**
 * Fills `out` with the defaults: unit square, 16 x 16, p = 2, parabolic
 * scheme with alpha = 0.3506, automatic penalty.
 */
enum HfStatus hf_setup_default(struct HfSetup *out);

/**
 * `lambda_min(B - A)` for the given scheme.
 */
enum HfStatus hf_lambda_min(double alpha, enum HfScheme scheme, double *out);

/**
 * `c0 = lambda_min / cpf` and the certified rate `min(1, c0)`.
 */
enum HfStatus hf_decay_rate(double lambda_min, double cpf, double *c0, double *rate);

/**
 * Assembles the system for `setup`. Release with [`hf_system_free`].
 */
enum HfStatus hf_system_new(const struct HfSetup *setup, struct HfSystem **out);

void hf_system_free(struct HfSystem *system);

/**
 * Number of free degrees of freedom.
 */
enum HfStatus hf_system_num_free(const struct HfSystem *system, size_t *out);

/**
 * Discrete Poincare-Friedrichs constant of the system's space.
 */
enum HfStatus hf_system_cpf(const struct HfSystem *system, double *out);

/**
 * Sampled coercivity certificate. Writes the minimum ratio and returns
 * `HF_STATUS_CERTIFICATE_FAILED` when it is below one half.
 */
enum HfStatus hf_system_coercivity(const struct HfSystem *system,
                                   size_t samples,
                                   uint64_t seed,
                                   double *min_ratio);

/**
 * `y = K x` on the free DOFs; both arrays hold `len` entries.
 */
enum HfStatus hf_system_apply_stiffness(const struct HfSystem *system,
                                        const double *x,
                                        double *y,
                                        size_t len);

/**
 * Decay run from the manufactured initial profile with `f = 0`.
 * Release with [`hf_trajectory_free`].
 */
enum HfStatus hf_decay_run(const struct HfSetup *setup,
                           const struct HfDecayParams *params,
                           struct HfTrajectory **out);

void hf_trajectory_free(struct HfTrajectory *t);

enum HfStatus hf_trajectory_summary(const struct HfTrajectory *t, struct HfDecaySummary *out);

/**
 * Copies the recorded series. Each non-null array must hold
 * `summary.steps` entries; `len` is checked against that.
 */
enum HfStatus hf_trajectory_copy(const struct HfTrajectory *t,
                                 double *times,
                                 double *energy,
                                 double *l2,
                                 double *agrad,
                                 size_t len);

/**
 * Three-dimensional matrix certificate at one `alpha`: minimum
 * eigenvalue of `sym(B~_3) - B_3`, the balanced `nu` and `c3`.
 */
enum HfStatus hf_hypo3d_check(double alpha, double *min_eigenvalue, double *nu, double *c3);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPOFEM_H */
