#ifndef AVGOPT_H
#define AVGOPT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AvgoptDiskMode {
  AVGOPT_DISK_MODE_NORMAL_PRESCRIBED = 0,
  AVGOPT_DISK_MODE_IID_GAUSSIAN = 1,
} AvgoptDiskMode;

/**
 * Method selector for [`avgopt_run`].
 */
typedef enum AvgoptMethod {
  /**
   * `p0 = σ²`, `p1 = r = d₁/d₂`.
   */
  AVGOPT_METHOD_AVG_OPT_BILINEAR = 0,
  /**
   * `p0 = ℓ`, `p1 = L`.
   */
  AVGOPT_METHOD_ASYMP_BILINEAR_POLYAK = 1,
  /**
   * `p0 = C`, `p1 = R`.
   */
  AVGOPT_METHOD_AVG_OPT_DISK = 2,
  /**
   * `p0 = C`, `p1 = R`.
   */
  AVGOPT_METHOD_ASYMP_DISK = 3,
  /**
   * `p0 = step`.
   */
  AVGOPT_METHOD_GRADIENT_DESCENT = 4,
  /**
   * `p0 = step`, on the Hamiltonian field.
   */
  AVGOPT_METHOD_HAMILTONIAN_GRADIENT_DESCENT = 5,
  /**
   * `p0 = step`.
   */
  AVGOPT_METHOD_EXTRAGRADIENT = 6,
} AvgoptMethod;

/**
 * Rate selector for [`avgopt_disk_rate`].
 */
typedef enum AvgoptRate {
  AVGOPT_RATE_OPTIMAL = 0,
  AVGOPT_RATE_ASYMPTOTIC = 1,
  AVGOPT_RATE_GRADIENT_DESCENT = 2,
} AvgoptRate;

/**
 * Result of every fallible call.
 */
typedef enum AvgoptStatus {
  AVGOPT_STATUS_OK = 0,
  AVGOPT_STATUS_NULL_POINTER = 1,
  AVGOPT_STATUS_INVALID_ARGUMENT = 2,
  AVGOPT_STATUS_DIMENSION_MISMATCH = 3,
  AVGOPT_STATUS_BUFFER_TOO_SMALL = 4,
  AVGOPT_STATUS_HORIZON_EXCEEDED = 5,
  AVGOPT_STATUS_NUMERICAL = 6,
  AVGOPT_STATUS_INTERNAL = 7,
} AvgoptStatus;

/**
 * Opaque problem instance.
 */
typedef struct AvgoptInstance AvgoptInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next call into this library from the same thread.
 */
const char *avgopt_last_error_message(void);

/**
 * Static description of an [`AvgoptStatus`] value.
 */
const char *avgopt_status_string(uint32_t status);

/**
 * Random bilinear game `A = [[0, M], [−Mᵀ, 0]]`, `M` of size `d1 × d2`.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum AvgoptStatus avgopt_bilinear_instance_new(size_t d1,
                                               size_t d2,
                                               double sigma2,
                                               double init_scale,
                                               uint64_t seed,
                                               struct AvgoptInstance **out);

/**
 * Random operator with spectrum on the disk of centre `center`, radius
 * `radius`; `mode` is an [`AvgoptDiskMode`] value.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum AvgoptStatus avgopt_disk_instance_new(size_t d,
                                           double center,
                                           double radius,
                                           uint32_t mode,
                                           double init_scale,
                                           uint64_t seed,
                                           struct AvgoptInstance **out);

/**
 * Instance from explicit data: `matrix` is `d × d` column-major.
 *
 * # Safety
 * `matrix` must hold `d*d` values, `x_star` and `x0` `d` values each, and
 * `out` must be valid for a pointer write.
 */
enum AvgoptStatus avgopt_instance_from_data(size_t d,
                                            const double *matrix,
                                            const double *x_star,
                                            const double *x0,
                                            struct AvgoptInstance **out);

/**
 * Releases an instance. NULL is ignored.
 *
 * # Safety
 * `handle` must come from this library and not be used afterwards.
 */
void avgopt_instance_free(struct AvgoptInstance *handle);

/**
 * Dimension of the instance, 0 for NULL.
 *
 * # Safety
 * `handle` must be NULL or a live instance.
 */
size_t avgopt_instance_dim(const struct AvgoptInstance *handle);

/**
 * Copies the solution `x*` into `out` (`len ≥ dim`).
 *
 * # Safety
 * `out` must hold `len` values.
 */
enum AvgoptStatus avgopt_instance_x_star(const struct AvgoptInstance *handle,
                                         double *out,
                                         size_t len);

/**
 * Copies the initial point `x₀` into `out` (`len ≥ dim`).
 *
 * # Safety
 * `out` must hold `len` values.
 */
enum AvgoptStatus avgopt_instance_x0(const struct AvgoptInstance *handle, double *out, size_t len);

/**
 * Copies `A` column-major into `out` (`len ≥ dim²`).
 *
 * # Safety
 * `out` must hold `len` values.
 */
enum AvgoptStatus avgopt_instance_matrix(const struct AvgoptInstance *handle,
                                         double *out,
                                         size_t len);

/**
 * `out = F(x) = A(x − x*)`; `x` and `out` have length `len = dim`.
 *
 * # Safety
 * `x` and `out` must hold `len` values.
 */
enum AvgoptStatus avgopt_field(const struct AvgoptInstance *handle,
                               const double *x,
                               size_t len,
                               double *out);

/**
 * `out = F(x − F(x)) − F(x) = AᵀA(x − x*)` for skew-symmetric `A`.
 *
 * # Safety
 * `x` and `out` must hold `len` values.
 */
enum AvgoptStatus avgopt_hamiltonian_field(const struct AvgoptInstance *handle,
                                           const double *x,
                                           size_t len,
                                           double *out);

/**
 * Squared distance from `x` to the solution set.
 *
 * # Safety
 * `x` must hold `len` values and `out` be valid for a write.
 */
enum AvgoptStatus avgopt_distance(const struct AvgoptInstance *handle,
                                  const double *x,
                                  size_t len,
                                  double *out);

/**
 * Runs the [`AvgoptMethod`] `method` for `iters` iterations from the
 * instance's `x₀` and writes `dist(x_t)`
 * for `t = 0..` into `dist` (`dist_len ≥ iters + 1`). A diverged run stops
 * early: `*written` tells how many values were stored and `*diverged` is
 * set. `evals_per_iteration` (optional) receives the operator evaluations
 * per iteration.
 *
 * # Safety
 * `dist` must hold `dist_len` values; `written` and `diverged` must be
 * valid for writes; `evals_per_iteration` may be NULL.
 */
enum AvgoptStatus avgopt_run(const struct AvgoptInstance *handle,
                             uint32_t method,
                             double p0,
                             double p1,
                             size_t iters,
                             double *dist,
                             size_t dist_len,
                             size_t *written,
                             bool *diverged,
                             uint64_t *evals_per_iteration);

/**
 * Expected `dist(x_t)` (unit initial scale) of a disk method; `rate` is an
 * [`AvgoptRate`] value.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum AvgoptStatus avgopt_disk_rate(uint32_t rate,
                                   double center,
                                   double radius,
                                   size_t t,
                                   double *out);

/**
 * `1 − R²/C²`.
 *
 * # Safety
 * `out` must be valid for a write.
 */
enum AvgoptStatus avgopt_limiting_ratio(double center, double radius, double *out);

/**
 * Step sizes `h_t` and momenta `m_t`, `t = 0..=horizon`, of the
 * Marchenko–Pastur method (`len ≥ horizon + 1`).
 *
 * # Safety
 * `h` and `m` must hold `len` values.
 */
enum AvgoptStatus avgopt_mp_coefficients(double sigma2,
                                         double r,
                                         size_t horizon,
                                         double *h,
                                         double *m,
                                         size_t len);

/**
 * Averaging weights `β_t` and `B_t`, `t = 0..=horizon`, of the disk method
 * (`len ≥ horizon + 1`). Large `t` may overflow to `inf`.
 *
 * # Safety
 * `beta` and `big_b` must hold `len` values.
 */
enum AvgoptStatus avgopt_disk_weights(double center,
                                      double radius,
                                      size_t horizon,
                                      double *beta,
                                      double *big_b,
                                      size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AVGOPT_H */
