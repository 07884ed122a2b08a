#ifndef PFFIBER_H
#define PFFIBER_H

#include <stdbool.h>
#include <stddef.h>

/**
 * Status code of every call.
 */
typedef enum PfStatus {
  PF_STATUS_OK = 0,
  PF_STATUS_INVALID_PARAMS = 1,
  PF_STATUS_DOMAIN = 2,
  PF_STATUS_ON_ESSENTIAL_SPECTRUM = 3,
  PF_STATUS_POLE = 4,
  PF_STATUS_SINGULAR = 5,
  PF_STATUS_NO_CONVERGENCE = 6,
  PF_STATUS_GRID_MISMATCH = 7,
  PF_STATUS_IO = 8,
  PF_STATUS_PARSE = 9,
  PF_STATUS_NULL_POINTER = 10,
  PF_STATUS_PANIC = 11,
} PfStatus;

/**
 * Opaque model handle: parameters plus radial quadrature settings.
 */
typedef struct PfModel PfModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Create a model. A NaN `gamma0` selects the default
 * `pi e^2 R^(2+2 sigma)/(1+sigma)`. Free with [`pf_model_free`].
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum PfStatus pf_model_new(double e,
                           double cutoff,
                           double sigma,
                           double gamma0,
                           struct PfModel **out);

/**
 * Release a handle from [`pf_model_new`]. Null is ignored.
 *
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void pf_model_free(struct PfModel *model);

/**
 * Override the radial quadrature: Gauss-Legendre order per panel,
 * absolute tolerance and panel cap.
 *
 * # Safety
 * `model` must be a live handle.
 */
enum PfStatus pf_model_set_quadrature(struct PfModel *model,
                                      size_t n_rho,
                                      double abs_tol,
                                      size_t max_refine);

/**
 * The `gamma0` in effect.
 *
 * # Safety
 * `model` must be a live handle, `out` writable.
 */
enum PfStatus pf_model_gamma0(const struct PfModel *model, double *out);

/**
 * Bottom of the essential spectrum at `|p|`.
 *
 * # Safety
 * `model` must be a live handle, `out` writable.
 */
enum PfStatus pf_z0(const struct PfModel *model, double p_abs, double *out);

/**
 * `D12(p, z)` for complex `z` off the essential spectrum.
 *
 * # Safety
 * `model` must be a live handle, both outputs writable.
 */
enum PfStatus pf_d12(const struct PfModel *model,
                     double p_abs,
                     double z_re,
                     double z_im,
                     double *out_re,
                     double *out_im);

/**
 * Secular function `F(p, z)` for real `z` below the band edge.
 *
 * # Safety
 * `model` must be a live handle, `out` writable.
 */
enum PfStatus pf_secular_f(const struct PfModel *model, double p_abs, double z, double *out);

/**
 * Ground-state energy at `|p|`. `*out_found` is set to whether an
 * eigenvalue exists below the band; `*out_z` is NaN when it does not.
 *
 * # Safety
 * `model` must be a live handle, both outputs writable.
 */
enum PfStatus pf_solve_ground(const struct PfModel *model,
                              double p_abs,
                              double tol,
                              double *out_z,
                              bool *out_found);

/**
 * Ground-state energies on `n` momenta; NaN where no eigenvalue exists.
 * Stops at the first failing point and reports its error.
 *
 * # Safety
 * `p_abs` and `out_z` must each point to `n` valid `f64`s.
 */
enum PfStatus pf_dispersion(const struct PfModel *model,
                            const double *p_abs,
                            size_t n,
                            double tol,
                            double *out_z);

/**
 * Inverse effective mass `1/m` at `p = 0` (may be negative).
 *
 * # Safety
 * `model` must be a live handle, `out` writable.
 */
enum PfStatus pf_effective_mass(const struct PfModel *model, double *out_inv_mass);

/**
 * Closed-form inverse effective mass at `sigma = 0`.
 *
 * # Safety
 * `out_inv_mass` must be writable.
 */
enum PfStatus pf_effective_mass_sigma0(double e, double cutoff, double *out_inv_mass);

/**
 * Message of the last failed call on this thread, empty after a success.
 * Valid until the next call on the same thread.
 */
const char *pf_last_error_message(void);

/**
 * Library version, a static NUL-terminated string.
 */
const char *pf_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PFFIBER_H */
