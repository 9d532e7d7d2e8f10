#ifndef BEAMFORGE_H
#define BEAMFORGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum BfStatus {
  BF_STATUS_OK = 0,
  BF_STATUS_NULL_POINTER = 1,
  BF_STATUS_INVALID_PARAMETER = 2,
  BF_STATUS_USAGE = 3,
  BF_STATUS_DIMENSION = 4,
  BF_STATUS_NUMERIC = 5,
  BF_STATUS_CONFIG = 6,
  BF_STATUS_IO = 7,
  BF_STATUS_PANIC = 8,
} BfStatus;

/**
 * Error model handle.
 */
typedef struct BfModel BfModel;

/**
 * System parameters handle.
 */
typedef struct BfParams BfParams;

/**
 * Powers derived from the parameters.
 */
typedef struct BfDerivedPowers {
  double sigma_eta_sq;
  double sigma_w_sq;
  double sigma_v_sq;
  /**
   * Collaborator SNR, linear.
   */
  double gamma1;
  /**
   * Destination SNR, linear.
   */
  double gamma2;
} BfDerivedPowers;

/**
 * Simulated symbol error probability.
 */
typedef struct BfMcSep {
  double sep;
  double std_error;
  uint64_t errors;
  uint64_t symbols;
} BfMcSep;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length plus one;
 * 0 when no error has been recorded.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t bf_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *bf_version(void);

/**
 * Creates parameters with unit source and channel powers, `μ = 1/N`,
 * `b = 1`, and noise powers set from the two SNRs in dB.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum BfStatus bf_params_new(size_t nodes,
                            size_t sources,
                            size_t psk_order,
                            size_t packet_len,
                            double r_over_lambda,
                            double gamma1_db,
                            double gamma2_db,
                            struct BfParams **out_params);

/**
 * Overrides the amplification factor `μ_m`.
 *
 * # Safety
 * `params` must be a live handle.
 */
enum BfStatus bf_params_set_mu(struct BfParams *params, double mu_m);

/**
 * # Safety
 * `params` must be null or a handle from [`bf_params_new`] not yet freed.
 */
void bf_params_free(struct BfParams *params);

/**
 * # Safety
 * `params` must be a live handle and `out_powers` valid for a write.
 */
enum BfStatus bf_params_derived(const struct BfParams *params, struct BfDerivedPowers *out_powers);

/**
 * # Safety
 * `out_model` must be valid for a pointer write.
 */
enum BfStatus bf_model_perfect(struct BfModel **out_model);

/**
 * Channel estimation error with variance `sigma_delta_sq`.
 *
 * # Safety
 * `out_model` must be valid for a pointer write.
 */
enum BfStatus bf_model_channel_error(double sigma_delta_sq, struct BfModel **out_model);

/**
 * Tikhonov phase jitter with linear loop SNR `rho_tau`.
 *
 * # Safety
 * `out_model` must be valid for a pointer write.
 */
enum BfStatus bf_model_closed_loop(double rho_tau, struct BfModel **out_model);

/**
 * Location errors: radius within `±r_max` wavelengths, azimuth within
 * `±psi_max` radians.
 *
 * # Safety
 * `out_model` must be valid for a pointer write.
 */
enum BfStatus bf_model_open_loop(double r_max, double psi_max, struct BfModel **out_model);

/**
 * # Safety
 * `model` must be null or a live model handle.
 */
void bf_model_free(struct BfModel *model);

/**
 * Analytic SEP. `phasor_samples` and `seed` drive the open-loop mean
 * phasor and are ignored by the other models.
 *
 * # Safety
 * Handles must be live and `out_sep` valid for a write.
 */
enum BfStatus bf_sep_analytic(const struct BfParams *params,
                              const struct BfModel *model,
                              uint64_t phasor_samples,
                              uint64_t seed,
                              double *out_sep);

/**
 * Monte Carlo SEP over `trials` packets.
 *
 * # Safety
 * Handles must be live and `out_result` valid for a write.
 */
enum BfStatus bf_sep_mc(const struct BfParams *params,
                        const struct BfModel *model,
                        uint64_t trials,
                        uint64_t seed,
                        struct BfMcSep *out_result);

/**
 * Sidelobe floor added by channel estimation error of variance
 * `sigma_delta_sq`.
 *
 * # Safety
 * `params` must be live and `out_power` valid for a write.
 */
enum BfStatus bf_delta_pav(const struct BfParams *params, double sigma_delta_sq, double *out_power);

/**
 * Interference variance given the target channel energy `xi`.
 *
 * # Safety
 * `params` must be live and `out_variance` valid for a write.
 */
enum BfStatus bf_kappa_variance(const struct BfParams *params,
                                double sigma_delta_sq,
                                double xi,
                                double *out_variance);

/**
 * `|E e^{jτ}|²` for a phase model, with its standard error.
 *
 * # Safety
 * Handles must be live and both outputs valid for writes.
 */
enum BfStatus bf_mean_phasor(const struct BfParams *params,
                             const struct BfModel *model,
                             uint64_t samples,
                             uint64_t seed,
                             double *out_value,
                             double *out_stderr);

/**
 * Received power ratio with and without phase errors for `nodes` nodes and
 * squared mean phasor `mean_phasor_sq` (clamped to `[0, 1]`).
 */
double bf_power_reduction_coefficient(size_t nodes, double mean_phasor_sq);

/**
 * Monte Carlo beampattern at `len` azimuths (radians), destination at
 * `dest_angle`. Writes `len` values to each output array.
 *
 * # Safety
 * `phis`, `out_power` and `out_stderr` must each be valid for `len`
 * elements; handles must be live.
 */
enum BfStatus bf_beampattern(const struct BfParams *params,
                             const struct BfModel *model,
                             double dest_angle,
                             const double *phis,
                             size_t len,
                             uint64_t trials,
                             uint64_t seed,
                             double *out_power,
                             double *out_stderr);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* BEAMFORGE_H */
