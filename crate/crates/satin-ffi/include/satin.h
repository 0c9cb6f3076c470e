#ifndef SATIN_H
#define SATIN_H

/* Generated by cbindgen from satin-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum {
  SATIN_STATUS_OK = 0,
  /**
   * A pointer argument was null.
   */
  SATIN_STATUS_NULL_POINTER = 1,
  /**
   * An argument violated a precondition.
   */
  SATIN_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The requested operating point is infeasible.
   */
  SATIN_STATUS_NO_SOLUTION = 3,
  /**
   * A numeric failure (non-finite result).
   */
  SATIN_STATUS_NUMERIC = 4,
} SatinStatus;

/**
 * Measurement / rotation axis.
 */
typedef enum {
  SATIN_AXIS_X = 0,
  SATIN_AXIS_Y = 1,
  SATIN_AXIS_Z = 2,
} SatinAxis;

/**
 * Opaque pure state of the symmetric N-spin manifold.
 */
typedef struct SatinState SatinState;

/**
 * Cavity and operating-point parameters (mirror of the library config).
 */
typedef struct {
  double eta;
  /**
   * rad/s
   */
  double kappa;
  /**
   * rad/s
   */
  double gamma;
  double finesse;
  uintptr_t n_atoms;
  /**
   * 2*Delta/Gamma
   */
  double x_a;
  /**
   * 2*delta/kappa
   */
  double x_c;
  double n_tr_tot;
} SatinCavity;

/**
 * First and second spin moments plus the contrast `|<S>|/S0`.
 */
typedef struct {
  double mean_sx;
  double mean_sy;
  double mean_sz;
  double var_sx;
  double var_sy;
  double var_sz;
  double contrast;
  /**
   * Normalized variance 2 var(S_y)/S0.
   */
  double sigma_y_sq;
} SatinMoments;

/**
 * Gain decomposition of one model operating point (all dB terms sum to
 * `hl_distance_db`).
 */
typedef struct {
  double q_opt;
  double gain_db;
  double hl_distance_db;
  double ideal_db;
  double qshift_db;
  double contrast_db;
  double nonunitary_db;
  double contrast_sc;
  double i_tot;
  double n_tr_per_pulse;
  double x_a;
  double x_c;
} SatinGainBudget;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `cap`). Returns the untruncated length.
 *
 * # Safety
 * `buf` must point to `cap` writable bytes (or be null to query the length).
 */
uintptr_t satin_last_error(char *buf, uintptr_t cap);

/**
 * Nominal apparatus parameters with `n_atoms` atoms.
 */
SatinCavity satin_cavity_default(uintptr_t n_atoms);

/**
 * Create a spin-coherent state |polar, azimuth>; (pi/2, 0) points along +x.
 * On success `*out` owns the new state.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
SatinStatus satin_state_css(uintptr_t n_atoms, double polar, double azimuth, SatinState **out);

/**
 * Deep-copy a state.
 *
 * # Safety
 * `state` must be a live handle from this library; `out` must be valid.
 */
SatinStatus satin_state_clone(const SatinState *state, SatinState **out);

/**
 * Destroy a state handle (null is a no-op).
 *
 * # Safety
 * `state` must be a handle from this library, not yet freed.
 */
void satin_state_free(SatinState *state);

/**
 * Number of atoms N (state dimension is N + 1).
 *
 * # Safety
 * `state` must be a live handle.
 */
uintptr_t satin_state_n_atoms(const SatinState *state);

/**
 * Apply the active rotation exp(-i angle S_axis) in place.
 *
 * # Safety
 * `state` must be a live handle.
 */
SatinStatus satin_state_rotate(SatinState *state, SatinAxis axis, double angle);

/**
 * Apply one-axis twisting exp(-i (q/sqrt N) S_z^2) in place; negative
 * `q_tilde` is the time-reversed evolution.
 *
 * # Safety
 * `state` must be a live handle.
 */
SatinStatus satin_state_oat(SatinState *state, double q_tilde);

/**
 * Spin moments of the state.
 *
 * # Safety
 * `state` must be a live handle; `out` must be valid.
 */
SatinStatus satin_state_moments(const SatinState *state, SatinMoments *out);

/**
 * Probability distribution of outcomes m along `axis`, written into
 * `out[0..n_atoms+1]` in ascending-m order.
 *
 * # Safety
 * `state` must be a live handle; `out` must hold `out_len >= N + 1` doubles.
 */
SatinStatus satin_state_distribution(const SatinState *state,
                                     SatinAxis axis,
                                     double *out,
                                     uintptr_t out_len);

/**
 * Draw `n_shots` outcomes m from a distribution over the Dicke ladder;
 * deterministic per seed.
 *
 * # Safety
 * `dist` must hold `dist_len` doubles; `out` must hold `n_shots` doubles.
 */
SatinStatus satin_sample_shots(const double *dist,
                               uintptr_t dist_len,
                               uintptr_t n_shots,
                               uint64_t seed,
                               double *out);

/**
 * Signed shearing strength of the pulse described by `cfg`.
 */
double satin_shearing_strength(SatinCavity cfg);

/**
 * Light-induced broadening of the pulse (CSS variance units).
 */
double satin_excess_broadening(SatinCavity cfg);

/**
 * Photons scattered into free space by the pulse.
 */
double satin_scattered_photons(SatinCavity cfg);

/**
 * Power transmission of the dressed symmetric cavity.
 */
double satin_transmission(SatinCavity cfg);

/**
 * Optimize the tied laser detuning for shearing target `q_target`; on
 * success `*cfg` holds the signed detunings and the pulse photon number.
 *
 * # Safety
 * `cfg` must be a valid pointer.
 */
SatinStatus satin_optimize_detuning(SatinCavity *cfg, double q_target);

/**
 * Analytic small-signal amplification C N sin(q/sqrt N) cos^N(q/sqrt N).
 */
double satin_amplification_analytic(double q_tilde, uintptr_t n_atoms, double contrast);

/**
 * Exact-simulation amplification (slope of the echo response).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
SatinStatus satin_amplification_exact(uintptr_t n_atoms, double q_tilde, double *out);

/**
 * Metrological gain 10 log10(m^2 / sigma_y^2) in dB.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
SatinStatus satin_gain_db(double m, double sigma_y_sq, double *out);

/**
 * Full forward model at one (N, q): optimized detuning, pair budget, gain
 * decomposition.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
SatinStatus satin_model_gain(SatinCavity base,
                             uintptr_t n_atoms,
                             double q_tilde,
                             SatinGainBudget *out);

/**
 * Run the spin-echo Ramsey interferometer at the model operating point and
 * report (amplification, variance, gain).
 *
 * # Safety
 * Output pointers must be valid.
 */
SatinStatus satin_ramsey_gain(SatinCavity base,
                              uintptr_t n_atoms,
                              double q_tilde,
                              uint64_t seed,
                              double *out_m,
                              double *out_sigma_y_sq,
                              double *out_gain_db);

/**
 * Evaluate the Wigner quasiprobability on an (n_polar x n_azimuth) grid,
 * row-major into `out` (cell-centered polar rows, azimuth from 0).
 *
 * # Safety
 * `state` must be a live handle; `out` must hold n_polar*n_azimuth doubles.
 */
SatinStatus satin_wigner_grid(const SatinState *state,
                              uintptr_t n_polar,
                              uintptr_t n_azimuth,
                              double *out);

/**
 * Library version as a static NUL-terminated string.
 */
const char *satin_version(void);

/**
 * ABI sanity probe: returns `x + 1`; lets bindings verify linkage.
 */
int satin_abi_probe(int x);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SATIN_H */
