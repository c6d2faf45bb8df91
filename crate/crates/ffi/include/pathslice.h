#ifndef PATHSLICE_H
#define PATHSLICE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum PsStatus {
  PS_STATUS_OK = 0,
  PS_STATUS_NULL_POINTER = 1,
  PS_STATUS_CONFIG = 2,
  PS_STATUS_SHAPE = 3,
  PS_STATUS_DERIVATIVE_BUDGET = 4,
  PS_STATUS_INDEX = 5,
  PS_STATUS_TIME_ORDER = 6,
  PS_STATUS_WINDOW = 7,
  PS_STATUS_DEGENERATE_FIT = 8,
  PS_STATUS_ORACLE_RESOLUTION = 9,
  PS_STATUS_SINGULAR = 10,
  PS_STATUS_SUPPORT = 11,
  PS_STATUS_LATTICE = 12,
  PS_STATUS_IO = 13,
  PS_STATUS_VALIDATION = 14,
  PS_STATUS_PANIC = 15,
} PsStatus;

/**
 * Short-time action expansion `S^(N)` for one potential, order, start time and grid.
 */
typedef struct PsExpansion PsExpansion;

/**
 * Uniform grid on `[-L, L)`.
 */
typedef struct PsGrid PsGrid;

/**
 * Potential model.
 */
typedef struct PsPotential PsPotential;

/**
 * Sampled wave function.
 */
typedef struct PsWave PsWave;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static nul-terminated string.
 */
const char *ps_version(void);

/**
 * Copies the calling thread's last error message into `buf` (nul-terminated,
 * truncated to `len - 1` bytes) and returns the full message length, or 0
 * when the last call succeeded. `buf` may be null to query the length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t ps_last_error(char *buf, size_t len);

/**
 * # Safety
 * `out` must be a valid pointer to write the handle into.
 */
enum PsStatus ps_grid_new(double half_width, size_t points, struct PsGrid **out);

/**
 * # Safety
 * `grid` must be null or a handle from [`ps_grid_new`] not yet freed.
 */
void ps_grid_free(struct PsGrid *grid);

/**
 * Number of grid points, or 0 for a null handle.
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
size_t ps_grid_len(const struct PsGrid *grid);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum PsStatus ps_potential_zero(struct PsPotential **out);

/**
 * `V(x) = a x`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum PsStatus ps_potential_linear(double a, struct PsPotential **out);

/**
 * `V(x) = kappa x^2 / 2`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum PsStatus ps_potential_harmonic(double kappa, struct PsPotential **out);

/**
 * `V(x) = a cos(b x)`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum PsStatus ps_potential_cosine(double a, double b, struct PsPotential **out);

/**
 * `sum_j j^{-(2N+2)} cos(j x)` for `j = 1..=terms`, with derivative budget `2N`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum PsStatus ps_potential_low_regularity(size_t order, size_t terms, struct PsPotential **out);

/**
 * `e(t) V(x)` with `e` the polynomial whose `n` coefficients (increasing
 * degree) are at `envelope`. `base` is not consumed.
 *
 * # Safety
 * `base` must be a live handle, `envelope` must point to `n` doubles and
 * `out` must be a valid pointer.
 */
enum PsStatus ps_potential_time_modulated(const struct PsPotential *base,
                                          const double *envelope,
                                          size_t n,
                                          struct PsPotential **out);

/**
 * `d_t^k d_x^alpha V(t, x)`.
 *
 * # Safety
 * `potential` must be a live handle and `out` a valid pointer.
 */
enum PsStatus ps_potential_derivative(const struct PsPotential *potential,
                                      size_t k,
                                      size_t alpha,
                                      double t,
                                      double x,
                                      double *out);

/**
 * # Safety
 * `potential` must be null or a live handle.
 */
void ps_potential_free(struct PsPotential *potential);

/**
 * Action expansion of order `order` at start time `s`.
 *
 * # Safety
 * `potential` and `grid` must be live handles and `out` a valid pointer.
 */
enum PsStatus ps_expansion_new(const struct PsPotential *potential,
                               size_t order,
                               double s,
                               double hbar,
                               const struct PsGrid *grid,
                               struct PsExpansion **out);

/**
 * `d_x^alpha W_k(x, y)`.
 *
 * # Safety
 * `expansion` must be a live handle; `re` and `im` valid pointers.
 */
enum PsStatus ps_expansion_eval_w(const struct PsExpansion *expansion,
                                  size_t k,
                                  size_t alpha,
                                  double x,
                                  double y,
                                  double *re,
                                  double *im);

/**
 * `S^(N)(t, s, x, y)`.
 *
 * # Safety
 * `expansion` must be a live handle; `re` and `im` valid pointers.
 */
enum PsStatus ps_expansion_eval_action(const struct PsExpansion *expansion,
                                       double t,
                                       double x,
                                       double y,
                                       double *re,
                                       double *im);

/**
 * # Safety
 * `expansion` must be null or a live handle.
 */
void ps_expansion_free(struct PsExpansion *expansion);

/**
 * L²-normalized Gaussian packet.
 *
 * # Safety
 * `grid` must be a live handle and `out` a valid pointer.
 */
enum PsStatus ps_wave_gaussian(const struct PsGrid *grid,
                               double center,
                               double momentum,
                               double width,
                               double hbar,
                               struct PsWave **out);

/**
 * Wave function from `n` samples; `n` must equal the grid size.
 *
 * # Safety
 * `grid` must be a live handle, `re` and `im` must point to `n` doubles and
 * `out` must be a valid pointer.
 */
enum PsStatus ps_wave_from_samples(const struct PsGrid *grid,
                                   const double *re,
                                   const double *im,
                                   size_t n,
                                   struct PsWave **out);

/**
 * Number of samples, or 0 for a null handle.
 *
 * # Safety
 * `wave` must be null or a live handle.
 */
size_t ps_wave_len(const struct PsWave *wave);

/**
 * Copies the samples into `re` and `im`, each of length `n` (the wave length).
 *
 * # Safety
 * `wave` must be a live handle; `re` and `im` must point to `n` writable doubles.
 */
enum PsStatus ps_wave_values(const struct PsWave *wave, double *re, double *im, size_t n);

/**
 * Discrete L² norm.
 *
 * # Safety
 * `wave` must be a live handle and `out` a valid pointer.
 */
enum PsStatus ps_wave_norm(const struct PsWave *wave, double *out);

/**
 * Number of resolution warnings attached to the wave.
 *
 * # Safety
 * `wave` must be null or a live handle.
 */
size_t ps_wave_warning_count(const struct PsWave *wave);

/**
 * `||a - b||_2`.
 *
 * # Safety
 * `a`, `b` must be live handles and `out` a valid pointer.
 */
enum PsStatus ps_wave_distance(const struct PsWave *a, const struct PsWave *b, double *out);

/**
 * # Safety
 * `wave` must be null or a live handle.
 */
void ps_wave_free(struct PsWave *wave);

/**
 * One step `E^(N)(t, s) f`; `window <= 0` selects the default window.
 *
 * # Safety
 * `expansion`, `wave` must be live handles and `out` a valid pointer.
 */
enum PsStatus ps_propagate_short_time(const struct PsExpansion *expansion,
                                      const struct PsWave *wave,
                                      double t,
                                      double s,
                                      double window,
                                      struct PsWave **out);

/**
 * `E^(N)(Omega) f` over `slices` uniform slices of `[s, t]`, where `s` is
 * the expansion's start time.
 *
 * # Safety
 * `expansion`, `wave` must be live handles and `out` a valid pointer.
 */
enum PsStatus ps_propagate_time_sliced(const struct PsExpansion *expansion,
                                       const struct PsWave *wave,
                                       double t,
                                       size_t slices,
                                       struct PsWave **out);

/**
 * Strang-split reference `U(t, s) f` with `substeps` per unit time.
 *
 * # Safety
 * `potential`, `wave` must be live handles and `out` a valid pointer.
 */
enum PsStatus ps_propagate_reference(const struct PsPotential *potential,
                                     const struct PsWave *wave,
                                     double s,
                                     double t,
                                     size_t substeps,
                                     double hbar,
                                     struct PsWave **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PATHSLICE_H */
