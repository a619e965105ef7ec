#ifndef NUGAP_H
#define NUGAP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NugapStatus {
  NUGAP_STATUS_OK = 0,
  NUGAP_STATUS_NULL_POINTER = 1,
  NUGAP_STATUS_INVALID_ARGUMENT = 2,
  NUGAP_STATUS_PARSE = 3,
  NUGAP_STATUS_NOT_INVERTIBLE = 4,
  NUGAP_STATUS_INCONCLUSIVE = 5,
  NUGAP_STATUS_PRECONDITION = 6,
  NUGAP_STATUS_NUMERICAL = 7,
  NUGAP_STATUS_PANIC = 8,
} NugapStatus;

/**
 * Opaque handle to an element of the algebra.
 */
typedef struct NugapElement NugapElement;

/**
 * Opaque plant handle.
 */
typedef struct NugapPlant NugapPlant;

typedef struct NugapMetric {
  double value;
  /**
   * 1 when the value came from the unity branch.
   */
  int32_t unity;
  /**
   * 1 when some condition could not be decided numerically.
   */
  int32_t inconclusive;
  /**
   * Certified margin of the deciding invertibility test, NaN if none.
   */
  double margin;
  double error_bound;
} NugapMetric;

typedef struct NugapIndex {
  double w_av;
  int64_t w;
} NugapIndex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into the library from the same thread.
 */
const char *nugap_last_error(void);

/**
 * `k e^{-sτ}` with its normalized coprime factorization.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum NugapStatus nugap_plant_gain_delay(double k, double tau, struct NugapPlant **out);

/**
 * `b / (s + a)` with its normalized coprime factorization.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum NugapStatus nugap_plant_first_order(double a, double b, struct NugapPlant **out);

/**
 * Parses a one-line plant description such as `kind=gain_delay k=2 tau=1`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `out` must be writable.
 */
enum NugapStatus nugap_plant_parse(const char *spec, struct NugapPlant **out);

/**
 * Releases a plant handle. Null is ignored.
 *
 * # Safety
 * `p` must come from a `nugap_plant_*` constructor and not be freed twice.
 */
void nugap_plant_free(struct NugapPlant *p);

/**
 * Frequency response `P(iy)`.
 *
 * # Safety
 * `p` must be a live handle; `re` and `im` must be writable.
 */
enum NugapStatus nugap_plant_eval(const struct NugapPlant *p, double y, double *re, double *im);

/**
 * `d_{A+}(P₁, P₂)`. A `tol` of 0 selects the library default.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum NugapStatus nugap_d_aplus(const struct NugapPlant *p1,
                               const struct NugapPlant *p2,
                               double tol,
                               struct NugapMetric *out);

/**
 * `d_{H∞}(P₁, P₂)` from the annulus trace.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum NugapStatus nugap_d_hinf(const struct NugapPlant *p1,
                              const struct NugapPlant *p2,
                              double tol,
                              struct NugapMetric *out);

/**
 * `d_{H∞,ρ}(P₁, P₂)` for `ρ ∈ (0, 1)`.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum NugapStatus nugap_d_hinf_rho(const struct NugapPlant *p1,
                                  const struct NugapPlant *p2,
                                  double rho,
                                  double tol,
                                  struct NugapMetric *out);

/**
 * Stability margin `μ_{P,C}`; 0 when `C` does not stabilize `P`.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum NugapStatus nugap_mu(const struct NugapPlant *p,
                          const struct NugapPlant *c,
                          double tol,
                          double *out);

/**
 * Parses an element written as `ap=[(c,delay),...] atoms=[...]`.
 *
 * # Safety
 * `src` must be a NUL-terminated string; `out` must be writable.
 */
enum NugapStatus nugap_element_parse(const char *src, struct NugapElement **out);

/**
 * Releases an element handle. Null is ignored.
 *
 * # Safety
 * `e` must come from `nugap_element_parse` and not be freed twice.
 */
void nugap_element_free(struct NugapElement *e);

/**
 * Value on the imaginary axis at `iy`.
 *
 * # Safety
 * `e` must be a live handle; `re` and `im` must be writable.
 */
enum NugapStatus nugap_element_eval(const struct NugapElement *e, double y, double *re, double *im);

/**
 * Index `(w_av, w)` of an invertible element.
 *
 * # Safety
 * `e` must be a live handle; `out` must be writable.
 */
enum NugapStatus nugap_element_index(const struct NugapElement *e,
                                     double tol,
                                     struct NugapIndex *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NUGAP_H */
