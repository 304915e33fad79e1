/* Generated by cbindgen. Do not edit. */

#ifndef MEASUREKIT_H
#define MEASUREKIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Success.
 */
#define MK_OK 0

/**
 * Invalid input: bad JSON, bad parameters, wrong point shape.
 */
#define MK_ERR_INVALID 1

/**
 * Measure-theoretic failure: unrelated primitive measures or an undefined density.
 */
#define MK_ERR_MEASURE 2

/**
 * A required pointer argument was null.
 */
#define MK_ERR_NULL 3

/**
 * The library panicked; this is a bug.
 */
#define MK_ERR_PANIC 4

/**
 * Value classes written by `mk_logdensity`.
 */
#define MK_FINITE 0

#define MK_POS_INF 1

#define MK_NEG_INF 2

#define MK_UNDEFINED 3

/**
 * Opaque measure handle.
 */
typedef struct MkMeasure MkMeasure;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread. The pointer stays valid
 * until the next failing call on the same thread.
 */
const char *mk_last_error_message(void);

/**
 * Parses a JSON expression document into a new handle stored in `*out`.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
int32_t mk_measure_parse_json(const char *json, struct MkMeasure **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `m` must come from `mk_measure_parse_json` and not be freed twice.
 */
void mk_measure_free(struct MkMeasure *m);

/**
 * Log-density of `mu` at the JSON point `point_json`, with respect to `nu`,
 * or to the base measure of `mu` when `nu` is null. The value goes to
 * `*out_value` and its class (`MK_FINITE`, ...) to `*out_class`.
 *
 * # Safety
 * Handles must be live; strings NUL-terminated; output pointers valid.
 */
int32_t mk_logdensity(const struct MkMeasure *mu,
                      const struct MkMeasure *nu,
                      const char *point_json,
                      double *out_value,
                      int32_t *out_class);

/**
 * Draws one sample with `seed` and stores it as a JSON string in `*out_json`.
 *
 * # Safety
 * `m` must be live and `out_json` valid. Free the string with `mk_string_free`.
 */
int32_t mk_sample_json(const struct MkMeasure *m, uint64_t seed, char **out_json);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void mk_string_free(char *s);

/**
 * Mass of `m` over `[lo, hi]`: adaptive quadrature for continuous
 * measures, exact summation over the integers for discrete ones.
 *
 * # Safety
 * `m` must be live and `out_mass` valid.
 */
int32_t mk_mass_interval(const struct MkMeasure *m,
                         double lo,
                         double hi,
                         double tol,
                         double *out_mass);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MEASUREKIT_H */
