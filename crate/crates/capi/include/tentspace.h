#ifndef TENTSPACE_H
#define TENTSPACE_H

/* Generated from the Rust sources by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible ABI function.
 */
typedef enum TspStatus {
  /**
   * Success.
   */
  TSP_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  TSP_STATUS_NULL_ARGUMENT = 1,
  /**
   * Arguments were structurally invalid (bad spec text, bad grid
   * parameters, mismatched grids, non-UTF-8 strings, ...).
   */
  TSP_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The filesystem refused a read or write.
   */
  TSP_STATUS_IO = 3,
  /**
   * A verification run completed but at least one check failed.
   */
  TSP_STATUS_CHECK_FAILED = 4,
  /**
   * An internal panic was caught at the boundary.
   */
  TSP_STATUS_PANIC = 5,
} TspStatus;

/**
 * Opaque handle to a sampled grid function.
 */
typedef struct TspGrid TspGrid;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version of the underlying library as a static NUL-terminated string.
 */
const char *tsp_version(void);

/**
 * Message describing the most recent failure on this thread. Never null;
 * empty before the first failure. Valid until the next failing call on
 * the same thread.
 */
const char *tsp_last_error_message(void);

/**
 * Reads a grid function from a file written by `tsp_grid_write` or the
 * command-line tool. On success, `*out` owns the new handle.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TspStatus tsp_grid_read(const char *path, struct TspGrid **out);

/**
 * Writes a grid function to a file in the toolkit's text format.
 *
 * # Safety
 * `grid` must be a live handle and `path` a NUL-terminated string.
 */
enum TspStatus tsp_grid_write(const struct TspGrid *grid, const char *path);

/**
 * Samples the indicator of the height band (band_lo, band_hi) on the grid
 * with the given shape — the same family as the bundled slab fixture. On
 * success, `*out` owns the new handle.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum TspStatus tsp_grid_slab(size_t n,
                             size_t ny,
                             size_t t_levels,
                             double t_min,
                             double t_max,
                             double band_lo,
                             double band_hi,
                             struct TspGrid **out);

/**
 * Reports the grid shape behind a handle.
 *
 * # Safety
 * `grid` must be a live handle; out-pointers may be null to skip a field.
 */
enum TspStatus tsp_grid_dims(const struct TspGrid *grid, size_t *n, size_t *ny, size_t *t_levels);

/**
 * Releases a handle. Null is a no-op.
 *
 * # Safety
 * `grid` must be a handle from this library that has not been freed.
 */
void tsp_grid_free(struct TspGrid *grid);

/**
 * Evaluates the quasi-norm described by `spec` — the text form
 * `p:q:r:beta[:aperture]`, e.g. `"2:2:2:0"` or `"inf:2:none:-0.5"` — on
 * the grid function.
 *
 * # Safety
 * `grid` must be a live handle, `spec` a NUL-terminated string, and `out`
 * a valid pointer.
 */
enum TspStatus tsp_tent_norm(const struct TspGrid *grid, const char *spec, double *out);

/**
 * Evaluates the weighted pairing of two grid functions on the same grid:
 * the integral of `f h` against the cell measure carrying the weight
 * `t^beta0`.
 *
 * # Safety
 * `f` and `h` must be live handles and `out` a valid pointer.
 */
enum TspStatus tsp_pairing(const struct TspGrid *f,
                           const struct TspGrid *h,
                           double beta0,
                           double *out);

/**
 * Runs the verification suites described by `config_text` (same `key =
 * value` grammar as the command-line config file) and writes the CSV and
 * JSON reports next to the configured output prefix. Returns
 * `TSP_STATUS_OK` when every check passed and `TSP_STATUS_CHECK_FAILED`
 * when the run completed with failures (the report files are written
 * either way).
 *
 * # Safety
 * `config_text` must be a NUL-terminated string.
 */
enum TspStatus tsp_verify_run(const char *config_text);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* TENTSPACE_H */
