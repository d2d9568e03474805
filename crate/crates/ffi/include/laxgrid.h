#ifndef LAXGRID_H
#define LAXGRID_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Overlap sampling passed to [`laxgrid_lax_approximate`].
#define LAXGRID_SAMPLING_EXACT 0

// Lax modes.
#define LAXGRID_MODE_PLAIN 0

#define LAXGRID_MODE_CYCLIC 1

#define LAXGRID_MODE_BICYCLIC 2

// Status codes. `0` is success; the rest name the failure.
typedef enum LaxgridStatus {
  LAXGRID_STATUS_OK = 0,
  LAXGRID_STATUS_NULL_POINTER = 1,
  LAXGRID_STATUS_INVALID_UTF8 = 2,
  LAXGRID_STATUS_BUFFER_TOO_SMALL = 3,
  LAXGRID_STATUS_PANIC = 4,
  LAXGRID_STATUS_CAPACITY_EXCEEDED = 10,
  LAXGRID_STATUS_GRID_MISMATCH = 11,
  LAXGRID_STATUS_NO_CYCLE = 12,
  LAXGRID_STATUS_DOMAIN_ERROR = 13,
  LAXGRID_STATUS_NOT_EXACT = 14,
  LAXGRID_STATUS_NO_PERFECT_MATCHING = 15,
  LAXGRID_STATUS_NOT_CYCLIC = 16,
  LAXGRID_STATUS_ODD_ORDER = 17,
  LAXGRID_STATUS_NOT_COPRIME = 18,
  LAXGRID_STATUS_TOO_SMALL = 19,
  LAXGRID_STATUS_CYCLE_TOO_SHORT = 20,
  LAXGRID_STATUS_EQUAL_SIZE_INFEASIBLE = 21,
  LAXGRID_STATUS_NOT_A_PARTITION = 22,
  LAXGRID_STATUS_UNSUPPORTED_GEOMETRY = 23,
  LAXGRID_STATUS_GAP_TOO_SMALL = 24,
  LAXGRID_STATUS_PATHS_INTERSECT = 25,
  LAXGRID_STATUS_POINTS_ON_BOUNDARY = 26,
  LAXGRID_STATUS_INVALID_ARGUMENT = 27,
  LAXGRID_STATUS_CONFIG_ERROR = 28,
  LAXGRID_STATUS_IO_ERROR = 29,
} LaxgridStatus;

// A measure-preserving map.
typedef struct LaxgridMap LaxgridMap;

// A permutation of grid cells.
typedef struct LaxgridPermutation LaxgridPermutation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failing call on this thread; empty if none. The
// pointer stays valid until the next failing call on this thread.
const char *laxgrid_last_error(void);

// Parses a map spec such as `"torus_linear:2,1,1,1"` for dimension `dim`.
//
// # Safety
// `spec` must be a NUL-terminated string and `out` a valid pointer.
enum LaxgridStatus laxgrid_map_parse(const char *spec, size_t dim, struct LaxgridMap **out);

// # Safety
// `map` must come from [`laxgrid_map_parse`] and not be used afterwards.
void laxgrid_map_free(struct LaxgridMap *map);

// # Safety
// `map` must be a live handle.
size_t laxgrid_map_dim(const struct LaxgridMap *map);

// Evaluates the map at `point` (length `dim`), writing `dim` values to `out`.
//
// # Safety
// `point` and `out` must each hold `laxgrid_map_dim(map)` doubles.
enum LaxgridStatus laxgrid_map_eval(const struct LaxgridMap *map, const double *point, double *out);

// Lax approximation at dyadic order `order`. `samples` is the number of
// sample points per axis, or [`LAXGRID_SAMPLING_EXACT`]. On success `out`
// receives the permutation and `strong_bound`, if not null, its certified
// distance bound.
//
// # Safety
// `map` must be a live handle and `out` a valid pointer.
enum LaxgridStatus laxgrid_lax_approximate(const struct LaxgridMap *map,
                                           uint32_t order,
                                           uint32_t samples,
                                           uint32_t mode,
                                           struct LaxgridPermutation **out,
                                           double *strong_bound);

// Builds a permutation from its image array.
//
// # Safety
// `image` must hold `len` values and `out` be a valid pointer.
enum LaxgridStatus laxgrid_permutation_new(const size_t *image,
                                           size_t len,
                                           struct LaxgridPermutation **out);

// # Safety
// `perm` must come from this library and not be used afterwards.
void laxgrid_permutation_free(struct LaxgridPermutation *perm);

// # Safety
// `perm` must be a live handle.
size_t laxgrid_permutation_len(const struct LaxgridPermutation *perm);

// # Safety
// `perm` must be a live handle.
size_t laxgrid_permutation_cycle_count(const struct LaxgridPermutation *perm);

// Copies the image array into `out`, which must hold `capacity` values.
//
// # Safety
// `perm` must be a live handle and `out` hold `capacity` values.
enum LaxgridStatus laxgrid_permutation_image(const struct LaxgridPermutation *perm,
                                             size_t *out,
                                             size_t capacity);

// Merges the cycles of `perm` into one along `ordering` (`len` cells), or
// along `0, 1, ..., len - 1` when `ordering` is null.
//
// # Safety
// `perm` must be a live handle; `ordering`, if not null, must hold as many
// values as the permutation has cells.
enum LaxgridStatus laxgrid_cyclicize(const struct LaxgridPermutation *perm,
                                     const size_t *ordering,
                                     struct LaxgridPermutation **out);

// Atoms of the spectral type: angle `2π num[i] / den[i]` with weight
// `weight[i]`. `count` receives the number of atoms; if it exceeds
// `capacity` nothing is written and [`LaxgridStatus::BufferTooSmall`] is
// returned.
//
// # Safety
// The three arrays must hold `capacity` values each.
enum LaxgridStatus laxgrid_spectral_type(const struct LaxgridPermutation *perm,
                                         uint64_t *num,
                                         uint64_t *den,
                                         double *weight,
                                         size_t capacity,
                                         size_t *count);

// Runs an experiment from TOML config text and returns the JSON report,
// without writing any file. Free the string with [`laxgrid_string_free`].
//
// # Safety
// `config` must be a NUL-terminated string and `out` a valid pointer.
enum LaxgridStatus laxgrid_run_config(const char *config, char **out);

// # Safety
// `s` must come from this library and not be used afterwards.
void laxgrid_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LAXGRID_H */
