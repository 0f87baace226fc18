#ifndef YAGLOM_H
#define YAGLOM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum YgProfile {
  YG_PROFILE_BUMP = 0,
  YG_PROFILE_QUARTIC = 1,
} YgProfile;

// Result codes. The first four match the CLI exit codes.
typedef enum YgStatus {
  YG_STATUS_OK = 0,
  YG_STATUS_ERR_INVALID = 1,
  YG_STATUS_ERR_IO = 2,
  YG_STATUS_ERR_NUMERICAL = 3,
  YG_STATUS_ERR_NULL_POINTER = 4,
  YG_STATUS_ERR_PANIC = 5,
} YgStatus;

typedef enum YgVerdict {
  YG_VERDICT_CONSISTENT43 = 0,
  YG_VERDICT_CONSERVATIVE = 1,
  YG_VERDICT_INCONCLUSIVE = 2,
} YgVerdict;

// A scalar, vector or symmetric-tensor field on a periodic cube.
typedef struct YgField YgField;

// Named fields sharing one grid, as consumed by the catalog entries.
typedef struct YgFieldSet YgFieldSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *yg_version(void);

// Message of the last failing call on this thread, or NULL. The pointer
// stays valid until the next failing call or [`yg_clear_last_error`].
const char *yg_last_error_message(void);

void yg_clear_last_error(void);

// Builds a field from `ncomp` (1, 3 or 6) components of n³ samples each,
// component-major and x-fastest. The samples are copied.
//
// # Safety
// `samples` must point to `len` readable doubles and `out` to a writable pointer.
enum YgStatus yg_field_new(size_t n,
                           double length,
                           size_t ncomp,
                           const double *samples,
                           size_t len,
                           struct YgField **out);

// Reads a YGF1 field file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
enum YgStatus yg_field_read(const char *path, struct YgField **out);

// Writes a YGF1 field file.
//
// # Safety
// `field` must come from this library and `path` be a NUL-terminated string.
enum YgStatus yg_field_write(const struct YgField *field, const char *path);

// Points per axis, or 0 for a null handle.
//
// # Safety
// `field` must be null or come from this library.
size_t yg_field_n(const struct YgField *field);

// Component count, or 0 for a null handle.
//
// # Safety
// `field` must be null or come from this library.
size_t yg_field_ncomp(const struct YgField *field);

// Copies the samples out in the layout accepted by [`yg_field_new`];
// `len` must be exactly ncomp·n³.
//
// # Safety
// `field` must come from this library and `out` point to `len` writable doubles.
enum YgStatus yg_field_samples(const struct YgField *field, double *out, size_t len);

// # Safety
// `field` must be null or come from this library, and not be used afterwards.
void yg_field_free(struct YgField *field);

// An empty field set on an n³ cube of side `length`.
//
// # Safety
// `out` must be a writable pointer.
enum YgStatus yg_field_set_new(size_t n, double length, struct YgFieldSet **out);

// Copies `field` into slot `slot` ("v", "b", "theta", "omega", "tau", "u",
// "h" or "H"), replacing any previous occupant.
//
// # Safety
// `set` and `field` must come from this library and `slot` be a NUL-terminated string.
enum YgStatus yg_field_set_insert(struct YgFieldSet *set,
                                  const char *slot,
                                  const struct YgField *field);

// # Safety
// `set` must be null or come from this library, and not be used afterwards.
void yg_field_set_free(struct YgFieldSet *set);

// Exact box average of D_ε for catalog entry `name` (e.g. "TEMP").
//
// # Safety
// `set` must come from this library, `name` be a NUL-terminated string and `out` writable.
enum YgStatus yg_mean_dissipation(const struct YgFieldSet *set,
                                  const char *name,
                                  double alpha,
                                  double eps,
                                  double *out);

// Exact box average of the structure combination at separation λ.
//
// # Safety
// As for [`yg_mean_dissipation`].
enum YgStatus yg_mean_structure(const struct YgFieldSet *set,
                                const char *name,
                                double alpha,
                                double lambda,
                                double *out);

// Pointwise D_ε on the ball rule with `radial_nodes` × `sphere_count` nodes,
// written to `out` (n³ doubles, x-fastest).
//
// # Safety
// `set` must come from this library, `name` be a NUL-terminated string and
// `out` point to `len` writable doubles.
enum YgStatus yg_dissipation_field(const struct YgFieldSet *set,
                                   const char *name,
                                   double alpha,
                                   double eps,
                                   size_t radial_nodes,
                                   size_t sphere_count,
                                   double *out,
                                   size_t len);

// Runs the law check with ε = λ over `scales` using exact box averages.
// `ratio` receives the plateau ratio, or NaN when no plateau was found.
//
// # Safety
// `set` must come from this library, `name` be a NUL-terminated string,
// `scales` point to `count` doubles, and `verdict` and `ratio` be writable.
enum YgStatus yg_law_check(const struct YgFieldSet *set,
                           const char *name,
                           double alpha,
                           const double *scales,
                           size_t count,
                           enum YgVerdict *verdict,
                           double *ratio);

// ∫₀^∞ r³φ′(r) dr for a normalized profile, which equals −3/(4π).
//
// # Safety
// `out` must be writable.
enum YgStatus yg_radial_third_moment(enum YgProfile profile, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* YAGLOM_H */
