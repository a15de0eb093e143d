#ifndef MOTSLAB_H
#define MOTSLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. Zero is success.
 */
typedef enum MotsStatus {
  MOTS_OK = 0,
  MOTS_ERR_NULL = 1,
  MOTS_ERR_ARGUMENT = 2,
  MOTS_ERR_CONFIG = 3,
  MOTS_ERR_CONSTRAINT = 4,
  MOTS_ERR_NON_CONVERGENCE = 5,
  MOTS_ERR_FOCUSING = 6,
  MOTS_ERR_RESOLUTION = 7,
  MOTS_ERR_IO = 8,
  MOTS_ERR_FORMAT = 9,
  MOTS_ERR_BUFFER_TOO_SMALL = 10,
  MOTS_ERR_INTERNAL = 11,
  MOTS_ERR_PANIC = 12,
} MotsStatus;

/**
 * Lower-side Penrose class.
 */
typedef enum MotsPenroseClass {
  MOTS_CERTIFIED_POSITIVE = 0,
  MOTS_INCONCLUSIVE = 1,
  MOTS_VIOLATED_NEVER = 2,
} MotsPenroseClass;

typedef struct MotsProfile MotsProfile;

typedef struct MotsRegime MotsRegime;

typedef struct MotsSolution MotsSolution;

/**
 * Derived scalars of a regime.
 */
typedef struct MotsRegimeScalars {
  double a;
  double kappa;
  double mu;
  double y;
  double t;
  double b;
  double delta;
  double m0;
  double amplitude;
  double ubar_window_start;
  double ubar_lambda;
  double ubar_end;
  double epsilon;
} MotsRegimeScalars;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread ("" if none). Valid until the next call on this thread.
 */
const char *mots_last_error(void);

/**
 * Short static name of a status code ("unknown" outside the enum).
 */
const char *mots_status_name(int32_t status);

/**
 * The default regime (a = 10⁴, κ = 0.6, y = 10, t = 0.3).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MotsStatus mots_regime_default(struct MotsRegime **out_regime);

/**
 * A regime from TOML `key = value` lines (unset keys take their defaults).
 *
 * # Safety
 * `toml_text` must be a NUL-terminated string; `out_regime` a valid pointer.
 */
enum MotsStatus mots_regime_from_toml(const char *toml_text, struct MotsRegime **out_regime);

/**
 * # Safety
 * `regime` must come from this library or be NULL.
 */
void mots_regime_free(struct MotsRegime *regime);

/**
 * # Safety
 * Both pointers must be valid.
 */
enum MotsStatus mots_regime_scalars(const struct MotsRegime *regime,
                                    struct MotsRegimeScalars *out_scalars);

/**
 * Lower-side Penrose class at a window fraction in [0, 1].
 * `out_slack` (may be NULL) receives NaN where the slack is undefined.
 *
 * # Safety
 * `regime` and `out_class` must be valid; `out_slack` valid or NULL.
 */
enum MotsStatus mots_regime_classify(const struct MotsRegime *regime,
                                     double window_fraction,
                                     enum MotsPenroseClass *out_class,
                                     double *out_slack);

/**
 * Shear profile with the default construction settings.
 *
 * # Safety
 * `regime` and `out_profile` must be valid.
 */
enum MotsStatus mots_profile_build(const struct MotsRegime *regime,
                                   struct MotsProfile **out_profile);

/**
 * # Safety
 * `path` must be a NUL-terminated UTF-8 path; `out_profile` valid.
 */
enum MotsStatus mots_profile_load(const char *path, struct MotsProfile **out_profile);

/**
 * # Safety
 * `profile` valid; `path` and `config_hash` NUL-terminated.
 */
enum MotsStatus mots_profile_save(const struct MotsProfile *profile,
                                  const char *path,
                                  const char *config_hash);

/**
 * # Safety
 * `profile` must come from this library or be NULL.
 */
void mots_profile_free(struct MotsProfile *profile);

/**
 * Runs the profile's own checks; `out_passed` is 1 when all hold.
 *
 * # Safety
 * Both pointers must be valid.
 */
enum MotsStatus mots_profile_verify(const struct MotsProfile *profile, int32_t *out_passed);

/**
 * # Safety
 * Both pointers must be valid.
 */
enum MotsStatus mots_profile_scale_critical_norm(const struct MotsProfile *profile,
                                                 uint32_t j_max,
                                                 uint32_t i_max,
                                                 double *out_value);

/**
 * Solves the MOTS equation on the slice `ubar` with default solver settings.
 * Perturbations are drawn from `seed` with frame norm `beta · b^{1/4}`.
 *
 * # Safety
 * `profile` and `out_solution` must be valid.
 */
enum MotsStatus mots_solve_slice(const struct MotsProfile *profile,
                                 uint32_t n_theta,
                                 uint32_t n_phi,
                                 double ubar,
                                 uint64_t seed,
                                 double beta,
                                 struct MotsSolution **out_solution);

/**
 * # Safety
 * `solution` must come from this library or be NULL.
 */
void mots_solution_free(struct MotsSolution *solution);

/**
 * Number of grid nodes of the solution.
 *
 * # Safety
 * Both pointers must be valid.
 */
enum MotsStatus mots_solution_len(const struct MotsSolution *solution, uintptr_t *out_len);

/**
 * Copies R (θ-major node order) into `buffer`. Fails with
 * `MOTS_ERR_BUFFER_TOO_SMALL` if `capacity` is short; `out_written` (may be NULL) gets the length.
 *
 * # Safety
 * `buffer` must hold `capacity` doubles.
 */
enum MotsStatus mots_solution_radius(const struct MotsSolution *solution,
                                     double *buffer,
                                     uintptr_t capacity,
                                     uintptr_t *out_written);

/**
 * Range of R, residual norm and area ∫R² dΩ of a solution.
 *
 * # Safety
 * `solution` valid; each out pointer valid or NULL.
 */
enum MotsStatus mots_solution_summary(const struct MotsSolution *solution,
                                      double *out_r_min,
                                      double *out_r_max,
                                      double *out_residual,
                                      double *out_area);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MOTSLAB_H */
