#ifndef BUNDLELIFT_H
#define BUNDLELIFT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by all functions.
 */
typedef enum BlStatus {
  BL_STATUS_OK = 0,
  BL_STATUS_NULL_POINTER = 1,
  BL_STATUS_INVALID_ARGUMENT = 2,
  BL_STATUS_UNKNOWN_NAME = 3,
  /**
   * The construction is refused because its precondition fails (for
   * example the torus criterion).
   */
  BL_STATUS_NOT_LIFTABLE = 4,
  BL_STATUS_NUMERICAL = 5,
  BL_STATUS_BUFFER_TOO_SMALL = 6,
  BL_STATUS_PANIC = 7,
} BlStatus;

/**
 * Opaque lift handle.
 */
typedef struct BlLift BlLift;

/**
 * Residuals from `bl_lift_check`.
 */
typedef struct BlLiftReport {
  size_t samples;
  double tolerance;
  double base_residual;
  double fiber_residual;
  double linearity_residual;
  double min_singular_value;
  double isometry_residual;
  /**
   * NaN when the bundle has no complex structure.
   */
  double complex_linearity_residual;
  /**
   * NaN when the bundle has no complex structure.
   */
  double anti_linearity_residual;
  size_t failed_probes;
  bool passes;
} BlLiftReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *bl_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *bl_version(void);

/**
 * Lift of `P ↦ APAᵀ` to the tautological bundle over `Gr_k(ℝⁿ)`. `a` is
 * an orthogonal `n × n` matrix in row-major order.
 *
 * # Safety
 * `a` must point to `n * n` doubles and `out` to writable storage.
 */
enum BlStatus bl_lift_grassmann_orthogonal(const double *a,
                                           size_t n,
                                           size_t k,
                                           struct BlLift **out);

/**
 * Entrywise conjugation on the tautological line bundle over `CPⁿ`.
 *
 * # Safety
 * `out` must point to writable storage.
 */
enum BlStatus bl_lift_cpn_conjugation(size_t n, struct BlLift **out);

/**
 * Lift of `φ_A` to the line bundle `L_b` over `Tⁿ`. `a` is an `n × n`
 * integer matrix in row-major order and `bits` holds `n` zeros and ones.
 * Returns `NotLiftable` when the mod-2 criterion fails.
 *
 * # Safety
 * `a` must point to `n * n` values, `bits` to `n` values, `out` to
 * writable storage.
 */
enum BlStatus bl_lift_torus_line(const int64_t *a,
                                 const uint8_t *bits,
                                 size_t n,
                                 struct BlLift **out);

/**
 * Lift of one of the generators `"a"`, `"r"`, `"s"` of diffeomorphisms of
 * `S¹ × S²`, with `steps` transport steps for the composed `a`-lift.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` writable.
 */
enum BlStatus bl_lift_s1xs2_generator(const char *name,
                                      uint32_t n,
                                      size_t steps,
                                      struct BlLift **out);

/**
 * `outer ∘ inner`.
 *
 * # Safety
 * Both handles must be live and `out` writable.
 */
enum BlStatus bl_lift_compose(const struct BlLift *outer,
                              const struct BlLift *inner,
                              struct BlLift **out);

/**
 * # Safety
 * `lift` must be live and `out` writable.
 */
enum BlStatus bl_lift_invert(const struct BlLift *lift, struct BlLift **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `lift` must come from a `bl_lift_*` constructor and not be used again.
 */
void bl_lift_free(struct BlLift *lift);

/**
 * Real rank of the bundle and ambient dimension of base points.
 *
 * # Safety
 * `lift` must be live; `rank` and `base_dim` may be NULL.
 */
enum BlStatus bl_lift_dims(const struct BlLift *lift, size_t *rank, size_t *base_dim);

/**
 * Seeded verification of a lift.
 *
 * # Safety
 * `lift` must be live and `out` writable.
 */
enum BlStatus bl_lift_check(const struct BlLift *lift,
                            size_t samples,
                            uint64_t seed,
                            struct BlLiftReport *out);

/**
 * Fiber matrix at the base point `x` in orthonormal fiber bases, written
 * row-major into `out` (`rank * rank` entries).
 *
 * # Safety
 * `x` must point to `x_len` doubles and `out` to `out_len` doubles.
 */
enum BlStatus bl_lift_fiber_matrix(const struct BlLift *lift,
                                   const double *x,
                                   size_t x_len,
                                   double *out,
                                   size_t out_len);

/**
 * First Chern number of the pullback of the tautological line along
 * `[z₀, z₁] ↦ [z₀ⁿ, z₁ⁿ]` over `S²` (`n = 0` gives the trivial line).
 *
 * # Safety
 * `out` must be writable.
 */
enum BlStatus bl_sphere_power_chern(uint32_t n, size_t mesh_level, int64_t *out);

/**
 * Both verdicts of the torus liftability criterion.
 *
 * # Safety
 * `a` must point to `n * n` values, `bits` to `n`; outputs writable.
 */
enum BlStatus bl_torus_criterion(const int64_t *a,
                                 const uint8_t *bits,
                                 size_t n,
                                 bool *fast,
                                 bool *oracle);

/**
 * Runs a named scenario with default parameters and the given seed and
 * returns its JSON report (without wall time) in `*out_json`, to be
 * released with `bl_string_free`. `*overall` receives the pass flag.
 *
 * # Safety
 * `name` must be NUL-terminated; outputs writable.
 */
enum BlStatus bl_run_scenario_json(const char *name, uint64_t seed, char **out_json, bool *overall);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used again.
 */
void bl_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BUNDLELIFT_H */
