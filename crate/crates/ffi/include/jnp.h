#ifndef JNP_H
#define JNP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes of every fallible call.
typedef enum JnpStatus {
  JNP_STATUS_OK = 0,
  JNP_STATUS_NULL_POINTER = 1,
  JNP_STATUS_INVALID_UTF8 = 2,
  JNP_STATUS_INVALID_ARGUMENT = 3,
  JNP_STATUS_EMPTY_DOMAIN = 4,
  JNP_STATUS_UNSUPPORTED_DIMENSION = 5,
  JNP_STATUS_EXPONENT_OUT_OF_RANGE = 6,
  JNP_STATUS_CENTER_OUTSIDE_DOMAIN = 7,
  JNP_STATUS_CHAIN_CONSTRUCTION_FAILED = 8,
  JNP_STATUS_CUBE_NOT_CONTAINED = 9,
  JNP_STATUS_NO_LOCAL_PARTITION = 10,
  JNP_STATUS_DISCONNECTED_DOMAIN = 11,
  JNP_STATUS_DOMAIN_MISMATCH = 12,
  JNP_STATUS_INVALID_CONFIG = 13,
  // The experiment ran but an invariant failed; the report is still
  // returned.
  JNP_STATUS_INVARIANT_FAILED = 14,
  JNP_STATUS_IO = 15,
  JNP_STATUS_PANIC = 99,
} JnpStatus;

// A rasterized domain together with its lazily computed Whitney
// decomposition.
typedef struct JnpDomain JnpDomain;

// A function on the cells of a domain.
typedef struct JnpFunction JnpFunction;

typedef struct JnpWhitneySummary {
  size_t cube_count;
  int32_t coarsest_level;
  int32_t finest_level;
  double covered_measure;
  double residual;
  // Disjointness, containment and the distance bounds all hold.
  bool valid;
} JnpWhitneySummary;

typedef struct JnpRatio {
  double numerator;
  double denominator;
  // `0` for `0/0`; infinite (with `infinite` set) for `x/0`, `x > 0`.
  double ratio;
  bool infinite;
  double residual;
} JnpRatio;

typedef struct JnpQuotient {
  double q_star;
  double lhs;
  double rhs;
  double quotient;
  bool infinite;
  bool near_exponent_boundary;
} JnpQuotient;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Version string of the library; static, do not free.
const char *jnp_version(void);

// Message of the last failed call on this thread, or null. Valid until the
// next failing call on the same thread; do not free.
const char *jnp_last_error_message(void);

// Rasterize a corpus domain such as `"square"`, `"cusp:3"` or
// `"rooms:3,0.1"` at resolution `resolution`.
enum JnpStatus jnp_domain_from_spec(const char *spec,
                                    int32_t resolution,
                                    struct JnpDomain **out_domain);

// Build a domain from an occupancy grid of `extent[0] * .. * extent[dim-1]`
// bytes (nonzero = inside), axis 0 varying fastest, whose first cell has
// level-`resolution` index `origin`.
enum JnpStatus jnp_domain_from_occupancy(size_t dim,
                                         int32_t resolution,
                                         const int64_t *origin,
                                         const size_t *extent,
                                         const uint8_t *occupancy,
                                         struct JnpDomain **out_domain);

// Release a domain; null is ignored.
void jnp_domain_free(struct JnpDomain *domain);

enum JnpStatus jnp_domain_dim(const struct JnpDomain *domain, size_t *out_dim);

// Number of occupied cells.
enum JnpStatus jnp_domain_cell_count(const struct JnpDomain *domain, size_t *out_count);

enum JnpStatus jnp_domain_measure(const struct JnpDomain *domain, double *out_measure);

enum JnpStatus jnp_whitney_summary(const struct JnpDomain *domain,
                                   struct JnpWhitneySummary *out_summary);

// Upper estimate of the John constant about `center` from `samples`
// random cells (all cells when `samples` reaches the cell count).
enum JnpStatus jnp_john_beta(const struct JnpDomain *domain,
                             const double *center,
                             size_t center_len,
                             size_t samples,
                             uint64_t seed,
                             double *out_beta);

// Function from a corpus spec such as `"quadrant"`, `"logDist"` or
// `"haarSum:3,7"`.
enum JnpStatus jnp_function_from_spec(const struct JnpDomain *domain,
                                      const char *spec,
                                      struct JnpFunction **out_function);

// Function from one value per occupied cell, in the domain's cell order
// (axis 0 varying fastest).
enum JnpStatus jnp_function_from_values(const struct JnpDomain *domain,
                                        const double *values,
                                        size_t len,
                                        struct JnpFunction **out_function);

// Release a function; null is ignored.
void jnp_function_free(struct JnpFunction *function);

// Copy the values into `buffer` (in cell order); `len` must equal the
// cell count.
enum JnpStatus jnp_function_values(const struct JnpFunction *function, double *buffer, size_t len);

// Dyadic partition functional `sup_P sum |Q| (avg_Q |f - f_Q|)^p`.
enum JnpStatus jnp_jn_global(const struct JnpFunction *function, double p, double *out_value);

// Localized functional over the local families of the domain. `lambda <= 0`
// selects the default dilation. `out_residual` may be null.
enum JnpStatus jnp_jn_local(const struct JnpDomain *domain,
                            const struct JnpFunction *function,
                            double p,
                            double lambda,
                            double *out_value,
                            double *out_residual);

// `sup_sigma sigma^p |{|f - c| > sigma}|`.
enum JnpStatus jnp_weak_norm(const struct JnpFunction *function,
                             double c,
                             double p,
                             double *out_value);

// Weak norm minimized over the center `c`. `out_c` may be null.
enum JnpStatus jnp_weak_norm_opt(const struct JnpFunction *function,
                                 double p,
                                 double *out_value,
                                 double *out_c);

// Weak norm about the mean over the localized functional.
enum JnpStatus jnp_weak_type_ratio(const struct JnpDomain *domain,
                                   const struct JnpFunction *function,
                                   double p,
                                   double lambda,
                                   struct JnpRatio *out_ratio);

// Dyadic partition functional over the localized functional.
enum JnpStatus jnp_local_to_global_ratio(const struct JnpDomain *domain,
                                         const struct JnpFunction *function,
                                         double p,
                                         double lambda,
                                         struct JnpRatio *out_ratio);

// `int |f - f_G|^{q*}` over `(int |grad f|^q)^{q*/q}` for `1 <= q < n`.
enum JnpStatus jnp_poincare_quotient(const struct JnpFunction *function,
                                     double q,
                                     struct JnpQuotient *out_quotient);

// Run an experiment described by a TOML configuration document and return
// the JSON report through `out_json` (free it with [`jnp_string_free`]).
// When an invariant fails the report is still returned, together with
// `JNP_STATUS_INVARIANT_FAILED`.
enum JnpStatus jnp_run_experiment_json(const char *config_toml, char **out_json);

// Release a string returned by this library; null is ignored.
void jnp_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* JNP_H */
