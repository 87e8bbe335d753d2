#ifndef RENORMALAB_H
#define RENORMALAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every `rl_*` call.
typedef enum RlStatus {
  RL_STATUS_OK = 0,
  RL_STATUS_NULL_POINTER = 1,
  RL_STATUS_INVALID_ARGUMENT = 2,
  RL_STATUS_PARSE = 3,
  RL_STATUS_IO = 4,
  // The requested value does not exist, e.g. no unstable eigenvalue.
  RL_STATUS_NOT_AVAILABLE = 5,
  RL_STATUS_NEWTON_DIVERGED = 10,
  RL_STATUS_NOT_FIXED_POINT = 11,
  RL_STATUS_NOT_RENORMALIZABLE = 12,
  RL_STATUS_PRECISION_EXHAUSTED = 13,
  RL_STATUS_DEGENERATE_JACOBIAN = 14,
  RL_STATUS_KNEADING_TIE = 15,
  RL_STATUS_DEGENERATE_RATIOS = 16,
  // Any other failed numerical contract.
  RL_STATUS_NUMERIC = 19,
  RL_STATUS_PANIC = 99,
} RlStatus;

typedef struct RlCascade RlCascade;

typedef struct RlFixedPoint RlFixedPoint;

typedef struct RlGerm RlGerm;

typedef struct RlGrid RlGrid;

typedef struct RlSpectrum RlSpectrum;

// A double-double value `hi + lo`.
typedef struct RlScalar {
  double hi;
  double lo;
} RlScalar;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread; empty if none. Valid until
// the next failing call on the same thread.
const char *rl_last_error(void);

// Library version as a static string.
const char *rl_version(void);

// Frees a string returned by this library.
//
// # Safety
// `s` must come from an `rl_*` function returning an owned string, or be null.
void rl_string_free(char *s);

// Parses a decimal literal into a double-double.
//
// # Safety
// `literal` must be a NUL-terminated string; `out` must be writable.
enum RlStatus rl_scalar_parse(const char *literal, struct RlScalar *out);

// The germ `c + z^2` truncated at `degree` on the disk of `radius`.
//
// # Safety
// `out` must be writable.
enum RlStatus rl_germ_quadratic(struct RlScalar c,
                                size_t degree,
                                double radius,
                                struct RlGerm **out);

// # Safety
// `g` must be a live germ handle; `out` must be writable.
enum RlStatus rl_germ_degree(const struct RlGerm *g, size_t *out);

// Coefficient `a_k`; `k` above the degree is an invalid argument.
//
// # Safety
// `g` must be a live germ handle; `out` must be writable.
enum RlStatus rl_germ_coefficient(const struct RlGerm *g, size_t k, struct RlScalar *out);

// Value at a real point of the trust disk.
//
// # Safety
// `g` must be a live germ handle; `out` must be writable.
enum RlStatus rl_germ_eval(const struct RlGerm *g, struct RlScalar x, struct RlScalar *out);

// JSON document of the germ; release with [`rl_string_free`].
//
// # Safety
// `g` must be a live germ handle; `out` must be writable.
enum RlStatus rl_germ_to_json(const struct RlGerm *g, char **out);

// # Safety
// `g` must be a germ handle from this library, or null.
void rl_germ_free(struct RlGerm *g);

// Solves for the fixed point of renormalization with combinatorics `word`
// (e.g. `"2"` or `"3"`) at truncation `degree`, seeded after `depth`
// renormalizations of the cascade limit.
//
// # Safety
// `word` must be a NUL-terminated string; `out` must be writable.
enum RlStatus rl_fixed_point_solve(const char *word,
                                   size_t degree,
                                   size_t depth,
                                   double tol,
                                   struct RlFixedPoint **out);

// Copy of the fixed-point germ as a new handle.
//
// # Safety
// `fp` must be a live handle; `out` must be writable.
enum RlStatus rl_fixed_point_germ(const struct RlFixedPoint *fp, struct RlGerm **out);

// Spatial rescaling of the fixed point.
//
// # Safety
// `fp` must be a live handle; `out` must be writable.
enum RlStatus rl_fixed_point_scaling(const struct RlFixedPoint *fp, struct RlScalar *out);

// # Safety
// `fp` must be a live handle; `out` must be writable.
enum RlStatus rl_fixed_point_residual(const struct RlFixedPoint *fp, struct RlScalar *out);

// JSON document of the result; release with [`rl_string_free`].
//
// # Safety
// `fp` must be a live handle; `out` must be writable.
enum RlStatus rl_fixed_point_to_json(const struct RlFixedPoint *fp, char **out);

// # Safety
// `fp` must be a handle from this library, or null.
void rl_fixed_point_free(struct RlFixedPoint *fp);

// Fixed point plus spectrum with the truncation drift filter.
//
// # Safety
// `word` must be a NUL-terminated string; `out` must be writable.
enum RlStatus rl_spectrum_analyze(const char *word,
                                  size_t degree,
                                  size_t depth,
                                  struct RlSpectrum **out);

// Number of eigenvalues.
//
// # Safety
// `s` must be a live handle; `out` must be writable.
enum RlStatus rl_spectrum_len(const struct RlSpectrum *s, size_t *out);

// Eigenvalue `i` in order of decreasing modulus, with its drift flag.
//
// # Safety
// `s` must be a live handle; `re`, `im` and `converged` must be writable.
enum RlStatus rl_spectrum_eigenvalue(const struct RlSpectrum *s,
                                     size_t i,
                                     struct RlScalar *re,
                                     struct RlScalar *im,
                                     bool *converged);

// The real unstable eigenvalue; `NotAvailable` if there is none.
//
// # Safety
// `s` must be a live handle; `out` must be writable.
enum RlStatus rl_spectrum_lambda_star(const struct RlSpectrum *s, struct RlScalar *out);

// Unstable eigenvalues that survive the drift filter.
//
// # Safety
// `s` must be a live handle; `out` must be writable.
enum RlStatus rl_spectrum_unstable_count(const struct RlSpectrum *s, size_t *out);

// # Safety
// `s` must be a handle from this library, or null.
void rl_spectrum_free(struct RlSpectrum *s);

// Superattracting center of a word such as `"2,3"`.
//
// # Safety
// `word` must be a NUL-terminated string; `out` must be writable.
enum RlStatus rl_center_of_period(const char *word, struct RlScalar *out);

// Centers of `letter^n` for `n = 1..=n_max`.
//
// # Safety
// `letter` must be a NUL-terminated string; `out` must be writable.
enum RlStatus rl_cascade_new(const char *letter, size_t n_max, struct RlCascade **out);

// # Safety
// `t` must be a live handle; `out` must be writable.
enum RlStatus rl_cascade_len(const struct RlCascade *t, size_t *out);

// Parameter `c_{i+1}`.
//
// # Safety
// `t` must be a live handle; `out` must be writable.
enum RlStatus rl_cascade_parameter(const struct RlCascade *t, size_t i, struct RlScalar *out);

// Extrapolated ratio of consecutive gaps; `NotAvailable` for short tables.
//
// # Safety
// `t` must be a live handle; `out` must be writable.
enum RlStatus rl_cascade_delta(const struct RlCascade *t, struct RlScalar *out);

// # Safety
// `t` must be a handle from this library, or null.
void rl_cascade_free(struct RlCascade *t);

// Fitted scaling ratio of the cascade of `letter` in a built-in family
// (`quadratic`, `logistic` or `sine`).
//
// # Safety
// `family` and `letter` must be NUL-terminated strings; `out` must be writable.
enum RlStatus rl_family_delta(const char *family,
                              const char *letter,
                              size_t n_max,
                              struct RlScalar *out);

// Membership grid of the square window of half-width `scale`.
// `distance_estimate` also marks pixels within half a pitch of the set.
//
// # Safety
// `out` must be writable.
enum RlStatus rl_grid_render(struct RlScalar center_re,
                             struct RlScalar center_im,
                             double scale,
                             size_t resolution,
                             size_t max_iter,
                             bool distance_estimate,
                             struct RlGrid **out);

// # Safety
// `g` must be a live handle; `out` must be writable.
enum RlStatus rl_grid_member(const struct RlGrid *g, size_t row, size_t col, bool *out);

// Gap statistic `r` of the grid.
//
// # Safety
// `g` must be a live handle; `out` must be writable.
enum RlStatus rl_grid_gap_radius(const struct RlGrid *g, struct RlScalar *out);

// Copies the binary PGM image into `buf`. With `buf` null, only the size
// is reported; otherwise `capacity` must be at least that size.
//
// # Safety
// `g` must be a live handle; `size` must be writable; `buf` must be null
// or valid for `capacity` bytes.
enum RlStatus rl_grid_pgm(const struct RlGrid *g, uint8_t *buf, size_t capacity, size_t *size);

// # Safety
// `g` must be a handle from this library, or null.
void rl_grid_free(struct RlGrid *g);

// Dimension estimate of the Cantor set of the comma-separated `letters`
// refined `depth` times.
//
// # Safety
// `letters` must be a NUL-terminated string; `out` must be writable.
enum RlStatus rl_hdim_estimate(const char *letters, size_t depth, struct RlScalar *out);

// Default series policy radius, exposed so callers can build matching germs.
double rl_default_radius(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RENORMALAB_H */
