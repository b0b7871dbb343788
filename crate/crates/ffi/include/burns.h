#ifndef BURNS_H
#define BURNS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define BURNS_ALGORITHM_OPTIMISTIC 0

#define BURNS_ALGORITHM_PRUDENT 1

#define BURNS_VARIANT_CT 0

#define BURNS_VARIANT_DT 1

typedef enum BurnsStatus {
  BURNS_STATUS_OK = 0,
  BURNS_STATUS_NULL_POINTER = 1,
  BURNS_STATUS_INVALID_PARAMETER = 2,
  BURNS_STATUS_INVALID_INPUT = 3,
  BURNS_STATUS_INVALID_STATE = 4,
  BURNS_STATUS_NUMERIC_FAILURE = 5,
  BURNS_STATUS_NON_CONTRACTIVE = 6,
  BURNS_STATUS_RESOURCE = 7,
  BURNS_STATUS_PHASE_MISMATCH = 8,
  BURNS_STATUS_INVARIANT = 9,
  BURNS_STATUS_BUFFER_TOO_SMALL = 10,
  BURNS_STATUS_PANIC = 11,
} BurnsStatus;

/**
 * Opaque spectrum handle.
 */
typedef struct BurnsSpectrum BurnsSpectrum;

/**
 * Opaque urn handle: chain state plus its generator.
 */
typedef struct BurnsUrn BurnsUrn;

/**
 * Scalar spectral data; `sigma3` is NaN when undefined.
 */
typedef struct BurnsSpectrumInfo {
  size_t m;
  double lambda2_re;
  double lambda2_im;
  double sigma2;
  double tau2;
  double sigma3;
  double residuals;
  double eigen_residual;
} BurnsSpectrumInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, static NUL-terminated string.
 */
const char *burns_version(void);

/**
 * Length in bytes of the last error message on this thread, without the
 * terminating NUL; 0 if none.
 */
size_t burns_last_error_length(void);

/**
 * Copies the last error message (NUL-terminated, truncated to fit) into
 * `buf`. Returns the full message length.
 */
size_t burns_last_error_message(char *buf, size_t len);

/**
 * Normalized characteristic polynomial at `x`.
 */
enum BurnsStatus burns_char_poly_eval(size_t m,
                                      double re,
                                      double im,
                                      double *out_re,
                                      double *out_im);

/**
 * Computes the spectrum for parameter `m`; `*out` receives the handle.
 */
enum BurnsStatus burns_spectrum_new(size_t m, struct BurnsSpectrum **out);

void burns_spectrum_free(struct BurnsSpectrum *h);

enum BurnsStatus burns_spectrum_info(const struct BurnsSpectrum *h, struct BurnsSpectrumInfo *out);

/**
 * Number of roots held (equals `m`); 0 for a null handle.
 */
size_t burns_spectrum_root_count(const struct BurnsSpectrum *h);

/**
 * Roots in decreasing real part, into two parallel buffers of length `len`.
 */
enum BurnsStatus burns_spectrum_roots(const struct BurnsSpectrum *h,
                                      double *re,
                                      double *im,
                                      size_t len);

/**
 * Stationary proportions `v1` (length `m`).
 */
enum BurnsStatus burns_spectrum_v1(const struct BurnsSpectrum *h, double *buf, size_t len);

/**
 * Urn chain from the B-tree start on stream `(seed, stream)`; `algorithm`
 * is one of the `BURNS_ALGORITHM_*` constants.
 */
enum BurnsStatus burns_urn_new(size_t m,
                               uint32_t algorithm,
                               uint64_t seed,
                               uint64_t stream,
                               struct BurnsUrn **out);

void burns_urn_free(struct BurnsUrn *h);

/**
 * Advances the chain by `steps` insertions.
 */
enum BurnsStatus burns_urn_step(struct BurnsUrn *h, uint64_t steps);

/**
 * Number of node types; 0 for a null handle.
 */
size_t burns_urn_dim(const struct BurnsUrn *h);

/**
 * Insertions performed so far; 0 for a null handle.
 */
uint64_t burns_urn_steps(const struct BurnsUrn *h);

/**
 * Current gap counts per type.
 */
enum BurnsStatus burns_urn_counts(const struct BurnsUrn *h, uint64_t *buf, size_t len);

/**
 * `count` samples (`variant` one of `BURNS_VARIANT_*`) of the depth-`depth` cascade approximation of `W` at the
 * B-tree anchor, into parallel buffers of length `len`.
 */
enum BurnsStatus burns_cascade_sample(uint32_t variant,
                                      size_t m,
                                      uint32_t depth,
                                      size_t count,
                                      uint64_t seed,
                                      double *re,
                                      double *im,
                                      size_t len);

/**
 * Exact moments `E W^p`, `p = 0..=pmax`, at the B-tree anchor, into
 * parallel buffers of length `len >= pmax + 1`.
 */
enum BurnsStatus burns_moments(uint32_t variant,
                               size_t m,
                               size_t pmax,
                               double *re,
                               double *im,
                               size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BURNS_H */
