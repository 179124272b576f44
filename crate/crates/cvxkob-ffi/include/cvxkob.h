#ifndef CVXKOB_H
#define CVXKOB_H

#include <stddef.h>
#include <stdint.h>

typedef enum CvxkobStatus {
  CVXKOB_STATUS_OK = 0,
  CVXKOB_STATUS_NULL_POINTER = 1,
  CVXKOB_STATUS_INVALID_ARGUMENT = 2,
  CVXKOB_STATUS_DIMENSION_MISMATCH = 3,
  CVXKOB_STATUS_NOT_IN_DOMAIN = 4,
  CVXKOB_STATUS_NON_CONVERGENCE = 5,
  CVXKOB_STATUS_INCONCLUSIVE = 6,
  CVXKOB_STATUS_PRECONDITION = 7,
  CVXKOB_STATUS_DEGENERATE = 8,
  CVXKOB_STATUS_INTERNAL = 9,
  CVXKOB_STATUS_PANIC = 10,
} CvxkobStatus;

typedef enum CvxkobMapType {
  CVXKOB_MAP_TYPE_ELLIPTIC = 0,
  CVXKOB_MAP_TYPE_PARABOLIC = 1,
  CVXKOB_MAP_TYPE_HYPERBOLIC = 2,
} CvxkobMapType;

/**
 * Opaque automorphism handle.
 */
typedef struct CvxkobAutomorphism CvxkobAutomorphism;

/**
 * Opaque domain handle.
 */
typedef struct CvxkobDomain CvxkobDomain;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next failing call.
 */
const char *cvxkob_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cvxkob_version(void);

/**
 * Ball of the given radius around `center` (2 `dim` doubles).
 *
 * # Safety
 * `center` must point to 2 `dim` doubles and `out` must be writable.
 */
enum CvxkobStatus cvxkob_domain_new_ball(size_t dim,
                                         const double *center,
                                         double radius,
                                         struct CvxkobDomain **out);

/**
 * Generalized ellipsoid sum |z_i|^{2 m_i} < 1.
 *
 * # Safety
 * `exponents` must point to `dim` values and `out` must be writable.
 */
enum CvxkobStatus cvxkob_domain_new_ellipsoid(size_t dim,
                                              const uint32_t *exponents,
                                              struct CvxkobDomain **out);

/**
 * Domain from the JSON domain description used by experiment specs.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` must be writable.
 */
enum CvxkobStatus cvxkob_domain_new_json(const char *json, struct CvxkobDomain **out);

/**
 * # Safety
 * `d` must be null or a handle from this library that has not been freed.
 */
void cvxkob_domain_free(struct CvxkobDomain *d);

/**
 * Complex dimension, or 0 for a null handle.
 *
 * # Safety
 * `d` must be null or a live handle.
 */
size_t cvxkob_domain_dim(const struct CvxkobDomain *d);

/**
 * Writes 1 to `inside` for interior points and 0 otherwise.
 *
 * # Safety
 * `z` must point to 2 dim doubles and `inside` must be writable.
 */
enum CvxkobStatus cvxkob_domain_contains(const struct CvxkobDomain *d,
                                         const double *z,
                                         int32_t *inside);

/**
 * Certified bracket lower <= K(z, w) <= upper for the Kobayashi distance.
 *
 * # Safety
 * `z` and `w` must point to 2 dim doubles; `lower` and `upper` must be writable.
 */
enum CvxkobStatus cvxkob_distance(const struct CvxkobDomain *d,
                                  const double *z,
                                  const double *w,
                                  double *lower,
                                  double *upper);

/**
 * Automorphism from an n x n group matrix given row-major as 2 n^2 interleaved doubles. On a
 * ball n = dim + 1; on a generalized ellipsoid the matrix acts on the exponent-one block and
 * the remaining coordinates are left untwisted.
 *
 * # Safety
 * `matrix` must point to 2 n^2 doubles and `out` must be writable.
 */
enum CvxkobStatus cvxkob_automorphism_new_matrix(const struct CvxkobDomain *d,
                                                 size_t n,
                                                 const double *matrix,
                                                 struct CvxkobAutomorphism **out);

/**
 * Disc automorphism z -> e^{i theta} (z - a) / (1 - conj(a) z) lifted to a generalized ellipsoid.
 *
 * # Safety
 * `out` must be writable.
 */
enum CvxkobStatus cvxkob_automorphism_new_disc_lift(const struct CvxkobDomain *d,
                                                    double a_re,
                                                    double a_im,
                                                    double theta,
                                                    struct CvxkobAutomorphism **out);

/**
 * # Safety
 * `a` must be null or a handle from this library that has not been freed.
 */
void cvxkob_automorphism_free(struct CvxkobAutomorphism *a);

/**
 * Image of z, written to `out` (2 dim doubles).
 *
 * # Safety
 * `z` and `out` must point to 2 dim doubles.
 */
enum CvxkobStatus cvxkob_automorphism_apply(const struct CvxkobAutomorphism *a,
                                            const double *z,
                                            double *out);

/**
 * Wolff-Denjoy type of the automorphism, starting the orbit at z0. For parabolic and hyperbolic
 * maps the attracting boundary point is written to `x_plus` when it is non-null, and the fixed
 * point for elliptic maps.
 *
 * # Safety
 * `z0` must point to 2 dim doubles, `kind` must be writable and `x_plus` null or 2 dim doubles.
 */
enum CvxkobStatus cvxkob_classify(const struct CvxkobDomain *d,
                                  const struct CvxkobAutomorphism *a,
                                  const double *z0,
                                  enum CvxkobMapType *kind,
                                  double *x_plus);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CVXKOB_H */
