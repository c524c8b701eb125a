#ifndef DELISI_H
#define DELISI_H

/* Generated by cbindgen from crates/ffi; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DelisiStatus {
  DELISI_STATUS_OK = 0,
  DELISI_STATUS_NULL_POINTER = 1,
  DELISI_STATUS_INVALID_PARAMS = 2,
  DELISI_STATUS_DOMAIN = 3,
  DELISI_STATUS_CONVERGENCE = 4,
  DELISI_STATUS_PRECONDITION = 5,
  DELISI_STATUS_OUT_OF_RANGE = 6,
  DELISI_STATUS_BUFFER_TOO_SMALL = 7,
  DELISI_STATUS_PANIC = 8,
  DELISI_STATUS_OTHER = 9,
} DelisiStatus;

typedef enum DelisiEquilibriumKind {
  DELISI_EQUILIBRIUM_KIND_TRIVIAL_SADDLE = 0,
  DELISI_EQUILIBRIUM_KIND_SADDLE = 1,
  DELISI_EQUILIBRIUM_KIND_STABLE_NODE = 2,
  DELISI_EQUILIBRIUM_KIND_UNSTABLE_NODE = 3,
  DELISI_EQUILIBRIUM_KIND_STABLE_FOCUS = 4,
  DELISI_EQUILIBRIUM_KIND_UNSTABLE_FOCUS = 5,
  DELISI_EQUILIBRIUM_KIND_CENTER_CANDIDATE = 6,
  DELISI_EQUILIBRIUM_KIND_DEGENERATE = 7,
} DelisiEquilibriumKind;

typedef enum DelisiTag {
  DELISI_TAG_SADDLE_NODE = 0,
  DELISI_TAG_HOPF = 1,
  DELISI_TAG_TAKENS_BOGDANOV = 2,
  DELISI_TAG_BAUTIN = 3,
  DELISI_TAG_LPC = 4,
  DELISI_TAG_HOM_APPROX = 5,
} DelisiTag;

/*
 Opaque continuation branch.
 */
typedef struct DelisiBranch DelisiBranch;

/*
 Opaque model parameter set.
 */
typedef struct DelisiParams DelisiParams;

/*
 One equilibrium as returned by [`delisi_equilibria`].
 */
typedef struct DelisiEquilibrium {
  double x;
  double y;
  double trace;
  double det;
  enum DelisiEquilibriumKind kind;
} DelisiEquilibrium;

/*
 A point of a bifurcation locus.
 */
typedef struct DelisiLocusPoint {
  double lambda1;
  double lambda2;
  double x0;
  double y0;
} DelisiLocusPoint;

/*
 Plane window for two-parameter curves.
 */
typedef struct DelisiPlane {
  double lambda1_min;
  double lambda1_max;
  double lambda2_min;
  double lambda2_max;
} DelisiPlane;

/*
 One accepted point of a branch.
 */
typedef struct DelisiBranchPoint {
  double lambda1;
  double lambda2;
  double x;
  double y;
  double residual;
  double arclength;
} DelisiBranchPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copies the last error message of this thread into `buf` (NUL
 terminated, truncated to `len`) and returns the full message length.

 # Safety
 `buf` must be null or point to `len` writable bytes.
 */
uintptr_t delisi_last_error(char *buf, uintptr_t len);

/*
 Validates and stores a parameter set in `*out`.

 # Safety
 `out` must be a valid pointer to writable storage for one handle pointer.
 */
enum DelisiStatus delisi_params_new(double lambda1,
                                    double lambda2,
                                    double alpha1,
                                    double alpha2,
                                    double xc,
                                    struct DelisiParams **out);

/*
 # Safety
 `p` must be null or a handle from [`delisi_params_new`] not yet freed.
 */
void delisi_params_free(struct DelisiParams *p);

/*
 `psi` and `lambda` of a parameter set.

 # Safety
 `p` must be a live handle; `psi` and `lambda` valid writable pointers.
 */
enum DelisiStatus delisi_params_composites(const struct DelisiParams *p,
                                           double *psi,
                                           double *lambda);

/*
 Writes up to `cap` equilibria into `out` and their total count into
 `*count`. Returns `BufferTooSmall` (with `*count` set) when `cap` is short.

 # Safety
 `p` must be a live handle, `out` null or valid for `cap` elements, and
 `count` a valid writable pointer.
 */
enum DelisiStatus delisi_equilibria(const struct DelisiParams *p,
                                    struct DelisiEquilibrium *out,
                                    uintptr_t cap,
                                    uintptr_t *count);

/*
 The Takens-Bogdanov point for the given `alpha1, alpha2, xc`.

 # Safety
 `out` must be a valid writable pointer.
 */
enum DelisiStatus delisi_bt_point(double alpha1,
                                  double alpha2,
                                  double xc,
                                  struct DelisiLocusPoint *out);

/*
 The Bautin point; `Domain` when `xc <= 3`.

 # Safety
 `out` must be a valid writable pointer.
 */
enum DelisiStatus delisi_bautin_point(double alpha1,
                                      double alpha2,
                                      double xc,
                                      struct DelisiLocusPoint *out);

/*
 The saddle-node point at `lambda = lambda2 / lambda1`.

 # Safety
 `out` must be a valid writable pointer.
 */
enum DelisiStatus delisi_saddle_node_point(double alpha1,
                                           double alpha2,
                                           double xc,
                                           double lambda,
                                           struct DelisiLocusPoint *out);

/*
 Hopf point at `lambda`, with its frequency and first Lyapunov coefficient.

 # Safety
 All output pointers must be valid and writable.
 */
enum DelisiStatus delisi_hopf_point(double alpha1,
                                    double alpha2,
                                    double xc,
                                    double lambda,
                                    struct DelisiLocusPoint *out,
                                    double *omega,
                                    double *ell1);

/*
 Fold curve from the saddle-node point at `lambda`, with default
 continuation options; `direction > 0` increases `lambda`.

 # Safety
 `out` must be a valid pointer to writable storage for one handle pointer.
 */
enum DelisiStatus delisi_continue_fold(double alpha1,
                                       double alpha2,
                                       double xc,
                                       double lambda,
                                       double direction,
                                       struct DelisiPlane window,
                                       struct DelisiBranch **out);

/*
 Hopf curve from the Takens-Bogdanov point towards decreasing `lambda`.

 # Safety
 `out` must be a valid pointer to writable storage for one handle pointer.
 */
enum DelisiStatus delisi_continue_hopf_from_bt(double alpha1,
                                               double alpha2,
                                               double xc,
                                               struct DelisiPlane window,
                                               struct DelisiBranch **out);

/*
 # Safety
 `b` must be null or a live branch handle.
 */
void delisi_branch_free(struct DelisiBranch *b);

/*
 Number of points; 0 for a null handle.

 # Safety
 `b` must be null or a live branch handle.
 */
uintptr_t delisi_branch_len(const struct DelisiBranch *b);

/*
 # Safety
 `b` must be a live branch handle and `out` a valid writable pointer.
 */
enum DelisiStatus delisi_branch_point(const struct DelisiBranch *b,
                                      uintptr_t index,
                                      struct DelisiBranchPoint *out);

/*
 Number of special points; 0 for a null handle.

 # Safety
 `b` must be null or a live branch handle.
 */
uintptr_t delisi_branch_special_count(const struct DelisiBranch *b);

/*
 The `k`-th special point: its point index and tag.

 # Safety
 `b` must be a live branch handle; `index` and `tag` valid writable pointers.
 */
enum DelisiStatus delisi_branch_special(const struct DelisiBranch *b,
                                        uintptr_t k,
                                        uintptr_t *index,
                                        enum DelisiTag *tag);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DELISI_H */
