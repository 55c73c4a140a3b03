#ifndef CUTOFF_CAPI_H
#define CUTOFF_CAPI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum CutoffStatus {
  CUTOFF_STATUS_OK = 0,
  CUTOFF_STATUS_NULL_POINTER = 1,
  CUTOFF_STATUS_INVALID_ARGUMENT = 2,
  CUTOFF_STATUS_GROUP = 3,
  CUTOFF_STATUS_SOLVER = 4,
  CUTOFF_STATUS_SPECTRAL = 5,
  CUTOFF_STATUS_DISTANCE = 6,
  CUTOFF_STATUS_PANIC = 7,
} CutoffStatus;

/**
 * Generator multiset drawn from a group.
 */
typedef struct CutoffGenerators CutoffGenerators;

/**
 * Finite Abelian group.
 */
typedef struct CutoffGroup CutoffGroup;

/**
 * Distribution of graph distances from the identity.
 */
typedef struct CutoffHistogram CutoffHistogram;

/**
 * Entropic times for one `(kind, k, n)`.
 */
typedef struct CutoffSchedule CutoffSchedule;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error of this thread into `buf` as a NUL-terminated string,
 * truncating to `len - 1` bytes. Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t cutoff_last_error_message(char *buf, size_t len);

/**
 * Parses a group literal such as `"65536"` or `"6x4"`.
 *
 * # Safety
 * `literal` must be a NUL-terminated string; `out` must be writable.
 */
enum CutoffStatus cutoff_group_parse(const char *literal, struct CutoffGroup **out);

/**
 * # Safety
 * `group` must be a live handle; `out` must be writable.
 */
enum CutoffStatus cutoff_group_order(const struct CutoffGroup *group, uint64_t *out);

/**
 * Number of invariant factors.
 *
 * # Safety
 * `group` must be a live handle; `out` must be writable.
 */
enum CutoffStatus cutoff_group_dim(const struct CutoffGroup *group, size_t *out);

/**
 * # Safety
 * `group` must be null or a handle not yet freed.
 */
void cutoff_group_free(struct CutoffGroup *group);

/**
 * Draws `k` uniform generators, reproducibly in `seed`.
 *
 * # Safety
 * `group` must be a live handle; `out` must be writable.
 */
enum CutoffStatus cutoff_generators_sample(const struct CutoffGroup *group,
                                           size_t k,
                                           uint64_t seed,
                                           struct CutoffGenerators **out);

/**
 * # Safety
 * `gens` must be null or a handle not yet freed.
 */
void cutoff_generators_free(struct CutoffGenerators *gens);

/**
 * Solves for the entropic time `t0` of the undirected (`directed = false`) or
 * directed walk with `k` generators on `n` elements.
 *
 * # Safety
 * `out` must be writable.
 */
enum CutoffStatus cutoff_schedule_solve(bool directed,
                                        size_t k,
                                        uint64_t n,
                                        struct CutoffSchedule **out);

/**
 * # Safety
 * `schedule` must be a live handle; `out` must be writable.
 */
enum CutoffStatus cutoff_schedule_t0(const struct CutoffSchedule *schedule, double *out);

/**
 * # Safety
 * `schedule` must be a live handle; `out` must be writable.
 */
enum CutoffStatus cutoff_schedule_t_alpha(const struct CutoffSchedule *schedule,
                                          double alpha,
                                          double *out);

/**
 * # Safety
 * `schedule` must be null or a handle not yet freed.
 */
void cutoff_schedule_free(struct CutoffSchedule *schedule);

/**
 * Exact TV and L2 distances from uniform at each of `len` times.
 * Either output array may be null when not wanted.
 *
 * # Safety
 * `times` must hold `len` values; non-null outputs must hold `len` values.
 */
enum CutoffStatus cutoff_tv_curve(const struct CutoffGroup *group,
                                  const struct CutoffGenerators *gens,
                                  bool directed,
                                  const double *times,
                                  size_t len,
                                  double *tv_out,
                                  double *l2_out);

/**
 * Breadth-first distances from the identity in the Cayley graph.
 *
 * # Safety
 * `group` and `gens` must be live handles; `out` must be writable.
 */
enum CutoffStatus cutoff_graph_distances(const struct CutoffGroup *group,
                                         const struct CutoffGenerators *gens,
                                         bool directed,
                                         struct CutoffHistogram **out);

/**
 * Smallest radius whose ball holds a `beta` fraction of the group.
 *
 * # Safety
 * `hist` must be a live handle; `out` must be writable.
 */
enum CutoffStatus cutoff_histogram_quantile(const struct CutoffHistogram *hist,
                                            double beta,
                                            double *out);

/**
 * Number of elements not reached from the identity.
 *
 * # Safety
 * `hist` must be a live handle; `out` must be writable.
 */
enum CutoffStatus cutoff_histogram_unreached(const struct CutoffHistogram *hist, uint64_t *out);

/**
 * # Safety
 * `hist` must be null or a handle not yet freed.
 */
void cutoff_histogram_free(struct CutoffHistogram *hist);

/**
 * Standard normal upper tail.
 */
double cutoff_psi(double alpha);

/**
 * Lattice-ball reference radius for `k` generators, norm exponent `p`
 * (`INFINITY` allowed) and `log_n = ln |G|`. Returns NaN for invalid input.
 */
double cutoff_reference_radius(size_t k, double p, double log_n, bool directed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CUTOFF_CAPI_H */
