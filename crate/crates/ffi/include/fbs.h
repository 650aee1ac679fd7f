#ifndef FBS_H
#define FBS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdint.h>
#include <stddef.h>

typedef enum FbsStatus {
  FBS_STATUS_OK = 0,
  FBS_STATUS_NULL_POINTER = 1,
  FBS_STATUS_INVALID_PARAMETER = 2,
  FBS_STATUS_NUMERICAL = 3,
  FBS_STATUS_INDEX_OUT_OF_RANGE = 4,
  FBS_STATUS_PANIC = 5,
} FbsStatus;

// Opaque estimator handle.
typedef struct FbsEstimator FbsEstimator;

typedef struct FbsProbe {
  double tau;
  double delta_f;
} FbsProbe;

// Likelihood parameters. `coherence_time` may be `INFINITY`.
typedef struct FbsModel {
  double alpha;
  double beta;
  double coherence_time;
} FbsModel;

typedef struct FbsBelief {
  double mu;
  double sigma;
} FbsBelief;

typedef struct FbsStep {
  size_t step;
  double tau;
  double delta_f;
  int8_t outcome;
  double mu;
  double sigma;
  // Nonzero when the variance hit the floor on this step.
  uint8_t clamped;
} FbsStep;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *fbs_version(void);

// Message for the last failed call on this thread, empty after a success.
// The pointer stays valid until the next `fbs_*` call on the same thread.
const char *fbs_last_error_message(void);

// Probability of outcome `m` given shift `eps` [Hz].
//
// # Safety
// `probe` and `model` must point to valid structs, `out` to writable memory.
enum FbsStatus fbs_likelihood(int8_t m,
                              double eps,
                              const struct FbsProbe *probe,
                              const struct FbsModel *model,
                              double *out);

// Optimal evolution time [s] for prior width `sigma` [Hz] and coherence time [s].
//
// # Safety
// `out` must be writable.
enum FbsStatus fbs_optimal_tau(double sigma, double coherence_time, double *out);

// Detuning [Hz] placing branch `branch` of the fringe's inflection at `mu`.
//
// # Safety
// `out` must be writable.
enum FbsStatus fbs_optimal_detuning(double mu, double tau, int64_t branch, double *out);

// One Gaussian update. `out_clamped` may be null.
//
// # Safety
// Input pointers must be valid; `out` must be writable; `out_clamped` null or writable.
enum FbsStatus fbs_update(const struct FbsBelief *belief,
                          const struct FbsProbe *probe,
                          int8_t m,
                          const struct FbsModel *model,
                          struct FbsBelief *out,
                          uint8_t *out_clamped);

// Creates an estimator. On success `*out` owns a handle for [`fbs_estimator_free`].
//
// # Safety
// `prior` and `model` must be valid; `out` must be writable.
enum FbsStatus fbs_estimator_new(const struct FbsBelief *prior,
                                 const struct FbsModel *model,
                                 int64_t branch,
                                 struct FbsEstimator **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `est` must come from [`fbs_estimator_new`] and not be used afterwards.
void fbs_estimator_free(struct FbsEstimator *est);

// Probe settings for the next shot.
//
// # Safety
// `est` must be a live handle; `out` writable.
enum FbsStatus fbs_estimator_next_probe(const struct FbsEstimator *est, struct FbsProbe *out);

// Folds in outcome `m` for the probe returned by the last
// [`fbs_estimator_next_probe`]. `out_step` may be null. On error the
// estimator is unchanged.
//
// # Safety
// `est` must be a live handle; `out_step` null or writable.
enum FbsStatus fbs_estimator_observe(struct FbsEstimator *est, int8_t m, struct FbsStep *out_step);

// # Safety
// `est` must be a live handle; `out` writable.
enum FbsStatus fbs_estimator_belief(const struct FbsEstimator *est, struct FbsBelief *out);

// Number of observed shots; 0 for a null handle.
//
// # Safety
// `est` must be null or a live handle.
size_t fbs_estimator_steps(const struct FbsEstimator *est);

// Trace entry `index` (0-based).
//
// # Safety
// `est` must be a live handle; `out` writable.
enum FbsStatus fbs_estimator_step(const struct FbsEstimator *est,
                                  size_t index,
                                  struct FbsStep *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FBS_H */
