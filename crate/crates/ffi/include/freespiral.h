#ifndef FREESPIRAL_H
#define FREESPIRAL_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of a call.
typedef enum FsStatus {
  FS_STATUS_OK = 0,
  // A required pointer argument was null.
  FS_STATUS_NULL_POINTER = 1,
  // A parameter lies outside the domain of a formula.
  FS_STATUS_DOMAIN = 2,
  // Inputs violate a precondition of the operation.
  FS_STATUS_PRECONDITION = 3,
  // The integrator or a root finder failed.
  FS_STATUS_NUMERIC = 4,
  // The data do not determine the result.
  FS_STATUS_DEGENERATE = 5,
  // Invalid scenario text or unknown command.
  FS_STATUS_CONFIG = 6,
  // Reading or writing a file failed.
  FS_STATUS_IO = 7,
  // A sample index was out of range.
  FS_STATUS_OUT_OF_RANGE = 8,
  // The run completed but one of its checks failed.
  FS_STATUS_CHECKS_FAILED = 9,
  // An internal panic was caught.
  FS_STATUS_PANIC = 10,
} FsStatus;

// Opaque model handle.
typedef struct FsModel FsModel;

// Opaque trajectory handle.
typedef struct FsTrajectory FsTrajectory;

// Closed-form free-spiral descriptors.
typedef struct FsSpiral {
  double g;
  double radius;
  // Signed angular frequency (sign of m_hat_z).
  double omega;
  // Signed spatial period v_z 2 pi / omega; its magnitude is the pitch.
  double wavelength;
  double effective_mass;
  double de_broglie;
  double m_hat_z;
  double v_z;
} FsSpiral;

// One trajectory sample.
typedef struct FsSample {
  double t;
  double r[3];
  double v[3];
  double m_hat[3];
  // Field momentum P.
  double momentum[3];
  // J = M0 m_hat + r x P.
  double angular_momentum[3];
} FsSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Version string of the library (static, NUL-terminated).
const char *fs_version(void);

// Copies the last error message of this thread into `buffer` (truncated,
// always NUL-terminated) and returns the full message length in bytes.
//
// # Safety
// `buffer` must be null or valid for `capacity` bytes.
size_t fs_last_error(char *buffer, size_t capacity);

// Model with explicit constants. The speed ceiling is 0.1 c.
//
// # Safety
// `out` must be null or valid for writing one pointer.
enum FsStatus fs_model_new(double kappa,
                           double m0,
                           double ang_momentum,
                           double charge,
                           double c_light,
                           double hbar,
                           struct FsModel **out);

// Natural-unit model (c = hbar = m0 = e = 1) with M0 quantized so that
// M0 m_hat_z = sign hbar / 2; `sign` < 0 selects the minus branch.
//
// # Safety
// `out` and `m_hat_z` must be null or valid for writing.
enum FsStatus fs_model_quantized(double kappa, int sign, struct FsModel **out, double *m_hat_z);

// CGS electron with quantized spin whose effective mass is the electron mass.
//
// # Safety
// `out` and `m_hat_z` must be null or valid for writing.
enum FsStatus fs_model_physical(double kappa, struct FsModel **out, double *m_hat_z);

// Releases a model; null is ignored.
//
// # Safety
// `model` must be null or a handle from an `fs_model_*` constructor not yet freed.
void fs_model_free(struct FsModel *model);

// Closed-form spiral descriptors at (m_hat_z, v_z).
//
// # Safety
// `model` must be a live handle; `out` must be null or valid for writing.
enum FsStatus fs_spiral_params(const struct FsModel *model,
                               double m_hat_z,
                               double v_z,
                               struct FsSpiral *out);

// Integrates the free spiral from azimuth `phase` for `periods` free periods.
//
// # Safety
// `model` must be a live handle; `out` must be null or valid for writing.
enum FsStatus fs_integrate_spiral(const struct FsModel *model,
                                  double m_hat_z,
                                  double v_z,
                                  double phase,
                                  double periods,
                                  size_t steps_per_period,
                                  struct FsTrajectory **out);

// Number of recorded samples (0 for a null handle).
//
// # Safety
// `traj` must be null or a live handle.
size_t fs_trajectory_len(const struct FsTrajectory *traj);

// Copies sample `index` into `out`.
//
// # Safety
// `traj` must be a live handle; `out` must be null or valid for writing.
enum FsStatus fs_trajectory_sample(const struct FsTrajectory *traj,
                                   size_t index,
                                   struct FsSample *out);

// Writes the trajectory as CSV (18 columns).
//
// # Safety
// `traj` must be a live handle; `path` must be null or NUL-terminated.
enum FsStatus fs_trajectory_write_csv(const struct FsTrajectory *traj, const char *path);

// Releases a trajectory; null is ignored.
//
// # Safety
// `traj` must be null or a handle from [`fs_integrate_spiral`] not yet freed.
void fs_trajectory_free(struct FsTrajectory *traj);

// Runs a CLI command ("simulate", "spiral", "resonance", "spectrum",
// "filter" or "phase") on scenario text, writing into `out_dir`. A
// negative `seed` keeps the scenario's seed. Returns `ChecksFailed` when
// the run completes with a failed check.
//
// # Safety
// The string arguments must be null or NUL-terminated.
enum FsStatus fs_run_scenario(const char *command,
                              const char *scenario_toml,
                              const char *out_dir,
                              int64_t seed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FREESPIRAL_H */
