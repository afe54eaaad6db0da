#ifndef CYCLIC_RL_H
#define CYCLIC_RL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CrlPolicy {
  CRL_POLICY_CONSTANT = 0,
  CRL_POLICY_TRIANGULAR = 1,
  CRL_POLICY_EXP_RANGE = 2,
} CrlPolicy;

typedef enum CrlStatus {
  CRL_STATUS_OK = 0,
  CRL_STATUS_NULL_POINTER = 1,
  CRL_STATUS_INVALID_ARGUMENT = 2,
  CRL_STATUS_OUT_OF_RANGE = 3,
  CRL_STATUS_EPISODE_OVER = 4,
  CRL_STATUS_IO = 5,
  CRL_STATUS_PARSE = 6,
  CRL_STATUS_PANIC = 7,
} CrlStatus;

// Opaque environment instance.
typedef struct CrlEnv CrlEnv;

// Opaque training log.
typedef struct CrlRunLog CrlRunLog;

// Opaque learning-rate and momentum schedule.
typedef struct CrlSchedule CrlSchedule;

// Schedule description. `lr` is used by the constant policy; `lr_min`,
// `lr_max`, `stepsize` (and `decay` for exp_range) by the cyclical ones.
// With `cycle_momentum` momentum moves between `m_max` and `m_min`,
// otherwise it stays at `momentum`.
typedef struct CrlScheduleParams {
  enum CrlPolicy policy;
  double lr;
  double lr_min;
  double lr_max;
  uint64_t stepsize;
  double decay;
  bool cycle_momentum;
  double m_min;
  double m_max;
  double momentum;
} CrlScheduleParams;

// One run-log row. Optional values are NaN when their flag is false.
typedef struct CrlLogRow {
  uint64_t env_step;
  uint64_t update_index;
  bool has_episode_reward;
  double episode_reward;
  double lr;
  double momentum;
  bool has_metrics;
  double policy_loss;
  double value_loss;
  double entropy;
  double approx_kl;
} CrlLogRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or an empty string.
// Valid until the next `crl_*` call on the same thread.
const char *crl_last_error(void);

// Library version as a static NUL-terminated string.
const char *crl_version(void);

// Cyclical defaults: triangular 1e-4..1e-2, stepsize 2000, decay 0.99,
// momentum cycled 1.0..0.8.
struct CrlScheduleParams crl_schedule_params_default(void);

// # Safety
// `params` must point to a valid struct and `out` to writable storage.
enum CrlStatus crl_schedule_new(const struct CrlScheduleParams *params, struct CrlSchedule **out);

// Learning rate and momentum for optimizer update `step`.
//
// # Safety
// `schedule` must come from [`crl_schedule_new`]; `lr` and `momentum`
// must be writable.
enum CrlStatus crl_schedule_at(const struct CrlSchedule *schedule,
                               uint64_t step,
                               double *lr,
                               double *momentum);

// # Safety
// `schedule` must come from [`crl_schedule_new`] or be null.
void crl_schedule_free(struct CrlSchedule *schedule);

// Creates `cartpole`, `pendulum` or `chain`.
//
// # Safety
// `name` must be a NUL-terminated string and `out` writable.
enum CrlStatus crl_env_new(const char *name, struct CrlEnv **out);

// Observation length, action length (1 for discrete spaces) and whether
// actions are discrete.
//
// # Safety
// `env` must come from [`crl_env_new`]; the out pointers must be writable.
enum CrlStatus crl_env_dims(const struct CrlEnv *env,
                            size_t *obs_dim,
                            size_t *action_dim,
                            bool *discrete);

// Starts an episode and writes the first observation.
//
// # Safety
// `env` must come from [`crl_env_new`]; `obs` must hold `obs_len` doubles.
enum CrlStatus crl_env_reset(struct CrlEnv *env, uint64_t seed, double *obs, size_t obs_len);

// Applies one action. Discrete actions are passed as a single value
// holding the action index.
//
// # Safety
// `env` must come from [`crl_env_new`]; `action` must hold `action_len`
// doubles, `obs` `obs_len` doubles; the remaining pointers must be writable.
enum CrlStatus crl_env_step(struct CrlEnv *env,
                            const double *action,
                            size_t action_len,
                            double *obs,
                            size_t obs_len,
                            double *reward,
                            bool *done,
                            bool *truncated);

// # Safety
// `env` must come from [`crl_env_new`] or be null.
void crl_env_free(struct CrlEnv *env);

// Trains PPO with the environment's default settings until at least
// `total_steps` environment steps. A run that diverges still succeeds;
// check [`crl_runlog_diverged`].
//
// # Safety
// `env_name` must be a NUL-terminated string, `schedule` a live handle and
// `out` writable.
enum CrlStatus crl_train(const char *env_name,
                         const struct CrlSchedule *schedule,
                         uint64_t seed,
                         uint64_t total_steps,
                         struct CrlRunLog **out);

// Number of rows; 0 for a null handle.
//
// # Safety
// `log` must come from [`crl_train`] or be null.
size_t crl_runlog_len(const struct CrlRunLog *log);

// # Safety
// `log` must come from [`crl_train`] or be null.
bool crl_runlog_diverged(const struct CrlRunLog *log);

// # Safety
// `log` must come from [`crl_train`]; `row` must be writable.
enum CrlStatus crl_runlog_row(const struct CrlRunLog *log, size_t index, struct CrlLogRow *row);

// Writes the log in the CLI's CSV format.
//
// # Safety
// `log` must come from [`crl_train`]; `path` must be a NUL-terminated string.
enum CrlStatus crl_runlog_write_csv(const struct CrlRunLog *log, const char *path);

// # Safety
// `log` must come from [`crl_train`] or be null.
void crl_runlog_free(struct CrlRunLog *log);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CYCLIC_RL_H */
