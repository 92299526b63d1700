#ifndef LOCUS_H
#define LOCUS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Values for [`LocusTrialConfig::algorithm`].
typedef enum LocusAlgorithm {
  LOCUS_ALGORITHM_LOCUS = 0,
  LOCUS_ALGORITHM_LOCUS_NO_HEAL = 1,
  LOCUS_ALGORITHM_MOBS = 2,
} LocusAlgorithm;

typedef enum LocusStatus {
  LOCUS_STATUS_OK = 0,
  LOCUS_STATUS_NULL_POINTER = 1,
  LOCUS_STATUS_INVALID_ARGUMENT = 2,
  LOCUS_STATUS_TREE_FULL = 3,
  LOCUS_STATUS_NOT_OCCUPIED = 4,
  LOCUS_STATUS_ALL_FAILED = 5,
  LOCUS_STATUS_INTERNAL = 6,
} LocusStatus;

// Why a trial stopped. `Running` means it has not.
typedef enum LocusTermination {
  LOCUS_TERMINATION_RUNNING = 0,
  LOCUS_TERMINATION_SUCCESS = 1,
  LOCUS_TERMINATION_ALL_FAILED = 2,
  LOCUS_TERMINATION_BUDGET = 3,
} LocusTermination;

// Opaque plume field.
typedef struct LocusPlume LocusPlume;

// Opaque swarm tree.
typedef struct LocusTree LocusTree;

// Opaque running trial.
typedef struct LocusWorld LocusWorld;

typedef struct LocusTrialConfig {
  // One of the `LocusAlgorithm` values.
  uint32_t algorithm;
  uint32_t n;
  bool perturbed;
  double p_generic;
  double p_inplume;
  uint64_t tick_budget;
  double r_min;
  double r_max;
} LocusTrialConfig;

// Slot ids start at 1; 0 stands for "none".
typedef struct LocusSlot {
  uint32_t id;
  uint32_t level;
  double x;
  double y;
  bool occupied;
  uint32_t parent;
  uint32_t heir;
} LocusSlot;

// Tick fields are -1 when the event never happened.
typedef struct LocusTrialResult {
  bool success;
  int64_t contact_tick;
  int64_t maxflux_tick;
  uint32_t survivors;
  double distance_m;
  uint64_t heal_events;
  uint64_t ticks;
  int32_t termination;
} LocusTrialResult;

typedef struct LocusDrone {
  double x;
  double y;
  double z;
  bool alive;
} LocusDrone;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or null. Valid until the
// next failing call on the same thread.
const char *locus_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *locus_version(void);

// Default settings for a LoCUS trial with `n` drones.
struct LocusTrialConfig locus_trial_config_default(uint32_t n);

// Builds a fully populated tree of `n` drones.
//
// # Safety
// `out` must be valid for writes.
enum LocusStatus locus_tree_new(uint32_t n, double r_min, double r_max, struct LocusTree **out);

// # Safety
// `tree` must come from [`locus_tree_new`] and not be used afterwards.
void locus_tree_free(struct LocusTree *tree);

// Number of slots (occupied or not).
//
// # Safety
// `tree` must be a live handle and `out` valid for writes.
enum LocusStatus locus_tree_slot_count(const struct LocusTree *tree, uint32_t *out);

// # Safety
// `tree` must be a live handle and `out` valid for writes.
enum LocusStatus locus_tree_occupied_count(const struct LocusTree *tree, uint32_t *out);

// Height difference between the tallest and shortest root branch.
//
// # Safety
// `tree` must be a live handle and `out` valid for writes.
enum LocusStatus locus_tree_height_spread(const struct LocusTree *tree, int64_t *out);

// # Safety
// `tree` must be a live handle and `out` valid for writes.
enum LocusStatus locus_tree_slot(const struct LocusTree *tree, uint32_t id, struct LocusSlot *out);

// Fails the given slots at once and applies the full recovery plan,
// including rebalancing. Optional outputs receive the number of heir
// flights and rebalance moves.
//
// # Safety
// `slots` must point to `len` readable ids; `flights` and `moves` may be
// null.
enum LocusStatus locus_tree_fail(struct LocusTree *tree,
                                 const uint32_t *slots,
                                 size_t len,
                                 uint32_t *flights,
                                 uint32_t *moves);

// A plume with default parameters whose peak sits at `(peak_x, peak_y)` and
// whose wind blows along `orientation` radians.
//
// # Safety
// `out` must be valid for writes.
enum LocusStatus locus_plume_new(bool perturbed,
                                 double peak_x,
                                 double peak_y,
                                 double orientation,
                                 struct LocusPlume **out);

// # Safety
// `plume` must come from [`locus_plume_new`] and not be used afterwards.
void locus_plume_free(struct LocusPlume *plume);

// Normalized reading in `[0, 1]` at a world position.
//
// # Safety
// `plume` must be a live handle and `out` valid for writes.
enum LocusStatus locus_plume_reading(const struct LocusPlume *plume,
                                     double x,
                                     double y,
                                     double *out);

// Runs a whole trial.
//
// # Safety
// `config` must be readable and `out` valid for writes.
enum LocusStatus locus_run_trial(const struct LocusTrialConfig *config,
                                 uint64_t seed,
                                 struct LocusTrialResult *out);

// Sets up a trial for stepping tick by tick.
//
// # Safety
// `config` must be readable and `out` valid for writes.
enum LocusStatus locus_world_new(const struct LocusTrialConfig *config,
                                 uint64_t seed,
                                 struct LocusWorld **out);

// # Safety
// `world` must come from [`locus_world_new`] and not be used afterwards.
void locus_world_free(struct LocusWorld *world);

// Advances one tick and reports the termination state afterwards.
//
// # Safety
// `world` must be a live handle; `out` may be null.
enum LocusStatus locus_world_step(struct LocusWorld *world, enum LocusTermination *out);

// # Safety
// `world` must be a live handle and `out` valid for writes.
enum LocusStatus locus_world_tick(const struct LocusWorld *world, uint64_t *out);

// # Safety
// `world` must be a live handle and `out` valid for writes.
enum LocusStatus locus_world_drone(const struct LocusWorld *world,
                                   uint32_t index,
                                   struct LocusDrone *out);

// Plume peak of the trial in world coordinates.
//
// # Safety
// `world` must be a live handle; `x` and `y` valid for writes.
enum LocusStatus locus_world_peak(const struct LocusWorld *world, double *x, double *y);

// Result so far; final once a step reported termination.
//
// # Safety
// `world` must be a live handle and `out` valid for writes.
enum LocusStatus locus_world_result(const struct LocusWorld *world, struct LocusTrialResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LOCUS_H */
