#ifndef RAILSCHED_H
#define RAILSCHED_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Call outcome. Anything but `Ok` leaves a message in
 * [`rs_last_error_message`].
 */
typedef enum RsStatus {
  RsStatus_Ok = 0,
  /**
   * Structurally invalid input values.
   */
  RsStatus_InvalidInput = 1,
  /**
   * No feasible answer under the line rules.
   */
  RsStatus_Infeasible = 2,
  /**
   * An iterative routine ran out of budget.
   */
  RsStatus_NoConvergence = 3,
  /**
   * A file failed to parse.
   */
  RsStatus_ParseError = 4,
  /**
   * The operating system refused a file operation.
   */
  RsStatus_IoError = 5,
  /**
   * A required pointer was null.
   */
  RsStatus_NullPointer = 6,
  /**
   * A string argument was not valid UTF-8.
   */
  RsStatus_Utf8Error = 7,
  /**
   * An internal invariant failed.
   */
  RsStatus_Internal = 8,
} RsStatus;

/**
 * Opaque line description handle.
 */
typedef struct RsLine RsLine;

/**
 * Opaque demand matrix handle.
 */
typedef struct RsOdMatrix RsOdMatrix;

/**
 * Opaque timetable handle.
 */
typedef struct RsTimetable RsTimetable;

/**
 * Quality summary of one timetable under one demand matrix.
 */
typedef struct RsMetrics {
  /**
   * Average wait per passenger including the tail after the last
   * train, minutes.
   */
  double awt;
  /**
   * Average wait counting only the intervals between trains.
   */
  double awt_service_intervals;
  /**
   * Mean served demand over active trains, percent.
   */
  double asd;
  /**
   * Mean load factor, percent.
   */
  double alf;
  /**
   * Mean vertical load factor, percent.
   */
  double avlf;
  /**
   * Mean horizontal load factor, percent.
   */
  double ahlf;
  /**
   * Passengers still waiting at the end of the horizon.
   */
  double leftover;
  /**
   * Active trains in the timetable.
   */
  uintptr_t active_trains;
} RsMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread. Empty until a
 * call fails; valid until the next failing call on the same thread.
 */
const char *rs_last_error_message(void);

/**
 * Build a line from the `[line]` section of a TOML run configuration.
 *
 * # Safety
 * `config_path` must be a valid C string and `out` a valid pointer.
 */
enum RsStatus rs_line_from_config_file(const char *config_path, struct RsLine **out);

/**
 * # Safety
 * `line` must come from this library and not be used after this call.
 */
void rs_line_free(struct RsLine *line);

/**
 * # Safety
 * `line` must be a valid handle.
 */
uintptr_t rs_line_station_count(const struct RsLine *line);

/**
 * Planning horizon in minutes, or NaN for a null handle.
 *
 * # Safety
 * `line` must be a valid handle.
 */
double rs_line_horizon(const struct RsLine *line);

/**
 * Load a fitted demand matrix file.
 *
 * # Safety
 * `path` must be a valid C string and `out` a valid pointer.
 */
enum RsStatus rs_od_matrix_read(const char *path, struct RsOdMatrix **out);

/**
 * Write a demand matrix file that reloads bit-exactly.
 *
 * # Safety
 * `od` must be a valid handle and `path` a valid C string.
 */
enum RsStatus rs_od_matrix_write(const struct RsOdMatrix *od, const char *path);

/**
 * Fit cumulative demand curves to a sample file. Malformed rows are
 * skipped, matching the command line tool's non-strict mode.
 *
 * # Safety
 * `samples_path` must be a valid C string and `out` a valid pointer.
 */
enum RsStatus rs_od_matrix_fit_samples(const char *samples_path,
                                       uintptr_t n_stations,
                                       uint64_t seed,
                                       struct RsOdMatrix **out);

/**
 * # Safety
 * `od` must come from this library and not be used after this call.
 */
void rs_od_matrix_free(struct RsOdMatrix *od);

/**
 * Passengers for (`origin`, `destination`) arriving in [`t0`, `t1`].
 * Returns NaN on a bad handle or pair.
 *
 * # Safety
 * `od` must be a valid handle.
 */
double rs_od_matrix_demand_between(const struct RsOdMatrix *od,
                                   uintptr_t origin,
                                   uintptr_t destination,
                                   double t0,
                                   double t1);

/**
 * Load a timetable file.
 *
 * # Safety
 * `path` must be a valid C string and `out` a valid pointer.
 */
enum RsStatus rs_timetable_read(const char *path, struct RsTimetable **out);

/**
 * Write a timetable file that reloads byte-exactly.
 *
 * # Safety
 * `tt` must be a valid handle and `path` a valid C string.
 */
enum RsStatus rs_timetable_write(const struct RsTimetable *tt, const char *path);

/**
 * # Safety
 * `tt` must come from this library and not be used after this call.
 */
void rs_timetable_free(struct RsTimetable *tt);

/**
 * Trains in the timetable, active or parked.
 *
 * # Safety
 * `tt` must be a valid handle.
 */
uintptr_t rs_timetable_train_count(const struct RsTimetable *tt);

/**
 * Active trains only.
 *
 * # Safety
 * `tt` must be a valid handle.
 */
uintptr_t rs_timetable_active_count(const struct RsTimetable *tt);

/**
 * Minimize average waiting with a fleet-wide capacity pool split evenly
 * over the trains. `trains <= 0` searches over train counts;
 * `budget_seconds <= 0` runs to convergence. `out_awt` may be null.
 *
 * # Safety
 * All handles must be valid; `out_tt` must be a valid pointer.
 */
enum RsStatus rs_optimize_global(const struct RsLine *line,
                                 const struct RsOdMatrix *od,
                                 double total_capacity,
                                 double capacity_per_carriage,
                                 int64_t trains,
                                 uint64_t seed,
                                 double budget_seconds,
                                 struct RsTimetable **out_tt,
                                 double *out_awt);

/**
 * Minimize average waiting with every train running `carriages`
 * carriages. Parameters as in [`rs_optimize_global`].
 *
 * # Safety
 * All handles must be valid; `out_tt` must be a valid pointer.
 */
enum RsStatus rs_optimize_per_train(const struct RsLine *line,
                                    const struct RsOdMatrix *od,
                                    uint32_t carriages,
                                    double capacity_per_carriage,
                                    int64_t trains,
                                    uint64_t seed,
                                    double budget_seconds,
                                    struct RsTimetable **out_tt,
                                    double *out_awt);

/**
 * Validate a timetable against the line rules. `Ok` means operable;
 * `Infeasible` leaves the breach count in the error message.
 *
 * # Safety
 * Both handles must be valid.
 */
enum RsStatus rs_validate(const struct RsLine *line, const struct RsTimetable *tt);

/**
 * Validate, load passengers, and summarize quality metrics.
 *
 * # Safety
 * All handles must be valid; `out` must be a valid pointer.
 */
enum RsStatus rs_evaluate(const struct RsLine *line,
                          const struct RsOdMatrix *od,
                          const struct RsTimetable *tt,
                          struct RsMetrics *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* RAILSCHED_H */
