#ifndef TAILSITTER_H
#define TAILSITTER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TsMode {
  TS_MODE_NONE = 0,
  TS_MODE_OPTIMAL = 1,
  TS_MODE_PERTURBED = 2,
} TsMode;

typedef enum TsStatus {
  TS_STATUS_OK = 0,
  TS_STATUS_NULL_POINTER = 1,
  TS_STATUS_INVALID_ARGUMENT = 2,
  TS_STATUS_CONFIG = 3,
  TS_STATUS_INFEASIBLE = 4,
  TS_STATUS_SOLVER_FAILED = 5,
  TS_STATUS_DIVERGED = 6,
  TS_STATUS_NUMERICAL = 7,
  TS_STATUS_IO = 8,
  TS_STATUS_PANIC = 9,
} TsStatus;

/*
 Controller gains and loop rates.
 */
typedef struct TsController TsController;

/*
 Closed-loop simulation log.
 */
typedef struct TsLog TsLog;

/*
 Parsed mission file: boundary conditions, solver options, tail settings.
 */
typedef struct TsMission TsMission;

/*
 Solved mission with its reference trajectory.
 */
typedef struct TsPlan TsPlan;

/*
 Vehicle parameters.
 */
typedef struct TsVehicle TsVehicle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Copies the last error message on this thread into `buf` (NUL-terminated,
 truncated to `len`). Returns the full message length plus one.

 # Safety
 `buf` must be null or point to `len` writable bytes.
 */
size_t ts_last_error(char *buf, size_t len);

/*
 Built-in vehicle parameters.

 # Safety
 `out` must be a valid pointer.
 */
enum TsStatus ts_vehicle_default(struct TsVehicle **out);

/*
 # Safety
 `path` must be a NUL-terminated string; `out` a valid pointer.
 */
enum TsStatus ts_vehicle_load(const char *path, struct TsVehicle **out);

/*
 Vehicle mass in kg, or NaN for a null handle.

 # Safety
 `v` must be null or a live vehicle handle.
 */
double ts_vehicle_mass(const struct TsVehicle *v);

/*
 Plant state derivative in still air.

 `state` and `out` hold 12 values: inertial position (z down), Euler
 attitude, body velocity, body rates. `rotor_speeds` holds 4 values, rad/s.

 # Safety
 Arrays must have the stated lengths.
 */
enum TsStatus ts_vehicle_derivative(const struct TsVehicle *v,
                                    const double *state,
                                    const double *rotor_speeds,
                                    double *out);

/*
 Hover trim at the origin: writes the 12-value state and the thrust, N.

 # Safety
 `state` must hold 12 values; `thrust` must be valid.
 */
enum TsStatus ts_vehicle_hover_trim(const struct TsVehicle *v, double *state, double *thrust);

/*
 # Safety
 `path` must be a NUL-terminated string; `out` a valid pointer.
 */
enum TsStatus ts_mission_load(const char *path, struct TsMission **out);

/*
 # Safety
 `path` must be a NUL-terminated string; `out` a valid pointer.
 */
enum TsStatus ts_controller_load(const char *path, struct TsController **out);

/*
 Solves the minimum-time transition. `nodes` of 0 keeps the mission's node
 count. No handle is produced on failure.

 # Safety
 Handles must be live; `out` a valid pointer.
 */
enum TsStatus ts_plan(const struct TsVehicle *v,
                      const struct TsMission *m,
                      size_t nodes,
                      struct TsPlan **out);

/*
 Maneuver time, s, or NaN for a null handle.

 # Safety
 `p` must be null or a live plan handle.
 */
double ts_plan_final_time(const struct TsPlan *p);

/*
 Largest collocation defect of the solution.

 # Safety
 `p` must be null or a live plan handle.
 */
double ts_plan_max_defect(const struct TsPlan *p);

/*
 Simulated time covering the maneuver and the steady tail, s.

 # Safety
 `p` must be null or a live plan handle.
 */
double ts_plan_flight_duration(const struct TsPlan *p);

/*
 # Safety
 `p` must be live; `path` a NUL-terminated string.
 */
enum TsStatus ts_plan_write_csv(const struct TsPlan *p, const char *path);

/*
 Flies the plan for its flight duration. On divergence the partial log is
 still returned through `out` along with `TS_STATUS_DIVERGED`.

 # Safety
 Handles must be live; `out` a valid pointer.
 */
enum TsStatus ts_fly(const struct TsPlan *p,
                     const struct TsController *c,
                     const struct TsVehicle *v,
                     enum TsMode mode,
                     struct TsLog **out);

/*
 Number of logged samples, 0 for a null handle.

 # Safety
 `l` must be null or a live log handle.
 */
size_t ts_log_len(const struct TsLog *l);

/*
 # Safety
 `l` must be null or a live log handle.
 */
double ts_log_rms_position_error(const struct TsLog *l);

/*
 # Safety
 `l` must be null or a live log handle.
 */
double ts_log_max_position_error(const struct TsLog *l);

/*
 Time and inertial position error of sample `i`: writes t and 3 values.

 # Safety
 `l` must be live; `t` valid; `err` must hold 3 values.
 */
enum TsStatus ts_log_sample(const struct TsLog *l, size_t i, double *t, double *err);

/*
 # Safety
 `l` must be live; `path` a NUL-terminated string.
 */
enum TsStatus ts_log_write_csv(const struct TsLog *l, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TAILSITTER_H */
