/* C interface of the gridweave simulator. Handles are opaque; every call
 * that can fail returns a gw_status and leaves a message for
 * gw_last_error() on the calling thread. */
#ifndef GRIDWEAVE_H
#define GRIDWEAVE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(__GNUC__)
#define GW_API __attribute__((visibility("default")))
#else
#define GW_API
#endif

typedef enum gw_status {
  GW_OK = 0,
  GW_ERR_USAGE = 1,      /* bad arguments to the call */
  GW_ERR_VALIDATION = 2, /* scenario or input rejected */
  GW_ERR_RUNTIME = 3     /* infeasible subproblem, I/O, transport, ... */
} gw_status;

typedef struct gw_scenario gw_scenario;
typedef struct gw_result gw_result;

GW_API const char* gw_last_error(void);
GW_API const char* gw_version(void);

/* ---- scenario ---------------------------------------------------------- */
GW_API gw_status gw_scenario_load(const char* path, gw_scenario** out);
GW_API void gw_scenario_free(gw_scenario* scenario);
/* "day-night" or "ahead24" */
GW_API gw_status gw_scenario_set_tariff(gw_scenario* scenario, const char* name);
GW_API gw_status gw_scenario_set_weather(gw_scenario* scenario, const char* csv_path);
/* kw > 0 sets the limit; kw <= 0 removes it */
GW_API gw_status gw_scenario_set_global_limit(gw_scenario* scenario, double kw);
GW_API gw_status gw_scenario_set_convergence(gw_scenario* scenario, double epsilon_kw, int max_iterations);
GW_API gw_status gw_scenario_set_half_width(gw_scenario* scenario, double kw);
GW_API size_t gw_scenario_building_count(const gw_scenario* scenario);
/* NULL when out of range */
GW_API const char* gw_scenario_building_id(const gw_scenario* scenario, size_t index);

/* ---- closed-loop simulation ---------------------------------------------- */
typedef struct gw_sim_options {
  int coordinate;       /* 1: DMPC with band and global limit, 0: local optimization only */
  int days;             /* 0: scenario value */
  int has_seed;         /* 0: scenario value */
  uint64_t seed;
  int perfect_forecast; /* 1: realized series equal the forecasts */
  int power_flow;       /* 1: solve the AC power flow of every step */
} gw_sim_options;

GW_API void gw_sim_options_init(gw_sim_options* options);
GW_API gw_status gw_simulate(const gw_scenario* scenario, const gw_sim_options* options, gw_result** out);

/* Runs the ISO over TCP: waits for one controller process per building and
 * drives the same closed loop. on_listen (may be NULL) receives the bound
 * port before the first round. */
typedef void (*gw_listen_callback)(uint16_t port, void* user);
GW_API gw_status gw_serve_iso(const gw_scenario* scenario, const gw_sim_options* options, const char* endpoint,
                              double timeout_s, gw_listen_callback on_listen, void* user, gw_result** out);

/* Serves one building's MPC solves until the ISO finishes. */
GW_API gw_status gw_run_controller(const gw_scenario* scenario, const char* building_id, const char* endpoint,
                                   size_t* solves_out);

/* ---- results -------------------------------------------------------------- */
typedef struct gw_step {
  int hour;
  double scheduled_kw;
  double realized_kw;
  double forecast_error_kw;
  double committed_kw;
  double violation_kw;
  double global_excess_kw;
} gw_step;

GW_API void gw_result_free(gw_result* result);
GW_API gw_status gw_result_write(const gw_result* result, const char* dir);
GW_API size_t gw_result_metric_count(const gw_result* result);
GW_API gw_status gw_result_metric(const gw_result* result, size_t index, const char** name, double* value);
GW_API gw_status gw_result_metric_by_name(const gw_result* result, const char* name, double* value);
GW_API size_t gw_result_step_count(const gw_result* result);
GW_API gw_status gw_result_step(const gw_result* result, size_t index, gw_step* out);

/* Metrics recomputed from a run directory; the result holds metrics only. */
GW_API gw_status gw_report(const char* dir, gw_result** out);

/* Replays bus_injections.csv through the scenario's network. out_csv may
 * be NULL. */
GW_API gw_status gw_powerflow_replay(const gw_scenario* scenario, const char* injections_csv, const char* out_csv,
                                     double* max_voltage_deviation_pu, double* max_angle_deg);

#ifdef __cplusplus
}
#endif

#endif
