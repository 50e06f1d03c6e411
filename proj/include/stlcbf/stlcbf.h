#ifndef STLCBF_STLCBF_H
#define STLCBF_STLCBF_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(STLCBF_BUILDING)
#define STLCBF_API __declspec(dllexport)
#else
#define STLCBF_API __declspec(dllimport)
#endif
#else
#define STLCBF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum stlcbf_status {
  STLCBF_OK = 0,
  STLCBF_ERR_INVALID_ARGUMENT = 1,
  STLCBF_ERR_PARSE = 2,
  STLCBF_ERR_SPEC = 3,
  STLCBF_ERR_SCENARIO = 4,
  STLCBF_ERR_HASH_MISMATCH = 5,
  STLCBF_ERR_HORIZON = 6,
  STLCBF_ERR_NONCONVERGENCE = 7,
  STLCBF_ERR_INFEASIBLE_STEP = 8,
  STLCBF_ERR_ABORT = 9,
  STLCBF_ERR_IO = 10,
  STLCBF_ERR_INTERNAL = 11
} stlcbf_status;

typedef struct stlcbf_scenario stlcbf_scenario;
typedef struct stlcbf_params stlcbf_params;
typedef struct stlcbf_trajectory stlcbf_trajectory;
typedef struct stlcbf_formula stlcbf_formula;

/* Message of the last failed call on this thread; empty if none. */
STLCBF_API const char* stlcbf_last_error(void);
STLCBF_API const char* stlcbf_status_name(stlcbf_status status);
/* Frees strings returned through char** out-parameters. */
STLCBF_API void stlcbf_string_free(char* s);
STLCBF_API const char* stlcbf_version(void);

/* ---- formulas ---- */

/* dim = 0 infers the state dimension from the literals; the state is named x. */
STLCBF_API stlcbf_status stlcbf_formula_parse(const char* text, size_t dim, stlcbf_formula** out);
STLCBF_API void stlcbf_formula_free(stlcbf_formula* f);
STLCBF_API stlcbf_status stlcbf_formula_print(const stlcbf_formula* f, char** out);
STLCBF_API double stlcbf_formula_horizon(const stlcbf_formula* f);
STLCBF_API size_t stlcbf_formula_dim(const stlcbf_formula* f);
/* values is row-major, n_samples x dim. */
STLCBF_API stlcbf_status stlcbf_formula_robustness(const stlcbf_formula* f, const double* times, const double* values,
                                                   size_t n_samples, size_t dim, double t, double* rho);
STLCBF_API stlcbf_status stlcbf_formula_satisfied(const stlcbf_formula* f, const double* times, const double* values,
                                                  size_t n_samples, size_t dim, double t, int* holds);

/* ---- scenarios ---- */

STLCBF_API stlcbf_status stlcbf_scenario_load(const char* path, stlcbf_scenario** out);
STLCBF_API stlcbf_status stlcbf_scenario_parse(const char* json_text, stlcbf_scenario** out);
STLCBF_API void stlcbf_scenario_free(stlcbf_scenario* s);
STLCBF_API const char* stlcbf_scenario_hash(const stlcbf_scenario* s);
STLCBF_API size_t stlcbf_scenario_group_count(const stlcbf_scenario* s);

/* ---- synthesis ---- */

typedef struct stlcbf_synth_options {
  int use_feasibility_r; /* nonzero: search for any parameters with r = feasibility_r */
  double feasibility_r;
  int use_seed;
  uint64_t seed;
} stlcbf_synth_options;

/* An infeasible result is returned with STLCBF_OK; query stlcbf_params_feasible. */
STLCBF_API stlcbf_status stlcbf_synthesize(const stlcbf_scenario* s, const stlcbf_synth_options* options,
                                           stlcbf_params** out);
STLCBF_API void stlcbf_params_free(stlcbf_params* p);
STLCBF_API int stlcbf_params_feasible(const stlcbf_params* p);
STLCBF_API double stlcbf_params_r(const stlcbf_params* p);
STLCBF_API size_t stlcbf_params_group_count(const stlcbf_params* p);
STLCBF_API stlcbf_status stlcbf_params_to_json(const stlcbf_params* p, char** out);
STLCBF_API stlcbf_status stlcbf_params_from_json(const char* json_text, stlcbf_params** out);
STLCBF_API stlcbf_status stlcbf_params_save(const stlcbf_params* p, const char* path);
STLCBF_API stlcbf_status stlcbf_params_load(const char* path, stlcbf_params** out);
/* Barrier value b(x, t) of one group; x has the group's stacked dimension. */
STLCBF_API stlcbf_status stlcbf_params_barrier(const stlcbf_params* p, size_t group, const double* x, size_t dim,
                                               double t, double* b);

/* ---- simulation ---- */

/* An abort during the run is recorded in the trajectory and returned with STLCBF_OK. */
STLCBF_API stlcbf_status stlcbf_simulate(const stlcbf_scenario* s, const stlcbf_params* p, int use_seed, uint64_t seed,
                                         stlcbf_trajectory** out);
STLCBF_API stlcbf_status stlcbf_trajectory_load_csv(const char* path, stlcbf_trajectory** out);
STLCBF_API void stlcbf_trajectory_free(stlcbf_trajectory* tr);
STLCBF_API size_t stlcbf_trajectory_rows(const stlcbf_trajectory* tr);
STLCBF_API size_t stlcbf_trajectory_cols(const stlcbf_trajectory* tr);
STLCBF_API const char* stlcbf_trajectory_column_name(const stlcbf_trajectory* tr, size_t col);
/* NaN when out of range. */
STLCBF_API double stlcbf_trajectory_value(const stlcbf_trajectory* tr, size_t row, size_t col);
STLCBF_API int stlcbf_trajectory_aborted(const stlcbf_trajectory* tr);
STLCBF_API stlcbf_status stlcbf_trajectory_to_csv(const stlcbf_trajectory* tr, char** out);
STLCBF_API stlcbf_status stlcbf_trajectory_write_csv(const stlcbf_trajectory* tr, const char* path);
/* JSON with r, rho_at_0, recovery, infeasible steps, seed, events and abort state. Simulated trajectories only. */
STLCBF_API stlcbf_status stlcbf_trajectory_summary(const stlcbf_trajectory* tr, const stlcbf_scenario* s,
                                                   const stlcbf_params* p, char** out);
/* Slacks of control updates where every agent of a group was feasible. */
STLCBF_API size_t stlcbf_trajectory_feasible_slacks(const stlcbf_trajectory* tr, const double** slacks);

/* ---- monitoring and plots ---- */

/* Robustness of each group formula at t. report_json may be NULL. */
STLCBF_API stlcbf_status stlcbf_monitor_scenario(const stlcbf_trajectory* tr, const stlcbf_scenario* s, double t,
                                                 double* rho, char** report_json);
/* Formula over the stacked agent states; agent ids name their blocks. */
STLCBF_API stlcbf_status stlcbf_monitor_formula(const stlcbf_trajectory* tr, const char* formula, double t,
                                                double* rho, char** report_json);
/* kind: "barrier", "paths" or "inputs". */
STLCBF_API stlcbf_status stlcbf_plot_svg(const stlcbf_trajectory* tr, const char* kind, char** out);

#ifdef __cplusplus
}
#endif

#endif
