/* radshoot: radial shooting solver for -Delta u + u = phi(|x|) f(u) in the
 * unit ball with Neumann boundary, C interface.
 *
 * All functions returning rs_status set the thread-local message readable via
 * rs_last_error() on failure. Handles are created through out-parameters and
 * released with the matching *_free. Strings returned through char** are
 * heap-allocated; release them with rs_string_free. const char* returns are
 * borrowed and stay valid while the owning handle lives.
 */
#ifndef RADSHOOT_H
#define RADSHOOT_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rs_status {
    RS_OK = 0,
    RS_ERR_INVALID = 1,    /* bad arguments, unmet preconditions, bad config */
    RS_ERR_NO_BRACKET = 2, /* target stationary index not attainable */
    RS_ERR_NUMERIC = 3,    /* integration or root-finding failure */
    RS_ERR_IO = 4          /* file read/write failure */
} rs_status;

typedef struct rs_problem rs_problem;
typedef struct rs_options rs_options;
typedef struct rs_trajectory rs_trajectory;
typedef struct rs_scan rs_scan;
typedef struct rs_shoot_result rs_shoot_result;
typedef struct rs_report rs_report;
typedef struct rs_experiment rs_experiment;

const char* rs_last_error(void);
void rs_string_free(char* s);

/* ---- problem construction ---- */

/* weight r^alpha with nonlinearity u^p */
rs_status rs_problem_henon(int N, double alpha, double p, rs_problem** out);

/* flat key=value text: N, alpha [, beta] and nonlinearity = power|exp with
 * p or gamma/q; omitting the nonlinearity key selects the power form above */
rs_status rs_problem_from_config_text(const char* text, rs_problem** out);

/* user-supplied weight and nonlinearity; derivative callbacks may be NULL
 * (finite differences are used instead) */
typedef double (*rs_real_fn)(double x, void* ctx);
rs_status rs_problem_general_custom(int N, rs_real_fn weight, rs_real_fn weight_deriv,
                                    void* weight_ctx, rs_real_fn nonlinearity,
                                    rs_real_fn nonlinearity_deriv, void* nonlinearity_ctx,
                                    rs_problem** out);

void rs_problem_free(rs_problem* p);
rs_status rs_problem_describe(const rs_problem* p, char** out);
rs_status rs_problem_config_text(const rs_problem* p, char** out);

/* structural hypothesis report; all_pass may be NULL */
rs_status rs_problem_validate(const rs_problem* p, char** report_text, int* all_pass);

/* ---- reference quantities ---- */

rs_status rs_critical_exponent(int N, double alpha, double* out);
rs_status rs_monotonicity_bound(int N, double alpha, double* out);
rs_status rs_barrier_c(int N, double alpha, double p, double r, double* out);
rs_status rs_barrier_xi(const rs_problem* p, double r, double* out);
rs_status rs_subsolution_residual(int N, double alpha, double p, double r, double* out);

/* ---- integrator options ---- */

rs_status rs_options_create(rs_options** out);
void rs_options_free(rs_options* o);
/* keys: rel_tol, abs_tol, r_start, blow_up_cap, event_r_tol, degenerate_tol,
 * max_steps */
rs_status rs_options_set(rs_options* o, const char* key, double value);

/* ---- integration ---- */

rs_status rs_integrate(const rs_problem* p, double gamma, double r_max, const rs_options* o,
                       rs_trajectory** out);
void rs_trajectory_free(rs_trajectory* t);
size_t rs_trajectory_node_count(const rs_trajectory* t);
rs_status rs_trajectory_node(const rs_trajectory* t, size_t i, double* r, double* u,
                             double* uprime);
size_t rs_trajectory_event_count(const rs_trajectory* t);
rs_status rs_trajectory_event(const rs_trajectory* t, size_t i, const char** kind, int* index,
                              double* r, double* u, double* second_derivative, int* degenerate);
const char* rs_trajectory_termination(const rs_trajectory* t);
double rs_trajectory_gamma(const rs_trajectory* t);
double rs_trajectory_r_start(const rs_trajectory* t);

/* max over nodes of the normalized defect of r^(N-1) u' against the
 * accumulated integral of s^(N-1) (u - phi f(u)) */
rs_status rs_trajectory_integral_identity(const rs_trajectory* t, double* max_residual);

rs_status rs_trajectory_write_csv(const rs_trajectory* t, const char* path,
                                  const char* events_path, double skip_below);
rs_status rs_trajectory_write_json(const rs_trajectory* t, const char* path);
rs_status rs_trajectory_read_csv(const rs_problem* p, double gamma, const char* path,
                                 const char* events_path, rs_trajectory** out);

/* ---- gamma scans ---- */

rs_status rs_scan_run(const rs_problem* p, double gamma_min, double gamma_max, int points,
                      double r_max, rs_scan** out);
void rs_scan_free(rs_scan* s);
size_t rs_scan_size(const rs_scan* s);
rs_status rs_scan_record(const rs_scan* s, size_t i, double* gamma, const char** termination,
                         size_t* n_radii);
rs_status rs_scan_radius(const rs_scan* s, size_t i, size_t j, double* radius);
rs_status rs_scan_write_csv(const rs_scan* s, const char* path);

/* ---- shooting ---- */

rs_status rs_shoot(const rs_problem* p, int n, double tol, rs_shoot_result** out);
rs_status rs_shoot_ex(const rs_problem* p, int n, double tol, double scan_min, double scan_max,
                      int scan_points, double r_max, rs_shoot_result** out);
void rs_shoot_result_free(rs_shoot_result* r);
double rs_shoot_result_gamma(const rs_shoot_result* r);
double rs_shoot_result_achieved_R(const rs_shoot_result* r);
double rs_shoot_result_residual(const rs_shoot_result* r);
int rs_shoot_result_n(const rs_shoot_result* r);
int rs_shoot_result_iterations(const rs_shoot_result* r);
rs_status rs_shoot_result_bracket(const rs_shoot_result* r, double* lo, double* hi);
rs_status rs_shoot_result_trajectory(const rs_shoot_result* r, rs_trajectory** out);
rs_status rs_shoot_result_write_json(const rs_shoot_result* r, const char* path);

/* ---- diagnostics ---- */

rs_status rs_diagnose(const rs_problem* p, double gamma, int include_scan_trend, rs_report** out);
rs_status rs_diagnose_trajectory(const rs_trajectory* t, rs_report** out);
void rs_report_free(rs_report* r);
size_t rs_report_check_count(const rs_report* r);
/* status is one of "pass", "fail", "not_applicable" */
rs_status rs_report_check(const rs_report* r, size_t i, const char** name, const char** status,
                          double* measured, double* tolerance, const char** detail);
int rs_report_all_pass(const rs_report* r);
rs_status rs_report_write_json(const rs_report* r, const char* path);
rs_status rs_report_format(const rs_report* r, char** out);

/* ---- experiments ---- */

rs_status rs_experiment_run_file(const char* manifest_path, const char* out_dir,
                                 rs_experiment** out);
rs_status rs_experiment_run_id(const char* id, const char* out_dir, rs_experiment** out);
void rs_experiment_free(rs_experiment* e);
int rs_experiment_passed(const rs_experiment* e);
const char* rs_experiment_id(const rs_experiment* e);
rs_status rs_experiment_summary(const rs_experiment* e, char** out);

/* ---- config helper (flat key=value text, '#' comments) ---- */

/* RS_ERR_INVALID when the key is absent */
rs_status rs_config_lookup(const char* text, const char* key, char** value_out);

#ifdef __cplusplus
}
#endif

#endif /* RADSHOOT_H */
