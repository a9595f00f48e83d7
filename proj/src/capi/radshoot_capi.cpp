#include "radshoot/radshoot.h"

#include <cstring>
#include <stdexcept>
#include <string>
#include <utility>

#include "core/analysis.hpp"
#include "core/experiments.hpp"
#include "core/format.hpp"
#include "core/integrate.hpp"
#include "core/problem.hpp"
#include "core/shooting.hpp"

using namespace radshoot;

struct rs_problem {
    Problem impl;
};
struct rs_options {
    IntegratorOptions impl;
};
struct rs_trajectory {
    Trajectory impl;
};
struct rs_scan {
    GammaScan impl;
};
struct rs_shoot_result {
    ShootingResult impl;
};
struct rs_report {
    DiagnosticReport impl;
};
struct rs_experiment {
    ExperimentReport impl;
};

namespace {

thread_local std::string g_last_error;

rs_status map_current_exception() {
    try {
        throw;
    } catch (const NoBracketError& e) {
        g_last_error = e.what();
        return RS_ERR_NO_BRACKET;
    } catch (const IoError& e) {
        g_last_error = e.what();
        return RS_ERR_IO;
    } catch (const std::logic_error& e) {  // invalid_argument, domain_error, ...
        g_last_error = e.what();
        return RS_ERR_INVALID;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return RS_ERR_NUMERIC;
    } catch (...) {
        g_last_error = "unknown error";
        return RS_ERR_NUMERIC;
    }
}

template <typename F>
rs_status guarded(F&& fn) {
    try {
        fn();
        return RS_OK;
    } catch (...) {
        return map_current_exception();
    }
}

rs_status invalid(const char* msg) {
    g_last_error = msg;
    return RS_ERR_INVALID;
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

}  // namespace

extern "C" {

const char* rs_last_error(void) { return g_last_error.c_str(); }

void rs_string_free(char* s) { delete[] s; }

/* ---- problem construction ---- */

rs_status rs_problem_henon(int N, double alpha, double p, rs_problem** out) {
    if (!out) return invalid("out must not be null");
    return guarded([&] { *out = new rs_problem{Problem::henon(N, alpha, p)}; });
}

rs_status rs_problem_from_config_text(const char* text, rs_problem** out) {
    if (!text || !out) return invalid("text and out must not be null");
    return guarded([&] { *out = new rs_problem{problem_from_config_text(text)}; });
}

rs_status rs_problem_general_custom(int N, rs_real_fn weight, rs_real_fn weight_deriv,
                                    void* weight_ctx, rs_real_fn nonlinearity,
                                    rs_real_fn nonlinearity_deriv, void* nonlinearity_ctx,
                                    rs_problem** out) {
    if (!out) return invalid("out must not be null");
    if (!weight || !nonlinearity) return invalid("weight and nonlinearity must not be null");
    return guarded([&] {
        Weight w;
        w.kind = Weight::Kind::Custom;
        w.fn = [weight, weight_ctx](double r) { return weight(r, weight_ctx); };
        if (weight_deriv)
            w.dfn = [weight_deriv, weight_ctx](double r) { return weight_deriv(r, weight_ctx); };
        Nonlinearity f;
        f.kind = Nonlinearity::Kind::Custom;
        f.fn = [nonlinearity, nonlinearity_ctx](double s) {
            return nonlinearity(s, nonlinearity_ctx);
        };
        if (nonlinearity_deriv)
            f.dfn = [nonlinearity_deriv, nonlinearity_ctx](double s) {
                return nonlinearity_deriv(s, nonlinearity_ctx);
            };
        *out = new rs_problem{Problem::general(N, std::move(w), std::move(f))};
    });
}

void rs_problem_free(rs_problem* p) { delete p; }

rs_status rs_problem_describe(const rs_problem* p, char** out) {
    if (!p || !out) return invalid("p and out must not be null");
    return guarded([&] { *out = dup_string(p->impl.describe()); });
}

rs_status rs_problem_config_text(const rs_problem* p, char** out) {
    if (!p || !out) return invalid("p and out must not be null");
    return guarded([&] { *out = dup_string(problem_to_config(p->impl)); });
}

rs_status rs_problem_validate(const rs_problem* p, char** report_text, int* all_pass) {
    if (!p || !report_text) return invalid("p and report_text must not be null");
    return guarded([&] {
        HypothesesReport rep = validate_hypotheses(p->impl);
        std::string text;
        for (const auto& c : rep.checks) {
            text += c.pass ? "PASS " : "FAIL ";
            text += c.id;
            text += ": ";
            text += c.detail;
            text += '\n';
        }
        text += "ell = " + fmt17(rep.ell) + "\n";
        text += "kappa = " + (rep.kappa_unbounded ? std::string("unbounded") : fmt17(rep.kappa)) +
                "\n";
        *report_text = dup_string(text);
        if (all_pass) *all_pass = rep.all_pass() ? 1 : 0;
    });
}

/* ---- reference quantities ---- */

rs_status rs_critical_exponent(int N, double alpha, double* out) {
    if (!out) return invalid("out must not be null");
    return guarded([&] { *out = critical_exponent(N, alpha); });
}

rs_status rs_monotonicity_bound(int N, double alpha, double* out) {
    if (!out) return invalid("out must not be null");
    return guarded([&] { *out = monotonicity_bound(N, alpha); });
}

rs_status rs_barrier_c(int N, double alpha, double p, double r, double* out) {
    if (!out) return invalid("out must not be null");
    return guarded([&] {
        Problem prob = Problem::henon(N, alpha, p);
        *out = barrier_c(prob.henon_spec(), r);
    });
}

rs_status rs_barrier_xi(const rs_problem* p, double r, double* out) {
    if (!p || !out) return invalid("p and out must not be null");
    return guarded([&] { *out = barrier_xi(p->impl, r); });
}

rs_status rs_subsolution_residual(int N, double alpha, double p, double r, double* out) {
    if (!out) return invalid("out must not be null");
    return guarded([&] {
        Problem prob = Problem::henon(N, alpha, p);
        *out = subsolution_residual(prob.henon_spec(), r);
    });
}

/* ---- integrator options ---- */

rs_status rs_options_create(rs_options** out) {
    if (!out) return invalid("out must not be null");
    *out = new rs_options{};
    return RS_OK;
}

void rs_options_free(rs_options* o) { delete o; }

rs_status rs_options_set(rs_options* o, const char* key, double value) {
    if (!o || !key) return invalid("o and key must not be null");
    std::string k = key;
    if (k == "rel_tol")
        o->impl.rel_tol = value;
    else if (k == "abs_tol")
        o->impl.abs_tol = value;
    else if (k == "r_start")
        o->impl.r_start = value;
    else if (k == "blow_up_cap")
        o->impl.blow_up_cap = value;
    else if (k == "event_r_tol")
        o->impl.event_r_tol = value;
    else if (k == "degenerate_tol")
        o->impl.degenerate_tol = value;
    else if (k == "max_steps")
        o->impl.max_steps = static_cast<long>(value);
    else
        return invalid("unknown option key");
    return RS_OK;
}

/* ---- integration ---- */

rs_status rs_integrate(const rs_problem* p, double gamma, double r_max, const rs_options* o,
                       rs_trajectory** out) {
    if (!p || !out) return invalid("p and out must not be null");
    return guarded([&] {
        IntegratorOptions opts = o ? o->impl : IntegratorOptions{};
        *out = new rs_trajectory{integrate(p->impl, gamma, r_max, opts)};
    });
}

void rs_trajectory_free(rs_trajectory* t) { delete t; }

size_t rs_trajectory_node_count(const rs_trajectory* t) { return t ? t->impl.nodes.size() : 0; }

rs_status rs_trajectory_node(const rs_trajectory* t, size_t i, double* r, double* u,
                             double* uprime) {
    if (!t) return invalid("t must not be null");
    if (i >= t->impl.nodes.size()) return invalid("node index out of range");
    const Node& n = t->impl.nodes[i];
    if (r) *r = n.r;
    if (u) *u = n.u;
    if (uprime) *uprime = n.uprime;
    return RS_OK;
}

size_t rs_trajectory_event_count(const rs_trajectory* t) { return t ? t->impl.events.size() : 0; }

rs_status rs_trajectory_event(const rs_trajectory* t, size_t i, const char** kind, int* index,
                              double* r, double* u, double* second_derivative, int* degenerate) {
    if (!t) return invalid("t must not be null");
    if (i >= t->impl.events.size()) return invalid("event index out of range");
    const Event& e = t->impl.events[i];
    if (kind) *kind = to_string(e.kind);
    if (index) *index = e.index;
    if (r) *r = e.r;
    if (u) *u = e.u;
    if (second_derivative) *second_derivative = e.second_derivative;
    if (degenerate) *degenerate = e.degenerate ? 1 : 0;
    return RS_OK;
}

const char* rs_trajectory_termination(const rs_trajectory* t) {
    return t ? to_string(t->impl.termination) : "?";
}

double rs_trajectory_gamma(const rs_trajectory* t) { return t ? t->impl.gamma : 0.0; }

double rs_trajectory_r_start(const rs_trajectory* t) {
    return t ? t->impl.r_start_effective : 0.0;
}

rs_status rs_trajectory_integral_identity(const rs_trajectory* t, double* max_residual) {
    if (!t || !max_residual) return invalid("t and max_residual must not be null");
    return guarded([&] { *max_residual = verify_integral_identity(t->impl); });
}

rs_status rs_trajectory_write_csv(const rs_trajectory* t, const char* path,
                                  const char* events_path, double skip_below) {
    if (!t || !path) return invalid("t and path must not be null");
    return guarded([&] {
        write_trajectory_csv(t->impl, path, events_path ? events_path : "", skip_below);
    });
}

rs_status rs_trajectory_write_json(const rs_trajectory* t, const char* path) {
    if (!t || !path) return invalid("t and path must not be null");
    return guarded([&] { write_trajectory_json(t->impl, path); });
}

rs_status rs_trajectory_read_csv(const rs_problem* p, double gamma, const char* path,
                                 const char* events_path, rs_trajectory** out) {
    if (!p || !path || !out) return invalid("p, path and out must not be null");
    return guarded([&] {
        *out = new rs_trajectory{
            read_trajectory_csv(p->impl, gamma, path, events_path ? events_path : "")};
    });
}

/* ---- gamma scans ---- */

rs_status rs_scan_run(const rs_problem* p, double gamma_min, double gamma_max, int points,
                      double r_max, rs_scan** out) {
    if (!p || !out) return invalid("p and out must not be null");
    return guarded([&] { *out = new rs_scan{scan(p->impl, gamma_min, gamma_max, points, r_max)}; });
}

void rs_scan_free(rs_scan* s) { delete s; }

size_t rs_scan_size(const rs_scan* s) { return s ? s->impl.records.size() : 0; }

rs_status rs_scan_record(const rs_scan* s, size_t i, double* gamma, const char** termination,
                         size_t* n_radii) {
    if (!s) return invalid("s must not be null");
    if (i >= s->impl.records.size()) return invalid("record index out of range");
    const ScanRecord& rec = s->impl.records[i];
    if (gamma) *gamma = rec.gamma;
    if (termination) *termination = to_string(rec.termination);
    if (n_radii) *n_radii = rec.stationary_radii.size();
    return RS_OK;
}

rs_status rs_scan_radius(const rs_scan* s, size_t i, size_t j, double* radius) {
    if (!s || !radius) return invalid("s and radius must not be null");
    if (i >= s->impl.records.size()) return invalid("record index out of range");
    const ScanRecord& rec = s->impl.records[i];
    if (j >= rec.stationary_radii.size()) return invalid("radius index out of range");
    *radius = rec.stationary_radii[j];
    return RS_OK;
}

rs_status rs_scan_write_csv(const rs_scan* s, const char* path) {
    if (!s || !path) return invalid("s and path must not be null");
    return guarded([&] { write_scan_csv(s->impl, path); });
}

/* ---- shooting ---- */

rs_status rs_shoot(const rs_problem* p, int n, double tol, rs_shoot_result** out) {
    if (!p || !out) return invalid("p and out must not be null");
    return guarded([&] {
        ShootOptions so;
        so.tol = tol;
        *out = new rs_shoot_result{shoot(p->impl, n, so)};
    });
}

rs_status rs_shoot_ex(const rs_problem* p, int n, double tol, double scan_min, double scan_max,
                      int scan_points, double r_max, rs_shoot_result** out) {
    if (!p || !out) return invalid("p and out must not be null");
    return guarded([&] {
        ShootOptions so;
        so.tol = tol;
        so.scan_min = scan_min;
        so.scan_max = scan_max;
        so.scan_points = scan_points;
        so.r_max = r_max;
        *out = new rs_shoot_result{shoot(p->impl, n, so)};
    });
}

void rs_shoot_result_free(rs_shoot_result* r) { delete r; }

double rs_shoot_result_gamma(const rs_shoot_result* r) { return r ? r->impl.gamma_star : 0.0; }

double rs_shoot_result_achieved_R(const rs_shoot_result* r) {
    return r ? r->impl.achieved_R : 0.0;
}

double rs_shoot_result_residual(const rs_shoot_result* r) { return r ? r->impl.residual : 0.0; }

int rs_shoot_result_n(const rs_shoot_result* r) { return r ? r->impl.n : 0; }

int rs_shoot_result_iterations(const rs_shoot_result* r) { return r ? r->impl.iterations : 0; }

rs_status rs_shoot_result_bracket(const rs_shoot_result* r, double* lo, double* hi) {
    if (!r) return invalid("r must not be null");
    if (lo) *lo = r->impl.bracket_lo;
    if (hi) *hi = r->impl.bracket_hi;
    return RS_OK;
}

rs_status rs_shoot_result_trajectory(const rs_shoot_result* r, rs_trajectory** out) {
    if (!r || !out) return invalid("r and out must not be null");
    return guarded([&] { *out = new rs_trajectory{r->impl.trajectory}; });
}

rs_status rs_shoot_result_write_json(const rs_shoot_result* r, const char* path) {
    if (!r || !path) return invalid("r and path must not be null");
    return guarded([&] { write_shooting_result_json(r->impl, path); });
}

/* ---- diagnostics ---- */

rs_status rs_diagnose(const rs_problem* p, double gamma, int include_scan_trend, rs_report** out) {
    if (!p || !out) return invalid("p and out must not be null");
    return guarded(
        [&] { *out = new rs_report{run_diagnostics(p->impl, gamma, include_scan_trend != 0)}; });
}

rs_status rs_diagnose_trajectory(const rs_trajectory* t, rs_report** out) {
    if (!t || !out) return invalid("t and out must not be null");
    return guarded([&] { *out = new rs_report{run_diagnostics_on_trajectory(t->impl)}; });
}

void rs_report_free(rs_report* r) { delete r; }

size_t rs_report_check_count(const rs_report* r) { return r ? r->impl.checks.size() : 0; }

rs_status rs_report_check(const rs_report* r, size_t i, const char** name, const char** status,
                          double* measured, double* tolerance, const char** detail) {
    if (!r) return invalid("r must not be null");
    if (i >= r->impl.checks.size()) return invalid("check index out of range");
    const Check& c = r->impl.checks[i];
    if (name) *name = c.name.c_str();
    if (status) *status = to_string(c.status);
    if (measured) *measured = c.measured;
    if (tolerance) *tolerance = c.tolerance;
    if (detail) *detail = c.detail.c_str();
    return RS_OK;
}

int rs_report_all_pass(const rs_report* r) { return r && r->impl.all_applicable_pass() ? 1 : 0; }

rs_status rs_report_write_json(const rs_report* r, const char* path) {
    if (!r || !path) return invalid("r and path must not be null");
    return guarded([&] { write_report_json(r->impl, path); });
}

rs_status rs_report_format(const rs_report* r, char** out) {
    if (!r || !out) return invalid("r and out must not be null");
    return guarded([&] { *out = dup_string(report_table(r->impl)); });
}

/* ---- experiments ---- */

rs_status rs_experiment_run_file(const char* manifest_path, const char* out_dir,
                                 rs_experiment** out) {
    if (!manifest_path || !out_dir || !out)
        return invalid("manifest_path, out_dir and out must not be null");
    return guarded([&] {
        Manifest m = load_manifest(manifest_path);
        *out = new rs_experiment{run_experiment(m, out_dir)};
    });
}

rs_status rs_experiment_run_id(const char* id, const char* out_dir, rs_experiment** out) {
    if (!id || !out_dir || !out) return invalid("id, out_dir and out must not be null");
    return guarded([&] {
        Manifest m = parse_manifest(default_manifest_text(id));
        *out = new rs_experiment{run_experiment(m, out_dir)};
    });
}

void rs_experiment_free(rs_experiment* e) { delete e; }

int rs_experiment_passed(const rs_experiment* e) { return e && e->impl.passed ? 1 : 0; }

const char* rs_experiment_id(const rs_experiment* e) { return e ? e->impl.id.c_str() : "?"; }

rs_status rs_experiment_summary(const rs_experiment* e, char** out) {
    if (!e || !out) return invalid("e and out must not be null");
    return guarded([&] { *out = dup_string(experiment_summary_text(e->impl)); });
}

/* ---- config helper ---- */

rs_status rs_config_lookup(const char* text, const char* key, char** value_out) {
    if (!text || !key || !value_out) return invalid("text, key and value_out must not be null");
    return guarded([&] {
        const std::string wanted = key;
        const std::string* found = nullptr;
        auto kv = parse_key_values(text);
        for (const auto& [k, v] : kv)
            if (k == wanted) found = &v;  // last occurrence wins, like the config loader
        if (!found) throw std::invalid_argument("key not found: " + wanted);
        *value_out = dup_string(*found);
    });
}

}  // extern "C"
