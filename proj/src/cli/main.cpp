#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "radshoot/radshoot.h"

namespace {

int exit_code(rs_status st) {
    switch (st) {
        case RS_OK: return 0;
        case RS_ERR_INVALID: return 1;
        case RS_ERR_IO: return 1;
        case RS_ERR_NO_BRACKET: return 2;
        case RS_ERR_NUMERIC: return 3;
    }
    return 3;
}

int fail(rs_status st) {
    std::cerr << "error: " << rs_last_error() << "\n";
    return exit_code(st);
}

std::string g17(double v) {
    char b[40];
    std::snprintf(b, sizeof b, "%.17g", v);
    return b;
}

std::optional<std::string> cfg_get(const std::string& text, const char* key) {
    if (text.empty()) return std::nullopt;
    char* v = nullptr;
    if (rs_config_lookup(text.c_str(), key, &v) != RS_OK) return std::nullopt;
    std::string out = v;
    rs_string_free(v);
    return out;
}

bool parse_num(const std::string& s, double& out) {
    auto piece = [](const std::string& t, double& v) {
        char* end = nullptr;
        v = std::strtod(t.c_str(), &end);
        return end != t.c_str() && *end == '\0';
    };
    size_t slash = s.find('/');
    if (slash == std::string::npos) return piece(s, out);
    double a = 0, b = 0;
    if (!piece(s.substr(0, slash), a) || !piece(s.substr(slash + 1), b) || b == 0.0) return false;
    out = a / b;
    return true;
}

bool write_file(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) return false;
        f << content;
        if (!f) return false;
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        return false;
    }
    return true;
}

// Options shared by the spec-taking subcommands. The effective problem text
// is the config file (when given) with explicit flags appended, so flags win.
struct SpecArgs {
    int N = 0;
    std::string alpha, p, config;
    CLI::Option *oN = nullptr, *oAlpha = nullptr, *oP = nullptr;

    void attach(CLI::App* cmd) {
        oN = cmd->add_option("--N", N, "space dimension (>= 2)");
        oAlpha = cmd->add_option("--alpha", alpha, "weight exponent: phi(r) = r^alpha");
        oP = cmd->add_option("--p", p, "power nonlinearity exponent (fractions like 25/3 allowed)");
        cmd->add_option("--config", config, "flat key=value file; flags override its entries");
    }

    // Returns false after printing an error (exit 1 situation).
    bool build_text(std::string& out) const {
        std::string text;
        if (!config.empty()) {
            std::ifstream f(config, std::ios::binary);
            if (!f) {
                std::cerr << "error: cannot open config: " << config << "\n";
                return false;
            }
            std::ostringstream ss;
            ss << f.rdbuf();
            text = ss.str();
            if (!text.empty() && text.back() != '\n') text += '\n';
        }
        if (oN->count()) text += "N = " + std::to_string(N) + "\n";
        if (oAlpha->count()) text += "alpha = " + alpha + "\n";
        if (oP->count()) text += "p = " + p + "\n";
        if (text.empty()) {
            std::cerr << "error: provide --N/--alpha/--p or --config\n";
            return false;
        }
        out = text;
        return true;
    }
};

double num_or(const std::string& cfg, const char* key, double dflt) {
    auto v = cfg_get(cfg, key);
    if (!v) return dflt;
    double out;
    if (!parse_num(*v, out)) return dflt;
    return out;
}

int cmd_solve(const SpecArgs& spec, CLI::Option* oN_, int n, CLI::Option* oTol, double tol,
              CLI::Option* oRmax, double rmax, const std::string& format,
              const std::string& out_base) {
    std::string text;
    if (!spec.build_text(text)) return 1;
    rs_problem* prob = nullptr;
    rs_status st = rs_problem_from_config_text(text.c_str(), &prob);
    if (st != RS_OK) return fail(st);

    if (!oN_->count()) n = static_cast<int>(num_or(text, "n", n));
    if (!oTol->count()) tol = num_or(text, "tol", tol);
    if (!oRmax->count()) rmax = num_or(text, "rmax", rmax);
    double smin = num_or(text, "scan.min", 1e-2);
    double smax = num_or(text, "scan.max", 1e4);
    int spts = static_cast<int>(num_or(text, "scan.points", 64));

    rs_shoot_result* res = nullptr;
    st = rs_shoot_ex(prob, n, tol, smin, smax, spts, rmax, &res);
    if (st != RS_OK) {
        rs_problem_free(prob);
        return fail(st);
    }

    std::cout << "gamma_star = " << g17(rs_shoot_result_gamma(res)) << "\n"
              << "achieved_R = " << g17(rs_shoot_result_achieved_R(res)) << "\n"
              << "residual = " << g17(rs_shoot_result_residual(res)) << "\n";

    st = rs_shoot_result_write_json(res, (out_base + ".json").c_str());
    if (st == RS_OK) {
        rs_trajectory* tr = nullptr;
        st = rs_shoot_result_trajectory(res, &tr);
        if (st == RS_OK) {
            if (format == "json") {
                st = rs_trajectory_write_json(tr, (out_base + "_trajectory.json").c_str());
            } else {
                st = rs_trajectory_write_csv(tr, (out_base + ".csv").c_str(),
                                             (out_base + "_events.csv").c_str(), 0.0);
            }
            rs_trajectory_free(tr);
        }
    }
    rs_shoot_result_free(res);
    rs_problem_free(prob);
    if (st != RS_OK) return fail(st);
    std::cout << "wrote " << out_base << ".json\n";
    return 0;
}

int cmd_trace(const SpecArgs& spec, CLI::Option* oGamma, double gamma, CLI::Option* oRmax,
              double rmax, double skip_below, const std::string& format,
              const std::string& out_base) {
    std::string text;
    if (!spec.build_text(text)) return 1;
    rs_problem* prob = nullptr;
    rs_status st = rs_problem_from_config_text(text.c_str(), &prob);
    if (st != RS_OK) return fail(st);

    if (!oGamma->count()) {
        auto v = cfg_get(text, "gamma0");
        if (!v || !parse_num(*v, gamma)) {
            rs_problem_free(prob);
            std::cerr << "error: provide --gamma (or gamma0 in the config)\n";
            return 1;
        }
    }
    if (!oRmax->count()) rmax = num_or(text, "rmax", rmax);

    rs_trajectory* tr = nullptr;
    st = rs_integrate(prob, gamma, rmax, nullptr, &tr);
    if (st != RS_OK) {
        rs_problem_free(prob);
        return fail(st);
    }
    if (format == "json") {
        st = rs_trajectory_write_json(tr, (out_base + ".json").c_str());
    } else {
        st = rs_trajectory_write_csv(tr, (out_base + ".csv").c_str(),
                                     (out_base + "_events.csv").c_str(), skip_below);
    }
    std::cout << "termination = " << rs_trajectory_termination(tr)
              << ", nodes = " << rs_trajectory_node_count(tr)
              << ", events = " << rs_trajectory_event_count(tr) << "\n";
    rs_trajectory_free(tr);
    rs_problem_free(prob);
    if (st != RS_OK) return fail(st);
    return 0;
}

int cmd_scan(const SpecArgs& spec, double gmin, double gmax, int points, double rmax,
             const std::string& out) {
    std::string text;
    if (!spec.build_text(text)) return 1;
    rs_problem* prob = nullptr;
    rs_status st = rs_problem_from_config_text(text.c_str(), &prob);
    if (st != RS_OK) return fail(st);
    rs_scan* sc = nullptr;
    st = rs_scan_run(prob, gmin, gmax, points, rmax, &sc);
    if (st != RS_OK) {
        rs_problem_free(prob);
        return fail(st);
    }
    st = rs_scan_write_csv(sc, out.c_str());
    std::cout << "records = " << rs_scan_size(sc) << ", wrote " << out << "\n";
    rs_scan_free(sc);
    rs_problem_free(prob);
    if (st != RS_OK) return fail(st);
    return 0;
}

int cmd_table(const std::string& rows_path, double tol, const std::string& out) {
    std::vector<std::string> rows;
    if (!rows_path.empty()) {
        std::ifstream f(rows_path, std::ios::binary);
        if (!f) {
            std::cerr << "error: cannot open rows file: " << rows_path << "\n";
            return 1;
        }
        std::string line;
        while (std::getline(f, line)) {
            size_t hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            std::istringstream ss(line);
            std::string tok;
            std::vector<std::string> toks;
            while (ss >> tok) toks.push_back(tok);
            if (toks.empty()) continue;
            std::string joined;
            for (const auto& t : toks) joined += t + " ";
            rows.push_back(joined);
        }
    } else {
        rows = {"3 3 5 1",    "3 3 11 1",    "3 3 15 1",  "4 5 3 1",     "4 5 8 1",
                "4 5 12 1",   "5 9 4 1",     "5 9 25/3 1", "5 9 12 1",   "10 5 11/4 1",
                "10 5 5 1",   "10 5 10 1",   "10 50 20 1", "10 100 50 1", "10 200 50 1"};
    }
    if (rows.empty()) {
        std::cerr << "error: empty row list\n";
        return 1;
    }

    std::string csv = "N,alpha,p,n,gamma_star,residual\n";
    bool saw_numeric = false, saw_bracket = false, saw_invalid = false;
    for (const std::string& row : rows) {
        std::istringstream ss(row);
        std::string sN, sA, sP, sn;
        if (!(ss >> sN >> sA >> sP >> sn)) {
            std::cerr << "error: row needs 4 fields (N alpha p n): " << row << "\n";
            return 1;
        }
        double N, alpha, p, n;
        if (!parse_num(sN, N) || !parse_num(sA, alpha) || !parse_num(sP, p) || !parse_num(sn, n)) {
            std::cerr << "error: bad number in row: " << row << "\n";
            return 1;
        }
        rs_problem* prob = nullptr;
        rs_status st = rs_problem_henon(static_cast<int>(N), alpha, p, &prob);
        rs_shoot_result* res = nullptr;
        if (st == RS_OK) st = rs_shoot(prob, static_cast<int>(n), tol, &res);
        if (st == RS_OK) {
            double gs = rs_shoot_result_gamma(res);
            double resid = rs_shoot_result_residual(res);
            csv += g17(N) + "," + g17(alpha) + "," + g17(p) + "," +
                   std::to_string(static_cast<int>(n)) + "," + g17(gs) + "," + g17(resid) + "\n";
            std::cout << "N=" << sN << " alpha=" << sA << " p=" << sP << " n=" << sn
                      << "  gamma_star=" << g17(gs) << "  residual=" << g17(resid) << "\n";
            rs_shoot_result_free(res);
        } else {
            csv += g17(N) + "," + g17(alpha) + "," + g17(p) + "," +
                   std::to_string(static_cast<int>(n)) + ",nan,nan\n";
            std::cout << "N=" << sN << " alpha=" << sA << " p=" << sP << " n=" << sn
                      << "  failed: " << rs_last_error() << "\n";
            if (st == RS_ERR_NO_BRACKET) saw_bracket = true;
            else if (st == RS_ERR_INVALID || st == RS_ERR_IO) saw_invalid = true;
            else saw_numeric = true;
        }
        rs_problem_free(prob);
    }
    if (!write_file(out, csv)) {
        std::cerr << "error: cannot write " << out << "\n";
        return 1;
    }
    std::cout << "wrote " << out << "\n";
    if (saw_numeric) return 3;
    if (saw_bracket) return 2;
    if (saw_invalid) return 1;
    return 0;
}

int cmd_verify(const SpecArgs& spec, CLI::Option* oGamma, double gamma,
               const std::string& traj_path, const std::string& events_path,
               const std::string& check_filter, const std::string& out_json) {
    std::string text;
    if (!spec.build_text(text)) return 1;
    rs_problem* prob = nullptr;
    rs_status st = rs_problem_from_config_text(text.c_str(), &prob);
    if (st != RS_OK) return fail(st);

    rs_report* rep = nullptr;
    if (!traj_path.empty()) {
        rs_trajectory* tr = nullptr;
        st = rs_trajectory_read_csv(prob, oGamma->count() ? gamma : 0.0, traj_path.c_str(),
                                    events_path.empty() ? nullptr : events_path.c_str(), &tr);
        if (st != RS_OK) {
            rs_problem_free(prob);
            return fail(st);
        }
        st = rs_diagnose_trajectory(tr, &rep);
        rs_trajectory_free(tr);
    } else {
        if (!oGamma->count()) {
            auto v = cfg_get(text, "gamma0");
            if (!v || !parse_num(*v, gamma)) {
                rs_problem_free(prob);
                std::cerr << "error: provide --gamma (or gamma0 in the config)\n";
                return 1;
            }
        }
        int with_scan = check_filter.empty() || check_filter == "scan-limit-trend";
        st = rs_diagnose(prob, gamma, with_scan, &rep);
    }
    rs_problem_free(prob);
    if (st != RS_OK) return fail(st);

    bool any_selected = false, any_fail = false;
    size_t count = rs_report_check_count(rep);
    std::ostringstream shown;
    for (size_t i = 0; i < count; ++i) {
        const char *name, *status, *detail;
        double measured, tolerance;
        rs_report_check(rep, i, &name, &status, &measured, &tolerance, &detail);
        if (!check_filter.empty() && check_filter != name) continue;
        any_selected = true;
        if (std::string(status) == "fail") any_fail = true;
        shown << (std::string(status) == "pass"   ? "PASS"
                  : std::string(status) == "fail" ? "FAIL"
                                                  : "N/A ")
              << "  " << name << "  " << detail << "\n";
    }
    if (!check_filter.empty() && !any_selected) {
        rs_report_free(rep);
        std::cerr << "error: unknown check: " << check_filter << "\n";
        return 1;
    }
    if (check_filter.empty()) {
        char* table = nullptr;
        if (rs_report_format(rep, &table) == RS_OK) {
            std::cout << table;
            rs_string_free(table);
        }
    } else {
        std::cout << shown.str();
    }
    if (!out_json.empty()) {
        st = rs_report_write_json(rep, out_json.c_str());
        if (st != RS_OK) {
            rs_report_free(rep);
            return fail(st);
        }
    }
    rs_report_free(rep);
    return any_fail ? 3 : 0;
}

int cmd_experiments(const std::string& id, std::string out_dir, const std::string& manifests) {
    namespace fs = std::filesystem;
    std::string file;
    if (fs::exists(id) && fs::is_regular_file(id)) {
        file = id;
    } else {
        std::string cand = (fs::path(manifests) / (id + ".manifest")).string();
        if (fs::exists(cand)) file = cand;
    }
    if (out_dir.empty())
        out_dir = (fs::path("experiments") / "out" / fs::path(id).stem()).string();

    rs_experiment* exp = nullptr;
    rs_status st = file.empty() ? rs_experiment_run_id(id.c_str(), out_dir.c_str(), &exp)
                                : rs_experiment_run_file(file.c_str(), out_dir.c_str(), &exp);
    if (st != RS_OK) return fail(st);
    char* summary = nullptr;
    if (rs_experiment_summary(exp, &summary) == RS_OK) {
        std::cout << summary;
        rs_string_free(summary);
    }
    std::cout << "outputs in " << out_dir << "\n";
    int ok = rs_experiment_passed(exp);
    rs_experiment_free(exp);
    return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"radial shooting solver for -Delta u + u = phi(|x|) f(u), Neumann unit ball"};
    app.require_subcommand(1);

    // solve
    auto* solve = app.add_subcommand("solve", "find gamma so the n-th stationary point lands at r=1");
    SpecArgs solve_spec;
    solve_spec.attach(solve);
    int n = 1;
    double tol = 1e-6, rmax_solve = 10.0;
    std::string format = "csv", out_solve = "solution";
    auto* oN = solve->add_option("--n", n, "stationary index to place at r=1 (default 1)");
    auto* oTol = solve->add_option("--tol", tol, "|R-1| tolerance (>= 1e-9, default 1e-6)");
    auto* oRmaxS = solve->add_option("--rmax", rmax_solve, "event horizon for n >= 2 (default 10)");
    solve->add_option("--format", format, "trajectory format: csv|json")
        ->check(CLI::IsMember({"csv", "json"}));
    solve->add_option("--out", out_solve, "output base path (default 'solution')");

    // trace
    auto* trace = app.add_subcommand("trace", "integrate one trajectory and write it out");
    SpecArgs trace_spec;
    trace_spec.attach(trace);
    double gamma_tr = 0.0, rmax_tr = 10.0, skip_below = 0.0;
    std::string format_tr = "csv", out_tr = "trace";
    auto* oGammaT = trace->add_option("--gamma", gamma_tr, "initial value u(0)");
    auto* oRmaxT = trace->add_option("--rmax", rmax_tr, "integration endpoint (default 10)");
    trace->add_option("--skip-below", skip_below, "omit nodes with r below this from the files");
    trace->add_option("--format", format_tr, "csv|json")->check(CLI::IsMember({"csv", "json"}));
    trace->add_option("--out", out_tr, "output base path (default 'trace')");

    // scan
    auto* scan = app.add_subcommand("scan", "map stationary radii over a log-spaced gamma grid");
    SpecArgs scan_spec;
    scan_spec.attach(scan);
    double gmin = 1e-2, gmax = 1e4, rmax_sc = 10.0;
    int points = 64;
    std::string out_sc = "scan.csv";
    scan->add_option("--gamma-min", gmin, "smallest gamma (default 1e-2)");
    scan->add_option("--gamma-max", gmax, "largest gamma (default 1e4)");
    scan->add_option("--points", points, "grid size (default 64)");
    scan->add_option("--rmax", rmax_sc, "per-trajectory horizon (default 10)");
    scan->add_option("--out", out_sc, "output CSV path (default scan.csv)");

    // table
    auto* table = app.add_subcommand("table", "solve a batch of (N, alpha, p, n) rows");
    std::string rows_path, out_tab = "table.csv";
    double tol_tab = 1e-6;
    table->add_option("--rows", rows_path,
                      "file of rows 'N alpha p n' (default: built-in 15-row set)");
    table->add_option("--tol", tol_tab, "per-row tolerance (default 1e-6)");
    table->add_option("--out", out_tab, "output CSV path (default table.csv)");

    // verify
    auto* verify = app.add_subcommand("verify", "run the diagnostic checks");
    SpecArgs verify_spec;
    verify_spec.attach(verify);
    double gamma_v = 0.0;
    std::string traj_path, events_path, check_filter, out_json;
    auto* oGammaV = verify->add_option("--gamma", gamma_v, "initial value u(0)");
    verify->add_option("--traj", traj_path, "stored trajectory CSV to verify instead of running");
    verify->add_option("--events", events_path, "events CSV accompanying --traj");
    verify->add_option("--check", check_filter, "run/report a single named check");
    verify->add_option("--out", out_json, "also write the report as JSON");

    // experiments
    auto* exps = app.add_subcommand("experiments", "scripted reproduction runs");
    exps->require_subcommand(1);
    auto* run = exps->add_subcommand("run", "run one experiment by id or manifest path");
    std::string exp_id, exp_out, manifests = "experiments/manifests";
    run->add_option("id", exp_id, "experiment id (exp_table, exp_oscillations, exp_pbar, exp_general) or a manifest path")
        ->required();
    run->add_option("--out", exp_out, "output directory (default experiments/out/<id>)");
    run->add_option("--manifests", manifests, "manifest directory (default experiments/manifests)");
    auto* list = exps->add_subcommand("list", "list known experiment ids");

    CLI11_PARSE(app, argc, argv);

    if (*solve)
        return cmd_solve(solve_spec, oN, n, oTol, tol, oRmaxS, rmax_solve, format, out_solve);
    if (*trace)
        return cmd_trace(trace_spec, oGammaT, gamma_tr, oRmaxT, rmax_tr, skip_below, format_tr,
                         out_tr);
    if (*scan) return cmd_scan(scan_spec, gmin, gmax, points, rmax_sc, out_sc);
    if (*table) return cmd_table(rows_path, tol_tab, out_tab);
    if (*verify)
        return cmd_verify(verify_spec, oGammaV, gamma_v, traj_path, events_path, check_filter,
                          out_json);
    if (*list) {
        std::cout << "exp_table\nexp_oscillations\nexp_pbar\nexp_general\n";
        return 0;
    }
    if (*run) return cmd_experiments(exp_id, exp_out, manifests);
    return 1;
}
