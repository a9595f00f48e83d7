#include "core/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "core/format.hpp"

namespace radshoot {

namespace {

const char* kTableManifest = R"(# gamma-table reproduction rows
id = exp_table
tol = 1e-6
row.01 = N=3 alpha=3 p=5 n=1 expect=1.0816 rel=5e-3 provenance=reference
row.02 = N=3 alpha=3 p=11 n=1 expect=0.9710 rel=5e-3 provenance=reference
row.03 = N=3 alpha=3 p=15 n=1 expect=0.9487 rel=5e-3 provenance=reference
row.04 = N=4 alpha=5 p=3 n=1 expect=1.3739 rel=5e-3 provenance=reference
row.05 = N=4 alpha=5 p=8 n=1 expect=1.0306 rel=5e-3 provenance=reference
row.06 = N=4 alpha=5 p=12 n=1 expect=0.9872 rel=5e-3 provenance=reference
row.07 = N=5 alpha=9 p=4 n=1 expect=1.3102 rel=5e-3 provenance=reference
row.08 = N=5 alpha=9 p=25/3 n=1 expect=1.0632 rel=5e-3 provenance=reference
row.09 = N=5 alpha=9 p=12 n=1 expect=1.0147 rel=5e-3 provenance=reference
row.10 = N=10 alpha=5 p=11/4 n=1 expect=1.2175 rel=5e-3 provenance=reference
row.11 = N=10 alpha=5 p=5 n=1 expect=1.0688 rel=5e-3 provenance=reference
row.12 = N=10 alpha=5 p=10 n=1 expect=1.0105 rel=5e-3 provenance=reference
row.13 = N=10 alpha=50 p=20 n=1 expect=1.0485 rel=5e-3 provenance=reference
row.14 = N=10 alpha=100 p=50 n=1 expect=1.0114 rel=5e-3 provenance=reference
row.15 = N=10 alpha=200 p=50 n=1 expect=1.0135 rel=5e-3 provenance=reference
)";

const char* kOscillationsManifest = R"(# higher stationary indices at one parameter set
id = exp_oscillations
N = 4
alpha = 5
p = 8
tol = 1e-6
row.1 = n=1 expect=1.0306 rel=5e-3 provenance=reference
row.2 = n=2 expect=155 rel=5e-2 provenance=reference scan.max=1e7
row.3 = n=3 expect=2584 rel=5e-2 provenance=reference scan.max=1e7
trace.gammas = 1.034 155 2584
trace.rmax = 10
)";

const char* kPbarManifest = R"(# oscillation-disappearance threshold sweep
id = exp_pbar
N = 4
alpha = 5
gamma0 = 1.034
p.min = 8
p.max = 20
p.step = 0.5
rmax = 10
window.lo = 0.2
window.hi = 10
expect.lo = 14
expect.hi = 18
provenance = reference
)";

const char* kGeneralManifest = R"(# non-power nonlinearities and the pathway cross-check
id = exp_general
tol = 1e-6
case.1 = N=3 weight=power a=2 nonlinearity=exp gamma=1 q=1 expect=0.8675323577608229 rel=1e-4 provenance=frozen
case.2 = N=2 weight=power a=3 nonlinearity=exp gamma=1 q=2 expect=1.0128336088479266 rel=1e-4 provenance=frozen
cross.N = 4
cross.alpha = 5
cross.p = 8
cross.agree = 1e-8
)";

const std::vector<std::string> kIds = {"exp_table", "exp_oscillations", "exp_pbar", "exp_general"};

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

RowStatus classify(double rel_err, double rel_tol) {
    if (rel_err < rel_tol) return RowStatus::Pass;
    if (rel_err < 2.0 * rel_tol) return RowStatus::Warn;
    return RowStatus::Fail;
}

ExperimentRow compare_row(std::string label, double expected, double computed, double rel_tol,
                          std::string provenance) {
    ExperimentRow row;
    row.label = std::move(label);
    row.expected = expected;
    row.computed = computed;
    row.rel_error = std::fabs(computed - expected) / std::fabs(expected);
    row.rel_tol = rel_tol;
    row.provenance = std::move(provenance);
    row.status = classify(row.rel_error, rel_tol);
    return row;
}

ExperimentRow failed_row(std::string label, double expected, double rel_tol,
                         std::string provenance, std::string note) {
    ExperimentRow row;
    row.label = std::move(label);
    row.expected = expected;
    row.computed = std::numeric_limits<double>::quiet_NaN();
    row.rel_error = std::numeric_limits<double>::quiet_NaN();
    row.rel_tol = rel_tol;
    row.provenance = std::move(provenance);
    row.status = RowStatus::Fail;
    row.note = std::move(note);
    return row;
}

void finish(ExperimentReport& rep) {
    int pass = 0, warn = 0, fail = 0;
    for (const auto& r : rep.rows) {
        if (r.status == RowStatus::Pass) ++pass;
        if (r.status == RowStatus::Warn) ++warn;
        if (r.status == RowStatus::Fail) ++fail;
    }
    rep.passed = warn == 0 && fail == 0;
    std::ostringstream os;
    os << rep.id << ": " << pass << " pass, " << warn << " warn, " << fail << " fail";
    rep.summary = os.str();
}

void emit_reports(ExperimentReport& rep, const std::string& out_dir) {
    std::string csv = join_path(out_dir, rep.id + ".csv");
    std::string json = join_path(out_dir, rep.id + ".json");
    write_experiment_csv(rep, csv);
    rep.artifacts.push_back(csv);
    rep.artifacts.push_back(json);
    write_experiment_json(rep, json);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

}  // namespace

std::string Manifest::get(const std::string& key, const std::string& fallback) const {
    for (const auto& [k, v] : entries)
        if (k == key) return v;
    return fallback;
}

bool Manifest::has(const std::string& key) const {
    for (const auto& [k, v] : entries)
        if (k == key) return true;
    return false;
}

std::vector<std::pair<std::string, std::string>> Manifest::with_prefix(
    const std::string& prefix) const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : entries)
        if (e.first.rfind(prefix, 0) == 0) out.push_back(e);
    return out;
}

Manifest parse_manifest(const std::string& text) {
    Manifest m;
    m.entries = parse_key_values(text);
    m.id = m.get("id");
    if (m.id.empty()) throw std::invalid_argument("manifest has no id entry");
    return m;
}

Manifest load_manifest(const std::string& path) { return parse_manifest(read_file(path)); }

std::string default_manifest_text(const std::string& id) {
    if (id == "exp_table") return kTableManifest;
    if (id == "exp_oscillations") return kOscillationsManifest;
    if (id == "exp_pbar") return kPbarManifest;
    if (id == "exp_general") return kGeneralManifest;
    throw std::invalid_argument("unknown experiment id: " + id);
}

const std::vector<std::string>& experiment_ids() { return kIds; }

std::map<std::string, std::string> parse_row_tokens(const std::string& value) {
    std::map<std::string, std::string> out;
    for (const std::string& tok : split_ws(value)) {
        size_t eq = tok.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("row token without '=': " + tok);
        out[tok.substr(0, eq)] = tok.substr(eq + 1);
    }
    return out;
}

const char* to_string(RowStatus s) {
    switch (s) {
        case RowStatus::Pass: return "pass";
        case RowStatus::Warn: return "warn";
        case RowStatus::Fail: return "fail";
    }
    return "?";
}

ExperimentReport exp_table(const Manifest& m, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    ExperimentReport rep;
    rep.id = "exp_table";
    const double tol = parse_number(m.get("tol", "1e-6"));

    for (const auto& [key, value] : m.with_prefix("row.")) {
        (void)key;
        auto tok = parse_row_tokens(value);
        const std::string label = "N=" + tok.at("N") + " alpha=" + tok.at("alpha") +
                                  " p=" + tok.at("p") + " n=" + tok.at("n");
        const double expect = parse_number(tok.at("expect"));
        const double rel = parse_number(tok.at("rel"));
        const std::string prov = tok.at("provenance");
        try {
            Problem prob = Problem::henon(static_cast<int>(parse_number(tok.at("N"))),
                                          parse_number(tok.at("alpha")), parse_number(tok.at("p")));
            ShootOptions so;
            so.tol = tol;
            ShootingResult res = shoot(prob, static_cast<int>(parse_number(tok.at("n"))), so);
            ExperimentRow row = compare_row(label, expect, res.gamma_star, rel, prov);
            row.note = "residual=" + fmt17(res.residual);
            rep.rows.push_back(std::move(row));
        } catch (const std::exception& e) {
            rep.rows.push_back(failed_row(label, expect, rel, prov, e.what()));
        }
    }
    finish(rep);
    emit_reports(rep, out_dir);
    return rep;
}

ExperimentReport exp_oscillations(const Manifest& m, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    ExperimentReport rep;
    rep.id = "exp_oscillations";
    const int N = static_cast<int>(parse_number(m.get("N", "4")));
    const double alpha = parse_number(m.get("alpha", "5"));
    const double p = parse_number(m.get("p", "8"));
    const double tol = parse_number(m.get("tol", "1e-6"));
    Problem prob = Problem::henon(N, alpha, p);

    for (const auto& [key, value] : m.with_prefix("row.")) {
        (void)key;
        auto tok = parse_row_tokens(value);
        const int n = static_cast<int>(parse_number(tok.at("n")));
        const std::string label = "n=" + tok.at("n");
        const double expect = parse_number(tok.at("expect"));
        const double rel = parse_number(tok.at("rel"));
        const std::string prov = tok.at("provenance");
        try {
            ShootOptions so;
            so.tol = tol;
            if (tok.count("scan.max")) so.scan_max = parse_number(tok.at("scan.max"));
            ShootingResult res = shoot(prob, n, so);
            ExperimentRow row = compare_row(label, expect, res.gamma_star, rel, prov);
            row.note = "residual=" + fmt17(res.residual);
            rep.rows.push_back(std::move(row));
            std::string base = join_path(out_dir, "solution_n" + std::to_string(n));
            write_trajectory_csv(res.trajectory, base + ".csv", base + "_events.csv");
            rep.artifacts.push_back(base + ".csv");
            rep.artifacts.push_back(base + "_events.csv");
        } catch (const std::exception& e) {
            rep.rows.push_back(failed_row(label, expect, rel, prov, e.what()));
        }
    }

    const double trace_rmax = parse_number(m.get("trace.rmax", "10"));
    for (const std::string& gtok : split_ws(m.get("trace.gammas"))) {
        Trajectory t = integrate(prob, parse_number(gtok), trace_rmax);
        std::string base = join_path(out_dir, "trace_gamma_" + gtok);
        write_trajectory_csv(t, base + ".csv", base + "_events.csv");
        rep.artifacts.push_back(base + ".csv");
        rep.artifacts.push_back(base + "_events.csv");
    }

    finish(rep);
    emit_reports(rep, out_dir);
    return rep;
}

ExperimentReport exp_pbar(const Manifest& m, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    ExperimentReport rep;
    rep.id = "exp_pbar";
    const int N = static_cast<int>(parse_number(m.get("N", "4")));
    const double alpha = parse_number(m.get("alpha", "5"));
    const double gamma0 = parse_number(m.get("gamma0", "1.034"));
    const double p_min = parse_number(m.get("p.min", "8"));
    const double p_max = parse_number(m.get("p.max", "20"));
    const double p_step = parse_number(m.get("p.step", "0.5"));
    const double rmax = parse_number(m.get("rmax", "10"));
    const double w_lo = parse_number(m.get("window.lo", "0.2"));
    const double w_hi = parse_number(m.get("window.hi", "10"));
    const double lo = parse_number(m.get("expect.lo", "14"));
    const double hi = parse_number(m.get("expect.hi", "18"));

    std::string sweep = "p,stationary_count\n";
    double pbar = std::numeric_limits<double>::quiet_NaN();
    for (int i = 0;; ++i) {
        double p = p_min + i * p_step;
        if (p > p_max * (1.0 + 1e-12)) break;
        Trajectory t = integrate(Problem::henon(N, alpha, p), gamma0, rmax);
        int count = 0;
        for (double r : t.stationary_radii())
            if (r >= w_lo && r <= w_hi) ++count;
        if (count >= 2) pbar = p;
        sweep += fmt17(p);
        sweep += ',';
        sweep += std::to_string(count);
        sweep += '\n';
    }
    std::string sweep_path = join_path(out_dir, "pbar_sweep.csv");
    atomic_write(sweep_path, sweep);
    rep.artifacts.push_back(sweep_path);

    ExperimentRow row;
    row.label = "pbar-estimate";
    row.expected = 0.5 * (lo + hi);
    row.computed = pbar;
    row.rel_tol = 0.0;
    row.provenance = m.get("provenance", "reference");
    if (std::isnan(pbar)) {
        row.status = RowStatus::Fail;
        row.note = "no p in the sweep has at least 2 stationary points inside the window";
    } else {
        row.status = (pbar >= lo && pbar <= hi) ? RowStatus::Pass : RowStatus::Fail;
        row.note = "acceptable range [" + fmt17(lo) + ", " + fmt17(hi) + "]";
    }
    rep.rows.push_back(std::move(row));

    finish(rep);
    emit_reports(rep, out_dir);
    return rep;
}

namespace {

Problem general_case_from_tokens(const std::map<std::string, std::string>& tok) {
    const int N = static_cast<int>(parse_number(tok.at("N")));
    Weight w;
    const std::string wk = tok.at("weight");
    if (wk == "power") {
        w.kind = Weight::Kind::Power;
        w.a = parse_number(tok.at("a"));
    } else if (wk == "powersum") {
        w.kind = Weight::Kind::PowerSum;
        w.a = parse_number(tok.at("a"));
        w.b = parse_number(tok.at("b"));
    } else {
        throw std::invalid_argument("unknown weight kind in manifest: " + wk);
    }
    Nonlinearity f;
    const std::string fk = tok.at("nonlinearity");
    if (fk == "exp") {
        f.kind = Nonlinearity::Kind::Exp;
        f.g = parse_number(tok.at("gamma"));
        f.q = parse_number(tok.at("q"));
    } else if (fk == "power") {
        f.kind = Nonlinearity::Kind::Power;
        f.p = parse_number(tok.at("p"));
    } else {
        throw std::invalid_argument("unknown nonlinearity kind in manifest: " + fk);
    }
    return Problem::general(N, w, f);
}

}  // namespace

ExperimentReport exp_general(const Manifest& m, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    ExperimentReport rep;
    rep.id = "exp_general";
    const double tol = parse_number(m.get("tol", "1e-6"));

    int case_no = 0;
    for (const auto& [key, value] : m.with_prefix("case.")) {
        (void)key;
        ++case_no;
        auto tok = parse_row_tokens(value);
        const double expect = parse_number(tok.at("expect"));
        const double rel = parse_number(tok.at("rel"));
        const std::string prov = tok.at("provenance");
        const std::string label = "N=" + tok.at("N") + " weight=" + tok.at("weight") + "^" +
                                  tok.at("a") + " nonlinearity=" + tok.at("nonlinearity");
        try {
            Problem prob = general_case_from_tokens(tok);
            ShootOptions so;
            so.tol = tol;
            ShootingResult res = shoot(prob, 1, so);

            std::string problems;
            if (!(res.residual < 1e-6)) problems += " residual " + fmt17(res.residual) + " >= 1e-6;";
            if (!strictly_increasing_on(res.trajectory, 1.0))
                problems += " solution not strictly increasing on (0, 1);";
            auto at1 = res.trajectory.node_at(1.0);
            if (!at1) {
                problems += " no node at r=1;";
            } else if (!(std::fabs(at1->uprime) <
                         1e-6 * std::max(1.0, std::fabs(at1->u)))) {
                problems += " |u'(1)|=" + fmt17(std::fabs(at1->uprime)) + " too large;";
            }

            ExperimentRow row = compare_row(label, expect, res.gamma_star, rel, prov);
            if (!problems.empty()) {
                row.status = RowStatus::Fail;
                row.note = "solution checks failed:" + problems;
            } else {
                row.note = "residual=" + fmt17(res.residual);
            }
            rep.rows.push_back(std::move(row));

            std::string base = join_path(out_dir, "solution_case" + std::to_string(case_no));
            write_trajectory_csv(res.trajectory, base + ".csv", base + "_events.csv");
            rep.artifacts.push_back(base + ".csv");
            rep.artifacts.push_back(base + "_events.csv");
        } catch (const std::exception& e) {
            rep.rows.push_back(failed_row(label, expect, rel, prov, e.what()));
        }
    }

    if (m.has("cross.N")) {
        const int N = static_cast<int>(parse_number(m.get("cross.N")));
        const double alpha = parse_number(m.get("cross.alpha"));
        const double p = parse_number(m.get("cross.p"));
        const double agree = parse_number(m.get("cross.agree", "1e-8"));
        const std::string label = "pathway-cross-check N=" + m.get("cross.N") + " alpha=" +
                                  m.get("cross.alpha") + " p=" + m.get("cross.p");
        try {
            ShootOptions so;
            so.tol = tol;
            ShootingResult direct = shoot(Problem::henon(N, alpha, p), 1, so);
            Weight w;
            w.kind = Weight::Kind::Power;
            w.a = alpha;
            Nonlinearity f;
            f.kind = Nonlinearity::Kind::Power;
            f.p = p;
            ShootingResult via_general = shoot(Problem::general(N, w, f), 1, so);
            ExperimentRow row =
                compare_row(label, direct.gamma_star, via_general.gamma_star, agree, "frozen");
            row.note = "both pathways solve the same equation";
            rep.rows.push_back(std::move(row));
        } catch (const std::exception& e) {
            rep.rows.push_back(failed_row(label, 0.0, agree, "frozen", e.what()));
        }
    }

    finish(rep);
    emit_reports(rep, out_dir);
    return rep;
}

ExperimentReport run_experiment(const Manifest& m, const std::string& out_dir) {
    if (m.id == "exp_table") return exp_table(m, out_dir);
    if (m.id == "exp_oscillations") return exp_oscillations(m, out_dir);
    if (m.id == "exp_pbar") return exp_pbar(m, out_dir);
    if (m.id == "exp_general") return exp_general(m, out_dir);
    throw std::invalid_argument("unknown experiment id: " + m.id);
}

void write_experiment_csv(const ExperimentReport& report, const std::string& path) {
    std::string out = "label,expected,computed,rel_error,rel_tol,status,provenance,note\n";
    for (const auto& r : report.rows) {
        out += csv_field(r.label);
        out += ',';
        out += fmt17(r.expected);
        out += ',';
        out += fmt17(r.computed);
        out += ',';
        out += fmt17(r.rel_error);
        out += ',';
        out += fmt17(r.rel_tol);
        out += ',';
        out += to_string(r.status);
        out += ',';
        out += csv_field(r.provenance);
        out += ',';
        out += csv_field(r.note);
        out += '\n';
    }
    atomic_write(path, out);
}

void write_experiment_json(const ExperimentReport& report, const std::string& path) {
    JsonWriter jw;
    jw.begin_object();
    jw.key("id").value(report.id);
    jw.key("passed").value(report.passed);
    jw.key("summary").value(report.summary);
    jw.key("rows").begin_array();
    for (const auto& r : report.rows) {
        jw.begin_object();
        jw.key("label").value(r.label);
        jw.key("expected").value(r.expected);
        jw.key("computed").value(r.computed);
        jw.key("rel_error").value(r.rel_error);
        jw.key("rel_tol").value(r.rel_tol);
        jw.key("status").value(to_string(r.status));
        jw.key("provenance").value(r.provenance);
        jw.key("note").value(r.note);
        jw.end_object();
    }
    jw.end_array();
    jw.key("artifacts").begin_array();
    for (const auto& a : report.artifacts) jw.value(a);
    jw.end_array();
    jw.end_object();
    atomic_write(path, jw.str() + "\n");
}

std::string experiment_summary_text(const ExperimentReport& report) {
    std::ostringstream os;
    os << report.summary << "\n";
    for (const auto& r : report.rows) {
        os << "  [" << to_string(r.status) << "] " << r.label;
        if (!std::isnan(r.computed))
            os << ": computed " << fmt17(r.computed) << " vs expected " << fmt17(r.expected)
               << " (rel " << fmt17(r.rel_error) << ", tol " << fmt17(r.rel_tol) << ")";
        if (!r.note.empty()) os << " -- " << r.note;
        os << "\n";
    }
    return os.str();
}

}  // namespace radshoot
