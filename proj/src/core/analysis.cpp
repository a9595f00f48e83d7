#include "core/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "core/format.hpp"

namespace radshoot {

const char* to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::Pass: return "pass";
        case CheckStatus::Fail: return "fail";
        case CheckStatus::NotApplicable: return "not_applicable";
    }
    return "?";
}

bool DiagnosticReport::all_applicable_pass() const {
    for (const auto& c : checks)
        if (c.status == CheckStatus::Fail) return false;
    return true;
}

const Check* DiagnosticReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

Check check_barrier_ordering(const Trajectory& traj) {
    Check c;
    c.name = "barrier-ordering";
    c.property = "the first barrier crossing precedes the first stationary point";
    const Event* st = traj.first_of(EventKind::Stationary);
    if (!st) {
        c.status = CheckStatus::NotApplicable;
        c.detail = "not applicable: trajectory terminated early (no stationary point)";
        return c;
    }
    const Event* bc = traj.first_of(EventKind::BarrierCrossing);
    if (!bc) {
        c.status = CheckStatus::NotApplicable;
        c.detail = "not applicable: the solution never meets the barrier";
        return c;
    }
    c.measured = st->r - bc->r;
    c.status = (std::isfinite(bc->r) && std::isfinite(st->r) && bc->r < st->r)
                   ? CheckStatus::Pass
                   : CheckStatus::Fail;
    c.detail = "crossing at r=" + fmt17(bc->r) + ", stationary at r=" + fmt17(st->r);
    return c;
}

Check check_stationary_concavity(const Trajectory& traj) {
    Check c;
    c.name = "stationary-concavity";
    c.property = "u'' < 0 at the first stationary point and matches u - phi(R) f(u)";
    c.tolerance = 1e-6;
    const Event* st = traj.first_of(EventKind::Stationary);
    if (!st) {
        c.status = CheckStatus::NotApplicable;
        c.detail = "not applicable: trajectory terminated early (no stationary point)";
        return c;
    }
    c.measured = st->second_derivative;
    if (st->degenerate) {
        c.status = CheckStatus::Fail;
        c.detail = "degenerate stationary point: |u''| = " + fmt17(std::fabs(st->second_derivative)) +
                   " is below the degeneracy tolerance";
        return c;
    }
    const Problem& prob = traj.problem;
    double closed = st->u - prob.phi(st->r) * prob.f(st->u);
    double rel = std::fabs(st->second_derivative - closed) /
                 std::max(std::fabs(closed), std::numeric_limits<double>::min());
    bool ok = st->second_derivative < -1e-10 && rel < 1e-6;
    c.status = ok ? CheckStatus::Pass : CheckStatus::Fail;
    c.detail = "u''=" + fmt17(st->second_derivative) + ", closed form " + fmt17(closed) +
               ", relative gap " + fmt17(rel);
    return c;
}

Check check_scan_limit_trend(const GammaScan& sc) {
    Check c;
    c.name = "scan-limit-trend";
    c.property =
        "first stationary radius exceeds 1 at the smallest gamma and drops below 0.1 at the "
        "largest gamma with a recorded radius";
    c.tolerance = 0.1;
    if (sc.records.size() < 2) {
        c.status = CheckStatus::NotApplicable;
        c.detail = "not applicable: scan has fewer than 2 points";
        return c;
    }
    const double gmin = sc.records.front().gamma;
    const double gmax = sc.records.back().gamma;
    if (!(gmin <= 1e-2 * (1.0 + 1e-9)) || !(gmax >= 1e3 * (1.0 - 1e-9))) {
        c.status = CheckStatus::NotApplicable;
        c.detail = "not applicable: scan range [" + fmt17(gmin) + ", " + fmt17(gmax) +
                   "] does not cover [1e-2, 1e3]";
        return c;
    }
    double R_small = sc.records.front().stationary_radii.empty()
                         ? std::numeric_limits<double>::infinity()
                         : sc.records.front().stationary_radii.front();
    const ScanRecord* limit = nullptr;
    for (const auto& rec : sc.records)
        if (!rec.stationary_radii.empty()) limit = &rec;
    if (!limit) {
        c.status = CheckStatus::NotApplicable;
        c.detail = "not applicable: no stationary radii anywhere in the scan";
        return c;
    }
    double R_large = limit->stationary_radii.front();
    c.measured = R_large;
    bool ok = R_small > 1.0 && R_large < 0.1 && R_large < R_small;
    c.status = ok ? CheckStatus::Pass : CheckStatus::Fail;
    c.detail = "R1=" + fmt17(R_small) + " at gamma=" + fmt17(gmin) + "; R1=" + fmt17(R_large) +
               " at gamma=" + fmt17(limit->gamma);
    return c;
}

Check check_barrier_crossing_count(const Trajectory& traj) {
    Check c;
    c.name = "crossing-count";
    c.property = "the solution meets the barrier at most twice in (0, 1]";
    c.tolerance = 2.0;
    if (!traj.problem.is_henon()) {
        c.status = CheckStatus::NotApplicable;
        c.detail = "not applicable: the count bound holds for the power-weight, "
                   "power-nonlinearity case only";
        return c;
    }
    const HenonSpec& hs = traj.problem.henon_spec();
    double bound = monotonicity_bound(hs.N, hs.alpha);
    if (!(hs.p - 1.0 < bound)) {
        c.status = CheckStatus::NotApplicable;
        c.detail = "not applicable: p-1=" + fmt17(hs.p - 1.0) + " is not below the bound " +
                   fmt17(bound);
        return c;
    }
    std::vector<double> rs;
    for (const auto& e : traj.events)
        if (e.kind == EventKind::BarrierCrossing && e.r <= 1.0 + 1e-12) rs.push_back(e.r);
    int count = 0;
    int merged = 0;
    double prev = -1.0;
    for (double r : rs) {
        if (prev >= 0.0 && r - prev < 1e-6) {
            ++merged;  // tangential touch resolves as a near-coincident pair
        } else {
            ++count;
        }
        prev = r;
    }
    c.measured = count;
    c.status = count <= 2 ? CheckStatus::Pass : CheckStatus::Fail;
    std::ostringstream os;
    os << count << " crossing(s) in (0, 1]";
    if (merged > 0) os << "; " << merged << " near-coincident pair(s) merged as tangential";
    c.detail = os.str();
    return c;
}

Check check_continuous_dependence(const Problem& prob, double gamma) {
    Check c;
    c.name = "continuous-dependence";
    c.property = "|u at r=1 for gamma+h, minus u at r=1 for gamma| shrinks first-order in h";
    auto u_at_one = [&](double g) -> std::optional<double> {
        Trajectory t = integrate(prob, g, 1.0);
        if (t.termination != Termination::ReachedRMax) return std::nullopt;
        return t.nodes.back().u;
    };
    auto base = u_at_one(gamma);
    if (!base) {
        c.status = CheckStatus::NotApplicable;
        c.detail = "not applicable: trajectory does not reach r = 1";
        return c;
    }
    const double hs[3] = {1e-3, 1e-4, 1e-5};
    double d[3];
    for (int i = 0; i < 3; ++i) {
        auto v = u_at_one(gamma + hs[i]);
        if (!v) {
            c.status = CheckStatus::NotApplicable;
            c.detail = "not applicable: perturbed trajectory (h=" + fmt17(hs[i]) +
                       ") does not reach r = 1";
            return c;
        }
        d[i] = std::fabs(*v - *base);
    }
    c.measured = d[2];
    bool positive = d[0] > 0 && d[1] > 0 && d[2] > 0;
    double r1 = positive ? d[0] / d[1] : 0.0;
    double r2 = positive ? d[1] / d[2] : 0.0;
    bool ok = positive && r1 >= 3.0 && r1 <= 30.0 && r2 >= 3.0 && r2 <= 30.0;
    c.status = ok ? CheckStatus::Pass : CheckStatus::Fail;
    c.detail = "deltas " + fmt17(d[0]) + ", " + fmt17(d[1]) + ", " + fmt17(d[2]) + "; ratios " +
               fmt17(r1) + ", " + fmt17(r2);
    return c;
}

bool strictly_increasing_on(const Trajectory& traj, double r_hi) {
    const double edge = r_hi - 1e-12;
    for (size_t i = 0; i < traj.nodes.size(); ++i) {
        const Node& n = traj.nodes[i];
        if (n.r >= edge) break;
        if (!(n.uprime > 0.0)) return false;
        if (i > 0 && traj.nodes[i - 1].r < edge &&
            n.u < traj.nodes[i - 1].u * (1.0 - 1e-14) - 1e-300)
            return false;
    }
    return true;
}

DiagnosticReport run_diagnostics(const Problem& prob, double gamma, bool include_scan_trend) {
    DiagnosticReport rep;
    rep.subject = prob.describe() + " gamma=" + fmt17(gamma);
    Trajectory traj = integrate(prob, gamma, 10.0);
    rep.checks.push_back(check_barrier_ordering(traj));
    rep.checks.push_back(check_stationary_concavity(traj));
    rep.checks.push_back(check_barrier_crossing_count(traj));
    rep.checks.push_back(check_continuous_dependence(prob, gamma));
    if (include_scan_trend) {
        GammaScan sc = scan(prob, 1e-2, 1e4, 64, 10.0);
        rep.checks.push_back(check_scan_limit_trend(sc));
    }
    return rep;
}

DiagnosticReport run_diagnostics_on_trajectory(const Trajectory& traj) {
    DiagnosticReport rep;
    rep.subject = traj.problem.describe() + " gamma=" + fmt17(traj.gamma);
    rep.checks.push_back(check_barrier_ordering(traj));
    rep.checks.push_back(check_stationary_concavity(traj));
    rep.checks.push_back(check_barrier_crossing_count(traj));
    return rep;
}

void write_report_json(const DiagnosticReport& report, const std::string& path) {
    JsonWriter jw;
    jw.begin_object();
    jw.key("subject").value(report.subject);
    jw.key("all_applicable_pass").value(report.all_applicable_pass());
    jw.key("checks").begin_array();
    for (const auto& c : report.checks) {
        jw.begin_object();
        jw.key("name").value(c.name);
        jw.key("status").value(to_string(c.status));
        jw.key("measured").value(c.measured);
        jw.key("tolerance").value(c.tolerance);
        jw.key("property").value(c.property);
        jw.key("detail").value(c.detail);
        jw.end_object();
    }
    jw.end_array();
    jw.end_object();
    atomic_write(path, jw.str() + "\n");
}

std::string report_table(const DiagnosticReport& report) {
    std::ostringstream os;
    os << "subject: " << report.subject << "\n";
    size_t w = 4;
    for (const auto& c : report.checks) w = std::max(w, c.name.size());
    for (const auto& c : report.checks) {
        const char* tag = c.status == CheckStatus::Pass ? "PASS"
                          : c.status == CheckStatus::Fail ? "FAIL"
                                                          : "N/A ";
        os << tag << "  " << c.name << std::string(w - c.name.size() + 2, ' ') << c.detail << "\n";
    }
    os << (report.all_applicable_pass() ? "all applicable checks pass"
                                        : "at least one check failed")
       << "\n";
    return os.str();
}

}  // namespace radshoot
