#pragma once
#include <string>
#include <vector>

#include "core/shooting.hpp"

namespace radshoot {

enum class CheckStatus { Pass, Fail, NotApplicable };

const char* to_string(CheckStatus s);

struct Check {
    std::string name;
    CheckStatus status = CheckStatus::NotApplicable;
    double measured = 0.0;
    double tolerance = 0.0;
    std::string property;  // the condition being verified
    std::string detail;    // measurement context, or why the check did not apply
};

struct DiagnosticReport {
    std::string subject;
    std::vector<Check> checks;
    bool all_applicable_pass() const;
    const Check* find(const std::string& name) const;
};

// The first barrier crossing must precede the first stationary point.
Check check_barrier_ordering(const Trajectory& traj);

// u'' at the first stationary point is strictly negative and matches the
// closed form u - phi(R) f(u) (exact there because u' = 0).
Check check_stationary_concavity(const Trajectory& traj);

// Across a wide scan the first stationary radius starts above 1 at the
// smallest gamma and falls below 0.1 by the largest gamma with a recorded
// radius.
Check check_scan_limit_trend(const GammaScan& scan);

// Power-weight/power-nonlinearity only, and only when p - 1 stays below
// monotonicity_bound(N, alpha): the solution meets the barrier at most twice
// in (0, 1]. Near-coincident crossing pairs are merged (tangential touch).
Check check_barrier_crossing_count(const Trajectory& traj);

// |u_{gamma+h}(1) - u_gamma(1)| shrinks first-order in h for
// h in {1e-3, 1e-4, 1e-5}.
Check check_continuous_dependence(const Problem& prob, double gamma);

// True when u' > 0 at every node with r in (r_start, r_hi) and u never
// decreases node to node on that range.
bool strictly_increasing_on(const Trajectory& traj, double r_hi);

// Full suite for a problem + gamma: integrates once, then runs every
// trajectory check plus continuous dependence; optionally also a default
// wide scan feeding the limit-trend check.
DiagnosticReport run_diagnostics(const Problem& prob, double gamma, bool include_scan_trend);

// Trajectory-only subset (for stored trajectories; gamma taken from it).
DiagnosticReport run_diagnostics_on_trajectory(const Trajectory& traj);

void write_report_json(const DiagnosticReport& report, const std::string& path);
std::string report_table(const DiagnosticReport& report);

}  // namespace radshoot
