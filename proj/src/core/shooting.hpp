#pragma once
#include <stdexcept>
#include <string>
#include <vector>

#include "core/integrate.hpp"

namespace radshoot {

// Raised when no gamma bracket exists for the requested stationary index,
// or when the index disappears while narrowing one.
struct NoBracketError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class MapOutcome { Found, None, Undetermined };

struct MapResult {
    MapOutcome outcome = MapOutcome::None;
    double R = 0.0;  // valid when outcome == Found
};

// gamma -> radius of the first stationary point. Integrates on successively
// doubled horizons (10, 20, ..., capped at 1e4) until the event appears.
// None: the trajectory terminated (or hit the cap) without one.
// Undetermined: step failure, no conclusion either way.
MapResult first_stationary_map(const Problem& prob, double gamma,
                               const IntegratorOptions& opts = {});

// gamma -> radius of the n-th stationary point within [0, r_max].
MapResult nth_stationary_map(const Problem& prob, double gamma, int n, double r_max = 10.0,
                             const IntegratorOptions& opts = {});

struct ScanRecord {
    double gamma = 0.0;
    std::vector<double> stationary_radii;  // all within the scan horizon, increasing
    Termination termination = Termination::ReachedRMax;
};

struct GammaScan {
    Problem problem;
    double r_max = 10.0;
    std::vector<ScanRecord> records;  // gamma strictly increasing
};

GammaScan scan(const Problem& prob, double gamma_min, double gamma_max, int points = 64,
               double r_max = 10.0, const IntegratorOptions& opts = {});

struct Bracket {
    double lo = 0.0;
    double hi = 0.0;
};

// Consecutive scan gammas with R^n - 1 of opposite sign. A record lacking an
// n-th stationary radius counts as R = +inf when n = 1 (the first stationary
// radius grows without bound as gamma -> 0, so absence within the horizon
// means "large") and disqualifies the pair when n > 1. If n = 1 and the scan
// has no sign change, the range is extended decade by decade, down to 1e-8
// and up to 1e8, before giving up.
Bracket bracket_target(const Problem& prob, int n, const GammaScan& scan);

struct ShootOptions {
    double tol = 1e-6;  // |R^n - 1| target; values below 1e-9 are rejected
    double scan_min = 1e-2;
    double scan_max = 1e4;
    int scan_points = 64;
    double r_max = 10.0;      // event horizon for the scan and for n >= 2 maps
    IntegratorOptions integ;  // settings for the bisection phase
};

struct ShootingResult {
    double gamma_star = 0.0;
    int n = 1;
    double achieved_R = 0.0;  // n-th stationary radius of the final trajectory
    double residual = 0.0;    // |achieved_R - 1|
    Trajectory trajectory;    // re-integrated at rel/abs 1e-12 with a node at r = 1
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
    int iterations = 0;
};

// Bisection on gamma -> R^n - 1 inside a scan-derived bracket. The returned
// trajectory is re-integrated at tightened tolerances on [0, 1 + margin] and
// the reported residual is measured on it.
ShootingResult shoot(const Problem& prob, int n, const ShootOptions& opts = {});
ShootingResult shoot(const Problem& prob, int n, double tol);

// CSV: gamma,R1,...,Rk,termination with k = widest record (at least 1);
// missing radii left empty.
void write_scan_csv(const GammaScan& scan, const std::string& path);
void write_shooting_result_json(const ShootingResult& res, const std::string& path);

}  // namespace radshoot
