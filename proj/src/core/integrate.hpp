#pragma once
#include <optional>
#include <string>
#include <vector>

#include "core/problem.hpp"

namespace radshoot {

enum class Termination { ReachedRMax, BlowUp, PositivityLoss, StepFailure };
enum class EventKind { Stationary, BarrierCrossing, BlowUp, PositivityLoss };

const char* to_string(Termination t);
const char* to_string(EventKind k);

struct Event {
    EventKind kind;
    int index;  // ordinal among events of the same kind, 1-based
    double r;
    double u;
    double second_derivative;
    bool degenerate;  // |u''| below the degeneracy tolerance at a stationary point
};

struct Node {
    double r, u, uprime;
};

struct IntegratorOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-10;
    // Series handoff radius cap; the effective start is min(r_start, 0.1 * spike scale).
    double r_start = 1e-6;
    double blow_up_cap = 1e8;
    double event_r_tol = 1e-12;
    double degenerate_tol = 1e-8;
    long max_steps = 20000000;
    // Radii the stepper must land on exactly (so u, u' are sampled there).
    std::vector<double> checkpoints;
};

struct Trajectory {
    Problem problem;
    double gamma = 0.0;
    double r_start_effective = 0.0;
    std::vector<Node> nodes;
    std::vector<Event> events;
    Termination termination = Termination::ReachedRMax;

    std::vector<double> stationary_radii() const;
    const Event* nth_stationary(int n) const;  // 1-based; nullptr when absent
    const Event* first_of(EventKind kind) const;
    std::optional<Node> node_at(double r, double tol = 1e-9) const;  // exact checkpoint lookup
};

// Two-term series expansion of the regular solution near the origin
// (one-term when the weight has no declared power form).
std::pair<double, double> series_start(const Problem& prob, double gamma, double r_start);

// min(cap, 0.1 * barrier radius estimate): at large gamma the first stationary
// point collapses toward 0 faster than any fixed handoff radius.
double choose_r_start(const Problem& prob, double gamma, double r_start_cap);

Trajectory integrate(const Problem& prob, double gamma, double r_max,
                     const IntegratorOptions& opts = {});

// max over nodes of |r^(N-1) u' - integral| / (1 + |r^(N-1) u'|), where the
// integral of s^(N-1)(u - phi f(u)) is accumulated by cubic Hermite quadrature
// over node pairs.
double verify_integral_identity(const Trajectory& traj);

void write_trajectory_csv(const Trajectory& traj, const std::string& path,
                          const std::string& events_path, double skip_below = 0.0);
void write_trajectory_json(const Trajectory& traj, const std::string& path);

// Reads back files produced by write_trajectory_csv; validates node ordering.
Trajectory read_trajectory_csv(const Problem& prob, double gamma, const std::string& path,
                               const std::string& events_path);

}  // namespace radshoot
