#pragma once
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace radshoot {

// Radial weight phi(r). Built-in power forms keep their exponents visible so the
// series start and spike-scale estimates can use them in closed form.
struct Weight {
    enum class Kind { Power, PowerSum, Custom };
    Kind kind = Kind::Power;
    double a = 1.0;  // phi = r^a            (Power)
    double b = 0.0;  // phi = r^a + r^b      (PowerSum)
    std::function<double(double)> fn;  // Custom
    std::function<double(double)> dfn;  // optional derivative for Custom

    double operator()(double r) const;
    double deriv(double r) const;
    double value_at_zero() const;  // ell = phi(0)
    bool unbounded_at_infinity() const;  // power forms grow without bound
};

// Nonlinearity f(s). Evaluation is overflow-clamped so extreme scan points
// degrade into classified trajectory terminations instead of NaNs.
struct Nonlinearity {
    enum class Kind { Power, Exp, Custom };
    Kind kind = Kind::Power;
    double p = 2.0;            // f = s^p                 (Power)
    double g = 1.0, q = 1.0;   // f = exp(g s^q) - 1      (Exp)
    std::function<double(double)> fn;
    std::function<double(double)> dfn;

    double operator()(double s) const;
    double deriv(double s) const;
};

struct HenonSpec {
    int N;
    double alpha;
    double p;
};

class Problem {
public:
    // Default state is the trivial power problem phi = r, f = s^2 in N = 3;
    // aggregates holding a Problem (Trajectory, GammaScan) need it.
    Problem() = default;
    // -u'' - (N-1)/r u' + u = r^alpha u^p
    static Problem henon(int N, double alpha, double p);
    // -u'' - (N-1)/r u' + u = phi(r) f(u)
    static Problem general(int N, Weight phi, Nonlinearity f);

    int N() const { return N_; }
    bool is_henon() const { return is_henon_; }
    const HenonSpec& henon_spec() const;
    const Weight& weight() const { return phi_; }
    const Nonlinearity& nonlinearity() const { return f_; }

    double phi(double r) const { return phi_(r); }
    double f(double s) const { return f_(s); }
    double phi_deriv(double r) const { return phi_.deriv(r); }
    double f_deriv(double s) const { return f_.deriv(s); }
    double ell() const { return phi_.value_at_zero(); }

    // H(u) = u / f(u), strictly decreasing under the monotonicity hypothesis.
    double H(double u) const;

    // Barrier value: c(r) for the Henon specialization, xi(r) = H^{-1}(phi(r))
    // otherwise. Throws std::runtime_error where no root exists.
    double barrier(double r) const;

    // Sign of u - barrier(r), computed without evaluating the barrier itself
    // (log comparison for power forms; phi(r) - H(u) in general), so it stays
    // finite at radii where the barrier value would overflow. u <= 0 counts
    // as below the barrier.
    double barrier_gap_sign(double r, double u) const;

    // Radius scale at which phi(r) f(gamma) ~ gamma, i.e. where a trajectory
    // started at height gamma meets the barrier. Used to pick the series
    // handoff radius; returns +inf when gamma is below the barrier everywhere.
    double barrier_radius_estimate(double gamma) const;

    std::string describe() const;

private:
    int N_ = 3;
    bool is_henon_ = false;
    HenonSpec hspec_{3, 1.0, 2.0};
    Weight phi_;
    Nonlinearity f_;
};

// (N + 2 + 2*alpha) / (N - 2); the solvability threshold exponent.
// Throws std::invalid_argument for N <= 2.
double critical_exponent(int N, double alpha);

// c(r) = r^(-alpha/(p-1)). Throws std::domain_error for r <= 0.
double barrier_c(const HenonSpec& spec, double r);

// xi(r): unique u > 0 with u/f(u) = phi(r), by monotone bracketing bisection.
// Relative residual |H(u) - phi(r)|/phi(r) < 1e-12. Throws std::runtime_error
// when no bracket exists within expansion limits.
double barrier_xi(const Problem& prob, double r);

// T(N, alpha) = alpha (sqrt((N-2)^2 + 4) - (N-2)) / 2; the solution changes
// monotonicity at most once when p - 1 < T.
double monotonicity_bound(int N, double alpha);

// Value of -c'' - (N-1)/r c' + c at r, evaluated in closed form:
// r^(-beta-2) (r^2 + beta(N-2-beta)) with beta = alpha/(p-1).
// Nonpositive on (0,1] exactly when p - 1 < monotonicity_bound(N, alpha).
double subsolution_residual(const HenonSpec& spec, double r);

struct HypothesisCheck {
    std::string id;        // "h1".."h4"
    bool pass;
    std::string detail;    // human-readable outcome
    double sample_a = 0.0; // first violating sample pair, when failing
    double sample_b = 0.0;
};

struct HypothesesReport {
    std::vector<HypothesisCheck> checks;
    double ell = 0.0;
    bool kappa_unbounded = true;
    double kappa = 0.0;  // meaningful when !kappa_unbounded
    bool all_pass() const;
    const HypothesisCheck& check(const std::string& id) const;
};

// Numerical check of the weight/nonlinearity hypotheses on a sample grid
// (monotonicity on samples, limit trends at the extreme samples).
HypothesesReport validate_hypotheses(const Problem& prob, const std::vector<double>& grid);
HypothesesReport validate_hypotheses(const Problem& prob);  // default log grid 1e-6..1e6

// Flat key-value (de)serialization. Keys: N, alpha, p for the Henon form;
// general form selected by nonlinearity = exp|power with parameters
// gamma, q (exp) or p (power) and weight exponents alpha [, beta].
Problem problem_from_config(const std::map<std::string, std::string>& kv);
Problem problem_from_config_text(const std::string& text);
std::string problem_to_config(const Problem& prob);

}  // namespace radshoot
