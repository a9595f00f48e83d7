#include "core/problem.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "core/format.hpp"

namespace radshoot {

namespace {
constexpr double kClamp = 1e300;  // evaluation ceiling; keeps products finite
constexpr double kInf = std::numeric_limits<double>::infinity();

double clamp_finite(double v) {
    if (std::isnan(v)) return kClamp;
    if (v > kClamp) return kClamp;
    if (v < -kClamp) return -kClamp;
    return v;
}
}  // namespace

double Weight::operator()(double r) const {
    switch (kind) {
        case Kind::Power: {
            if (r == 0.0) return value_at_zero();
            return clamp_finite(std::exp(a * std::log(r)));
        }
        case Kind::PowerSum: {
            if (r == 0.0) return value_at_zero();
            double lr = std::log(r);
            return clamp_finite(std::exp(a * lr) + std::exp(b * lr));
        }
        case Kind::Custom:
            return clamp_finite(fn(r));
    }
    return 0.0;
}

double Weight::deriv(double r) const {
    switch (kind) {
        case Kind::Power:
            return a == 0.0 ? 0.0 : a * std::pow(r, a - 1.0);
        case Kind::PowerSum:
            return (a == 0.0 ? 0.0 : a * std::pow(r, a - 1.0)) +
                   (b == 0.0 ? 0.0 : b * std::pow(r, b - 1.0));
        case Kind::Custom: {
            if (dfn) return dfn(r);
            double h = 1e-6 * std::max(1.0, std::fabs(r));
            double lo = std::max(r - h, 0.0);
            return (fn(r + h) - fn(lo)) / (r + h - lo);
        }
    }
    return 0.0;
}

double Weight::value_at_zero() const {
    switch (kind) {
        case Kind::Power:
            return a == 0.0 ? 1.0 : 0.0;
        case Kind::PowerSum:
            return (a == 0.0 ? 1.0 : 0.0) + (b == 0.0 ? 1.0 : 0.0);
        case Kind::Custom:
            return fn(0.0);
    }
    return 0.0;
}

bool Weight::unbounded_at_infinity() const {
    switch (kind) {
        case Kind::Power:
            return a > 0.0;
        case Kind::PowerSum:
            return a > 0.0 || b > 0.0;
        case Kind::Custom: {
            double v1 = fn(1e7), v2 = fn(1e8);
            return v2 > v1 * (1.0 + 1e-3) && v2 > 1e3;
        }
    }
    return true;
}

double Nonlinearity::operator()(double s) const {
    if (s <= 0.0) return 0.0;
    switch (kind) {
        case Kind::Power: {
            double lg = p * std::log(s);
            if (lg > 690.0) return kClamp;
            return std::exp(lg);
        }
        case Kind::Exp: {
            double arg = g * std::pow(s, q);
            if (arg > 690.0) return kClamp;
            return std::expm1(arg);
        }
        case Kind::Custom:
            return clamp_finite(fn(s));
    }
    return 0.0;
}

double Nonlinearity::deriv(double s) const {
    if (s <= 0.0) s = 0.0;
    switch (kind) {
        case Kind::Power:
            return s == 0.0 ? (p > 1.0 ? 0.0 : kClamp) : clamp_finite(p * std::exp((p - 1.0) * std::log(s)));
        case Kind::Exp: {
            double arg = g * std::pow(s, q);
            if (arg > 690.0) return kClamp;
            return clamp_finite(g * q * std::pow(s, q - 1.0) * std::exp(arg));
        }
        case Kind::Custom: {
            if (dfn) return dfn(s);
            double h = 1e-6 * std::max(1.0, std::fabs(s));
            double lo = std::max(s - h, 0.0);
            return ((*this).fn(s + h) - fn(lo)) / (s + h - lo);
        }
    }
    return 0.0;
}

Problem Problem::henon(int N, double alpha, double p) {
    if (N < 2) throw std::invalid_argument("N must be at least 2");
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be positive");
    if (!(p > 1.0)) throw std::invalid_argument("p must exceed 1");
    Problem prob;
    prob.N_ = N;
    prob.is_henon_ = true;
    prob.hspec_ = HenonSpec{N, alpha, p};
    prob.phi_ = Weight{Weight::Kind::Power, alpha, 0.0, nullptr, nullptr};
    prob.f_ = Nonlinearity{Nonlinearity::Kind::Power, p, 1.0, 1.0, nullptr, nullptr};
    return prob;
}

Problem Problem::general(int N, Weight phi, Nonlinearity f) {
    if (N < 2) throw std::invalid_argument("N must be at least 2");
    if (phi.kind == Weight::Kind::Custom && !phi.fn)
        throw std::invalid_argument("custom weight requires a callable");
    if (f.kind == Nonlinearity::Kind::Custom && !f.fn)
        throw std::invalid_argument("custom nonlinearity requires a callable");
    Problem prob;
    prob.N_ = N;
    prob.is_henon_ = false;
    prob.phi_ = std::move(phi);
    prob.f_ = std::move(f);
    return prob;
}

const HenonSpec& Problem::henon_spec() const {
    if (!is_henon_) throw std::logic_error("not a Henon problem");
    return hspec_;
}

double Problem::H(double u) const {
    if (u <= 0.0) return kInf;
    if (f_.kind == Nonlinearity::Kind::Power) {
        double lg = (1.0 - f_.p) * std::log(u);
        if (lg > 690.0) return kInf;
        return std::exp(lg);
    }
    double fv = f_(u);
    if (fv <= 0.0) return kInf;
    return u / fv;
}

double Problem::barrier(double r) const {
    if (is_henon_) return barrier_c(hspec_, r);
    return barrier_xi(*this, r);
}

double Problem::barrier_gap_sign(double r, double u) const {
    if (u <= 0.0) return -1.0;
    if (phi_.kind == Weight::Kind::Power && f_.kind == Nonlinearity::Kind::Power) {
        // sign(u - c(r)) = sign((p-1) ln u + alpha ln r)
        return (f_.p - 1.0) * std::log(u) + phi_.a * std::log(r);
    }
    // u > xi(r)  <=>  H(u) < phi(r)
    double h = H(u);
    double pv = phi_(r);
    if (std::isinf(h)) return -1.0;
    return pv - h;
}

double Problem::barrier_radius_estimate(double gamma) const {
    if (!(gamma > 0.0)) return kInf;
    double lnH;
    if (f_.kind == Nonlinearity::Kind::Power) {
        lnH = (1.0 - f_.p) * std::log(gamma);
    } else {
        double h = H(gamma);
        if (!(h > 0.0) || std::isinf(h)) return kInf;
        lnH = std::log(h);
    }
    if (phi_.kind == Weight::Kind::Power) {
        return std::exp(lnH / phi_.a);
    }
    // monotone bisection for phi(r) = exp(lnH) over log-spaced r
    double target = std::exp(std::min(lnH, 690.0));
    double lo = 1e-300, hi = 1e6;
    if (phi_(hi) < target) return kInf;
    if (phi_(lo) > target) return lo;
    for (int i = 0; i < 400; ++i) {
        double mid = std::sqrt(lo * hi);
        if (phi_(mid) < target)
            lo = mid;
        else
            hi = mid;
        if (hi / lo < 1.0 + 1e-12) break;
    }
    return std::sqrt(lo * hi);
}

std::string Problem::describe() const {
    std::ostringstream ss;
    if (is_henon_) {
        ss << "henon N=" << N_ << " alpha=" << fmt17(hspec_.alpha) << " p=" << fmt17(hspec_.p);
        return ss.str();
    }
    ss << "general N=" << N_ << " phi=";
    switch (phi_.kind) {
        case Weight::Kind::Power: ss << "r^" << fmt17(phi_.a); break;
        case Weight::Kind::PowerSum: ss << "r^" << fmt17(phi_.a) << "+r^" << fmt17(phi_.b); break;
        case Weight::Kind::Custom: ss << "custom"; break;
    }
    ss << " f=";
    switch (f_.kind) {
        case Nonlinearity::Kind::Power: ss << "s^" << fmt17(f_.p); break;
        case Nonlinearity::Kind::Exp: ss << "exp(" << fmt17(f_.g) << "*s^" << fmt17(f_.q) << ")-1"; break;
        case Nonlinearity::Kind::Custom: ss << "custom"; break;
    }
    return ss.str();
}

double critical_exponent(int N, double alpha) {
    if (N <= 2) throw std::invalid_argument("critical exponent undefined in this dimension");
    if (alpha < 0.0) throw std::invalid_argument("alpha must be nonnegative");
    return (N + 2 + 2.0 * alpha) / (N - 2);
}

double barrier_c(const HenonSpec& spec, double r) {
    if (!(r > 0.0)) throw std::domain_error("barrier requires r > 0");
    double beta = spec.alpha / (spec.p - 1.0);
    return std::exp(-beta * std::log(r));
}

double barrier_xi(const Problem& prob, double r) {
    if (!(r > 0.0)) throw std::domain_error("barrier requires r > 0");
    const double t = prob.phi(r);
    if (!(t > 0.0))
        throw std::runtime_error("xi evaluation failed: weight vanishes at this radius");
    // H decreases; find u_lo with H >= t and u_hi with H <= t
    double u_lo = 1.0, u_hi = 1.0;
    int guard = 0;
    while (prob.H(u_lo) < t) {
        u_lo /= 10.0;
        if (u_lo < 1e-300 || ++guard > 400) {
            if (std::fabs(prob.H(u_lo) - t) <= 1e-12 * t) return u_lo;
            throw std::runtime_error("xi evaluation failed: hypotheses likely violated");
        }
    }
    guard = 0;
    while (prob.H(u_hi) > t) {
        u_hi *= 10.0;
        if (u_hi > 1e300 || ++guard > 400) {
            if (std::fabs(prob.H(u_hi) - t) <= 1e-12 * t) return u_hi;
            throw std::runtime_error("xi evaluation failed: hypotheses likely violated");
        }
    }
    double best = u_lo;
    for (int i = 0; i < 400; ++i) {
        double mid = std::sqrt(u_lo * u_hi);
        double hv = prob.H(mid);
        best = mid;
        if (std::fabs(hv - t) <= 1e-13 * t) break;
        if (hv > t)
            u_lo = mid;
        else
            u_hi = mid;
        if (u_hi - u_lo <= 1e-16 * u_hi) {
            best = 0.5 * (u_lo + u_hi);
            break;
        }
    }
    if (std::fabs(prob.H(best) - t) > 1e-12 * t)
        throw std::runtime_error("xi evaluation failed: residual tolerance not met");
    return best;
}

double monotonicity_bound(int N, double alpha) {
    double m = N - 2.0;
    return alpha * (std::sqrt(m * m + 4.0) - m) / 2.0;
}

double subsolution_residual(const HenonSpec& spec, double r) {
    if (!(r > 0.0)) throw std::domain_error("subsolution residual requires r > 0");
    double beta = spec.alpha / (spec.p - 1.0);
    return std::pow(r, -beta - 2.0) * (r * r + beta * (spec.N - 2.0 - beta));
}

bool HypothesesReport::all_pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

const HypothesisCheck& HypothesesReport::check(const std::string& id) const {
    for (const auto& c : checks)
        if (c.id == id) return c;
    throw std::out_of_range("no such hypothesis: " + id);
}

HypothesesReport validate_hypotheses(const Problem& prob, const std::vector<double>& grid) {
    HypothesesReport rep;
    rep.ell = prob.ell();

    const size_t n = grid.size();
    // kappa = lim phi; unbounded for growing weights, else last-sample estimate
    rep.kappa_unbounded = prob.weight().unbounded_at_infinity();
    if (!rep.kappa_unbounded && n > 0) rep.kappa = prob.phi(grid[n - 1]);

    // h1: phi increasing on samples, phi(0) = ell >= 0
    {
        HypothesisCheck c{"h1", true, "", 0, 0};
        if (!(rep.ell >= 0.0) || std::isnan(rep.ell)) {
            c.pass = false;
            c.detail = "phi(0) is not a finite nonnegative value";
        }
        for (size_t i = 0; c.pass && i + 1 < n; ++i) {
            double va = prob.phi(grid[i]), vb = prob.phi(grid[i + 1]);
            if (vb < va * (1.0 - 1e-12) - 1e-300) {
                c.pass = false;
                c.detail = "weight decreases between samples";
                c.sample_a = grid[i];
                c.sample_b = grid[i + 1];
            }
        }
        if (c.pass) c.detail = "weight nondecreasing on all sample pairs";
        rep.checks.push_back(c);
    }

    // h2: f(s)/s strictly increasing on samples
    {
        HypothesisCheck c{"h2", true, "", 0, 0};
        for (size_t i = 0; c.pass && i + 1 < n; ++i) {
            double fa = prob.f(grid[i]), fb = prob.f(grid[i + 1]);
            if (fa >= kClamp && fb >= kClamp) continue;  // both clamped: indeterminate
            double ra = fa / grid[i], rb = fb / grid[i + 1];
            if (!(rb > ra)) {
                c.pass = false;
                c.detail = "f(s)/s not strictly increasing between samples";
                c.sample_a = grid[i];
                c.sample_b = grid[i + 1];
            }
        }
        if (c.pass) c.detail = "f(s)/s strictly increasing on all sample pairs";
        rep.checks.push_back(c);
    }

    // h3: f(s)/s -> 1/ell as s -> infinity (unbounded when ell = 0).
    // Trend is read off the last two samples where f is below the evaluation
    // ceiling; clamped values would fake a decreasing ratio.
    {
        HypothesisCheck c{"h3", true, "", 0, 0};
        size_t last = n;
        while (last > 0 && prob.f(grid[last - 1]) >= kClamp) --last;
        if (last >= 2) {
            double rN = prob.f(grid[last - 1]) / grid[last - 1];
            double rP = prob.f(grid[last - 2]) / grid[last - 2];
            if (rep.ell == 0.0) {
                if (!(rN > 1e3) || !(rN > rP)) {
                    c.pass = false;
                    c.detail = "f(s)/s does not trend to infinity at large samples";
                    c.sample_a = grid[last - 2];
                    c.sample_b = grid[last - 1];
                } else {
                    c.detail = "f(s)/s grows without bound at large samples (1/ell with ell=0)";
                }
            } else {
                double target = 1.0 / rep.ell;
                if (!(std::fabs(rN - target) <= 0.05 * target)) {
                    c.pass = false;
                    c.detail = "f(s)/s at the largest sample is far from 1/ell";
                    c.sample_a = grid[last - 2];
                    c.sample_b = grid[last - 1];
                } else {
                    c.detail = "f(s)/s approaches 1/ell at large samples";
                }
            }
        }
        rep.checks.push_back(c);
    }

    // h4: f(s)/s -> 1/kappa as s -> 0+ (zero when kappa unbounded)
    {
        HypothesisCheck c{"h4", true, "", 0, 0};
        if (n >= 2) {
            double r0 = prob.f(grid[0]) / grid[0];
            if (rep.kappa_unbounded) {
                if (!(r0 <= 1e-3)) {
                    c.pass = false;
                    c.detail = "f(s)/s does not vanish at small samples (kappa unbounded needs limit 0)";
                    c.sample_a = grid[0];
                    c.sample_b = grid[1];
                } else {
                    c.detail = "f(s)/s vanishes at small samples (1/kappa with kappa unbounded)";
                }
            } else {
                double target = 1.0 / rep.kappa;
                if (!(std::fabs(r0 - target) <= 0.05 * target)) {
                    c.pass = false;
                    c.detail = "f(s)/s at the smallest sample is far from 1/kappa";
                    c.sample_a = grid[0];
                    c.sample_b = grid[1];
                } else {
                    c.detail = "f(s)/s approaches 1/kappa at small samples";
                }
            }
        }
        rep.checks.push_back(c);
    }
    return rep;
}

HypothesesReport validate_hypotheses(const Problem& prob) {
    std::vector<double> grid;
    for (int i = 0; i <= 120; ++i) grid.push_back(std::pow(10.0, -6.0 + 0.1 * i));
    return validate_hypotheses(prob, grid);
}

namespace {
double kv_get_num(const std::map<std::string, std::string>& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::invalid_argument("missing config key: " + key);
    return parse_number(it->second);
}
double kv_get_num_or(const std::map<std::string, std::string>& kv, const std::string& key, double dflt) {
    auto it = kv.find(key);
    if (it == kv.end()) return dflt;
    return parse_number(it->second);
}
}  // namespace

Problem problem_from_config(const std::map<std::string, std::string>& kv) {
    int N = static_cast<int>(kv_get_num(kv, "N"));
    auto nl = kv.find("nonlinearity");
    if (nl == kv.end()) {
        return Problem::henon(N, kv_get_num(kv, "alpha"), kv_get_num(kv, "p"));
    }
    Weight phi;
    phi.a = kv_get_num(kv, "alpha");
    if (kv.count("beta")) {
        phi.kind = Weight::Kind::PowerSum;
        phi.b = kv_get_num(kv, "beta");
    } else {
        phi.kind = Weight::Kind::Power;
    }
    Nonlinearity f;
    if (nl->second == "power") {
        f.kind = Nonlinearity::Kind::Power;
        f.p = kv_get_num(kv, "p");
    } else if (nl->second == "exp") {
        f.kind = Nonlinearity::Kind::Exp;
        f.g = kv_get_num_or(kv, "gamma", 1.0);
        f.q = kv_get_num_or(kv, "q", 1.0);
        if (!(f.g > 0.0) || !(f.q > 0.0))
            throw std::invalid_argument("exp nonlinearity requires gamma > 0 and q > 0");
    } else if (nl->second == "custom") {
        throw std::invalid_argument("custom nonlinearity is not expressible in a config file; use the library API");
    } else {
        throw std::invalid_argument("unknown nonlinearity: " + nl->second);
    }
    return Problem::general(N, phi, f);
}

Problem problem_from_config_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    for (auto& [k, v] : parse_key_values(text)) kv[k] = v;
    return problem_from_config(kv);
}

std::string problem_to_config(const Problem& prob) {
    std::ostringstream ss;
    ss << "N = " << prob.N() << "\n";
    if (prob.is_henon()) {
        ss << "alpha = " << fmt17(prob.henon_spec().alpha) << "\n";
        ss << "p = " << fmt17(prob.henon_spec().p) << "\n";
        return ss.str();
    }
    const Weight& w = prob.weight();
    switch (w.kind) {
        case Weight::Kind::Power:
            ss << "alpha = " << fmt17(w.a) << "\n";
            break;
        case Weight::Kind::PowerSum:
            ss << "alpha = " << fmt17(w.a) << "\n";
            ss << "beta = " << fmt17(w.b) << "\n";
            break;
        case Weight::Kind::Custom:
            throw std::invalid_argument("custom weight is not serializable to config");
    }
    const Nonlinearity& f = prob.nonlinearity();
    switch (f.kind) {
        case Nonlinearity::Kind::Power:
            ss << "nonlinearity = power\n";
            ss << "p = " << fmt17(f.p) << "\n";
            break;
        case Nonlinearity::Kind::Exp:
            ss << "nonlinearity = exp\n";
            ss << "gamma = " << fmt17(f.g) << "\n";
            ss << "q = " << fmt17(f.q) << "\n";
            break;
        case Nonlinearity::Kind::Custom:
            throw std::invalid_argument("custom nonlinearity is not serializable to config");
    }
    return ss.str();
}

}  // namespace radshoot
