#include "core/shooting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "core/format.hpp"

namespace radshoot {

namespace {

constexpr double kHorizonStart = 10.0;
constexpr double kHorizonCap = 1e4;
constexpr double kExtendLo = 1e-8;
constexpr double kExtendHi = 1e8;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Sign of R^n - 1 for bracketing; 0 marks a record unusable for this n.
int record_sign(const ScanRecord& rec, int n) {
    if (static_cast<size_t>(n) <= rec.stationary_radii.size())
        return rec.stationary_radii[n - 1] > 1.0 ? +1 : -1;
    return n == 1 ? +1 : 0;
}

}  // namespace

MapResult first_stationary_map(const Problem& prob, double gamma, const IntegratorOptions& opts) {
    double horizon = kHorizonStart;
    for (;;) {
        Trajectory t = integrate(prob, gamma, horizon, opts);
        if (const Event* e = t.nth_stationary(1)) return {MapOutcome::Found, e->r};
        if (t.termination == Termination::StepFailure) return {MapOutcome::Undetermined, 0.0};
        if (t.termination != Termination::ReachedRMax) return {MapOutcome::None, 0.0};
        if (horizon >= kHorizonCap) return {MapOutcome::None, 0.0};
        horizon = std::min(2.0 * horizon, kHorizonCap);
    }
}

MapResult nth_stationary_map(const Problem& prob, double gamma, int n, double r_max,
                             const IntegratorOptions& opts) {
    if (n < 1) throw std::invalid_argument("n must be at least 1");
    Trajectory t = integrate(prob, gamma, r_max, opts);
    if (t.termination == Termination::StepFailure && !t.nth_stationary(n))
        return {MapOutcome::Undetermined, 0.0};
    if (const Event* e = t.nth_stationary(n)) return {MapOutcome::Found, e->r};
    return {MapOutcome::None, 0.0};
}

GammaScan scan(const Problem& prob, double gamma_min, double gamma_max, int points, double r_max,
               const IntegratorOptions& opts) {
    if (!(gamma_min > 0.0) || !(gamma_min < gamma_max))
        throw std::invalid_argument("scan range must satisfy 0 < gamma_min < gamma_max");
    if (points < 2) throw std::invalid_argument("scan needs at least 2 points");

    GammaScan out;
    out.problem = prob;
    out.r_max = r_max;
    out.records.reserve(points);
    const double llo = std::log(gamma_min), lhi = std::log(gamma_max);
    for (int i = 0; i < points; ++i) {
        double g = std::exp(llo + (lhi - llo) * i / (points - 1));
        if (i == 0) g = gamma_min;
        if (i == points - 1) g = gamma_max;
        ScanRecord rec;
        rec.gamma = g;
        Trajectory t = integrate(prob, g, r_max, opts);
        rec.stationary_radii = t.stationary_radii();
        rec.termination = t.termination;
        out.records.push_back(std::move(rec));
    }
    return out;
}

Bracket bracket_target(const Problem& prob, int n, const GammaScan& sc) {
    if (n < 1) throw std::invalid_argument("n must be at least 1");
    const auto& recs = sc.records;
    int prev_sign = 0;
    double prev_gamma = 0.0;
    for (const auto& rec : recs) {
        int s = record_sign(rec, n);
        if (s != 0 && prev_sign != 0 && s != prev_sign) return {prev_gamma, rec.gamma};
        if (s != 0) {
            prev_sign = s;
            prev_gamma = rec.gamma;
        } else {
            prev_sign = 0;  // n > 1: endpoints must be consecutive usable records
        }
    }

    if (n == 1 && !recs.empty()) {
        // Every record has a sign when n = 1; a missing change means the whole
        // scan sits on one side. Extend toward the side that must flip.
        int s_all = record_sign(recs.front(), 1);
        auto probe_sign = [&](double g) -> int {
            MapResult mr = first_stationary_map(prob, g);
            if (mr.outcome == MapOutcome::Found) return mr.R > 1.0 ? +1 : -1;
            if (mr.outcome == MapOutcome::None) return +1;
            return 0;  // undetermined: skip this decade
        };
        if (s_all < 0) {
            double anchor = recs.front().gamma;
            for (double g = anchor / 10.0; g >= kExtendLo * (1.0 - 1e-12); g /= 10.0) {
                int s = probe_sign(g);
                if (s > 0) return {g, anchor};
                if (s < 0) anchor = g;
            }
        } else {
            double anchor = recs.back().gamma;
            for (double g = anchor * 10.0; g <= kExtendHi * (1.0 + 1e-12); g *= 10.0) {
                int s = probe_sign(g);
                if (s < 0) return {anchor, g};
                if (s > 0) anchor = g;
            }
        }
    }
    throw NoBracketError("no bracket: target index may not be attainable for these parameters");
}

namespace {

// R^n at the bisection phase's working tolerances; +inf encodes "beyond the
// horizon" (meaningful for n = 1, and on the tight pass where the horizon is
// barely above 1).
double map_value(const Problem& prob, double gamma, int n, const ShootOptions& opts,
                 const IntegratorOptions& integ, bool tight, double tight_r_max) {
    if (tight) {
        Trajectory t = integrate(prob, gamma, tight_r_max, integ);
        if (const Event* e = t.nth_stationary(n)) return e->r;
        if (t.termination == Termination::ReachedRMax) return kInf;
        if (t.termination == Termination::StepFailure)
            throw std::runtime_error("stationary map undetermined (step failure) at gamma=" +
                                     fmt17(gamma));
        throw NoBracketError("target index lost inside bracket: gamma=" + fmt17(gamma) +
                             " terminated by " + to_string(t.termination) + " before " +
                             std::to_string(n) + " stationary points");
    }
    MapResult mr = n == 1 ? first_stationary_map(prob, gamma, integ)
                          : nth_stationary_map(prob, gamma, n, opts.r_max, integ);
    if (mr.outcome == MapOutcome::Found) return mr.R;
    if (mr.outcome == MapOutcome::Undetermined)
        throw std::runtime_error("stationary map undetermined (step failure) at gamma=" +
                                 fmt17(gamma));
    if (n == 1) return kInf;
    throw NoBracketError("target index lost inside bracket: gamma=" + fmt17(gamma) +
                         " has fewer than " + std::to_string(n) +
                         " stationary points within r_max=" + fmt17(opts.r_max));
}

}  // namespace

ShootingResult shoot(const Problem& prob, int n, const ShootOptions& opts) {
    if (n < 1) throw std::invalid_argument("n must be at least 1");
    const double tol = opts.tol;
    if (!(tol >= 1e-9))
        throw std::invalid_argument("tol must be at least 1e-9 (integrator noise floor)");

    GammaScan sc = scan(prob, opts.scan_min, opts.scan_max, opts.scan_points, opts.r_max,
                        opts.integ);
    Bracket br = bracket_target(prob, n, sc);

    double lo = br.lo, hi = br.hi;
    const bool lo_above = map_value(prob, lo, n, opts, opts.integ, false, 0.0) > 1.0;
    const bool hi_above = map_value(prob, hi, n, opts, opts.integ, false, 0.0) > 1.0;
    if (lo_above == hi_above)
        throw std::runtime_error("bracket endpoints do not straddle the target radius");

    int iters = 0;
    double g_star = 0.5 * (lo + hi);
    for (;;) {
        if (++iters > 200)
            throw std::runtime_error("bisection failed to reach tolerance within 200 iterations");
        double mid = 0.5 * (lo + hi);
        double Rm = map_value(prob, mid, n, opts, opts.integ, false, 0.0);
        if (std::isfinite(Rm) && std::fabs(Rm - 1.0) < tol) {
            g_star = mid;
            break;
        }
        if ((Rm > 1.0) == lo_above)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, hi))
            throw std::runtime_error("bracket collapsed before reaching tolerance; the map may be "
                                     "discontinuous at this index");
    }

    IntegratorOptions tight = opts.integ;
    tight.rel_tol = 1e-12;
    tight.abs_tol = 1e-12;
    tight.checkpoints.push_back(1.0);
    const double tight_r_max = std::max(1.05, 1.0 + 2.0 * tol);

    auto tight_traj = [&](double g) { return integrate(prob, g, tight_r_max, tight); };

    Trajectory traj = tight_traj(g_star);
    const Event* ev = traj.nth_stationary(n);
    if (!ev || !(std::fabs(ev->r - 1.0) < tol)) {
        // The coarse root drifted past tol under re-integration. When the
        // trajectory collapses through a deep spike the map loses many digits
        // and the drift can exceed the loose bracket itself, so first make
        // sure the bracket straddles under the tightened map, expanding
        // geometrically if it does not.
        auto tmap = [&](double g) { return map_value(prob, g, n, opts, tight, true, tight_r_max); };
        bool t_lo_above = tmap(lo) > 1.0;
        bool t_hi_above = tmap(hi) > 1.0;
        bool side_above = t_lo_above;
        if (t_lo_above == t_hi_above) {
            double L = lo, H = hi;
            bool low_dead = false, high_dead = false, found = false;
            while (!found && (!low_dead || !high_dead)) {
                if (++iters > 700)
                    throw std::runtime_error("bisection stalled below the requested tolerance");
                if (!low_dead) {
                    if (L <= 1e-8) {
                        low_dead = true;
                    } else {
                        double Ln = std::max(L / 1.5, 1e-8);
                        try {
                            bool a = tmap(Ln) > 1.0;
                            if (a != t_lo_above) {
                                lo = Ln;
                                hi = L;
                                side_above = a;
                                found = true;
                            } else {
                                L = Ln;
                            }
                        } catch (const NoBracketError&) {
                            low_dead = true;
                        }
                    }
                }
                if (!found && !high_dead) {
                    if (H >= 1e8) {
                        high_dead = true;
                    } else {
                        double Hn = std::min(H * 1.5, 1e8);
                        try {
                            bool a = tmap(Hn) > 1.0;
                            if (a != t_hi_above) {
                                lo = H;
                                hi = Hn;
                                side_above = t_hi_above;
                                found = true;
                            } else {
                                H = Hn;
                            }
                        } catch (const NoBracketError&) {
                            high_dead = true;
                        }
                    }
                }
            }
            if (!found)
                throw NoBracketError("bracket lost under tight re-verification: the " +
                                     std::to_string(n) +
                                     "-th stationary radius stays on one side of 1 near the "
                                     "coarse root");
        }
        for (;;) {
            if (++iters > 700)
                throw std::runtime_error("bisection stalled below the requested tolerance");
            double mid = 0.5 * (lo + hi);
            double Rm = tmap(mid);
            if (std::isfinite(Rm) && std::fabs(Rm - 1.0) < tol) {
                g_star = mid;
                break;
            }
            if ((Rm > 1.0) == side_above)
                lo = mid;
            else
                hi = mid;
            if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, hi))
                throw std::runtime_error("bracket collapsed before reaching tolerance; the map "
                                         "noise floor may exceed tol at this index");
        }
        traj = tight_traj(g_star);
        ev = traj.nth_stationary(n);
        if (!ev) throw std::runtime_error("re-integration lost the target stationary point");
    }

    ShootingResult res;
    res.gamma_star = g_star;
    res.n = n;
    res.achieved_R = ev->r;
    res.residual = std::fabs(ev->r - 1.0);
    res.trajectory = std::move(traj);
    res.bracket_lo = lo;
    res.bracket_hi = hi;
    res.iterations = iters;
    return res;
}

ShootingResult shoot(const Problem& prob, int n, double tol) {
    ShootOptions opts;
    opts.tol = tol;
    return shoot(prob, n, opts);
}

void write_scan_csv(const GammaScan& sc, const std::string& path) {
    size_t width = 1;
    for (const auto& rec : sc.records) width = std::max(width, rec.stationary_radii.size());
    std::string out = "gamma";
    for (size_t i = 1; i <= width; ++i) out += ",R" + std::to_string(i);
    out += ",termination\n";
    for (const auto& rec : sc.records) {
        out += fmt17(rec.gamma);
        for (size_t i = 0; i < width; ++i) {
            out += ',';
            if (i < rec.stationary_radii.size()) out += fmt17(rec.stationary_radii[i]);
        }
        out += ',';
        out += to_string(rec.termination);
        out += '\n';
    }
    atomic_write(path, out);
}

void write_shooting_result_json(const ShootingResult& res, const std::string& path) {
    JsonWriter jw;
    jw.begin_object();
    jw.key("spec");
    if (res.trajectory.problem.is_henon()) {
        const HenonSpec& hs = res.trajectory.problem.henon_spec();
        jw.begin_object();
        jw.key("kind").value("henon");
        jw.key("N").value(hs.N);
        jw.key("alpha").value(hs.alpha);
        jw.key("p").value(hs.p);
        jw.end_object();
    } else {
        jw.begin_object();
        jw.key("kind").value("general");
        jw.key("description").value(res.trajectory.problem.describe());
        jw.end_object();
    }
    jw.key("n").value(res.n);
    jw.key("gamma_star").value(res.gamma_star);
    jw.key("achieved_R").value(res.achieved_R);
    jw.key("residual").value(res.residual);
    jw.key("bracket").begin_array().value(res.bracket_lo).value(res.bracket_hi).end_array();
    jw.end_object();
    atomic_write(path, jw.str() + "\n");
}

}  // namespace radshoot
