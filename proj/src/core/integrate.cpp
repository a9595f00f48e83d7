#include "core/integrate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "core/format.hpp"

namespace radshoot {

namespace {

using Vec2 = std::array<double, 2>;

// Dormand-Prince 5(4) tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                 a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

constexpr double kHuge = 1e300;

double finite_or(double v, double fallback) {
    return std::isfinite(v) ? v : fallback;
}

struct Rhs {
    const Problem& prob;
    Vec2 operator()(double r, const Vec2& y) const {
        double u = y[0], v = y[1];
        double w = prob.phi(r) * prob.f(u > 0.0 ? u : 0.0);
        if (!std::isfinite(w)) w = kHuge;
        double dv = -(prob.N() - 1) * v / r + u - w;
        return {v, finite_or(dv, dv > 0 ? kHuge : -kHuge)};
    }
};

// Dense-output polynomial for one accepted step
struct DenseStep {
    double r0, h;
    Vec2 rcont1, rcont2, rcont3, rcont4, rcont5;
    Vec2 eval(double theta) const {
        double th1 = 1.0 - theta;
        Vec2 out;
        for (int i = 0; i < 2; ++i)
            out[i] = rcont1[i] +
                     theta * (rcont2[i] + th1 * (rcont3[i] + theta * (rcont4[i] + th1 * rcont5[i])));
        return out;
    }
    double r_at(double theta) const { return r0 + theta * h; }
};

struct EventChannel {
    EventKind kind;
    bool terminal;
    // returns a value whose sign flips at the event
    double (*fn)(const Problem&, double r, double u, double v, double cap);
};

double fn_stationary(const Problem&, double, double, double v, double) { return v; }
double fn_barrier(const Problem& p, double r, double u, double, double) {
    return p.barrier_gap_sign(r, u);
}
double fn_positivity(const Problem&, double, double u, double, double) { return u; }
double fn_blowup(const Problem&, double, double u, double, double cap) { return u - cap; }

constexpr int kSubSamples = 8;

}  // namespace

const char* to_string(Termination t) {
    switch (t) {
        case Termination::ReachedRMax: return "reached_r_max";
        case Termination::BlowUp: return "blow_up";
        case Termination::PositivityLoss: return "positivity_loss";
        case Termination::StepFailure: return "step_failure";
    }
    return "?";
}

const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::Stationary: return "stationary";
        case EventKind::BarrierCrossing: return "barrier_crossing";
        case EventKind::BlowUp: return "blow_up";
        case EventKind::PositivityLoss: return "positivity_loss";
    }
    return "?";
}

std::vector<double> Trajectory::stationary_radii() const {
    std::vector<double> out;
    for (const auto& e : events)
        if (e.kind == EventKind::Stationary) out.push_back(e.r);
    return out;
}

const Event* Trajectory::nth_stationary(int n) const {
    int seen = 0;
    for (const auto& e : events)
        if (e.kind == EventKind::Stationary && ++seen == n) return &e;
    return nullptr;
}

const Event* Trajectory::first_of(EventKind kind) const {
    for (const auto& e : events)
        if (e.kind == kind) return &e;
    return nullptr;
}

std::optional<Node> Trajectory::node_at(double r, double tol) const {
    for (const auto& n : nodes)
        if (std::fabs(n.r - r) <= tol) return n;
    return std::nullopt;
}

std::pair<double, double> series_start(const Problem& prob, double gamma, double r_start) {
    const double r = r_start;
    const int N = prob.N();
    const Weight& w = prob.weight();
    const double fg = prob.f(gamma);
    if (w.kind == Weight::Kind::Power || w.kind == Weight::Kind::PowerSum) {
        double u = gamma + gamma * r * r / (2.0 * N);
        double v = gamma * r / N;
        auto add_term = [&](double a) {
            double rp = std::exp((1.0 + a) * std::log(r));
            v -= fg * rp / (N + a);
            u -= fg * rp * r / ((2.0 + a) * (N + a));
        };
        add_term(w.a);
        if (w.kind == Weight::Kind::PowerSum) add_term(w.b);
        return {u, v};
    }
    double c2coef = gamma - prob.ell() * fg;
    return {gamma + c2coef * r * r / (2.0 * N), c2coef * r / N};
}

double choose_r_start(const Problem& prob, double gamma, double r_start_cap) {
    double est = prob.barrier_radius_estimate(gamma);
    double eff = r_start_cap;
    if (std::isfinite(est)) eff = std::min(eff, 0.1 * est);
    return std::max(eff, 1e-280);
}

Trajectory integrate(const Problem& prob, double gamma, double r_max,
                     const IntegratorOptions& opts) {
    if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
    Trajectory traj;
    traj.problem = prob;
    traj.gamma = gamma;

    const double r0_eff = choose_r_start(prob, gamma, opts.r_start);
    traj.r_start_effective = r0_eff;
    if (!(r_max > r0_eff)) throw std::invalid_argument("r_max must exceed the start radius");

    auto [u0, v0] = series_start(prob, gamma, r0_eff);
    double r = r0_eff;
    Vec2 y{u0, v0};
    traj.nodes.push_back({r, y[0], y[1]});

    const Rhs rhs{prob};

    // immediate classification when the start already violates the class bounds
    if (y[0] >= opts.blow_up_cap) {
        traj.events.push_back({EventKind::BlowUp, 1, r, y[0], rhs(r, y)[1], false});
        traj.termination = Termination::BlowUp;
        return traj;
    }

    std::vector<double> cps = opts.checkpoints;
    std::sort(cps.begin(), cps.end());

    const std::array<EventChannel, 4> channels{{
        {EventKind::Stationary, false, fn_stationary},
        {EventKind::BarrierCrossing, false, fn_barrier},
        {EventKind::PositivityLoss, true, fn_positivity},
        {EventKind::BlowUp, true, fn_blowup},
    }};
    std::array<int, 4> event_counts{0, 0, 0, 0};
    std::array<double, 4> last_event_r{-1.0, -1.0, -1.0, -1.0};

    double h = 0.01 * r0_eff;
    Vec2 k1 = rhs(r, y);
    bool rejected_last = false;
    long steps = 0;

    auto accel = [&](double rr, const Vec2& yy) { return rhs(rr, yy)[1]; };

    while (r < r_max) {
        if (++steps > opts.max_steps) {
            traj.termination = Termination::StepFailure;
            return traj;
        }
        // land exactly on r_max and on any requested checkpoints
        double target = r_max;
        for (double cp : cps)
            if (cp > r * (1.0 + 1e-15) && cp < target) target = cp;
        if (r + h >= target) h = target - r;
        if (!(h > 0) || h < r * 1e-15 || h < 1e-305) {
            traj.termination = Termination::StepFailure;
            return traj;
        }

        // one Dormand-Prince attempt (k1 carried over: FSAL)
        Vec2 k2, k3, k4, k5, k6, k7, yt, y1;
        auto stage = [&](double c, const Vec2& incr) {
            yt = {y[0] + h * incr[0], y[1] + h * incr[1]};
            return rhs(r + c * h, yt);
        };
        k2 = stage(c2, {a21 * k1[0], a21 * k1[1]});
        k3 = stage(c3, {a31 * k1[0] + a32 * k2[0], a31 * k1[1] + a32 * k2[1]});
        k4 = stage(c4, {a41 * k1[0] + a42 * k2[0] + a43 * k3[0],
                        a41 * k1[1] + a42 * k2[1] + a43 * k3[1]});
        k5 = stage(c5, {a51 * k1[0] + a52 * k2[0] + a53 * k3[0] + a54 * k4[0],
                        a51 * k1[1] + a52 * k2[1] + a53 * k3[1] + a54 * k4[1]});
        k6 = stage(1.0, {a61 * k1[0] + a62 * k2[0] + a63 * k3[0] + a64 * k4[0] + a65 * k5[0],
                         a61 * k1[1] + a62 * k2[1] + a63 * k3[1] + a64 * k4[1] + a65 * k5[1]});
        for (int i = 0; i < 2; ++i)
            y1[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        k7 = rhs(r + h, y1);

        double errnorm = 0.0;
        for (int i = 0; i < 2; ++i) {
            double erri = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                               e7 * k7[i]);
            double sc = opts.abs_tol + opts.rel_tol * std::max(std::fabs(y[i]), std::fabs(y1[i]));
            errnorm += (erri / sc) * (erri / sc);
        }
        errnorm = std::sqrt(errnorm / 2.0);
        if (!std::isfinite(errnorm)) errnorm = 1e10;

        if (errnorm > 1.0) {
            double fac = std::max(0.2, 0.9 * std::pow(errnorm, -0.2));
            h *= fac;
            rejected_last = true;
            continue;
        }

        // accepted: dense output over [r, r+h]
        DenseStep ds;
        ds.r0 = r;
        ds.h = h;
        for (int i = 0; i < 2; ++i) {
            double dy = y1[i] - y[i];
            ds.rcont1[i] = y[i];
            ds.rcont2[i] = dy;
            ds.rcont3[i] = h * k1[i] - dy;
            ds.rcont4[i] = dy - h * k7[i] - ds.rcont3[i];
            ds.rcont5[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] +
                                d7 * k7[i]);
        }

        // locate events by sign scan on the dense interpolant + bisection
        struct Located {
            int channel;
            double theta, r, u, v;
        };
        std::vector<Located> found;
        std::array<double, kSubSamples + 1> thetas, rs;
        std::array<Vec2, kSubSamples + 1> ys;
        for (int j = 0; j <= kSubSamples; ++j) {
            thetas[j] = static_cast<double>(j) / kSubSamples;
            ys[j] = j == 0 ? y : (j == kSubSamples ? y1 : ds.eval(thetas[j]));
            rs[j] = ds.r_at(thetas[j]);
        }
        for (size_t ci = 0; ci < channels.size(); ++ci) {
            const auto& ch = channels[ci];
            if (ch.kind == EventKind::BlowUp && y[0] < 0.5 * opts.blow_up_cap &&
                y1[0] < 0.5 * opts.blow_up_cap)
                continue;  // cheap skip far from the cap
            double g_prev = ch.fn(prob, rs[0], ys[0][0], ys[0][1], opts.blow_up_cap);
            for (int j = 1; j <= kSubSamples; ++j) {
                double g_here = ch.fn(prob, rs[j], ys[j][0], ys[j][1], opts.blow_up_cap);
                if ((g_prev < 0) != (g_here < 0) && (g_prev != 0.0 || g_here != 0.0)) {
                    double ta = thetas[j - 1], tb = thetas[j];
                    bool neg_a = g_prev < 0;
                    for (int it = 0; it < 100; ++it) {
                        double width = (tb - ta) * h;
                        double tm = 0.5 * (ta + tb);
                        if (width <= opts.event_r_tol || width <= 1e-15 * ds.r_at(tm)) break;
                        Vec2 ym = ds.eval(tm);
                        double gm = ch.fn(prob, ds.r_at(tm), ym[0], ym[1], opts.blow_up_cap);
                        if ((gm < 0) == neg_a)
                            ta = tm;
                        else
                            tb = tm;
                    }
                    double t_ev = 0.5 * (ta + tb);
                    Vec2 y_ev = ds.eval(t_ev);
                    double r_ev = ds.r_at(t_ev);
                    if (r_ev > last_event_r[ci] + std::max(opts.event_r_tol, 1e-14 * r_ev))
                        found.push_back({static_cast<int>(ci), t_ev, r_ev, y_ev[0], y_ev[1]});
                }
                g_prev = g_here;
            }
        }
        std::sort(found.begin(), found.end(),
                  [](const Located& a, const Located& b) { return a.r < b.r; });

        bool terminated = false;
        for (const auto& ev : found) {
            const auto& ch = channels[ev.channel];
            last_event_r[ev.channel] = ev.r;
            double u2 = accel(ev.r, {ev.u, ev.v});
            Event rec{ch.kind, ++event_counts[ev.channel], ev.r, ev.u, u2, false};
            if (ch.kind == EventKind::Stationary && std::fabs(u2) < opts.degenerate_tol)
                rec.degenerate = true;
            traj.events.push_back(rec);
            if (ch.terminal) {
                traj.nodes.push_back({ev.r, ev.u, ev.v});
                traj.termination = ch.kind == EventKind::BlowUp ? Termination::BlowUp
                                                                : Termination::PositivityLoss;
                terminated = true;
                break;
            }
            traj.nodes.push_back({ev.r, ev.u, ev.v});
        }
        if (terminated) return traj;

        r += h;
        if (std::fabs(r - target) < 1e-15 * target) r = target;  // land exactly
        y = y1;
        k1 = k7;
        if (traj.nodes.back().r < r * (1.0 - 1e-16))
            traj.nodes.push_back({r, y[0], y[1]});

        double fac = errnorm > 0.0 ? 0.9 * std::pow(errnorm, -0.2) : 10.0;
        double facmax = rejected_last ? 1.0 : 10.0;
        h *= std::min(facmax, std::max(0.2, fac));
        rejected_last = false;
    }

    traj.termination = Termination::ReachedRMax;
    return traj;
}

double verify_integral_identity(const Trajectory& traj) {
    const Problem& prob = traj.problem;
    const int N = prob.N();
    const auto& nodes = traj.nodes;
    if (nodes.empty()) return 0.0;

    auto g_val = [&](const Node& n) {
        return std::pow(n.r, N - 1) * (n.u - prob.phi(n.r) * prob.f(std::max(n.u, 0.0)));
    };
    auto g_deriv = [&](const Node& n) {
        double u = std::max(n.u, 0.0);
        double pf = prob.phi(n.r) * prob.f(u);
        double inner = n.u - pf;
        double d_inner = n.uprime - prob.phi_deriv(n.r) * prob.f(u) -
                         prob.phi(n.r) * prob.f_deriv(u) * n.uprime;
        return (N - 1) * std::pow(n.r, N - 2) * inner + std::pow(n.r, N - 1) * d_inner;
    };

    // integral over [0, r_start] from the series: u ~ gamma there
    const double r0 = nodes.front().r;
    const double fg = prob.f(traj.gamma);
    double integral = traj.gamma * std::pow(r0, N) / N;
    const Weight& w = prob.weight();
    if (w.kind == Weight::Kind::Power || w.kind == Weight::Kind::PowerSum) {
        integral -= fg * std::exp((N + w.a) * std::log(r0)) / (N + w.a);
        if (w.kind == Weight::Kind::PowerSum)
            integral -= fg * std::exp((N + w.b) * std::log(r0)) / (N + w.b);
    } else {
        integral -= prob.ell() * fg * std::pow(r0, N) / N;
    }

    // Corrected trapezoid is O(h^5) per interval; over thousands of adaptive
    // steps the signed error accumulates past 1e-6 on long trajectories.
    // Splitting each interval at quarter points reconstructed by quintic
    // Hermite (u'' comes exactly from the equation) buys a ~256x reduction.
    const Rhs rhs{prob};
    auto quarter = [&](double hh, double gva, double gvb, double gda, double gdb) {
        return 0.5 * hh * (gva + gvb) + hh * hh / 12.0 * (gda - gdb);
    };

    double A0 = std::pow(nodes.front().r, N - 1) * nodes.front().uprime;
    double worst = std::fabs(A0 - integral) / (1.0 + std::fabs(A0));
    for (size_t i = 1; i < nodes.size(); ++i) {
        const Node& a = nodes[i - 1];
        const Node& b = nodes[i];
        double h = b.r - a.r;
        double sa = rhs(a.r, {a.u, a.uprime})[1];
        double sb = rhs(b.r, {b.u, b.uprime})[1];
        if (std::fabs(sa) < 1e30 && std::fabs(sb) < 1e30) {
            auto interior = [&](double th) {
                double t2 = th * th, t3 = t2 * th, t4 = t3 * th, t5 = t4 * th;
                double u = (1 - 10 * t3 + 15 * t4 - 6 * t5) * a.u +
                           (10 * t3 - 15 * t4 + 6 * t5) * b.u +
                           h * ((th - 6 * t3 + 8 * t4 - 3 * t5) * a.uprime +
                                (-4 * t3 + 7 * t4 - 3 * t5) * b.uprime) +
                           h * h * ((0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5) * sa +
                                    (0.5 * t3 - t4 + 0.5 * t5) * sb);
                double up = ((-30 * t2 + 60 * t3 - 30 * t4) * a.u +
                             (30 * t2 - 60 * t3 + 30 * t4) * b.u) /
                                h +
                            (1 - 18 * t2 + 32 * t3 - 15 * t4) * a.uprime +
                            (-12 * t2 + 28 * t3 - 15 * t4) * b.uprime +
                            h * ((th - 4.5 * t2 + 6 * t3 - 2.5 * t4) * sa +
                                 (1.5 * t2 - 4 * t3 + 2.5 * t4) * sb);
                return Node{a.r + th * h, u, up};
            };
            Node pts[5] = {a, interior(0.25), interior(0.5), interior(0.75), b};
            for (int k = 0; k < 4; ++k)
                integral += quarter(pts[k + 1].r - pts[k].r, g_val(pts[k]), g_val(pts[k + 1]),
                                    g_deriv(pts[k]), g_deriv(pts[k + 1]));
        } else {
            integral += quarter(h, g_val(a), g_val(b), g_deriv(a), g_deriv(b));
        }
        double A = std::pow(b.r, N - 1) * b.uprime;
        double resid = std::fabs(A - integral) / (1.0 + std::fabs(A));
        worst = std::max(worst, resid);
    }
    return worst;
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path,
                          const std::string& events_path, double skip_below) {
    std::string out = "r,u,uprime\n";
    for (const auto& n : traj.nodes) {
        if (n.r < skip_below) continue;
        out += fmt17(n.r);
        out += ',';
        out += fmt17(n.u);
        out += ',';
        out += fmt17(n.uprime);
        out += '\n';
    }
    atomic_write(path, out);

    if (!events_path.empty()) {
        std::string ev = "kind,index,r,u,second_derivative\n";
        for (const auto& e : traj.events) {
            if (e.r < skip_below) continue;
            ev += to_string(e.kind);
            ev += ',';
            ev += std::to_string(e.index);
            ev += ',';
            ev += fmt17(e.r);
            ev += ',';
            ev += fmt17(e.u);
            ev += ',';
            ev += fmt17(e.second_derivative);
            ev += '\n';
        }
        atomic_write(events_path, ev);
    }
}

void write_trajectory_json(const Trajectory& traj, const std::string& path) {
    JsonWriter jw;
    jw.begin_object();
    jw.key("spec").value(traj.problem.describe());
    jw.key("gamma").value(traj.gamma);
    jw.key("r_start").value(traj.r_start_effective);
    jw.key("termination").value(to_string(traj.termination));
    jw.key("nodes").begin_array();
    for (const auto& n : traj.nodes) {
        jw.begin_array().value(n.r).value(n.u).value(n.uprime).end_array();
    }
    jw.end_array();
    jw.key("events").begin_array();
    for (const auto& e : traj.events) {
        jw.begin_object();
        jw.key("kind").value(to_string(e.kind));
        jw.key("index").value(e.index);
        jw.key("r").value(e.r);
        jw.key("u").value(e.u);
        jw.key("second_derivative").value(e.second_derivative);
        jw.key("degenerate").value(e.degenerate);
        jw.end_object();
    }
    jw.end_array();
    jw.end_object();
    atomic_write(path, jw.str() + "\n");
}

Trajectory read_trajectory_csv(const Problem& prob, double gamma, const std::string& path,
                               const std::string& events_path) {
    Trajectory traj;
    traj.problem = prob;
    traj.gamma = gamma;
    traj.termination = Termination::ReachedRMax;

    std::istringstream ss(read_file(path));
    std::string line;
    bool header = true;
    while (std::getline(ss, line)) {
        line = trim(line);
        if (line.empty()) continue;
        if (header) {
            if (line != "r,u,uprime") throw std::invalid_argument("unexpected trajectory header: " + line);
            header = false;
            continue;
        }
        Node n{};
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &n.r, &n.u, &n.uprime) != 3)
            throw std::invalid_argument("bad trajectory row: " + line);
        if (!traj.nodes.empty() && n.r <= traj.nodes.back().r)
            throw std::invalid_argument("nodes not strictly increasing");
        traj.nodes.push_back(n);
    }
    if (traj.nodes.empty()) throw std::invalid_argument("empty trajectory file");
    traj.r_start_effective = traj.nodes.front().r;

    if (!events_path.empty()) {
        std::istringstream es(read_file(events_path));
        header = true;
        while (std::getline(es, line)) {
            line = trim(line);
            if (line.empty()) continue;
            if (header) {
                header = false;
                continue;
            }
            char kindbuf[64];
            Event e{};
            int idx = 0;
            if (std::sscanf(line.c_str(), "%63[^,],%d,%lf,%lf,%lf", kindbuf, &idx, &e.r, &e.u,
                            &e.second_derivative) != 5)
                throw std::invalid_argument("bad event row: " + line);
            e.index = idx;
            std::string kind = kindbuf;
            if (kind == "stationary")
                e.kind = EventKind::Stationary;
            else if (kind == "barrier_crossing")
                e.kind = EventKind::BarrierCrossing;
            else if (kind == "blow_up")
                e.kind = EventKind::BlowUp;
            else if (kind == "positivity_loss")
                e.kind = EventKind::PositivityLoss;
            else
                throw std::invalid_argument("unknown event kind: " + kind);
            if (!traj.events.empty() && e.r < traj.events.back().r)
                throw std::invalid_argument("events not ordered by radius");
            traj.events.push_back(e);
        }
    }
    return traj;
}

}  // namespace radshoot
