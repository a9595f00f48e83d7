#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/format.hpp"
#include "core/integrate.hpp"
#include "doctest.h"
#include "json.hpp"

using namespace radshoot;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int stationary_count_in(const Trajectory& t, double lo, double hi) {
    int n = 0;
    for (const auto& e : t.events)
        if (e.kind == EventKind::Stationary && e.r >= lo && e.r <= hi) ++n;
    return n;
}

}  // namespace

TEST_CASE("series start matches the leading closed form") {
    Problem prob = Problem::henon(3, 3.0, 5.0);
    auto [u, up] = series_start(prob, 1.0, 1e-6);
    // u' = gamma r / N - f(gamma) r^{1+alpha}/(N+alpha); the correction is ~1e-24
    CHECK(up == doctest::Approx(1e-6 / 3.0).epsilon(1e-12));
    CHECK(u == doctest::Approx(1.0 + 1e-12 / 6.0).epsilon(1e-15));

    // larger radius: both series terms visible
    auto [u2, up2] = series_start(prob, 1.0, 0.1);
    CHECK(u2 == doctest::Approx(1.0 + 0.01 / 6.0 - std::pow(0.1, 5.0) / 30.0).epsilon(1e-9));
    CHECK(up2 == doctest::Approx(0.1 / 3.0 - std::pow(0.1, 4.0) / 6.0).epsilon(1e-9));
}

TEST_CASE("series start with a flat custom weight") {
    Weight w;
    w.kind = Weight::Kind::Custom;
    w.fn = [](double) { return 1.0; };
    Nonlinearity f;
    f.kind = Nonlinearity::Kind::Power;
    f.p = 2.0;
    Problem prob = Problem::general(3, w, f);
    auto [u, up] = series_start(prob, 2.0, 1e-3);
    // curvature coefficient is gamma - phi(0) f(gamma) = 2 - 4
    CHECK(up == doctest::Approx(-2.0 * 1e-3 / 3.0).epsilon(1e-9));
    CHECK(u == doctest::Approx(2.0 - 2.0 * 1e-6 / 6.0).epsilon(1e-12));
}

TEST_CASE("start radius shrinks with the spike scale") {
    Problem prob = Problem::henon(3, 3.0, 5.0);
    CHECK(choose_r_start(prob, 1.0, 1e-6) == doctest::Approx(1e-6));
    double expected = 0.1 * std::pow(1e8, (1.0 - 5.0) / 3.0);
    CHECK(choose_r_start(prob, 1e8, 1e-6) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(choose_r_start(prob, 1e8, 1e-6) < 1e-10);
    CHECK(choose_r_start(prob, 1e300, 1e-6) >= 1e-280);
}

TEST_CASE("integration argument validation") {
    Problem prob = Problem::henon(3, 3.0, 5.0);
    CHECK_THROWS_WITH_AS(integrate(prob, -1.0, 10.0), "gamma must be positive",
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(integrate(prob, 0.0, 10.0), "gamma must be positive",
                         std::invalid_argument);
    CHECK_THROWS_AS(integrate(prob, 1.0, 5e-7), std::invalid_argument);
}

TEST_CASE("near-solution trajectory: events, ordering, checkpoints") {
    Problem prob = Problem::henon(3, 3.0, 5.0);
    IntegratorOptions opts;
    opts.checkpoints = {0.5, 1.0};
    Trajectory traj = integrate(prob, 1.0815005236, 1.05, opts);
    CHECK(traj.termination == Termination::ReachedRMax);
    REQUIRE(traj.node_at(0.5).has_value());
    REQUIRE(traj.node_at(1.0).has_value());

    const Event* bc = traj.first_of(EventKind::BarrierCrossing);
    const Event* st = traj.first_of(EventKind::Stationary);
    REQUIRE(bc != nullptr);
    REQUIRE(st != nullptr);
    CHECK(bc->r < st->r);
    CHECK(st->r == doctest::Approx(1.0).epsilon(1e-6));
    CHECK_FALSE(st->degenerate);
    // u'' at the stationary point equals u - phi f(u) there
    double closed = st->u - prob.phi(st->r) * prob.f(st->u);
    CHECK(st->second_derivative == doctest::Approx(closed).epsilon(1e-6));
    CHECK(st->second_derivative < 0.0);

    // u' > 0 at interior nodes before the stationary point
    for (const auto& nd : traj.nodes)
        if (nd.r > traj.r_start_effective && nd.r < st->r - 1e-9) CHECK(nd.uprime > 0.0);
    CHECK(std::fabs(traj.node_at(1.0)->uprime) < 1e-6);

    // r^{N-1} u' is nondecreasing while u is below the barrier
    double prev = -1.0;
    for (const auto& nd : traj.nodes) {
        if (nd.r >= bc->r) break;
        double a = std::pow(nd.r, 2.0) * nd.uprime;
        CHECK(a >= prev * (1.0 - 1e-9) - 1e-12);
        prev = a;
    }
}

TEST_CASE("oscillatory trajectory has several stationary points below the threshold exponent") {
    Problem lo = Problem::henon(4, 5.0, 8.0);
    Trajectory t_lo = integrate(lo, 1.034, 10.0);
    CHECK(stationary_count_in(t_lo, 0.2, 10.0) >= 2);

    Problem hi = Problem::henon(4, 5.0, 17.0);
    Trajectory t_hi = integrate(hi, 1.034, 10.0);
    CHECK(stationary_count_in(t_hi, 0.2, 10.0) <= 1);
}

TEST_CASE("blow-up cap terminates the trajectory") {
    Problem prob = Problem::henon(3, 3.0, 5.0);
    Trajectory traj = integrate(prob, 2e8, 10.0);
    CHECK(traj.termination == Termination::BlowUp);
    REQUIRE(traj.first_of(EventKind::BlowUp) != nullptr);
    CHECK(traj.nodes.back().r < 1e-3);
}

TEST_CASE("positivity loss terminates the trajectory") {
    // past the Neumann root the spike collapse overshoots: u reaches zero with
    // u' still negative at moderate r, where the u'/r damping cannot brake it
    Problem prob = Problem::henon(3, 3.0, 5.0);
    Trajectory traj = integrate(prob, 3.0, 10.0);
    CHECK(traj.termination == Termination::PositivityLoss);
    const Event* pl = traj.first_of(EventKind::PositivityLoss);
    REQUIRE(pl != nullptr);
    CHECK(std::fabs(pl->u) < 1e-6);
    CHECK(traj.nodes.back().r < 10.0);
}

TEST_CASE("flux identity holds along trajectories") {
    Problem prob = Problem::henon(3, 3.0, 5.0);
    CHECK(verify_integral_identity(integrate(prob, 1.0815005236, 1.05)) < 1e-6);
    CHECK(verify_integral_identity(integrate(prob, 100.0, 2.0)) < 1e-6);
    Problem osc = Problem::henon(4, 5.0, 8.0);
    CHECK(verify_integral_identity(integrate(osc, 1.034, 10.0)) < 1e-6);
}

TEST_CASE("trajectory exports are byte-stable and read back exactly") {
    namespace fs = std::filesystem;
    Problem prob = Problem::henon(3, 3.0, 5.0);
    Trajectory traj = integrate(prob, 1.0815005236, 1.05);
    fs::create_directories("test_tmp");

    write_trajectory_csv(traj, "test_tmp/a.csv", "test_tmp/a_events.csv");
    write_trajectory_csv(traj, "test_tmp/b.csv", "test_tmp/b_events.csv");
    CHECK(slurp("test_tmp/a.csv") == slurp("test_tmp/b.csv"));
    CHECK(slurp("test_tmp/a_events.csv") == slurp("test_tmp/b_events.csv"));
    CHECK(slurp("test_tmp/a.csv").substr(0, 11) == "r,u,uprime\n");

    Trajectory back = read_trajectory_csv(prob, traj.gamma, "test_tmp/a.csv",
                                          "test_tmp/a_events.csv");
    REQUIRE(back.nodes.size() == traj.nodes.size());
    for (size_t i = 0; i < traj.nodes.size(); ++i) {
        CHECK(back.nodes[i].r == traj.nodes[i].r);  // %.17g round-trips exactly
        CHECK(back.nodes[i].u == traj.nodes[i].u);
        CHECK(back.nodes[i].uprime == traj.nodes[i].uprime);
    }
    REQUIRE(back.events.size() == traj.events.size());
    for (size_t i = 0; i < traj.events.size(); ++i) {
        CHECK(back.events[i].kind == traj.events[i].kind);
        CHECK(back.events[i].r == traj.events[i].r);
    }

    // skip_below drops the sub-resolution spike ramp
    write_trajectory_csv(traj, "test_tmp/c.csv", "test_tmp/c_events.csv", 1e-3);
    Trajectory skipped = read_trajectory_csv(prob, traj.gamma, "test_tmp/c.csv",
                                             "test_tmp/c_events.csv");
    CHECK(skipped.nodes.front().r >= 1e-3);
}

TEST_CASE("tampered trajectory files are rejected") {
    namespace fs = std::filesystem;
    fs::create_directories("test_tmp");
    Problem prob = Problem::henon(3, 3.0, 5.0);
    {
        std::ofstream f("test_tmp/bad.csv");
        f << "r,u,uprime\n0.5,1,0.1\n0.25,0.9,0.2\n0.75,1.1,0.05\n";
    }
    {
        std::ofstream f("test_tmp/bad_events.csv");
        f << "kind,index,r,u,second_derivative\n";
    }
    CHECK_THROWS_WITH_AS(
        read_trajectory_csv(prob, 1.0, "test_tmp/bad.csv", "test_tmp/bad_events.csv"),
        "nodes not strictly increasing", std::invalid_argument);
    {
        std::ofstream f("test_tmp/badhdr.csv");
        f << "radius,u,uprime\n0.5,1,0.1\n";
    }
    CHECK_THROWS_AS(
        read_trajectory_csv(prob, 1.0, "test_tmp/badhdr.csv", "test_tmp/bad_events.csv"),
        std::invalid_argument);
    CHECK_THROWS_AS(read_trajectory_csv(prob, 1.0, "test_tmp/missing.csv", ""), IoError);
}

TEST_CASE("json export carries the full record") {
    namespace fs = std::filesystem;
    fs::create_directories("test_tmp");
    Problem prob = Problem::henon(3, 3.0, 5.0);
    Trajectory traj = integrate(prob, 1.0815005236, 1.05);
    write_trajectory_json(traj, "test_tmp/t.json");
    auto j = nlohmann::json::parse(slurp("test_tmp/t.json"));
    CHECK(j["spec"] == "henon N=3 alpha=3 p=5");
    CHECK(j["gamma"].get<double>() == doctest::Approx(1.0815005236));
    CHECK(j["termination"] == "reached_r_max");
    REQUIRE(j["nodes"].is_array());
    CHECK(j["nodes"].size() == traj.nodes.size());
    CHECK(j["nodes"][0].size() == 3);
    REQUIRE(j["events"].is_array());
    CHECK(j["events"].size() == traj.events.size());
    CHECK(j["events"][0].contains("kind"));
    CHECK(j["events"][0].contains("second_derivative"));
}

TEST_CASE("termination and event names") {
    CHECK(std::string(to_string(Termination::ReachedRMax)) == "reached_r_max");
    CHECK(std::string(to_string(Termination::BlowUp)) == "blow_up");
    CHECK(std::string(to_string(Termination::PositivityLoss)) == "positivity_loss");
    CHECK(std::string(to_string(Termination::StepFailure)) == "step_failure");
    CHECK(std::string(to_string(EventKind::Stationary)) == "stationary");
    CHECK(std::string(to_string(EventKind::BarrierCrossing)) == "barrier_crossing");
}

TEST_CASE("tight tolerances refine the endpoint value consistently") {
    Problem prob = Problem::henon(3, 3.0, 5.0);
    IntegratorOptions loose;
    loose.checkpoints = {1.0};
    IntegratorOptions tight = loose;
    tight.rel_tol = tight.abs_tol = 1e-12;
    double u_loose = integrate(prob, 1.0815005236, 1.0, loose).node_at(1.0)->u;
    double u_tight = integrate(prob, 1.0815005236, 1.0, tight).node_at(1.0)->u;
    CHECK(std::fabs(u_loose - u_tight) < 1e-8);
}
