#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <stdexcept>

#include "core/format.hpp"
#include "core/problem.hpp"
#include "doctest.h"

using namespace radshoot;

TEST_CASE("critical exponent closed forms") {
    CHECK(critical_exponent(3, 3.0) == 11.0);
    CHECK(critical_exponent(4, 5.0) == 8.0);
    CHECK(critical_exponent(5, 9.0) == 25.0 / 3.0);
    CHECK(critical_exponent(10, 5.0) == doctest::Approx(2.75).epsilon(1e-15));
    CHECK_THROWS_AS(critical_exponent(2, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(critical_exponent(1, 1.0), std::invalid_argument);
}

TEST_CASE("power barrier value") {
    HenonSpec s{3, 3.0, 5.0};
    CHECK(barrier_c(s, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(barrier_c(s, 4.0) == doctest::Approx(std::pow(2.0, -1.5)).epsilon(1e-15));
    // c(1) = 1 regardless of the exponents
    for (double alpha : {1.0, 5.0, 50.0})
        for (double p : {2.0, 8.0, 50.0})
            CHECK(barrier_c(HenonSpec{4, alpha, p}, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    // strictly decreasing across many decades
    double prev = barrier_c(s, 1e-8);
    for (int i = 1; i <= 32; ++i) {
        double r = std::pow(10.0, -8.0 + 0.5 * i);
        double cur = barrier_c(s, r);
        CHECK(cur < prev);
        prev = cur;
    }
    CHECK_THROWS_AS(barrier_c(s, 0.0), std::domain_error);
    CHECK_THROWS_AS(barrier_c(s, -1.0), std::domain_error);
}

TEST_CASE("general barrier reduces to the power form") {
    Problem prob = Problem::henon(3, 3.0, 5.0);
    for (double r : {0.01, 0.1, 0.5, 1.0, 2.0, 7.0}) {
        double direct = barrier_c(prob.henon_spec(), r);
        CHECK(barrier_xi(prob, r) == doctest::Approx(direct).epsilon(1e-10));
        CHECK(prob.barrier(r) == doctest::Approx(direct).epsilon(1e-10));
    }
}

TEST_CASE("implicit barrier for an exponential nonlinearity") {
    Weight w;
    w.kind = Weight::Kind::Power;
    w.a = 2.0;
    Nonlinearity f;
    f.kind = Nonlinearity::Kind::Exp;
    f.g = 1.0;
    f.q = 1.0;
    Problem prob = Problem::general(3, w, f);
    // u/(e^u - 1) = 0.25 and 0.64, roots computed independently
    CHECK(barrier_xi(prob, 0.5) == doctest::Approx(2.336662982263054).epsilon(1e-11));
    CHECK(barrier_xi(prob, 0.8) == doctest::Approx(0.834829476762170).epsilon(1e-11));
    // phi(1) = 1 is the supremum of u/(e^u - 1), so the root degenerates to 0;
    // the solver may stop anywhere with |u/f(u) - 1| within its 1e-12 residual,
    // i.e. u <= ~2e-12 since u/f(u) ~ 1 - u/2 near zero
    CHECK(barrier_xi(prob, 1.0) <= 1e-11);
    // beyond it there is no root at all
    CHECK_THROWS_AS(barrier_xi(prob, 1.5), std::runtime_error);
    CHECK_THROWS_AS(barrier_xi(prob, 0.0), std::domain_error);
}

TEST_CASE("barrier gap sign stays finite in extreme corners") {
    Problem prob = Problem::henon(3, 3.0, 5.0);
    double c_half = barrier_c(prob.henon_spec(), 0.5);
    CHECK(prob.barrier_gap_sign(0.5, c_half * 1.01) > 0.0);
    CHECK(prob.barrier_gap_sign(0.5, c_half * 0.99) < 0.0);
    CHECK(prob.barrier_gap_sign(0.5, 0.0) < 0.0);
    // radii/heights where the barrier value itself would overflow a double
    CHECK(prob.barrier_gap_sign(1e-300, 1.0) < 0.0);
    CHECK(prob.barrier_gap_sign(1e300, 1e-200) > 0.0);
}

TEST_CASE("barrier radius estimate matches the power closed form") {
    Problem prob = Problem::henon(3, 3.0, 5.0);
    for (double gamma : {2.0, 16.0, 1e4, 1e8}) {
        double expected = std::pow(gamma, (1.0 - 5.0) / 3.0);
        CHECK(prob.barrier_radius_estimate(gamma) == doctest::Approx(expected).epsilon(1e-12));
    }
    // below the barrier everywhere: c(r) >= 1 on (0, 1] and u0 < min over the tail
    Weight w;
    w.kind = Weight::Kind::Custom;
    w.fn = [](double) { return 0.0; };
    Nonlinearity f;
    f.kind = Nonlinearity::Kind::Power;
    f.p = 2.0;
    Problem flat = Problem::general(3, w, f);
    CHECK(std::isinf(flat.barrier_radius_estimate(0.5)));
}

TEST_CASE("monotonicity bound closed forms") {
    CHECK(monotonicity_bound(2, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(monotonicity_bound(3, 3.0) ==
          doctest::Approx(3.0 * (std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-15));
    CHECK(monotonicity_bound(4, 5.0) ==
          doctest::Approx(5.0 * (std::sqrt(8.0) - 2.0) / 2.0).epsilon(1e-15));
}

namespace {
// finite-difference value of -c'' - (N-1)/r c' + c for c(r) = r^(-beta)
double fd_subsolution(const HenonSpec& s, double r) {
    double beta = s.alpha / (s.p - 1.0);
    auto c = [&](double x) { return std::pow(x, -beta); };
    // h balances truncation (h^2) against cancellation in d2 (eps/h^2)
    double h = 1e-4 * r;
    double c0 = c(r), cp = c(r + h), cm = c(r - h);
    double d1 = (cp - cm) / (2.0 * h);
    double d2 = (cp - 2.0 * c0 + cm) / (h * h);
    return -d2 - (s.N - 1) / r * d1 + c0;
}
}  // namespace

TEST_CASE("subsolution residual closed form vs finite differences") {
    HenonSpec s{3, 3.0, 5.0};
    CHECK(subsolution_residual(s, 1.0) == doctest::Approx(19.0 / 16.0).epsilon(1e-14));
    for (double r : {0.3, 0.7, 1.0})
        CHECK(subsolution_residual(s, r) == doctest::Approx(fd_subsolution(s, r)).epsilon(1e-5));
    // p - 1 below the monotonicity bound: nonpositive on (0, 1]
    HenonSpec sub{2, 5.0, 2.0};
    REQUIRE(sub.p - 1.0 < monotonicity_bound(sub.N, sub.alpha));
    for (double r : {1e-3, 0.1, 0.5, 0.9, 1.0}) CHECK(subsolution_residual(sub, r) <= 0.0);
    // and above it the sign flips somewhere inside
    CHECK(subsolution_residual(s, 1.0) > 0.0);
}

TEST_CASE("constructor validation") {
    CHECK_THROWS_WITH_AS(Problem::henon(1, 3.0, 5.0), "N must be at least 2",
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(Problem::henon(3, 0.0, 5.0), "alpha must be positive",
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(Problem::henon(3, 3.0, 1.0), "p must exceed 1", std::invalid_argument);
    Problem prob = Problem::henon(2, 1.0, 2.0);
    CHECK(prob.N() == 2);
    CHECK(prob.is_henon());

    Weight w;
    w.kind = Weight::Kind::Power;
    w.a = 1.0;
    Nonlinearity f;
    f.kind = Nonlinearity::Kind::Power;
    f.p = 2.0;
    Problem gen = Problem::general(3, w, f);
    CHECK_FALSE(gen.is_henon());
    CHECK_THROWS_AS(gen.henon_spec(), std::logic_error);
}

TEST_CASE("weight and nonlinearity evaluation") {
    Weight w;
    w.kind = Weight::Kind::Power;
    w.a = 2.0;
    CHECK(w(3.0) == doctest::Approx(9.0));
    CHECK(w.deriv(3.0) == doctest::Approx(6.0));
    CHECK(w.value_at_zero() == 0.0);
    CHECK(w.unbounded_at_infinity());

    Weight ws;
    ws.kind = Weight::Kind::PowerSum;
    ws.a = 2.0;
    ws.b = 0.0;  // phi = r^2 + 1
    CHECK(ws(2.0) == doctest::Approx(5.0));
    CHECK(ws.value_at_zero() == doctest::Approx(1.0));

    Nonlinearity fe;
    fe.kind = Nonlinearity::Kind::Exp;
    fe.g = 1.0;
    fe.q = 1.0;
    CHECK(fe(1.0) == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-14));
    CHECK(fe.deriv(1.0) == doctest::Approx(std::exp(1.0)).epsilon(1e-14));

    Problem prob = Problem::henon(3, 3.0, 5.0);
    CHECK(prob.H(2.0) == doctest::Approx(2.0 / 32.0).epsilon(1e-14));
    CHECK(prob.ell() == 0.0);
}

TEST_CASE("hypotheses hold for power problems") {
    auto rep = validate_hypotheses(Problem::henon(3, 3.0, 5.0));
    CHECK(rep.all_pass());
    CHECK(rep.ell == 0.0);
    CHECK(rep.kappa_unbounded);
    for (const char* id : {"h1", "h2", "h3", "h4"}) CHECK(rep.check(id).pass);
    CHECK_THROWS_AS(rep.check("h9"), std::out_of_range);
}

TEST_CASE("hypotheses hold for a power-sum weight with steep exponential growth") {
    Weight w;
    w.kind = Weight::Kind::PowerSum;
    w.a = 3.0;
    w.b = 1.0;
    Nonlinearity f;
    f.kind = Nonlinearity::Kind::Exp;
    f.g = 1.0;
    f.q = 2.0;  // f(s)/s ~ s near 0, so the vanishing-slope condition holds
    auto rep = validate_hypotheses(Problem::general(4, w, f));
    CHECK(rep.all_pass());
    CHECK(rep.kappa_unbounded);
}

TEST_CASE("superlinearity failure is detected for a bounded-ratio nonlinearity") {
    // phi(0) = 1 > 0 forces f(s)/s -> 1 at infinity; s^2 overshoots
    Weight w;
    w.kind = Weight::Kind::Custom;
    w.fn = [](double r) { return 1.0 + r; };
    Nonlinearity f;
    f.kind = Nonlinearity::Kind::Power;
    f.p = 2.0;
    auto rep = validate_hypotheses(Problem::general(3, w, f));
    CHECK_FALSE(rep.all_pass());
    CHECK_FALSE(rep.check("h3").pass);
    CHECK(rep.ell == doctest::Approx(1.0));
}

TEST_CASE("slow vanishing at zero is detected for e^s - 1 under a growing weight") {
    Weight w;
    w.kind = Weight::Kind::Power;
    w.a = 2.0;
    Nonlinearity f;
    f.kind = Nonlinearity::Kind::Exp;
    f.g = 1.0;
    f.q = 1.0;  // f(s)/s -> 1, not 0; incompatible with an unbounded weight
    auto rep = validate_hypotheses(Problem::general(3, w, f));
    CHECK_FALSE(rep.check("h4").pass);
    CHECK(rep.check("h1").pass);
    CHECK(rep.check("h2").pass);
    CHECK(rep.check("h3").pass);
}

TEST_CASE("config round trip") {
    Problem prob = Problem::henon(5, 9.0, 25.0 / 3.0);
    Problem back = problem_from_config_text(problem_to_config(prob));
    CHECK(back.describe() == prob.describe());
    CHECK(back.is_henon());
    CHECK(back.henon_spec().p == doctest::Approx(25.0 / 3.0).epsilon(1e-15));

    Weight w;
    w.kind = Weight::Kind::PowerSum;
    w.a = 2.0;
    w.b = 0.5;
    Nonlinearity f;
    f.kind = Nonlinearity::Kind::Exp;
    f.g = 2.0;
    f.q = 1.5;
    Problem gen = Problem::general(4, w, f);
    Problem gen_back = problem_from_config_text(problem_to_config(gen));
    CHECK(gen_back.describe() == gen.describe());
}

TEST_CASE("config parsing") {
    Problem prob = problem_from_config_text("# comment\nN = 3\nalpha = 3\np = 25/3\n");
    CHECK(prob.is_henon());
    CHECK(prob.henon_spec().p == doctest::Approx(25.0 / 3.0).epsilon(1e-15));
    // later entries win
    Problem v2 = problem_from_config_text("N = 3\nalpha = 1\np = 5\nalpha = 9\n");
    CHECK(v2.henon_spec().alpha == 9.0);
    CHECK_THROWS_AS(problem_from_config_text("alpha = 3\np = 5\n"), std::invalid_argument);
    CHECK_THROWS_AS(problem_from_config_text("N = 3\nalpha 3\np = 5\n"), std::invalid_argument);
    CHECK_THROWS_AS(problem_from_config_text("N = 3\nalpha = 3\np = bogus\n"),
                    std::invalid_argument);
    CHECK_THROWS_AS(problem_from_config_text("N = 3\nalpha = 3\nnonlinearity = custom\n"),
                    std::invalid_argument);
}

TEST_CASE("strict numeric parsing with fractions") {
    CHECK(parse_number("25/3") == doctest::Approx(25.0 / 3.0).epsilon(1e-16));
    CHECK(parse_number("11/4") == 2.75);
    CHECK(parse_number("1e-3") == 1e-3);
    CHECK(parse_number("-2.5") == -2.5);
    CHECK_THROWS_AS(parse_number("25/"), std::invalid_argument);
    CHECK_THROWS_AS(parse_number("x"), std::invalid_argument);
    CHECK_THROWS_AS(parse_number("1.0suffix"), std::invalid_argument);
    CHECK_THROWS_AS(parse_number(""), std::invalid_argument);
}

TEST_CASE("describe spells out the problem") {
    CHECK(Problem::henon(3, 3.0, 5.0).describe() == "henon N=3 alpha=3 p=5");
    Weight w;
    w.kind = Weight::Kind::Power;
    w.a = 2.0;
    Nonlinearity f;
    f.kind = Nonlinearity::Kind::Exp;
    f.g = 1.0;
    f.q = 1.0;
    CHECK(Problem::general(3, w, f).describe() == "general N=3 phi=r^2 f=exp(1*s^1)-1");
}
