#include <cmath>

#include "doctest.h"

#include "cycledeg/degree.hpp"
#include "cycledeg/errors.hpp"
#include "cycledeg/malkin.hpp"
#include "fixtures.hpp"

using namespace cycledeg;
using fixtures::kPi;

TEST_CASE("closed form on the circle") {
    fixtures::System c = fixtures::circle();
    for (int i = 0; i < 64; ++i) {
        double th = 2 * kPi * i / 64;
        CHECK(std::fabs(eval_f(c.spec, c.cycle, c.adj, th) + 2 * kPi * std::sin(th)) <= 1e-6);
    }
    CHECK(std::fabs(eval_f(c.spec, c.cycle, c.adj, 0.0)) <= 1e-8);

    BifurcationFunction bf = sample_f(c.spec, c.cycle, c.adj, 256);
    CHECK(bf.samples() == 256);
    CHECK(bf.rule() == "gauss-legendre-4");
    REQUIRE(bf.zeros().size() == 2);
    CHECK(fixtures::cyclic_distance(bf.zeros()[0].theta, 0.0, 2 * kPi) <= 1e-8);
    CHECK(std::fabs(bf.zeros()[1].theta - kPi) <= 1e-8);
    for (const ZeroRecord& z : bf.zeros()) CHECK(z.kind == ZeroKind::SignChange);
    CHECK(std::fabs(bf.max_abs() - 2 * kPi) <= 1e-3);
    CHECK(std::fabs(bf.at(1.0) + 2 * kPi * std::sin(1.0)) <= 1e-6);
    CHECK(std::fabs(bf.at(1.0 + 2 * kPi) - bf.at(1.0)) <= 1e-12);
}

TEST_CASE("negated forcing") {
    fixtures::System c = fixtures::circle({"-cos(t)", "-sin(t)"});
    BifurcationFunction bf = sample_f(c.spec, c.cycle, c.adj, 64);
    CHECK(std::fabs(bf.at(kPi / 2) - 2 * kPi) <= 1e-6);
    CHECK(degree_on_interval(bf, kPi / 2, 3 * kPi / 2) == -1);
}

TEST_CASE("degenerate forcing") {
    fixtures::System zero = fixtures::circle({"0", "0"});
    BifurcationFunction bz = sample_f(zero.spec, zero.cycle, zero.adj, 32);
    CHECK(bz.identically_zero());

    // constant radial forcing: <z0, x0> = 0, so f vanishes identically as well
    fixtures::System radial = fixtures::circle({"x1", "x2"});
    CHECK(sample_f(radial.spec, radial.cycle, radial.adj, 32).identically_zero());

    // tangential constant forcing gives a constant f without zeros
    fixtures::System tang = fixtures::circle({"-x2", "x1"});
    BifurcationFunction bt = sample_f(tang.spec, tang.cycle, tang.adj, 32);
    CHECK_FALSE(bt.identically_zero());
    CHECK(bt.zeros().empty());
    CHECK(std::fabs(std::fabs(bt.at(0.3)) - 2 * kPi) <= 1e-6);
}

TEST_CASE("interval degrees") {
    fixtures::System c = fixtures::circle();
    BifurcationFunction bf = sample_f(c.spec, c.cycle, c.adj, 64);
    CHECK(degree_on_interval(bf, kPi / 2, 3 * kPi / 2) == 1);
    CHECK(degree_on_interval(bf, kPi / 4, 3 * kPi / 4) == 0);
    CHECK_THROWS_AS(degree_on_interval(bf, 0.0, 1.0), BoundaryZero);
}

TEST_CASE("shifts") {
    fixtures::System c = fixtures::circle();
    BifurcationFunction bf = sample_f(c.spec, c.cycle, c.adj, 64);
    BifurcationFunction sh = shift_f(bf, kPi / 3);
    for (double th : {0.0, 0.5, 2.0, 4.0})
        CHECK(std::fabs(sh.at(th) + 2 * kPi * std::sin(th + kPi / 3)) <= 1e-6);
    CHECK(sh.zeros().size() == 2);
    BifurcationFunction back = shift_f(sh, -kPi / 3);
    CHECK(std::fabs(back.at(1.1) - bf.at(1.1)) <= 1e-9);
}

TEST_CASE("quadrature convergence and periodicity") {
    for (const fixtures::System& s : {fixtures::circle(), fixtures::vanderpol()}) {
        const double T = s.cycle.period;
        for (double th : {0.0, 0.37 * T, 0.81 * T}) {
            double f64 = eval_f(s.spec, s.cycle, s.adj, th, 64);
            double f128 = eval_f(s.spec, s.cycle, s.adj, th, 128);
            CHECK(std::fabs(f64 - f128) <= 1e-8 * (1 + std::fabs(f128)));
        }
        CHECK(std::fabs(eval_f(s.spec, s.cycle, s.adj, 0.0) - eval_f(s.spec, s.cycle, s.adj, T)) <= 1e-9);
    }
    fixtures::System c = fixtures::circle();
    CHECK_THROWS_AS(eval_f(c.spec, c.cycle, c.adj, 0.0, 0), InvalidArgument);
    CHECK_THROWS_AS(sample_f(c.spec, c.cycle, c.adj, 8), InvalidArgument);
}

TEST_CASE("two evaluation routes agree") {
    Lcg rng;
    for (const fixtures::System& s : {fixtures::circle(), fixtures::vanderpol()}) {
        BifurcationFunction bf = sample_f(s.spec, s.cycle, s.adj, 64);
        for (int i = 0; i < 8; ++i) {
            double th = s.cycle.period * rng.uniform();
            double d = std::fabs(eval_f(s.spec, s.cycle, s.adj, th) - eval_f_alt(s.spec, s.cycle, s.adj, th));
            CHECK(d <= 1e-5 * (1 + bf.max_abs()));
        }
    }
}

TEST_CASE("van der Pol zeros") {
    fixtures::System v = fixtures::vanderpol();
    BifurcationFunction bf = sample_f(v.spec, v.cycle, v.adj, 256);
    REQUIRE(bf.zeros().size() == 2);
    for (const ZeroRecord& z : bf.zeros()) {
        CHECK(z.kind == ZeroKind::SignChange);
        CHECK(z.lo <= z.theta);
        CHECK(z.theta <= z.hi);
        CHECK(z.residual <= 1e-8 * bf.max_abs());
    }
}

TEST_CASE("adjoint scale and sign") {
    fixtures::System c = fixtures::circle();
    BifurcationFunction a = sample_f(c.spec, c.cycle, c.adj, 64);
    for (double factor : {-1.0, 7.0, -7.0}) {
        BifurcationFunction b = sample_f(c.spec, c.cycle, rescale(c.adj, factor), 64);
        REQUIRE(a.zeros().size() == b.zeros().size());
        for (std::size_t i = 0; i < a.zeros().size(); ++i)
            CHECK(std::fabs(a.zeros()[i].theta - b.zeros()[i].theta) <= 1e-10);
        CHECK(degree_on_interval(b, kPi / 2, 3 * kPi / 2) == degree_on_interval(a, kPi / 2, 3 * kPi / 2));
    }
}
