#include <cmath>

#include "doctest.h"

#include "cycledeg/degree.hpp"
#include "cycledeg/errors.hpp"
#include "fixtures.hpp"

using namespace cycledeg;
using fixtures::kPi;

namespace {

const Region kBox = Region::box(Eigen::Vector2d(-2, -2), Eigen::Vector2d(0.5, 2));
const Region kBall2 = Region::ball(Eigen::Vector2d(0, 0), 2.0);

}  // namespace

TEST_CASE("lcg") {
    Lcg a, b;
    for (int i = 0; i < 10; ++i) {
        double u = a.uniform();
        CHECK(u == b.uniform());
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    std::linear_congruential_engine<std::uint64_t, 6364136223846793005ULL, 1442695040888963407ULL, 0ULL> raw(0x5EED);
    CHECK(Lcg().uniform() == static_cast<double>(raw() >> 11) * 0x1.0p-53);
}

TEST_CASE("regions") {
    CHECK(kBall2.signed_distance(Eigen::Vector2d(0, 0)) == doctest::Approx(-2.0));
    CHECK(kBall2.signed_distance(Eigen::Vector2d(3, 0)) == doctest::Approx(1.0));
    CHECK(kBox.signed_distance(Eigen::Vector2d(0, 0)) == doctest::Approx(-0.5));
    CHECK(kBox.signed_distance(Eigen::Vector2d(1.5, 0)) == doctest::Approx(1.0));
    CHECK(kBox.signed_distance(Eigen::Vector2d(1.5, 3)) == doctest::Approx(std::sqrt(2.0)));
    auto poly = kBox.boundary_polygon(64);
    CHECK(poly.size() == 64);
    double area = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const auto& p = poly[i];
        const auto& q = poly[(i + 1) % poly.size()];
        area += 0.5 * (p[0] * q[1] - q[0] * p[1]);
        CHECK(std::fabs(kBox.signed_distance(p)) <= 1e-12);
    }
    CHECK(area == doctest::Approx(10.0));
    CHECK_THROWS_AS(Region::ball(Eigen::Vector2d(0, 0), -1.0), InvalidArgument);
    CHECK_THROWS_AS(Region::box(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)), InvalidArgument);
}

TEST_CASE("contacts of the circle") {
    fixtures::System c = fixtures::circle();
    CycleContactReport r = cycle_contacts(c.cycle, kBox);
    REQUIRE(r.contacts.size() == 2);
    CHECK(std::fabs(r.contacts[0].phase - kPi / 3) <= 1e-8);
    CHECK(r.contacts[0].entering);
    REQUIRE(r.contacts[0].theta_exit.has_value());
    CHECK(std::fabs(*r.contacts[0].theta_exit - 4 * kPi / 3) <= 1e-8);
    CHECK(std::fabs(r.contacts[1].phase - 5 * kPi / 3) <= 1e-8);
    CHECK_FALSE(r.contacts[1].entering);
    CHECK_FALSE(r.contacts[1].theta_exit.has_value());

    CHECK(cycle_contacts(c.cycle, kBall2).contacts.empty());
    CHECK_THROWS_AS(cycle_contacts(c.cycle, Region::ball(Eigen::Vector2d(2, 0), 1.0)), GrazingContact);
}

TEST_CASE("degree of psi") {
    SystemSpec id = SystemSpec::from_strings(2, 1.0, {"x1", "x2"}, {"0", "0"});
    SystemSpec neg = SystemSpec::from_strings(2, 1.0, {"-x1", "-x2"}, {"0", "0"});
    SystemSpec saddle = SystemSpec::from_strings(2, 1.0, {"x1", "-x2"}, {"0", "0"});
    CHECK(brouwer_degree_psi(id, kBall2) == 1);
    CHECK(brouwer_degree_psi(neg, kBall2) == 1);
    CHECK(brouwer_degree_psi(saddle, kBall2) == -1);
    SystemSpec two = SystemSpec::from_strings(2, 1.0, {"x1^2 - 1", "x2"}, {"0", "0"});
    CHECK(brouwer_degree_psi(two, kBall2) == 0);
    CHECK(brouwer_degree_psi(two, Region::box(Eigen::Vector2d(0, -1), Eigen::Vector2d(2, 1))) == 1);
    CHECK_THROWS_AS(brouwer_degree_psi(id, Region::box(Eigen::Vector2d(0, -1), Eigen::Vector2d(1, 1))),
                    BoundaryZeroOfPsi);

    SystemSpec id5 = SystemSpec::from_strings(5, 1.0, {"x1", "x2", "x3", "x4", "x5"}, {"0", "0", "0", "0", "0"});
    CHECK_THROWS_AS(brouwer_degree_psi(id5, Region::ball(Eigen::VectorXd::Zero(5), 1.0)), DimensionTooLarge);
    SystemSpec id3 = SystemSpec::from_strings(3, 1.0, {"x1", "-x2", "-x3"}, {"0", "0", "0"});
    CHECK(brouwer_degree_psi(id3, Region::ball(Eigen::VectorXd::Zero(3), 1.0)) == 1);
}

TEST_CASE("winding numbers") {
    PlanarField idf = [](const Eigen::VectorXd& x) { return x; };
    PlanarField sq = [](const Eigen::VectorXd& x) {
        return Eigen::Vector2d(x[0] * x[0] - x[1] * x[1], 2 * x[0] * x[1]).eval();
    };
    PlanarField conj = [](const Eigen::VectorXd& x) { return Eigen::Vector2d(x[0], -x[1]).eval(); };
    CHECK(winding_degree(idf, kBall2) == 1);
    CHECK(winding_degree(sq, kBall2) == 2);
    CHECK(winding_degree(sq, kBox) == 2);
    CHECK(winding_degree(conj, kBall2) == -1);
    CHECK(winding_degree(idf, Region::ball(Eigen::Vector2d(5, 0), 1.0)) == 0);
    CHECK_THROWS_AS(winding_degree(idf, Region::box(Eigen::Vector2d(0, -1), Eigen::Vector2d(1, 1))),
                    ZeroOnBoundary);

    fixtures::System c = fixtures::circle();
    for (const Region* r : {&kBox, &kBall2}) {
        int w = winding_degree([&](const Eigen::VectorXd& x) { return c.spec.psi_at(x); }, *r);
        CHECK(w == brouwer_degree_psi(c.spec, *r));
    }
}

TEST_CASE("predicted degree against the Poincare map") {
    struct Case {
        std::vector<std::string> phi;
        const Region* region;
        int total;
    };
    for (const Case& k : {Case{{"cos(t)", "sin(t)"}, &kBall2, 1}, Case{{"-cos(t)", "-sin(t)"}, &kBox, 2},
                          Case{{"cos(t)", "sin(t)"}, &kBox, 0}}) {
        fixtures::System c = fixtures::circle(k.phi);
        BifurcationFunction bf = sample_f(c.spec, c.cycle, c.adj, 256);
        DegreeReport rep = predicted_degree(c.spec, c.cycle, c.adj, bf, *k.region);
        CHECK(rep.n == 2);
        CHECK(rep.d_psi == 1);
        CHECK(rep.total == k.total);
        CHECK(poincare_degree(c.spec, *k.region, 1e-3) == k.total);
    }
}

TEST_CASE("empty contact set") {
    fixtures::System c = fixtures::circle();
    BifurcationFunction bf = sample_f(c.spec, c.cycle, c.adj, 64);
    for (double r : {2.0, 0.5}) {
        Region ball = Region::ball(Eigen::Vector2d(0, 0), r);
        DegreeReport rep = predicted_degree(c.spec, c.cycle, c.adj, bf, ball);
        CHECK(rep.contributions.empty());
        CHECK(rep.total == rep.d_psi);
    }
}

TEST_CASE("only entering contacts contribute") {
    fixtures::System c = fixtures::circle();
    BifurcationFunction bf = sample_f(c.spec, c.cycle, c.adj, 64);
    DegreeReport rep = predicted_degree(c.spec, c.cycle, c.adj, bf, kBox);
    REQUIRE(rep.contributions.size() == 2);
    CHECK(rep.contributions[0].entering);
    CHECK(rep.contributions[0].interval_degree == 1);
    CHECK_FALSE(rep.contributions[1].entering);
    CHECK(rep.contributions[1].interval_degree == 0);
    CHECK(std::fabs(rep.contributions[0].f_start + 2 * kPi * std::sin(kPi / 3)) <= 1e-6);
}

TEST_CASE("zero of f at a contact") {
    // f = -2 pi sin(theta - pi/3) vanishes at the contact phase pi/3
    fixtures::System c = fixtures::circle({"cos(t + 1.0471975511965976)", "sin(t + 1.0471975511965976)"});
    BifurcationFunction bf = sample_f(c.spec, c.cycle, c.adj, 64);
    CHECK_THROWS_AS(predicted_degree(c.spec, c.cycle, c.adj, bf, kBox), HypothesisViolation);
}

TEST_CASE("degree under adjoint rescaling") {
    fixtures::System c = fixtures::circle({"-cos(t)", "-sin(t)"});
    BifurcationFunction bf = sample_f(c.spec, c.cycle, c.adj, 64);
    int base = predicted_degree(c.spec, c.cycle, c.adj, bf, kBox).total;
    for (double factor : {-1.0, 7.0}) {
        AdjointCycle a = rescale(c.adj, factor);
        BifurcationFunction b = sample_f(c.spec, c.cycle, a, 64);
        CHECK(predicted_degree(c.spec, c.cycle, a, b, kBox).total == base);
    }
}
