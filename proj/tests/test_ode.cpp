#include <cmath>

#include "doctest.h"

#include "cycledeg/degree.hpp"
#include "cycledeg/errors.hpp"
#include "cycledeg/ode.hpp"
#include "fixtures.hpp"

using namespace cycledeg;
using fixtures::kPi;

TEST_CASE("integrate examples") {
    Rhs decay = [](double, const double* x, double* dx) { dx[0] = -x[0]; };
    Trajectory tr = integrate(decay, Eigen::VectorXd::Ones(1), 0.0, 1.0, 1e-10);
    CHECK(std::fabs(tr.state(tr.size() - 1)[0] - 0.36787944117144233) <= 1e-9);

    Rhs osc = [](double, const double* x, double* dx) {
        dx[0] = x[1];
        dx[1] = -x[0];
    };
    Eigen::VectorXd end = integrate_endpoint(osc, Eigen::Vector2d(1, 0), 0.0, 2 * kPi, 1e-10);
    CHECK((end - Eigen::Vector2d(1, 0)).norm() <= 1e-8);

    Rhs zero = [](double, const double*, double* dx) { dx[0] = dx[1] = 0.0; };
    Trajectory c = integrate(zero, Eigen::Vector2d(3, -4), 0.0, 5.0, 1e-8);
    for (double t : {0.0, 1.3, 5.0}) CHECK((c.at(t) - Eigen::Vector2d(3, -4)).norm() == 0.0);
}

TEST_CASE("integrate argument checks") {
    Rhs decay = [](double, const double* x, double* dx) { dx[0] = -x[0]; };
    CHECK_THROWS_AS(integrate(decay, Eigen::VectorXd::Ones(1), 0.0, 1.0, 1e-15), InvalidArgument);
    CHECK_THROWS_AS(integrate(decay, Eigen::VectorXd::Ones(1), 1.0, 0.0, 1e-8), InvalidArgument);
    Rhs blowup = [](double, const double* x, double* dx) { dx[0] = x[0] * x[0]; };
    CHECK_THROWS(integrate(blowup, Eigen::VectorXd::Ones(1), 0.0, 2.0, 1e-8));
}

TEST_CASE("trajectory nodes") {
    fixtures::System c = fixtures::circle();
    const Trajectory& tr = c.cycle.trajectory;
    for (std::size_t i = 0; i < tr.size(); i += 7) {
        CHECK((tr.at(tr.times()[i]) - tr.state(i)).norm() == 0.0);
        CHECK((tr.derivative(i) - c.spec.psi_at(tr.state(i))).norm() <= 1e-14);
    }
}

TEST_CASE("variational examples") {
    SystemSpec rot = SystemSpec::from_strings(2, 1.0, {"x2", "-x1"}, {"0", "0"});
    FlowResult fr = flow_with_variational(rot, Eigen::Vector2d(0.3, 0.2), kPi / 2, 1e-12);
    Eigen::Matrix2d expected;
    expected << 0, 1, -1, 0;
    CHECK((fr.variational - expected).cwiseAbs().maxCoeff() <= 1e-8);

    FlowResult id = flow_with_variational(rot, Eigen::Vector2d(0.3, 0.2), 0.0, 1e-10);
    CHECK(id.variational == Eigen::Matrix2d::Identity());

    SystemSpec circ = SystemSpec::from_strings(2, 2 * kPi, fixtures::kCirclePsi, {"0", "0"});
    FlowResult m = flow_with_variational(circ, Eigen::Vector2d(1, 0), 2 * kPi, 1e-12);
    Eigen::EigenSolver<Eigen::MatrixXd> es(m.variational);
    std::vector<double> ev = {es.eigenvalues()[0].real(), es.eigenvalues()[1].real()};
    std::sort(ev.begin(), ev.end());
    CHECK(std::fabs(ev[0] - std::exp(-4 * kPi)) <= 1e-6);
    CHECK(std::fabs(ev[1] - 1.0) <= 1e-6);
}

TEST_CASE("variational matrix matches flow differences") {
    for (const auto& sys : {fixtures::circle(), fixtures::vanderpol()}) {
        Lcg rng(3);
        const double T = sys.cycle.period;
        for (int k = 0; k < 10; ++k) {
            Eigen::VectorXd xi = sys.cycle.state_at(T * rng.uniform());
            xi += 0.05 * Eigen::Vector2d(rng.uniform() - 0.5, rng.uniform() - 0.5);
            FlowResult fr = flow_with_variational(sys.spec, xi, T, 1e-12);
            for (int j = 0; j < 2; ++j) {
                Eigen::VectorXd xp = xi, xm = xi;
                xp[j] += 1e-6;
                xm[j] -= 1e-6;
                Eigen::VectorXd fd = (flow_endpoint(sys.spec, xp, T, 1e-12) - flow_endpoint(sys.spec, xm, T, 1e-12)) / 2e-6;
                double scale = std::max(fr.variational.col(j).norm(), 1e-3);
                CHECK((fd - fr.variational.col(j)).norm() / scale <= 1e-4);
            }
        }
    }
}

TEST_CASE("group and semigroup properties") {
    for (const auto& sys : {fixtures::circle(), fixtures::vanderpol()}) {
        const double tol = 1e-10;
        Eigen::Vector2d xi(1.5, 0.5);
        double t1 = 0.7, t2 = 1.9;
        FlowResult a = flow_with_variational(sys.spec, xi, t1, tol);
        FlowResult b = flow_with_variational(sys.spec, a.state, t2, tol);
        FlowResult ab = flow_with_variational(sys.spec, xi, t1 + t2, tol);
        CHECK((b.state - ab.state).norm() <= 10 * tol * (1 + ab.state.norm()));
        CHECK((b.variational * a.variational - ab.variational).norm() <= 1e-6);
    }
}

TEST_CASE("adjoint integration") {
    fixtures::System c = fixtures::circle();
    Trajectory z = integrate_adjoint(c.spec, c.cycle.trajectory, Eigen::Vector2d(0, 1), 0.0, 2 * kPi, 1e-12);
    Eigen::VectorXd zT = z.state(z.size() - 1).normalized();
    Eigen::VectorXd left = (c.cycle.monodromy.transpose() - Eigen::Matrix2d::Identity()) * zT;
    // forward integration amplifies errors by about e^{4 pi}
    CHECK(left.norm() <= 1e-6);

    Trajectory zero = integrate_adjoint(c.spec, c.cycle.trajectory, Eigen::Vector2d(0, 0), 0.0, 2 * kPi, 1e-10);
    for (std::size_t i = 0; i < zero.size(); ++i) CHECK(zero.state(i).norm() == 0.0);

    // constant coefficients: z(t) = exp(-A^T t) z0
    SystemSpec lin = SystemSpec::from_strings(2, 1.0, {"0.5*x1 + x2", "-x1 + 0.2*x2"}, {"0", "0"});
    Trajectory path = integrate(
        [&](double, const double* x, double* dx) { lin.eval_psi(x, dx); }, Eigen::Vector2d(1, 0), 0.0, 1.0, 1e-12);
    Trajectory zl = integrate_adjoint(lin, path, Eigen::Vector2d(1, 2), 0.0, 1.0, 1e-12);
    Eigen::Matrix2d A;
    A << 0.5, 1, -1, 0.2;
    Eigen::Matrix2d E = Eigen::Matrix2d::Identity(), term = Eigen::Matrix2d::Identity();
    for (int k = 1; k < 30; ++k) {
        term = term * (-A.transpose()) / k;
        E += term;
    }
    CHECK((zl.state(zl.size() - 1) - E * Eigen::Vector2d(1, 2)).norm() <= 1e-9);
}

TEST_CASE("event location") {
    fixtures::System c = fixtures::circle();
    Trajectory shifted = c.cycle.shifted(kPi / 3);
    EventSpec ev{[](const Eigen::VectorXd& x) { return x[0] - 0.5; }, +1, 1e-8};
    auto t = locate_event(shifted, ev, 0.0, 2 * kPi);
    REQUIRE(t.has_value());
    CHECK(std::fabs(*t - 4 * kPi / 3) <= 1e-8);

    EventSpec never{[](const Eigen::VectorXd& x) { return x[0] - 5.0; }, 0, 1e-8};
    CHECK_FALSE(locate_event(c.cycle.trajectory, never, 0.0, 2 * kPi).has_value());

    EventSpec touch{[](const Eigen::VectorXd& x) { return x[0] - 1.0; }, 0, 1e-8};
    CHECK_THROWS_AS(locate_event(c.cycle.trajectory, touch, 0.0, 2 * kPi), GrazingContact);
    EventSpec inner_touch{[](const Eigen::VectorXd& x) { return x[1] - 1.0; }, 0, 1e-8};
    CHECK_THROWS_AS(find_events(c.cycle.trajectory, inner_touch, 0.0, 2 * kPi), GrazingContact);

    EventSpec any{[](const Eigen::VectorXd& x) { return x[0] - 0.5; }, 0, 1e-8};
    auto hits = find_events(c.cycle.trajectory, any, 0.0, 2 * kPi);
    REQUIRE(hits.size() == 2);
    CHECK(std::fabs(hits[0].time - kPi / 3) <= 1e-8);
    CHECK(hits[0].direction == -1);
    CHECK(std::fabs(hits[1].time - 5 * kPi / 3) <= 1e-8);
    CHECK(hits[1].direction == 1);
}
