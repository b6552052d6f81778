#include <cmath>

#include "doctest.h"

#include "cycledeg/adjoint.hpp"
#include "cycledeg/degree.hpp"
#include "cycledeg/errors.hpp"
#include "cycledeg/malkin.hpp"
#include "fixtures.hpp"

using namespace cycledeg;
using fixtures::kPi;

TEST_CASE("adjoint of the circle") {
    fixtures::System c = fixtures::circle();
    const AdjointCycle& adj = c.adj;
    CHECK(std::fabs(adj.period() - 2 * kPi) <= 1e-12);
    CHECK(std::fabs(adj.at(0.0).norm() - 1.0) <= 1e-12);
    CHECK((adj.at(0.0) - adj.at(2 * kPi)).norm() <= 1e-8);
    CHECK((adj.at(-1.0) - adj.at(2 * kPi - 1.0)).norm() <= 1e-12);
    CHECK(((c.cycle.monodromy.transpose() - Eigen::Matrix2d::Identity()) * adj.at(0.0)).norm() <= 1e-8);
    CHECK(perron_residual(c.spec, c.cycle, adj) <= 1e-6);
    CHECK(adj.sign_factor == (adj.perron_constant > 0 ? 1 : -1));
    CHECK(std::fabs(std::fabs(adj.perron_constant) - 1.0) <= 1e-8);
    // on the unit circle z0 is a multiple of (-sin t, cos t)
    for (double t : {0.3, 1.7, 4.0}) {
        Eigen::VectorXd z = adj.at(t);
        CHECK(std::fabs(z[0] * std::cos(t) + z[1] * std::sin(t)) <= 1e-7);
    }
}

TEST_CASE("adjoint of van der Pol") {
    fixtures::System v = fixtures::vanderpol();
    CHECK(perron_residual(v.spec, v.cycle, v.adj) <= 1e-6);
    CHECK(((v.cycle.monodromy.transpose() - Eigen::Matrix2d::Identity()) * v.adj.at(0.0)).norm() <= 1e-8);
}

TEST_CASE("bilinear invariant") {
    // <Y(t) w, z0(t)> is constant for solutions of the variational equation
    fixtures::System v = fixtures::vanderpol();
    Lcg rng(11);
    for (int k = 0; k < 5; ++k) {
        Eigen::Vector2d w(rng.uniform() - 0.5, rng.uniform() - 0.5);
        double start = w.dot(v.adj.at(0.0));
        for (double t : {0.25 * v.cycle.period, 0.5 * v.cycle.period, v.cycle.period}) {
            FlowResult fr = flow_with_variational(v.spec, v.cycle.xi0, t, 1e-12);
            double now = (fr.variational * w).dot(v.adj.at(t));
            CHECK(std::fabs(now - start) <= 1e-6 * (1 + std::fabs(start)));
        }
    }
}

TEST_CASE("mismatched adjoint is detected") {
    fixtures::System c = fixtures::circle();
    // a constant vector is not the adjoint solution of the circle
    AdjointCycle wrong;
    wrong.z_traj = Trajectory({0.0, 2 * kPi}, {Eigen::Vector2d(1, 1), Eigen::Vector2d(1, 1)},
                              {Eigen::Vector2d(0, 0), Eigen::Vector2d(0, 0)});
    wrong.perron_constant = c.spec.psi_at(c.cycle.xi0).dot(wrong.z_traj.at(0.0));
    wrong.sign_factor = wrong.perron_constant > 0 ? 1 : -1;
    CHECK(perron_residual(c.spec, c.cycle, wrong) > 1e-3);

    fixtures::System v = fixtures::vanderpol();
    CHECK_THROWS_AS(eval_f(c.spec, c.cycle, v.adj, 0.0), InvalidArgument);
}

TEST_CASE("rescaling") {
    fixtures::System c = fixtures::circle();
    AdjointCycle neg = rescale(c.adj, -1.0);
    AdjointCycle seven = rescale(c.adj, 7.0);
    CHECK(neg.sign_factor == -c.adj.sign_factor);
    CHECK(std::fabs(seven.perron_constant - 7 * c.adj.perron_constant) <= 1e-12);
    CHECK(std::fabs(perron_residual(c.spec, c.cycle, seven) - perron_residual(c.spec, c.cycle, c.adj)) <= 1e-12);
    CHECK_THROWS_AS(rescale(c.adj, 0.0), InvalidArgument);
    for (double th : {0.4, 2.0, 5.5}) {
        double f = eval_f(c.spec, c.cycle, c.adj, th);
        CHECK(std::fabs(eval_f(c.spec, c.cycle, neg, th) - f) <= 1e-12);
        CHECK(std::fabs(eval_f(c.spec, c.cycle, seven, th) - 7 * f) <= 1e-9);
    }
}
