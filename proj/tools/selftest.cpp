#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>
#include <string>
#include <tuple>

#include "commands.hpp"
#include "cycledeg/degree.hpp"
#include "cycledeg/errors.hpp"
#include "cycledeg/malkin.hpp"
#include "cycledeg/ode.hpp"
#include "cycledeg/verify.hpp"

namespace cycledeg::cli {

namespace {

constexpr double kPi = std::numbers::pi;

const std::vector<std::string> kCirclePsi = {"-x2 + x1*(1 - x1^2 - x2^2)", "x1 + x2*(1 - x1^2 - x2^2)"};
const std::vector<std::string> kVdpPsi = {"x2", "(1 - x1^2)*x2 - x1"};

struct Bundle {
    SystemSpec spec;
    LimitCycle cycle;
    AdjointCycle adj;
};

Bundle circle(const std::vector<std::string>& phi) {
    SystemSpec spec = SystemSpec::from_strings(2, 2 * kPi, kCirclePsi, phi);
    LimitCycle cyc = find_cycle(spec, Eigen::Vector2d(1.1, 0.0), Section{2, 0.0, 1});
    AdjointCycle adj = periodic_adjoint(spec, cyc);
    return {spec, cyc, adj};
}

Bundle vanderpol() {
    SystemSpec base = SystemSpec::from_strings(2, 6.6, kVdpPsi, {"0", "0"});
    Section sec{2, 0.0, -1};
    PeriodSolution ps = period_solve(base, Eigen::Vector2d(2.0, 0.0), sec);
    std::string w = format17(2 * kPi / ps.least_period);
    SystemSpec spec = SystemSpec::from_strings(2, ps.least_period, kVdpPsi, {"cos(" + w + "*t)", "0"});
    LimitCycle cyc = find_cycle(spec, ps.xi0, sec);
    AdjointCycle adj = periodic_adjoint(spec, cyc);
    return {spec, cyc, adj};
}

double jacobian_fd_error(const SystemSpec& spec, const Eigen::VectorXd& x) {
    const int n = spec.dimension();
    Eigen::MatrixXd J = spec.psi_jacobian_at(x);
    double worst = 0.0;
    for (int j = 0; j < n; ++j) {
        double h = 1e-6 * std::max(1.0, std::fabs(x[j]));
        Eigen::VectorXd xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        Eigen::VectorXd col = (spec.psi_at(xp) - spec.psi_at(xm)) / (2 * h);
        worst = std::max(worst, (col - J.col(j)).norm() / std::max(1.0, J.col(j).norm()));
    }
    return worst;
}

double variational_fd_error(const SystemSpec& spec, const Eigen::VectorXd& x, double t) {
    const int n = spec.dimension();
    FlowResult fr = flow_with_variational(spec, x, t, 1e-12);
    double worst = 0.0;
    for (int j = 0; j < n; ++j) {
        Eigen::VectorXd xp = x, xm = x;
        xp[j] += 1e-6;
        xm[j] -= 1e-6;
        Eigen::VectorXd col = (flow_endpoint(spec, xp, t, 1e-12) - flow_endpoint(spec, xm, t, 1e-12)) / 2e-6;
        worst = std::max(worst, (col - fr.variational.col(j)).norm() / std::max(1e-3, fr.variational.col(j).norm()));
    }
    return worst;
}

}  // namespace

bool selftest(std::ostream& out) {
    int failures = 0;
    auto check = [&](const std::string& name, const std::function<std::string()>& body) {
        std::string detail;
        bool ok = false;
        try {
            detail = body();
            ok = detail.rfind("ok", 0) == 0;
        } catch (const Error& e) {
            detail = e.kind() + ": " + e.what();
        }
        if (!ok) ++failures;
        out << (ok ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
    };
    auto verdict = [](bool ok, const std::string& detail) { return (ok ? "ok, " : "bad, ") + detail; };

    Bundle c = circle({"cos(t)", "sin(t)"});
    Bundle v = vanderpol();

    check("jacobian_fd", [&] {
        double e = std::max(jacobian_fd_error(c.spec, Eigen::Vector2d(0.7, -0.3)),
                            jacobian_fd_error(v.spec, Eigen::Vector2d(1.3, 0.4)));
        return verdict(e <= 1e-6, "max relative error " + format17(e));
    });
    check("variational_fd", [&] {
        double e = std::max(variational_fd_error(c.spec, Eigen::Vector2d(1.05, 0.1), 2 * kPi),
                            variational_fd_error(v.spec, Eigen::Vector2d(1.9, 0.2), v.cycle.period));
        return verdict(e <= 1e-4, "max relative error " + format17(e));
    });
    check("circle_multipliers", [&] {
        const auto& m = c.cycle.multipliers;
        double l1 = std::abs(m[static_cast<std::size_t>(c.cycle.trivial_index)] - 1.0);
        double l2 = std::abs(m[static_cast<std::size_t>(1 - c.cycle.trivial_index)] - std::exp(-4 * kPi));
        return verdict(l1 <= 1e-8 && l2 <= 1e-6 && c.cycle.beta == 0,
                       "|l1 - 1| = " + format17(l1) + ", |l2 - e^-4pi| = " + format17(l2));
    });
    check("perron_constancy", [&] {
        double r = std::max(perron_residual(c.spec, c.cycle, c.adj), perron_residual(v.spec, v.cycle, v.adj));
        return verdict(r <= 1e-6, "max relative variation " + format17(r));
    });
    check("f_closed_form", [&] {
        double worst = 0.0;
        for (int i = 0; i < 64; ++i) {
            double th = 2 * kPi * i / 64;
            worst = std::max(worst, std::fabs(eval_f(c.spec, c.cycle, c.adj, th) + 2 * kPi * std::sin(th)));
        }
        return verdict(worst <= 1e-6, "max |f + 2 pi sin| = " + format17(worst));
    });
    check("f_two_routes", [&] {
        double worst = 0.0;
        Lcg rng;
        for (const Bundle* b : {&c, &v}) {
            BifurcationFunction bf = sample_f(b->spec, b->cycle, b->adj, 64);
            for (int i = 0; i < 16; ++i) {
                double th = b->cycle.period * rng.uniform();
                double d = std::fabs(eval_f(b->spec, b->cycle, b->adj, th) - eval_f_alt(b->spec, b->cycle, b->adj, th));
                worst = std::max(worst, d / (1.0 + bf.max_abs()));
            }
        }
        return verdict(worst <= 1e-5, "max scaled difference " + format17(worst));
    });
    check("adjoint_sign_and_scale", [&] {
        BifurcationFunction b1 = sample_f(c.spec, c.cycle, c.adj, 64);
        BifurcationFunction b2 = sample_f(c.spec, c.cycle, rescale(c.adj, -1.0), 64);
        BifurcationFunction b7 = sample_f(c.spec, c.cycle, rescale(c.adj, 7.0), 64);
        bool ok = b1.zeros().size() == b2.zeros().size() && b1.zeros().size() == b7.zeros().size();
        for (std::size_t i = 0; ok && i < b1.zeros().size(); ++i)
            ok = std::fabs(b1.zeros()[i].theta - b2.zeros()[i].theta) <= 1e-10 &&
                 std::fabs(b1.zeros()[i].theta - b7.zeros()[i].theta) <= 1e-10;
        return verdict(ok, std::to_string(b1.zeros().size()) + " zeros compared");
    });
    check("degree_identity", [&] {
        Region box = Region::box(Eigen::Vector2d(-2, -2), Eigen::Vector2d(0.5, 2));
        Region ball = Region::ball(Eigen::Vector2d(0, 0), 2.0);
        Bundle neg = circle({"-cos(t)", "-sin(t)"});
        std::string detail;
        bool ok = true;
        for (auto [b, r, name] : {std::tuple{&neg, &box, "box/-"}, std::tuple{&c, &box, "box/+"},
                                  std::tuple{&c, &ball, "ball"}}) {
            BifurcationFunction bf = sample_f(b->spec, b->cycle, b->adj, 256);
            int predicted = predicted_degree(b->spec, b->cycle, b->adj, bf, *r).total;
            int direct = poincare_degree(b->spec, *r, 1e-3);
            ok = ok && predicted == direct;
            detail += std::string(detail.empty() ? "" : ", ") + name + " " + std::to_string(predicted) + "/" +
                      std::to_string(direct);
        }
        return verdict(ok, detail);
    });
    check("winding_oracle", [&] {
        Region box = Region::box(Eigen::Vector2d(-2, -2), Eigen::Vector2d(0.5, 2));
        Region ball3 = Region::ball(Eigen::Vector2d(0, 0), 3.0);
        bool ok = true;
        for (auto [b, r] : {std::pair{&c, &box}, std::pair{&v, &ball3}}) {
            const SystemSpec& s = b->spec;
            int w = winding_degree([&s](const Eigen::VectorXd& x) { return s.psi_at(x); }, *r);
            ok = ok && w == brouwer_degree_psi(s, *r);
        }
        return verdict(ok, "equilibrium sum against boundary winding");
    });
    check("sweep_slope", [&] {
        BifurcationFunction bf = sample_f(c.spec, c.cycle, c.adj, 256);
        SweepReport rep = epsilon_sweep(c.spec, c.cycle, bf, 0.0, 1e-2, 8);
        return verdict(rep.slope >= 0.9, "slope " + format17(rep.slope));
    });

    out << (failures == 0 ? "all checks passed" : std::to_string(failures) + " check(s) failed") << "\n";
    return failures == 0;
}

}  // namespace cycledeg::cli
