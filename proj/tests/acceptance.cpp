// Acceptance suite: one PASS/FAIL line per criterion with pinned tolerances.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "cycledeg/adjoint.hpp"
#include "cycledeg/degree.hpp"
#include "cycledeg/errors.hpp"
#include "cycledeg/malkin.hpp"
#include "cycledeg/verify.hpp"
#include "fixtures.hpp"

using namespace cycledeg;
using fixtures::kPi;

namespace {

struct Outcome {
    bool ok = false;
    std::string detail;
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

const Region& box() {
    static const Region r = Region::box(Eigen::Vector2d(-2, -2), Eigen::Vector2d(0.5, 2));
    return r;
}
const Region& ball2() {
    static const Region r = Region::ball(Eigen::Vector2d(0, 0), 2.0);
    return r;
}
const Region& ball3() {
    static const Region r = Region::ball(Eigen::Vector2d(0, 0), 3.0);
    return r;
}

Outcome floquet_recovery() {
    SystemSpec spec = SystemSpec::from_strings(2, 2 * kPi, fixtures::kCirclePsi, {"cos(t)", "sin(t)"});
    LimitCycle c = find_cycle(spec, Eigen::Vector2d(1.1, 0.0), Section{2, 0.0, 1});
    double l1 = std::abs(c.multipliers[static_cast<std::size_t>(c.trivial_index)] - 1.0);
    double l2 = std::abs(c.multipliers[static_cast<std::size_t>(1 - c.trivial_index)] - 3.4873e-6);
    return {l1 <= 1e-8 && l2 <= 1e-6 && c.beta == 0,
            "|l1-1|=" + num(l1) + " |l2-3.4873e-6|=" + num(l2) + " beta=" + std::to_string(c.beta)};
}

Outcome perron_invariant() {
    fixtures::System c = fixtures::circle();
    fixtures::System v = fixtures::vanderpol();
    double rc = perron_residual(c.spec, c.cycle, c.adj);
    double rv = perron_residual(v.spec, v.cycle, v.adj);
    return {rc <= 1e-6 && rv <= 1e-6, "circle " + num(rc) + ", van der Pol " + num(rv)};
}

Outcome closed_form() {
    fixtures::System c = fixtures::circle();
    double worst = 0.0;
    for (int i = 0; i < 64; ++i) {
        double th = 2 * kPi * i / 64;
        worst = std::max(worst, std::fabs(eval_f(c.spec, c.cycle, c.adj, th) + 2 * kPi * std::sin(th)));
    }
    BifurcationFunction bf = sample_f(c.spec, c.cycle, c.adj, 256);
    double zerr = bf.zeros().size() == 2 ? 0.0 : INFINITY;
    for (const ZeroRecord& z : bf.zeros())
        zerr = std::max(zerr, std::min(fixtures::cyclic_distance(z.theta, 0.0, 2 * kPi),
                                       fixtures::cyclic_distance(z.theta, kPi, 2 * kPi)));
    return {worst <= 1e-6 && zerr <= 1e-8, "max |f + 2 pi sin| = " + num(worst) + ", zero error " + num(zerr)};
}

Outcome two_routes() {
    Lcg rng;
    double worst = 0.0;
    for (const fixtures::System& s : {fixtures::circle(), fixtures::vanderpol()}) {
        BifurcationFunction bf = sample_f(s.spec, s.cycle, s.adj, 256);
        for (int i = 0; i < 16; ++i) {
            double th = s.cycle.period * rng.uniform();
            double d = std::fabs(eval_f(s.spec, s.cycle, s.adj, th) - eval_f_alt(s.spec, s.cycle, s.adj, th));
            worst = std::max(worst, d / (1e-5 * (1 + bf.max_abs())));
        }
    }
    return {worst <= 1.0, "max difference / tolerance = " + num(worst)};
}

struct DegreeCase {
    std::string name;
    std::vector<std::string> phi;
    const Region* region;
    int expected;
};

std::vector<DegreeCase> degree_cases() {
    return {{"ball", {"cos(t)", "sin(t)"}, &ball2(), 1},
            {"box/-", {"-cos(t)", "-sin(t)"}, &box(), 2},
            {"box/+", {"cos(t)", "sin(t)"}, &box(), 0}};
}

Outcome degree_identity() {
    bool ok = true;
    std::string detail;
    for (const DegreeCase& k : degree_cases()) {
        fixtures::System c = fixtures::circle(k.phi);
        BifurcationFunction bf = sample_f(c.spec, c.cycle, c.adj, 256);
        int total = predicted_degree(c.spec, c.cycle, c.adj, bf, *k.region).total;
        detail += (detail.empty() ? "" : "; ") + k.name + " predicted " + std::to_string(total) + " direct";
        ok = ok && total == k.expected;
        for (double eps : {1e-2, 1e-3, 1e-4}) {
            int d = poincare_degree(c.spec, *k.region, eps);
            detail += " " + std::to_string(d);
            ok = ok && d == total;
        }
    }
    return {ok, detail};
}

Outcome empty_sum() {
    bool ok = true;
    std::string detail;
    fixtures::System c = fixtures::circle();
    fixtures::System v = fixtures::vanderpol();
    struct Item {
        const fixtures::System* sys;
        Region region;
        const char* name;
    };
    for (const Item& it : {Item{&c, ball2(), "circle/ball 2"}, Item{&c, Region::ball(Eigen::Vector2d(0, 0), 0.5), "circle/ball 0.5"},
                           Item{&v, ball3(), "van der Pol/ball 3"}}) {
        BifurcationFunction bf = sample_f(it.sys->spec, it.sys->cycle, it.sys->adj, 64);
        DegreeReport r = predicted_degree(it.sys->spec, it.sys->cycle, it.sys->adj, bf, it.region);
        int sign = r.n % 2 == 0 ? 1 : -1;
        ok = ok && r.contributions.empty() && r.total == sign * r.d_psi;
        detail += (detail.empty() ? "" : "; ") + std::string(it.name) + " total " + std::to_string(r.total) +
                  " d_psi " + std::to_string(r.d_psi);
    }
    return {ok, detail};
}

SweepReport circle_sweep() {
    fixtures::System c = fixtures::circle();
    BifurcationFunction bf = sample_f(c.spec, c.cycle, c.adj, 256);
    return epsilon_sweep(c.spec, c.cycle, bf, 0.0, 1e-2, 8);
}

Outcome convergence() {
    fixtures::System c = fixtures::circle();
    BifurcationFunction bf = sample_f(c.spec, c.cycle, c.adj, 256);
    std::vector<double> zeros;
    for (const ZeroRecord& z : bf.zeros()) zeros.push_back(z.theta);
    PerturbedOrbit o = find_perturbed_orbit(c.spec, c.cycle, 0.0, 1e-4, zeros);
    const SweepReport rep = circle_sweep();
    bool decreasing = true;
    for (std::size_t k = 1; k < rep.orbits.size(); ++k)
        decreasing = decreasing && rep.orbits[k].sup_distance < rep.orbits[k - 1].sup_distance;
    return {o.phase_error <= 0.1 && decreasing,
            "phase error " + num(o.phase_error) + ", sup distance " + num(rep.orbits.front().sup_distance) + " -> " +
                num(rep.orbits.back().sup_distance) + (decreasing ? " decreasing" : " not decreasing")};
}

Outcome rate() {
    const SweepReport rep = circle_sweep();
    return {rep.slope >= 0.9 && rep.orbits.size() == 9, "slope " + num(rep.slope) + " over 8 halvings"};
}

Outcome oracle_agreement() {
    bool ok = true;
    std::string detail;
    fixtures::System c = fixtures::circle();
    fixtures::System v = fixtures::vanderpol();
    struct Item {
        const SystemSpec* spec;
        const Region* region;
        const char* name;
    };
    for (const Item& it : {Item{&c.spec, &box(), "circle/box"}, Item{&c.spec, &ball2(), "circle/ball 2"},
                           Item{&v.spec, &ball3(), "van der Pol/ball 3"}}) {
        const SystemSpec& s = *it.spec;
        int b = brouwer_degree_psi(s, *it.region);
        int w = winding_degree([&s](const Eigen::VectorXd& x) { return s.psi_at(x); }, *it.region);
        ok = ok && b == w;
        detail += (detail.empty() ? "" : "; ") + std::string(it.name) + " " + std::to_string(b) + "/" +
                  std::to_string(w);
    }
    return {ok, detail};
}

Outcome derivatives() {
    fixtures::System c = fixtures::circle();
    fixtures::System v = fixtures::vanderpol();
    Lcg rng;
    double jac = 0.0, var = 0.0;
    for (const fixtures::System* s : {&c, &v}) {
        for (int k = 0; k < 5; ++k) {
            Eigen::Vector2d x(4 * rng.uniform() - 2, 4 * rng.uniform() - 2);
            Eigen::MatrixXd J = s->spec.psi_jacobian_at(x);
            for (int j = 0; j < 2; ++j) {
                double h = 1e-6 * std::max(1.0, std::fabs(x[j]));
                Eigen::VectorXd xp = x, xm = x;
                xp[j] += h;
                xm[j] -= h;
                Eigen::VectorXd col = (s->spec.psi_at(xp) - s->spec.psi_at(xm)) / (2 * h);
                jac = std::max(jac, (col - J.col(j)).norm() / std::max(1.0, J.col(j).norm()));
            }
        }
        for (int k = 0; k < 3; ++k) {
            Eigen::VectorXd x0 = s->cycle.state_at(s->cycle.period * rng.uniform()) * 1.05;
            double t = s->cycle.period * (0.25 + 0.75 * rng.uniform());
            FlowResult fr = flow_with_variational(s->spec, x0, t, 1e-12);
            for (int j = 0; j < 2; ++j) {
                Eigen::VectorXd xp = x0, xm = x0;
                xp[j] += 1e-6;
                xm[j] -= 1e-6;
                Eigen::VectorXd col = (flow_endpoint(s->spec, xp, t, 1e-12) - flow_endpoint(s->spec, xm, t, 1e-12)) / 2e-6;
                var = std::max(var, (col - fr.variational.col(j)).norm() / std::max(1e-3, fr.variational.col(j).norm()));
            }
        }
    }
    return {jac <= 1e-6 && var <= 1e-4, "jacobian " + num(jac) + ", variational " + num(var)};
}

Outcome invariance() {
    bool ok = true;
    double shift = 0.0;
    for (const DegreeCase& k : degree_cases()) {
        fixtures::System c = fixtures::circle(k.phi);
        BifurcationFunction base = sample_f(c.spec, c.cycle, c.adj, 256);
        DegreeReport rb = predicted_degree(c.spec, c.cycle, c.adj, base, *k.region);
        for (double factor : {-1.0, 7.0}) {
            AdjointCycle a = rescale(c.adj, factor);
            BifurcationFunction bf = sample_f(c.spec, c.cycle, a, 256);
            DegreeReport r = predicted_degree(c.spec, c.cycle, a, bf, *k.region);
            ok = ok && r.total == rb.total && bf.zeros().size() == base.zeros().size();
            for (std::size_t i = 0; ok && i < bf.zeros().size(); ++i)
                shift = std::max(shift, std::fabs(bf.zeros()[i].theta - base.zeros()[i].theta));
            for (std::size_t i = 0; ok && i < r.contributions.size(); ++i)
                ok = r.contributions[i].interval_degree == rb.contributions[i].interval_degree;
            ok = ok && degree_on_interval(bf, kPi / 2, 3 * kPi / 2) == degree_on_interval(base, kPi / 2, 3 * kPi / 2);
        }
    }
    return {ok && shift <= 1e-10, "max zero shift " + num(shift) + (ok ? ", degrees equal" : ", degrees differ")};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> body;
        double time_limit;  // seconds, <= 0 for none
    };
    const std::vector<Criterion> criteria = {
        {1, "floquet_recovery", floquet_recovery, 1.0},
        {2, "perron_invariant", perron_invariant, 0.0},
        {3, "bifurcation_closed_form", closed_form, 0.0},
        {4, "two_evaluation_routes", two_routes, 0.0},
        {5, "degree_identity", degree_identity, 30.0},
        {6, "no_contact_reduction", empty_sum, 0.0},
        {7, "orbit_convergence", convergence, 0.0},
        {8, "convergence_rate", rate, 60.0},
        {9, "oracle_agreement", oracle_agreement, 0.0},
        {10, "derivative_checks", derivatives, 0.0},
        {11, "scale_sign_invariance", invariance, 0.0},
    };
    int failures = 0;
    for (const Criterion& c : criteria) {
        auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.body();
        } catch (const Error& e) {
            o = {false, e.kind() + ": " + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        bool timely = c.time_limit <= 0.0 || secs < c.time_limit;
        if (!timely) o.detail += ", over the " + num(c.time_limit) + " s limit";
        bool pass = o.ok && timely;
        failures += !pass;
        std::printf("%s %2d %s: %s (%.2f s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
