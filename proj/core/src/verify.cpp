#include "cycledeg/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cycledeg/ode.hpp"

namespace cycledeg {

namespace {

constexpr int kProjectionSamples = 512;
constexpr int kDistanceSamples = 512;

double cyclic_distance(double a, double b, double T) {
    double d = std::fmod(std::fabs(a - b), T);
    return std::min(d, T - d);
}

struct Projection {
    double phase;
    double distance;
};

Projection project(const LimitCycle& cycle, const std::vector<Eigen::VectorXd>& samples,
                   const Eigen::VectorXd& x) {
    const double T = cycle.period;
    const double h = T / static_cast<double>(samples.size());
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double d = (samples[i] - x).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    auto dist = [&](double t) { return (cycle.state_at(t) - x).norm(); };
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = best * h - h, hi = best * h + h;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = dist(x1), f2 = dist(x2);
    while (hi - lo > 1e-12 * T) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = dist(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = dist(x2);
        }
    }
    double t = 0.5 * (lo + hi);
    return {cycle.reduce(t), std::min(dist(t), std::sqrt(best_d))};
}

std::vector<Eigen::VectorXd> curve_samples(const LimitCycle& cycle) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(kProjectionSamples);
    for (int i = 0; i < kProjectionSamples; ++i)
        out.push_back(cycle.state_at(cycle.period * i / kProjectionSamples));
    return out;
}

double nearest_zero_distance(double theta, const std::vector<double>& zeros, double T) {
    double best = std::numeric_limits<double>::quiet_NaN();
    for (double z : zeros) {
        double d = cyclic_distance(theta, z, T);
        if (!(d >= best)) best = d;
    }
    return best;
}

}  // namespace

double nearest_phase(const LimitCycle& cycle, const Eigen::VectorXd& x) {
    return project(cycle, curve_samples(cycle), x).phase;
}

PerturbedOrbit find_perturbed_orbit(const SystemSpec& spec, const LimitCycle& cycle, double theta0,
                                    double eps, const std::vector<double>& zeros,
                                    const OrbitOptions& opt) {
    const int n = spec.dimension();
    const double T = cycle.period;
    if (std::fabs(spec.period() - T) > 1e-9 * std::max(1.0, T))
        throw InvalidArgument("system period does not match the cycle period");
    if (!(eps >= 0.0 && eps <= 0.1)) throw InvalidArgument("eps must lie in [0, 0.1]");
    if (opt.warm_start && opt.warm_start->size() != n) throw InvalidArgument("warm start has wrong dimension");

    Eigen::VectorXd xi = opt.warm_start ? *opt.warm_start : cycle.state_at(theta0);
    PerturbedOrbit orbit;
    orbit.eps = eps;

    FlowResult fr;
    bool converged = false;
    for (int it = 0; it <= opt.max_newton; ++it) {
        fr = flow_with_variational(spec, xi, T, opt.tol, eps);
        Eigen::VectorXd F = fr.state - xi;
        orbit.iterations = it;
        if (F.norm() <= 1e-9 * (1.0 + xi.norm())) {
            converged = true;
            break;
        }
        if (eps == 0.0)
            throw NoConvergence("x0(theta0) is not a fixed point of the unperturbed time-T map (residual " +
                                std::to_string(F.norm()) + ")");
        if (it == opt.max_newton) break;

        Eigen::MatrixXd A = fr.variational - Eigen::MatrixXd::Identity(n, n);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
        const Eigen::VectorXd& sv = svd.singularValues();
        double cond = sv[n - 1] > 0.0 ? sv[0] / sv[n - 1] : std::numeric_limits<double>::infinity();
        if (!(cond <= 1e12)) {
            std::ostringstream msg;
            msg << "I - dx_eps(T, xi)/dxi has condition " << cond << " at eps = " << eps;
            throw SingularJacobian(msg.str());
        }
        Eigen::VectorXd dx = -A.partialPivLu().solve(F);

        double r0 = F.norm();
        double lambda = 1.0;
        Eigen::VectorXd trial = xi + dx;
        for (int h = 0; h < opt.max_halvings; ++h) {
            trial = xi + lambda * dx;
            try {
                Eigen::VectorXd end = flow_endpoint(spec, trial, T, opt.tol, eps);
                if ((end - trial).norm() < r0) break;
            } catch (const Error&) {
            }
            lambda *= 0.5;
            trial = xi + lambda * dx;
        }
        xi = trial;
    }
    if (!converged)
        throw NoConvergence("perturbed orbit did not converge in " + std::to_string(opt.max_newton) +
                            " Newton steps at eps = " + std::to_string(eps));

    orbit.xi_eps = xi;
    orbit.residual = (fr.state - xi).norm();
    std::vector<Eigen::VectorXd> samples = curve_samples(cycle);
    orbit.theta_hat = project(cycle, samples, xi).phase;
    double sup = 0.0;
    for (int i = 0; i < kDistanceSamples; ++i) {
        double t = T * i / kDistanceSamples;
        sup = std::max(sup, project(cycle, samples, fr.trajectory.at(t)).distance);
    }
    orbit.sup_distance = sup;
    orbit.phase_error = nearest_zero_distance(orbit.theta_hat, zeros, T);
    return orbit;
}

std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i)
        if (x[i] > 0.0 && y[i] > 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (lx.size() < 2) return {nan, nan};
    Eigen::MatrixXd A(static_cast<Eigen::Index>(lx.size()), 2);
    Eigen::VectorXd b(static_cast<Eigen::Index>(lx.size()));
    for (std::size_t i = 0; i < lx.size(); ++i) {
        A(static_cast<Eigen::Index>(i), 0) = 1.0;
        A(static_cast<Eigen::Index>(i), 1) = lx[i];
        b[static_cast<Eigen::Index>(i)] = ly[i];
    }
    Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
    double rms = std::sqrt((A * c - b).squaredNorm() / static_cast<double>(lx.size()));
    return {c[1], rms};
}

SweepReport epsilon_sweep(const SystemSpec& spec, const LimitCycle& cycle,
                          const BifurcationFunction& bf, double theta0, double eps0, int halvings) {
    if (halvings < 4 || halvings > 12) throw InvalidArgument("halvings must lie in [4, 12]");
    if (!(eps0 > 0.0 && eps0 <= 1e-2)) throw InvalidArgument("eps0 must lie in (0, 1e-2]");
    std::vector<double> zeros;
    for (const ZeroRecord& z : bf.zeros())
        if (z.kind == ZeroKind::SignChange) zeros.push_back(z.theta);

    SweepReport report;
    OrbitOptions opt;
    auto finish = [&report] {
        std::vector<double> d;
        for (const PerturbedOrbit& o : report.orbits) d.push_back(o.sup_distance);
        std::tie(report.slope, report.slope_residual) = loglog_fit(report.eps, d);
    };
    for (int k = 0; k <= halvings; ++k) {
        double eps = std::ldexp(eps0, -k);
        PerturbedOrbit orbit;
        try {
            orbit = find_perturbed_orbit(spec, cycle, theta0, eps, zeros, opt);
        } catch (const Error& e) {
            if (k == 0) throw;
            finish();
            std::ostringstream msg;
            msg << "sweep stopped at eps = " << eps << " after " << k << " solves: " << e.kind() << ": "
                << e.what();
            throw PartialSweep(msg.str(), report);
        }
        opt.warm_start = orbit.xi_eps;
        report.eps.push_back(eps);
        report.orbits.push_back(std::move(orbit));
    }
    finish();
    return report;
}

ConditionSummary check_existence_conditions(const BifurcationFunction& bf, const DegreeReport& report) {
    ConditionSummary out;
    {
        Verdict v{"degree_nonzero", report.total != 0, "total = " + std::to_string(report.total)};
        out.verdicts.push_back(v);
    }
    {
        bool same = report.d_psi != 0;
        std::ostringstream w;
        w << "d_psi = " << report.d_psi;
        for (const Contribution& c : report.contributions) {
            if (!c.theta_exit) continue;
            w << "; s = " << c.phase << ": f(s) = " << c.f_start << ", f(s + theta_exit) = " << c.f_exit;
            if (!(c.f_start * c.f_exit > 0.0)) same = false;
        }
        out.verdicts.push_back({"endpoint_same_sign", same, w.str()});
    }
    bool any_sign_change = false;
    for (const ZeroRecord& z : bf.zeros()) {
        if (z.kind != ZeroKind::SignChange) continue;
        any_sign_change = true;
        std::ostringstream w;
        w << "bracket [" << z.lo << ", " << z.hi << "], f = " << bf.at(z.lo) << " .. " << bf.at(z.hi)
          << ", zero at " << z.theta;
        out.verdicts.push_back({"bracketed_zero", true, w.str()});
    }
    if (!any_sign_change) out.verdicts.push_back({"bracketed_zero", false, "f has no sign change"});
    {
        std::ostringstream w;
        int count = 0;
        for (const ZeroRecord& z : bf.zeros())
            if (z.kind == ZeroKind::SignChange) {
                w << (count++ ? ", " : "zeros at ") << z.theta;
            }
        if (count == 0) w << "no sign-change zero";
        out.verdicts.push_back({"sign_change_zero", count > 0, w.str()});
    }
    return out;
}

}  // namespace cycledeg
