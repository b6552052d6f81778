#include "cycledeg/cycle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "cycledeg/errors.hpp"

namespace cycledeg {

namespace {

void check_section(const Section& s, int n) {
    if (s.coord < 1 || s.coord > n)
        throw InvalidArgument("section coordinate must lie in 1.." + std::to_string(n));
    if (s.direction != 1 && s.direction != -1)
        throw InvalidArgument("section direction must be +1 or -1");
}

// Sum of the principal (n-1)-minors of A, i.e. trace(adj A). For A = I - M
// with a simple eigenvalue 1 of M this is det(I - M~) on the complement.
double principal_minor_sum(const Eigen::MatrixXd& A) {
    const Eigen::Index n = A.rows();
    if (n == 1) return 1.0;
    double sum = 0.0;
    for (Eigen::Index skip = 0; skip < n; ++skip) {
        Eigen::MatrixXd minor(n - 1, n - 1);
        for (Eigen::Index r = 0, rr = 0; r < n; ++r) {
            if (r == skip) continue;
            for (Eigen::Index c = 0, cc = 0; c < n; ++c) {
                if (c == skip) continue;
                minor(rr, cc++) = A(r, c);
            }
            ++rr;
        }
        sum += minor.determinant();
    }
    return sum;
}

void require_transversal(const SystemSpec& spec, const Eigen::VectorXd& xi, const Section& s) {
    Eigen::VectorXd f = spec.psi_at(xi);
    double speed = f.norm();
    double normal = f[s.coord - 1] * s.direction;
    if (!(speed > 1e-10) || !(normal > 1e-8 * speed)) {
        std::ostringstream msg;
        msg << "orbit through x" << s.coord << "=" << s.value << " does not cross the section "
            << (s.direction > 0 ? "upward" : "downward") << " transversally (|psi|=" << speed
            << ", normal component=" << f[s.coord - 1] << ")";
        throw SectionMiss(msg.str());
    }
}

double residual_norm(const Eigen::VectorXd& r) { return r.norm(); }

}  // namespace

FloquetData multipliers_and_beta(const Eigen::MatrixXd& monodromy, double mult_tol) {
    if (monodromy.rows() != monodromy.cols() || monodromy.rows() == 0)
        throw InvalidArgument("monodromy must be a non-empty square matrix");
    if (!monodromy.allFinite()) throw InvalidArgument("monodromy has non-finite entries");
    const Eigen::Index n = monodromy.rows();
    Eigen::EigenSolver<Eigen::MatrixXd> es(monodromy, false);
    if (es.info() != Eigen::Success) throw InvalidArgument("eigenvalue computation failed");

    FloquetData out;
    for (Eigen::Index i = 0; i < n; ++i) out.multipliers.push_back(es.eigenvalues()[i]);

    int near_one = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < out.multipliers.size(); ++i) {
        double d = std::abs(out.multipliers[i] - 1.0);
        if (d <= mult_tol) ++near_one;
        if (d < best) {
            best = d;
            out.trivial_index = static_cast<int>(i);
        }
    }
    out.nondegenerate = near_one == 1;
    if (!out.nondegenerate) {
        std::ostringstream msg;
        msg << near_one << " characteristic multipliers lie within " << mult_tol
            << " of 1 (exactly one required)";
        throw DegenerateCycle(msg.str());
    }

    int beta = 0;
    for (std::size_t i = 0; i < out.multipliers.size(); ++i) {
        if (static_cast<int>(i) == out.trivial_index) continue;
        const auto& lam = out.multipliers[i];
        bool real = std::fabs(lam.imag()) <= 1e-12 * std::max(1.0, std::abs(lam));
        if (real ? lam.real() > 1.0 + mult_tol : std::abs(lam) > 1.0 + mult_tol) ++beta;
    }
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    out.complement_determinant = principal_minor_sum(I - monodromy);
    // The determinant sign is authoritative for the parity.
    bool even = beta % 2 == 0;
    if (out.complement_determinant != 0.0 && even != (out.complement_determinant > 0.0)) ++beta;
    out.beta = beta;
    return out;
}

double LimitCycle::reduce(double t) const {
    double r = std::fmod(t, period);
    if (r < 0.0) r += period;
    return r;
}

Eigen::VectorXd LimitCycle::state_at(double t) const { return trajectory.at(reduce(t)); }

Trajectory LimitCycle::shifted(double s) const {
    s = reduce(s);
    const double T = period;
    if (s == 0.0) return trajectory;
    const auto& ts = trajectory.times();
    const double min_gap = 1e-13 * T;
    std::vector<double> times;
    std::vector<Eigen::VectorXd> xs, ds;
    auto push = [&](double t, const Eigen::VectorXd& x, const Eigen::VectorXd& d) {
        if (!times.empty() && t - times.back() < min_gap) return;
        times.push_back(t);
        xs.push_back(x);
        ds.push_back(d);
    };
    const Eigen::VectorXd xs0 = trajectory.at(s), ds0 = trajectory.derivative_at(s);
    push(0.0, xs0, ds0);
    for (std::size_t i = 0; i < ts.size(); ++i)
        if (ts[i] > s) push(ts[i] - s, trajectory.state(i), trajectory.derivative(i));
    for (std::size_t i = 1; i < ts.size(); ++i)
        if (ts[i] < s) push(ts[i] + T - s, trajectory.state(i), trajectory.derivative(i));
    if (T - times.back() < min_gap) {
        times.back() = T;
        xs.back() = xs0;
        ds.back() = ds0;
    } else {
        push(T, xs0, ds0);
    }
    return Trajectory(std::move(times), std::move(xs), std::move(ds));
}

// Integration error has to sit well below the shooting tolerance: the phase
// error along the orbit cannot be removed by moving xi.
static double integration_tol(double tol) { return std::clamp(1e-2 * tol, 1e-13, 1e-3); }

LimitCycle find_cycle(const SystemSpec& spec, const Eigen::VectorXd& seed, const Section& section,
                      const CycleOptions& opt) {
    const int n = spec.dimension();
    if (seed.size() != n) throw InvalidArgument("seed has wrong dimension");
    check_section(section, n);
    const int k = section.coord - 1;
    const double T = spec.period();

    auto section_residual = [&](const Eigen::VectorXd& xi, const Eigen::VectorXd& end) {
        Eigen::VectorXd G = end - xi;
        G[k] = xi[k] - section.value;
        return G;
    };

    Eigen::VectorXd xi = seed;
    for (int it = 0; it <= opt.max_newton; ++it) {
        FlowResult fr = flow_with_variational(spec, xi, T, integration_tol(opt.tol));
        Eigen::VectorXd r = fr.state - xi;
        Eigen::VectorXd G = section_residual(xi, fr.state);
        double scale = 1.0 + xi.norm();
        if (r.norm() <= opt.tol * scale && std::fabs(G[k]) <= opt.tol * scale) {
            require_transversal(spec, xi, section);
            FloquetData fd = multipliers_and_beta(fr.variational, opt.mult_tol);
            LimitCycle cyc;
            cyc.xi0 = xi;
            cyc.period = T;
            cyc.trajectory = std::move(fr.trajectory);
            cyc.monodromy = fr.variational;
            cyc.multipliers = fd.multipliers;
            cyc.trivial_index = fd.trivial_index;
            cyc.beta = fd.beta;
            cyc.nondegenerate = fd.nondegenerate;
            cyc.p = least_period_divisor(cyc, std::max(opt.tol, 1e-8));
            return cyc;
        }
        if (it == opt.max_newton) break;

        Eigen::MatrixXd J = fr.variational - Eigen::MatrixXd::Identity(n, n);
        J.row(k).setZero();
        J(k, k) = 1.0;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(J);
        if (qr.rank() < n) {
            multipliers_and_beta(fr.variational, opt.mult_tol);  // throws if degenerate
            throw NoConvergence("singular shooting Jacobian at iteration " + std::to_string(it));
        }
        Eigen::VectorXd dx = -qr.solve(G);
        if (!dx.allFinite()) throw NoConvergence("non-finite Newton step");

        // Damped update: halve while the residual does not decrease.
        double g0 = residual_norm(G);
        double lambda = 1.0;
        Eigen::VectorXd trial = xi + dx;
        for (int h = 0; h < opt.max_halvings; ++h) {
            trial = xi + lambda * dx;
            try {
                Eigen::VectorXd end = flow_endpoint(spec, trial, T, integration_tol(opt.tol));
                if (residual_norm(section_residual(trial, end)) < g0) break;
            } catch (const Error&) {
            }
            lambda *= 0.5;
            trial = xi + lambda * dx;
        }
        xi = trial;
    }
    throw NoConvergence("shooting did not converge in " + std::to_string(opt.max_newton) +
                        " Newton steps");
}

PeriodSolution period_solve(const SystemSpec& spec, const Eigen::VectorXd& seed,
                            const Section& section, const CycleOptions& opt) {
    const int n = spec.dimension();
    if (seed.size() != n) throw InvalidArgument("seed has wrong dimension");
    check_section(section, n);
    const int k = section.coord - 1;

    Rhs rhs = [&spec](double, const double* x, double* dx) { spec.eval_psi(x, dx); };
    EventSpec ev{[&](const Eigen::VectorXd& x) { return x[k] - section.value; }, section.direction,
                 1e-12};

    // Period guess: spacing of the last two of the first few section returns.
    std::vector<double> crossings;
    Trajectory probe;
    for (double horizon = 10.0; horizon <= 1e4; horizon *= 2.0) {
        probe = integrate(rhs, seed, 0.0, horizon, std::max(opt.tol, 1e-10));
        crossings.clear();
        try {
            for (const EventHit& h : find_events(probe, ev, 0.0, horizon)) crossings.push_back(h.time);
        } catch (const GrazingContact&) {
            throw SectionMiss("orbit from the seed touches the section tangentially");
        }
        if (crossings.size() >= 4) break;
    }
    if (crossings.size() < 2)
        throw SectionMiss("orbit from the seed does not return to the section");
    std::size_t last = std::min<std::size_t>(crossings.size(), 4) - 1;
    Eigen::VectorXd xi = probe.at(crossings[last - 1]);
    xi[k] = section.value;
    double T = crossings[last] - crossings[last - 1];

    auto residual = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& end) {
        Eigen::VectorXd F(n + 1);
        F.head(n) = end - x;
        F[n] = x[k] - section.value;
        return F;
    };

    for (int it = 0; it <= opt.max_newton; ++it) {
        FlowResult fr = flow_with_variational(spec, xi, T, integration_tol(opt.tol));
        Eigen::VectorXd F = residual(xi, fr.state);
        double scale = 1.0 + xi.norm();
        if (F.head(n).norm() <= opt.tol * scale && std::fabs(F[n]) <= opt.tol * scale) {
            require_transversal(spec, xi, section);
            multipliers_and_beta(fr.variational, opt.mult_tol);
            return {xi, T};
        }
        if (it == opt.max_newton) break;
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n + 1, n + 1);
        J.topLeftCorner(n, n) = fr.variational - Eigen::MatrixXd::Identity(n, n);
        J.topRightCorner(n, 1) = spec.psi_at(fr.state);
        J(n, k) = 1.0;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(J);
        if (qr.rank() < n + 1) {
            multipliers_and_beta(fr.variational, opt.mult_tol);
            throw NoConvergence("singular period-shooting Jacobian at iteration " +
                                std::to_string(it));
        }
        Eigen::VectorXd d = -qr.solve(F);
        if (!d.allFinite()) throw NoConvergence("non-finite Newton step");

        double f0 = F.norm();
        double lambda = 1.0;
        Eigen::VectorXd xt = xi + d.head(n);
        double Tt = T + d[n];
        for (int h = 0; h < opt.max_halvings; ++h) {
            xt = xi + lambda * d.head(n);
            Tt = T + lambda * d[n];
            if (Tt > 0.0) {
                try {
                    Eigen::VectorXd end = flow_endpoint(spec, xt, Tt, integration_tol(opt.tol));
                    if (residual(xt, end).norm() < f0) break;
                } catch (const Error&) {
                }
            }
            lambda *= 0.5;
            xt = xi + lambda * d.head(n);
            Tt = T + lambda * d[n];
        }
        if (!(Tt > 0.0)) throw NoConvergence("period estimate became non-positive");
        xi = xt;
        T = Tt;
    }
    throw NoConvergence("period shooting did not converge in " + std::to_string(opt.max_newton) +
                        " Newton steps");
}

int least_period_divisor(const LimitCycle& cycle, double tol) {
    const double scale = 1.0 + cycle.xi0.norm();
    for (int p = 64; p >= 2; --p) {
        Eigen::VectorXd x = cycle.trajectory.at(cycle.period / p);
        if ((x - cycle.xi0).norm() <= tol * scale) return p;
    }
    return 1;
}

}  // namespace cycledeg
