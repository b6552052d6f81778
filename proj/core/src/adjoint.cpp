#include "cycledeg/adjoint.hpp"

#include <cmath>
#include <sstream>

#include "cycledeg/errors.hpp"

namespace cycledeg {

Eigen::VectorXd AdjointCycle::at(double t) const {
    const double T = period();
    double r = std::fmod(t, T);
    if (r < 0.0) r += T;
    return z_traj.at(r);
}

AdjointCycle periodic_adjoint(const SystemSpec& spec, const LimitCycle& cycle, double tol) {
    const int n = spec.dimension();
    if (n < 2) throw DegenerateCycle("limit cycles need dimension at least 2");
    const double T = cycle.period;
    const Eigen::MatrixXd& M = cycle.monodromy;

    Eigen::MatrixXd A = M.transpose() - Eigen::MatrixXd::Identity(n, n);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();  // descending
    double smax = std::max(1.0, sv[0]);
    if (sv[n - 2] <= 1e-7 * smax) {
        std::ostringstream msg;
        msg << "left eigenspace of multiplier 1 is not one-dimensional (singular values "
            << sv[n - 2] << ", " << sv[n - 1] << ")";
        throw DegenerateCycle(msg.str());
    }
    Eigen::VectorXd v = svd.matrixV().col(n - 1);
    v.normalize();
    for (int i = 0; i < n; ++i)
        if (std::fabs(v[i]) > 1e-12) {
            if (v[i] < 0.0) v = -v;
            break;
        }

    // Forward integration amplifies the non-trivial adjoint modes by 1/|lambda|.
    // Integrate forward only when every non-trivial multiplier is expanding.
    bool all_expanding = true;
    for (std::size_t i = 0; i < cycle.multipliers.size(); ++i)
        if (static_cast<int>(i) != cycle.trivial_index && std::abs(cycle.multipliers[i]) <= 1.0)
            all_expanding = false;

    AdjointCycle adj;
    if (all_expanding) {
        Trajectory z = integrate_adjoint(spec, cycle.trajectory, v, 0.0, T, tol);
        adj.z_traj = std::move(z);
    } else {
        // w(s) = z(T - s) solves wdot = psi'(x0(T - s))^T w.
        Rhs rhs = [&spec, &cycle, n, T, jac = std::vector<double>(static_cast<std::size_t>(n * n))](
                      double s, const double* w, double* dw) mutable {
            Eigen::VectorXd x = cycle.trajectory.at(std::max(0.0, T - s));
            spec.eval_psi_jacobian(x.data(), jac.data());
            for (int i = 0; i < n; ++i) {
                double acc = 0.0;
                for (int k = 0; k < n; ++k) acc += jac[static_cast<std::size_t>(k * n + i)] * w[k];
                dw[i] = acc;
            }
        };
        Trajectory w = integrate(rhs, v, 0.0, T, tol);
        const std::size_t m = w.size();
        double norm0 = w.state(m - 1).norm();
        std::vector<double> times(m);
        std::vector<Eigen::VectorXd> zs(m), dzs(m);
        for (std::size_t i = 0; i < m; ++i) {
            std::size_t j = m - 1 - i;
            times[i] = i == 0 ? 0.0 : (i == m - 1 ? T : T - w.times()[j]);
            zs[i] = w.state(j) / norm0;
            dzs[i] = -w.derivative(j) / norm0;
        }
        adj.z_traj = Trajectory(std::move(times), std::move(zs), std::move(dzs));
    }

    Eigen::VectorXd f0 = spec.psi_at(cycle.xi0);
    adj.perron_constant = f0.dot(adj.z_traj.state(0));
    if (!(std::fabs(adj.perron_constant) > 1e-12 * std::max(1.0, f0.norm())))
        throw DegenerateCycle("Perron constant <x0'(0), z0(0)> vanishes");
    adj.sign_factor = adj.perron_constant > 0.0 ? 1 : -1;
    return adj;
}

double perron_residual(const SystemSpec& spec, const LimitCycle& cycle, const AdjointCycle& adj) {
    constexpr int kSamples = 256;
    const double T = cycle.period;
    double c = adj.perron_constant;
    double worst = 0.0;
    for (int i = 0; i < kSamples; ++i) {
        double t = T * i / kSamples;
        double val = spec.psi_at(cycle.state_at(t)).dot(adj.at(t));
        worst = std::max(worst, std::fabs(val - c) / std::fabs(c));
    }
    return worst;
}

AdjointCycle rescale(const AdjointCycle& adj, double factor) {
    if (factor == 0.0 || !std::isfinite(factor)) throw InvalidArgument("rescale factor must be nonzero");
    AdjointCycle out;
    out.z_traj = adj.z_traj.scaled(factor);
    out.perron_constant = adj.perron_constant * factor;
    out.sign_factor = out.perron_constant > 0.0 ? 1 : -1;
    return out;
}

}  // namespace cycledeg
