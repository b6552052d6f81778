#pragma once

#include <Eigen/Dense>

#include "cycledeg/cycle.hpp"
#include "cycledeg/expr.hpp"
#include "cycledeg/ode.hpp"

namespace cycledeg {

/// Periodic solution z0 of zdot = -(psi'(x0(t)))^T z, normalized to |z0(0)| = 1.
struct AdjointCycle {
    Trajectory z_traj;           // over [0, T]
    double perron_constant = 0;  // <x0'(0), z0(0)>
    int sign_factor = 1;         // sign of perron_constant

    [[nodiscard]] double period() const { return z_traj.t_end(); }
    /// z0(t) for any real t, using periodicity.
    [[nodiscard]] Eigen::VectorXd at(double t) const;
};

/// z0(0) is the unit left eigenvector of the monodromy for multiplier 1 with
/// its first non-negligible component positive. The adjoint equation is
/// integrated in the direction in which the non-trivial modes decay.
/// Throws DegenerateCycle if that eigenspace is not one-dimensional or the
/// Perron constant vanishes.
AdjointCycle periodic_adjoint(const SystemSpec& spec, const LimitCycle& cycle, double tol = 1e-12);

/// max over 256 uniform times of |<x0'(t), z0(t)> - c| / |c|.
double perron_residual(const SystemSpec& spec, const LimitCycle& cycle, const AdjointCycle& adj);

/// Same adjoint solution multiplied by a nonzero factor; the sign factor
/// follows the sign of the new Perron constant.
AdjointCycle rescale(const AdjointCycle& adj, double factor);

}  // namespace cycledeg
