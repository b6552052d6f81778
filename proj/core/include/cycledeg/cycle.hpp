#pragma once

// Shooting for nondegenerate T-periodic limit cycles of xdot = psi(x), with
// Floquet multipliers and the parity datum beta.

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "cycledeg/expr.hpp"
#include "cycledeg/ode.hpp"

namespace cycledeg {

/// Phase condition x_coord = value, crossed in `direction` (+1 or -1).
/// `coord` is 1-based to match the variable names x1..xn.
struct Section {
    int coord = 1;
    double value = 0.0;
    int direction = 1;
};

struct CycleOptions {
    double tol = 1e-10;       // shooting residual and integration tolerance
    double mult_tol = 1e-6;   // radius around 1 that identifies the trivial multiplier
    int max_newton = 50;
    int max_halvings = 8;
};

struct FloquetData {
    std::vector<std::complex<double>> multipliers;
    int trivial_index = 0;
    int beta = 0;
    bool nondegenerate = false;
    /// det(I - M~) with M~ the monodromy on a complement of the trivial direction.
    double complement_determinant = 0.0;
};

/// Eigenvalues of the monodromy, the trivial multiplier, and beta with
/// (-1)^beta = sign det(I - M~). Throws DegenerateCycle unless exactly one
/// multiplier lies within mult_tol of 1.
FloquetData multipliers_and_beta(const Eigen::MatrixXd& monodromy, double mult_tol);

struct LimitCycle {
    Eigen::VectorXd xi0;
    double period = 0.0;
    int p = 1;  // period / p is the least period
    Trajectory trajectory;
    Eigen::MatrixXd monodromy;
    std::vector<std::complex<double>> multipliers;
    int trivial_index = 0;
    int beta = 0;
    bool nondegenerate = false;

    [[nodiscard]] int dimension() const { return static_cast<int>(xi0.size()); }
    /// x0(t) for any real t, using periodicity.
    [[nodiscard]] Eigen::VectorXd state_at(double t) const;
    /// Time reduced into [0, period).
    [[nodiscard]] double reduce(double t) const;
    /// Dense trajectory of the shifted cycle t -> x0(t + s) over [0, period],
    /// built from the same Hermite pieces.
    [[nodiscard]] Trajectory shifted(double s) const;
};

/// Newton shooting at the fixed period spec.period().
/// Throws NoConvergence, DegenerateCycle, or SectionMiss.
LimitCycle find_cycle(const SystemSpec& spec, const Eigen::VectorXd& seed, const Section& section,
                      const CycleOptions& options = {});

struct PeriodSolution {
    Eigen::VectorXd xi0;
    double least_period = 0.0;
};

/// Newton on (xi, T) with the section fixing the phase; the period guess is
/// the first return time to the section. Errors as find_cycle.
PeriodSolution period_solve(const SystemSpec& spec, const Eigen::VectorXd& seed,
                            const Section& section, const CycleOptions& options = {});

/// Largest p <= 64 with |x(T/p) - xi0| <= tol (1 + |xi0|); 1 if none.
int least_period_divisor(const LimitCycle& cycle, double tol);

}  // namespace cycledeg
