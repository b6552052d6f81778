#pragma once

// Periodic solutions of the perturbed system near the cycle, eps sweeps, and
// the existence verdicts that follow from f and the degree report.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cycledeg/cycle.hpp"
#include "cycledeg/degree.hpp"
#include "cycledeg/errors.hpp"
#include "cycledeg/expr.hpp"
#include "cycledeg/malkin.hpp"

namespace cycledeg {

struct PerturbedOrbit {
    double eps = 0.0;
    Eigen::VectorXd xi_eps;
    double residual = 0.0;      // |x_eps(T, xi) - xi|
    double theta_hat = 0.0;     // phase of the point of x0 nearest to xi_eps
    double sup_distance = 0.0;  // max_t dist(x_eps(t), x0([0, T]))
    /// Cyclic distance from theta_hat to the nearest given zero of f; NaN if none given.
    double phase_error = 0.0;
    int iterations = 0;
};

struct OrbitOptions {
    double tol = 1e-12;  // integration tolerance
    int max_newton = 50;
    int max_halvings = 8;
    std::optional<Eigen::VectorXd> warm_start;  // replaces x0(theta0) as the seed
};

/// Damped Newton on x_eps(T, xi) - xi seeded at x0(theta0). eps = 0 only
/// checks the residual of x0(theta0). Throws NoConvergence, or
/// SingularJacobian if I - dx_eps(T, xi)/dxi has condition above 1e12.
PerturbedOrbit find_perturbed_orbit(const SystemSpec& spec, const LimitCycle& cycle, double theta0,
                                    double eps, const std::vector<double>& zeros = {},
                                    const OrbitOptions& options = {});

/// Phase in [0, T) of the point of x0 closest to x (512 samples, then golden section).
double nearest_phase(const LimitCycle& cycle, const Eigen::VectorXd& x);

struct SweepReport {
    std::vector<double> eps;
    std::vector<PerturbedOrbit> orbits;
    double slope = 0.0;           // least-squares slope of log sup_distance against log eps
    double slope_residual = 0.0;  // RMS residual of that fit
};

/// Raised when a later solve of a sweep fails; carries the completed prefix.
class PartialSweep : public Error {
public:
    PartialSweep(const std::string& message, SweepReport partial)
        : Error("PartialSweep", message), partial_(std::move(partial)) {}
    [[nodiscard]] const SweepReport& partial() const noexcept { return partial_; }

private:
    SweepReport partial_;
};

/// Solves at eps0 * 2^-k, k = 0..halvings, warm-starting each solve from the
/// previous orbit. Requires halvings in [4, 12] and 0 < eps0 <= 1e-2.
SweepReport epsilon_sweep(const SystemSpec& spec, const LimitCycle& cycle,
                          const BifurcationFunction& bf, double theta0, double eps0, int halvings);

/// Least-squares slope and RMS residual of log y against log x over positive pairs.
std::pair<double, double> loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

struct Verdict {
    std::string name;
    bool applies = false;
    std::string witness;
};

struct ConditionSummary {
    std::vector<Verdict> verdicts;
};

/// degree_nonzero: total != 0.
/// endpoint_same_sign: d_psi != 0 and f has the same sign at both ends of every exit interval.
/// bracketed_zero: one per sign change of f, with its bracket.
/// sign_change_zero: some zero of f is a sign change (simple or odd order).
ConditionSummary check_existence_conditions(const BifurcationFunction& bf, const DegreeReport& report);

}  // namespace cycledeg
