#pragma once

// Adaptive Dormand-Prince 5(4) integration with cubic Hermite dense output,
// variational and adjoint flows, and event location on dense trajectories.

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cycledeg/expr.hpp"

namespace cycledeg {

/// Right-hand side: writes f(t, x) into dx. Both arrays have the system size.
using Rhs = std::function<void(double t, const double* x, double* dx)>;

/// Accepted integrator nodes with states and right-hand sides, interpolated
/// by cubic Hermite polynomials between nodes.
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(std::vector<double> times, std::vector<Eigen::VectorXd> states,
               std::vector<Eigen::VectorXd> derivatives);

    [[nodiscard]] int dimension() const;
    [[nodiscard]] std::size_t size() const { return times_.size(); }
    [[nodiscard]] bool empty() const { return times_.empty(); }
    [[nodiscard]] double t_begin() const { return times_.front(); }
    [[nodiscard]] double t_end() const { return times_.back(); }
    [[nodiscard]] const std::vector<double>& times() const { return times_; }
    [[nodiscard]] const Eigen::VectorXd& state(std::size_t i) const { return states_[i]; }
    [[nodiscard]] const Eigen::VectorXd& derivative(std::size_t i) const { return derivs_[i]; }

    /// Dense state; t must lie in [t_begin, t_end] up to roundoff.
    [[nodiscard]] Eigen::VectorXd at(double t) const;
    [[nodiscard]] Eigen::VectorXd derivative_at(double t) const;

    /// Components [first, first+count) of every node.
    [[nodiscard]] Trajectory components(int first, int count) const;
    /// Every state and derivative multiplied by `factor`.
    [[nodiscard]] Trajectory scaled(double factor) const;

private:
    [[nodiscard]] std::size_t segment(double t) const;

    std::vector<double> times_;
    std::vector<Eigen::VectorXd> states_;
    std::vector<Eigen::VectorXd> derivs_;
};

/// Adaptive DP5(4): local error per step <= tol * (1 + |x_i|) componentwise.
/// Throws StepSizeUnderflow or NonFiniteState.
Trajectory integrate(const Rhs& rhs, const Eigen::VectorXd& x0, double t_a, double t_b, double tol);

/// Same stepping as integrate() without storing the trajectory.
Eigen::VectorXd integrate_endpoint(const Rhs& rhs, const Eigen::VectorXd& x0, double t_a,
                                   double t_b, double tol);

struct FlowResult {
    Eigen::VectorXd state;        // x(t_end, x0)
    Eigen::MatrixXd variational;  // d x(t_end, x0) / d x0
    Trajectory trajectory;        // x only
};

/// Integrates xdot = psi(x) + eps*phi(t,x,eps) with Ydot = (psi'(x) + eps*phi_x) Y,
/// Y(0) = I, from t = 0. eps = 0 gives the unperturbed flow.
FlowResult flow_with_variational(const SystemSpec& spec, const Eigen::VectorXd& x0, double t_end,
                                 double tol, double eps = 0.0);

/// x_eps(t_end, x0) without variational equations.
Eigen::VectorXd flow_endpoint(const SystemSpec& spec, const Eigen::VectorXd& x0, double t_end,
                              double tol, double eps = 0.0);

/// zdot = -(psi'(x0(t)))^T z along the dense cycle trajectory.
Trajectory integrate_adjoint(const SystemSpec& spec, const Trajectory& cycle_traj,
                             const Eigen::VectorXd& z_start, double t_a, double t_b, double tol);

struct EventSpec {
    std::function<double(const Eigen::VectorXd&)> g;
    int direction = 0;                 // +1 upward, -1 downward, 0 any
    double transversality_tol = 1e-8;  // |g| below this without a sign change is a tangency
};

struct EventHit {
    double time;
    int direction;  // +1 if g increases through zero
};

/// All sign changes of g along traj within [t_a, t_b], refined by bisection.
/// A zero of g exactly at t_a does not count as a crossing. Throws
/// GrazingContact on tangential touches.
std::vector<EventHit> find_events(const Trajectory& traj, const EventSpec& ev, double t_a,
                                  double t_b);

/// Earliest crossing in the filtered direction, or nullopt. Tangencies before
/// that crossing raise GrazingContact.
std::optional<double> locate_event(const Trajectory& traj, const EventSpec& ev, double t_a,
                                   double t_b);

}  // namespace cycledeg
