#pragma once

// The Malkin bifurcation function
//
//   f(theta) = sign<x0'(0), z0(0)> * int_0^T <z0(tau), phi(tau - theta, x0(tau), 0)> dtau
//
// evaluated by composite Gauss-Legendre quadrature, plus the equivalent form
// through the variational flow, sampling, zero classification and scalar
// interval degrees.

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cycledeg/adjoint.hpp"
#include "cycledeg/cycle.hpp"
#include "cycledeg/expr.hpp"

namespace cycledeg {

inline constexpr int kDefaultPanels = 64;

/// Composite 4-point Gauss-Legendre quadrature with `panels` panels.
double eval_f(const SystemSpec& spec, const LimitCycle& cycle, const AdjointCycle& adj,
              double theta, int panels = kDefaultPanels);

/// sign_factor * <F(x0(theta)), z0(theta)> with
/// F(xi) = int_0^T (dx(tau, xi)/dxi)^{-1} phi(tau, x(tau, xi), 0) dtau,
/// accumulated alongside the variational flow. Throws
/// SingularVariationalMatrix if the flow derivative has condition above 1e12.
double eval_f_alt(const SystemSpec& spec, const LimitCycle& cycle, const AdjointCycle& adj,
                  double theta, double tol = 1e-12);

enum class ZeroKind { SignChange, TangentialSuspect };

struct ZeroRecord {
    double theta = 0.0;
    ZeroKind kind = ZeroKind::SignChange;
    double lo = 0.0, hi = 0.0;  // bracket
    double residual = 0.0;      // |f(theta)|
};

/// Uniform samples of f on [0, T] with classified zeros. Carries an evaluator
/// so values between grid points are exact quadratures rather than interpolants.
class BifurcationFunction {
public:
    using Evaluator = std::function<double(double)>;

    BifurcationFunction(double period, std::vector<double> values, Evaluator evaluator,
                        int panels = kDefaultPanels);

    [[nodiscard]] double period() const { return period_; }
    [[nodiscard]] int samples() const { return static_cast<int>(values_.size()) - 1; }
    [[nodiscard]] double theta(int i) const { return period_ * i / samples(); }
    [[nodiscard]] const std::vector<double>& values() const { return values_; }
    [[nodiscard]] const std::vector<ZeroRecord>& zeros() const { return zeros_; }
    [[nodiscard]] double max_abs() const { return max_abs_; }
    [[nodiscard]] int panels() const { return panels_; }
    [[nodiscard]] std::string rule() const { return "gauss-legendre-4"; }
    /// True when every sample is (numerically) zero.
    [[nodiscard]] bool identically_zero() const;

    /// f(theta) for any real theta, T-periodic.
    [[nodiscard]] double at(double theta) const;
    [[nodiscard]] const Evaluator& evaluator() const { return eval_; }

    /// f(theta + s), samples and zeros reindexed.
    [[nodiscard]] BifurcationFunction shifted(double s) const;

private:
    BifurcationFunction() = default;
    void classify_zeros();

    double period_ = 0.0;
    std::vector<double> values_;  // m + 1 samples, theta_m = T
    std::vector<ZeroRecord> zeros_;
    double max_abs_ = 0.0;
    Evaluator eval_;
    int panels_ = kDefaultPanels;
};

/// m + 1 uniform samples on [0, T]; sign changes refined by bisection to
/// 1e-10 T; minima of |f| below 1e-6 max|f| without a sign change are
/// reported as tangential suspects.
BifurcationFunction sample_f(const SystemSpec& spec, const LimitCycle& cycle,
                             const AdjointCycle& adj, int m, int panels = kDefaultPanels);

/// (sign f(b) - sign f(a)) / 2. Throws BoundaryZero if |f| <= 1e-9 max|f| at an endpoint.
int degree_on_interval(const BifurcationFunction& bf, double a, double b);

/// Bifurcation function of the shifted cycle t -> x0(t + s).
BifurcationFunction shift_f(const BifurcationFunction& bf, double s);

}  // namespace cycledeg
