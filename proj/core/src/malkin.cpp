#include "cycledeg/malkin.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "cycledeg/errors.hpp"

namespace cycledeg {

namespace {

constexpr std::array<double, 4> kGaussNodes = {-0.8611363115940526, -0.3399810435848563,
                                               0.3399810435848563, 0.8611363115940526};
constexpr std::array<double, 4> kGaussWeights = {0.3478548451374538, 0.6521451548625461,
                                                 0.6521451548625461, 0.3478548451374538};

void check_consistent(const SystemSpec& spec, const LimitCycle& cycle, const AdjointCycle& adj) {
    const double T = cycle.period;
    if (std::fabs(spec.period() - T) > 1e-9 * std::max(1.0, T))
        throw InvalidArgument("system period does not match the cycle period");
    if (std::fabs(adj.period() - T) > 1e-9 * std::max(1.0, T))
        throw InvalidArgument("adjoint solution does not match the cycle");
}

int sign_of(double v) { return (v > 0.0) - (v < 0.0); }

double wrap(double t, double T) {
    double r = std::fmod(t, T);
    if (r < 0.0) r += T;
    if (r >= T) r -= T;
    return r;
}

}  // namespace

double eval_f(const SystemSpec& spec, const LimitCycle& cycle, const AdjointCycle& adj,
              double theta, int panels) {
    if (panels < 1) throw InvalidArgument("quadrature needs at least one panel");
    check_consistent(spec, cycle, adj);
    const int n = spec.dimension();
    const double T = cycle.period;
    const double h = T / panels;
    Eigen::VectorXd phi(n);
    double sum = 0.0;
    for (int k = 0; k < panels; ++k) {
        double mid = (k + 0.5) * h;
        double panel = 0.0;
        for (std::size_t j = 0; j < 4; ++j) {
            double tau = mid + 0.5 * h * kGaussNodes[j];
            Eigen::VectorXd x = cycle.trajectory.at(tau);
            spec.eval_phi(tau - theta, x.data(), 0.0, phi.data());
            panel += kGaussWeights[j] * adj.z_traj.at(tau).dot(phi);
        }
        sum += panel;
    }
    return adj.sign_factor * 0.5 * h * sum;
}

double eval_f_alt(const SystemSpec& spec, const LimitCycle& cycle, const AdjointCycle& adj,
                  double theta, double tol) {
    check_consistent(spec, cycle, adj);
    const int n = spec.dimension();
    const int nn = n * n;
    const double T = cycle.period;

    // state (x, Y column-major, q) with q' = Y^{-1} phi(tau, x, 0)
    Eigen::VectorXd s0 = Eigen::VectorXd::Zero(n + nn + n);
    s0.head(n) = cycle.state_at(theta);
    for (int i = 0; i < n; ++i) s0[n + i * n + i] = 1.0;

    double worst_rcond = 1.0;
    Rhs rhs = [&spec, n, nn, &worst_rcond, jac = std::vector<double>(static_cast<std::size_t>(nn)),
               phi = Eigen::VectorXd(n)](double tau, const double* s, double* ds) mutable {
        spec.eval_psi(s, ds);
        spec.eval_psi_jacobian(s, jac.data());
        Eigen::Map<const Eigen::MatrixXd> Y(s + n, n, n);
        Eigen::Map<const Eigen::MatrixXd> J(jac.data(), n, n);  // transposed view of row-major
        Eigen::Map<Eigen::MatrixXd> dY(ds + n, n, n);
        dY.noalias() = J.transpose() * Y;
        spec.eval_phi(tau, s, 0.0, phi.data());
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(Y);
        double rc = lu.rcond();
        worst_rcond = std::min(worst_rcond, rc);
        if (!(rc >= 1e-12)) {
            std::ostringstream msg;
            msg << "flow derivative is singular to working precision at tau = " << tau
                << " (rcond " << rc << ")";
            throw SingularVariationalMatrix(msg.str());
        }
        Eigen::Map<Eigen::VectorXd> dq(ds + n + nn, n);
        dq = lu.solve(phi);
    };
    Eigen::VectorXd sT = integrate_endpoint(rhs, s0, 0.0, T, tol);
    Eigen::VectorXd q = sT.tail(n);
    return adj.sign_factor * q.dot(adj.at(theta));
}

// ---------------------------------------------------------------------------
// BifurcationFunction

BifurcationFunction::BifurcationFunction(double period, std::vector<double> values,
                                         Evaluator evaluator, int panels)
    : period_(period), values_(std::move(values)), eval_(std::move(evaluator)), panels_(panels) {
    if (values_.size() < 2) throw InvalidArgument("bifurcation function needs at least two samples");
    for (double v : values_) max_abs_ = std::max(max_abs_, std::fabs(v));
    classify_zeros();
}

bool BifurcationFunction::identically_zero() const { return max_abs_ <= 1e-12; }

double BifurcationFunction::at(double theta) const {
    double r = wrap(theta, period_);
    double h = period_ / samples();
    double k = std::round(r / h);
    if (std::fabs(r - k * h) <= 1e-14 * period_) return values_[static_cast<std::size_t>(k)];
    return eval_(r);
}

void BifurcationFunction::classify_zeros() {
    zeros_.clear();
    if (identically_zero()) return;
    const int m = samples();
    const double T = period_;
    const double tol = 1e-10 * T;
    // cyclic view: sample m is sample 0
    auto val = [&](int i) { return values_[static_cast<std::size_t>(((i % m) + m) % m)]; };

    for (int i = 0; i < m; ++i) {
        double a = theta(i), b = theta(i) + T / m;
        double fa = val(i), fb = val(i + 1);
        if (fa == 0.0) {
            // exact zero on the grid: classify by the neighbours
            int sl = sign_of(val(i - 1)), sr = sign_of(fb);
            ZeroRecord z;
            z.theta = a;
            z.lo = a - T / m;
            z.hi = b;
            z.residual = 0.0;
            z.kind = (sl * sr < 0) ? ZeroKind::SignChange : ZeroKind::TangentialSuspect;
            zeros_.push_back(z);
            continue;
        }
        if (fa * fb < 0.0) {
            double lo = a, hi = b, flo = fa;
            while (hi - lo > tol) {
                double mid = 0.5 * (lo + hi);
                double fm = eval_(wrap(mid, T));
                if (fm == 0.0) {
                    lo = hi = mid;
                    break;
                }
                if (sign_of(fm) == sign_of(flo)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            ZeroRecord z;
            z.theta = 0.5 * (lo + hi);
            z.lo = a;
            z.hi = b;
            z.residual = std::fabs(eval_(wrap(z.theta, T)));
            if (z.theta >= T) {
                z.theta -= T;
                z.lo -= T;
                z.hi -= T;
            }
            zeros_.push_back(z);
        }
    }

    // even-order candidates: small local minima of |f| without a sign change
    const double small = 1e-6 * max_abs_;
    for (int i = 0; i < m; ++i) {
        double f = val(i), fl = val(i - 1), fr = val(i + 1);
        if (f == 0.0) continue;
        if (std::fabs(f) > std::fabs(fl) || std::fabs(f) > std::fabs(fr)) continue;
        if (f * fl < 0.0 || f * fr < 0.0) continue;
        // golden section on |f| over the neighbouring cells
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        double lo = theta(i) - T / m, hi = theta(i) + T / m;
        double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
        double f1 = std::fabs(eval_(wrap(x1, T))), f2 = std::fabs(eval_(wrap(x2, T)));
        for (int it = 0; it < 60 && hi - lo > tol; ++it) {
            if (f1 < f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = std::fabs(eval_(wrap(x1, T)));
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = std::fabs(eval_(wrap(x2, T)));
            }
        }
        double tstar = 0.5 * (lo + hi);
        double fstar = eval_(wrap(tstar, T));
        if (std::fabs(fstar) >= small) continue;
        if (fstar * f < 0.0) continue;  // tiny sign change inside; left to the scan above
        ZeroRecord z;
        z.kind = ZeroKind::TangentialSuspect;
        z.theta = wrap(tstar, T);
        z.lo = theta(i) - T / m;
        z.hi = theta(i) + T / m;
        z.residual = std::fabs(fstar);
        zeros_.push_back(z);
    }
    std::sort(zeros_.begin(), zeros_.end(),
              [](const ZeroRecord& a, const ZeroRecord& b) { return a.theta < b.theta; });
}

BifurcationFunction BifurcationFunction::shifted(double s) const {
    const double T = period_;
    const int m = samples();
    double r = wrap(s, T);
    double h = T / m;
    double k = std::round(r / h);

    BifurcationFunction out;
    out.period_ = T;
    out.panels_ = panels_;
    Evaluator base = eval_;
    out.eval_ = [base, r, T](double theta) { return base(wrap(theta + r, T)); };
    out.values_.resize(values_.size());
    if (std::fabs(r - k * h) <= 1e-14 * T) {
        int ki = static_cast<int>(k) % m;
        for (int i = 0; i <= m; ++i) out.values_[static_cast<std::size_t>(i)] = values_[static_cast<std::size_t>((i + ki) % m)];
        if (ki == 0) out.values_[static_cast<std::size_t>(m)] = values_[static_cast<std::size_t>(m)];
    } else {
        for (int i = 0; i <= m; ++i) out.values_[static_cast<std::size_t>(i)] = base(wrap(i * h + r, T));
    }
    out.max_abs_ = 0.0;
    for (double v : out.values_) out.max_abs_ = std::max(out.max_abs_, std::fabs(v));
    for (ZeroRecord z : zeros_) {
        double t = z.theta - r;
        double shift = -r;
        if (t < 0.0) {
            t += T;
            shift += T;
        }
        z.theta = t;
        z.lo += shift;
        z.hi += shift;
        out.zeros_.push_back(z);
    }
    std::sort(out.zeros_.begin(), out.zeros_.end(),
              [](const ZeroRecord& a, const ZeroRecord& b) { return a.theta < b.theta; });
    return out;
}

BifurcationFunction sample_f(const SystemSpec& spec, const LimitCycle& cycle,
                             const AdjointCycle& adj, int m, int panels) {
    if (m < 16) throw InvalidArgument("sample_f needs at least 16 samples");
    check_consistent(spec, cycle, adj);
    const double T = cycle.period;
    // The evaluator owns copies so the result outlives its inputs.
    auto sp = std::make_shared<const SystemSpec>(spec);
    auto cy = std::make_shared<const LimitCycle>(cycle);
    auto ad = std::make_shared<const AdjointCycle>(adj);
    BifurcationFunction::Evaluator ev = [sp, cy, ad, panels](double theta) {
        return eval_f(*sp, *cy, *ad, theta, panels);
    };
    std::vector<double> values(static_cast<std::size_t>(m) + 1);
    for (int i = 0; i <= m; ++i) values[static_cast<std::size_t>(i)] = ev(T * i / m);
    return BifurcationFunction(T, std::move(values), std::move(ev), panels);
}

int degree_on_interval(const BifurcationFunction& bf, double a, double b) {
    double fa = bf.at(a), fb = bf.at(b);
    double thr = 1e-9 * bf.max_abs();
    if (!(std::fabs(fa) > thr) || !(std::fabs(fb) > thr)) {
        std::ostringstream msg;
        msg << "f vanishes at the interval endpoint "
            << (!(std::fabs(fa) > thr) ? a : b) << " (f(a) = " << fa << ", f(b) = " << fb << ")";
        throw BoundaryZero(msg.str());
    }
    return (sign_of(fb) - sign_of(fa)) / 2;
}

BifurcationFunction shift_f(const BifurcationFunction& bf, double s) { return bf.shifted(s); }

}  // namespace cycledeg
