#include "cycledeg/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cycledeg/errors.hpp"

namespace cycledeg {

// ---------------------------------------------------------------------------
// Trajectory

Trajectory::Trajectory(std::vector<double> times, std::vector<Eigen::VectorXd> states,
                       std::vector<Eigen::VectorXd> derivatives)
    : times_(std::move(times)), states_(std::move(states)), derivs_(std::move(derivatives)) {
    if (times_.empty() || times_.size() != states_.size() || times_.size() != derivs_.size())
        throw InvalidArgument("trajectory needs matching, non-empty node arrays");
    for (std::size_t i = 1; i < times_.size(); ++i)
        if (!(times_[i] > times_[i - 1])) throw InvalidArgument("trajectory times must increase");
}

int Trajectory::dimension() const { return states_.empty() ? 0 : static_cast<int>(states_[0].size()); }

std::size_t Trajectory::segment(double t) const {
    if (times_.size() < 2) return 0;
    auto it = std::upper_bound(times_.begin(), times_.end(), t);
    std::size_t i = static_cast<std::size_t>(std::distance(times_.begin(), it));
    if (i == 0) return 0;
    return std::min(i - 1, times_.size() - 2);
}

Eigen::VectorXd Trajectory::at(double t) const {
    if (times_.size() == 1) return states_[0];
    std::size_t i = segment(t);
    double h = times_[i + 1] - times_[i];
    double s = (t - times_[i]) / h;
    if (s == 0.0) return states_[i];
    if (s == 1.0) return states_[i + 1];
    double s2 = s * s, s3 = s2 * s;
    double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    return h00 * states_[i] + (h10 * h) * derivs_[i] + h01 * states_[i + 1] +
           (h11 * h) * derivs_[i + 1];
}

Eigen::VectorXd Trajectory::derivative_at(double t) const {
    if (times_.size() == 1) return derivs_[0];
    std::size_t i = segment(t);
    double h = times_[i + 1] - times_[i];
    double s = (t - times_[i]) / h;
    double s2 = s * s;
    double d00 = (6 * s2 - 6 * s) / h, d10 = 3 * s2 - 4 * s + 1;
    double d01 = (-6 * s2 + 6 * s) / h, d11 = 3 * s2 - 2 * s;
    return d00 * states_[i] + d10 * derivs_[i] + d01 * states_[i + 1] + d11 * derivs_[i + 1];
}

Trajectory Trajectory::components(int first, int count) const {
    std::vector<Eigen::VectorXd> xs, ds;
    xs.reserve(size());
    ds.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) {
        xs.push_back(states_[i].segment(first, count));
        ds.push_back(derivs_[i].segment(first, count));
    }
    return Trajectory(times_, std::move(xs), std::move(ds));
}

Trajectory Trajectory::scaled(double factor) const {
    std::vector<Eigen::VectorXd> xs, ds;
    for (std::size_t i = 0; i < size(); ++i) {
        xs.push_back(factor * states_[i]);
        ds.push_back(factor * derivs_[i]);
    }
    return Trajectory(times_, std::move(xs), std::move(ds));
}

// ---------------------------------------------------------------------------
// Dormand-Prince 5(4)

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// fifth minus fourth order weights
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr std::size_t kMaxSteps = 10'000'000;

struct Stepper {
    const Rhs& rhs;
    std::size_t n;
    std::vector<double> k1, k2, k3, k4, k5, k6, k7, tmp, xnew;

    Stepper(const Rhs& f, std::size_t dim)
        : rhs(f), n(dim), k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim),
          tmp(dim), xnew(dim) {}

    // Stages from (t, x) with k1 = f(t, x) already set. Returns the scaled
    // error norm, or +inf when a stage produced a non-finite value.
    double attempt(double t, const std::vector<double>& x, double h, double tol) {
        try {
            for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * a21 * k1[i];
            rhs(t + c2 * h, tmp.data(), k2.data());
            for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * (a31 * k1[i] + a32 * k2[i]);
            rhs(t + c3 * h, tmp.data(), k3.data());
            for (std::size_t i = 0; i < n; ++i)
                tmp[i] = x[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
            rhs(t + c4 * h, tmp.data(), k4.data());
            for (std::size_t i = 0; i < n; ++i)
                tmp[i] = x[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
            rhs(t + c5 * h, tmp.data(), k5.data());
            for (std::size_t i = 0; i < n; ++i)
                tmp[i] = x[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                                     a65 * k5[i]);
            rhs(t + h, tmp.data(), k6.data());
            for (std::size_t i = 0; i < n; ++i)
                xnew[i] = x[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
            rhs(t + h, xnew.data(), k7.data());
        } catch (const NonFiniteValue&) {
            return std::numeric_limits<double>::infinity();
        }
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                            e7 * k7[i]);
            double sc = tol * (1.0 + std::max(std::fabs(x[i]), std::fabs(xnew[i])));
            double r = std::fabs(e) / sc;
            if (!std::isfinite(r) || !std::isfinite(xnew[i]))
                return std::numeric_limits<double>::infinity();
            err = std::max(err, r);
        }
        return err;
    }
};

double rms_scaled(const std::vector<double>& v, const std::vector<double>& x, double tol) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        double r = v[i] / (tol * (1.0 + std::fabs(x[i])));
        s += r * r;
    }
    return std::sqrt(s / static_cast<double>(std::max<std::size_t>(1, v.size())));
}

double initial_step(const Rhs& rhs, const std::vector<double>& x, const std::vector<double>& f0,
                    double t, double span, double tol) {
    double d0 = rms_scaled(x, x, tol), d1 = rms_scaled(f0, x, tol);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    std::vector<double> x1(x.size()), f1(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) x1[i] = x[i] + h0 * f0[i];
    try {
        rhs(t + h0, x1.data(), f1.data());
    } catch (const NonFiniteValue&) {
        return h0 * 1e-3;
    }
    for (std::size_t i = 0; i < x.size(); ++i) f1[i] -= f0[i];
    double d2 = rms_scaled(f1, x, tol) / h0;
    double m = std::max(d1, d2);
    double h1 = m <= 1e-15 ? std::max(1e-6 * span, h0 * 1e-3) : std::pow(0.01 / m, 1.0 / 5.0);
    return std::min({100.0 * h0, h1, span});
}

template <typename OnAccept>
std::vector<double> run_dp45(const Rhs& rhs, const Eigen::VectorXd& x0, double t_a, double t_b,
                             double tol, OnAccept&& on_accept) {
    if (!(t_a < t_b)) throw InvalidArgument("integration span must satisfy t_a < t_b");
    if (!(tol >= 1e-13 && tol <= 1e-3)) throw InvalidArgument("tolerance must lie in [1e-13, 1e-3]");
    const std::size_t n = static_cast<std::size_t>(x0.size());
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(x0[static_cast<Eigen::Index>(i)]))
            throw NonFiniteState("initial state is not finite");
    Stepper st(rhs, n);
    std::vector<double> x(x0.data(), x0.data() + n);
    const double span = t_b - t_a;
    const double h_min = 1e-14 * span;
    double t = t_a;
    rhs(t, x.data(), st.k1.data());
    on_accept(t, x, st.k1);
    double h = initial_step(rhs, x, st.k1, t, span, tol);
    bool last_rejected = false;
    for (std::size_t steps = 0; steps < kMaxSteps; ++steps) {
        bool final_step = false;
        if (t + h >= t_b || t_b - (t + h) < h_min) {
            h = t_b - t;
            final_step = true;
        }
        double err = st.attempt(t, x, h, tol);
        if (err <= 1.0) {
            t = final_step ? t_b : t + h;
            x.swap(st.xnew);
            for (std::size_t i = 0; i < n; ++i)
                if (!std::isfinite(x[i]))
                    throw NonFiniteState("state left the double range at t=" + std::to_string(t));
            st.k1.swap(st.k7);
            on_accept(t, x, st.k1);
            if (final_step) return x;
            double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            if (last_rejected) fac = std::min(fac, 1.0);
            h *= fac;
            last_rejected = false;
        } else {
            double fac = std::isfinite(err) ? std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0) : 0.2;
            h *= fac;
            last_rejected = true;
        }
        if (h < h_min)
            throw StepSizeUnderflow("required step below 1e-14 of the span at t=" + std::to_string(t));
    }
    throw StepSizeUnderflow("step budget exhausted at t=" + std::to_string(t));
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

Trajectory integrate(const Rhs& rhs, const Eigen::VectorXd& x0, double t_a, double t_b, double tol) {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> xs, ds;
    run_dp45(rhs, x0, t_a, t_b, tol,
             [&](double t, const std::vector<double>& x, const std::vector<double>& f) {
                 times.push_back(t);
                 xs.push_back(to_eigen(x));
                 ds.push_back(to_eigen(f));
             });
    return Trajectory(std::move(times), std::move(xs), std::move(ds));
}

Eigen::VectorXd integrate_endpoint(const Rhs& rhs, const Eigen::VectorXd& x0, double t_a,
                                   double t_b, double tol) {
    return to_eigen(run_dp45(rhs, x0, t_a, t_b, tol, [](double, const auto&, const auto&) {}));
}

// ---------------------------------------------------------------------------
// Variational and adjoint flows

namespace {

Rhs perturbed_rhs(const SystemSpec& spec, double eps) {
    const int n = spec.dimension();
    return [&spec, eps, n](double t, const double* x, double* dx) {
        spec.eval_psi(x, dx);
        if (eps != 0.0) {
            double buf[16];
            std::vector<double> heap;
            double* p = buf;
            if (n > 16) {
                heap.resize(static_cast<std::size_t>(n));
                p = heap.data();
            }
            spec.eval_phi(t, x, eps, p);
            for (int i = 0; i < n; ++i) dx[i] += eps * p[i];
        }
    };
}

// Augmented state: x (n) followed by Y stored column-major (n*n).
Rhs variational_rhs(const SystemSpec& spec, double eps) {
    const int n = spec.dimension();
    const auto nn = static_cast<std::size_t>(n * n);
    return [&spec, eps, n, jac = std::vector<double>(nn), extra = std::vector<double>(nn),
            p = std::vector<double>(static_cast<std::size_t>(n))](
               double t, const double* z, double* dz) mutable {
        spec.eval_psi(z, dz);
        spec.eval_psi_jacobian(z, jac.data());
        if (eps != 0.0) {
            spec.eval_phi(t, z, eps, p.data());
            for (int i = 0; i < n; ++i) dz[i] += eps * p[static_cast<std::size_t>(i)];
            spec.eval_phi_jacobian(t, z, eps, extra.data());
            for (std::size_t k = 0; k < jac.size(); ++k) jac[k] += eps * extra[k];
        }
        const double* Y = z + n;
        double* dY = dz + n;
        for (int c = 0; c < n; ++c)
            for (int r = 0; r < n; ++r) {
                double s = 0.0;
                for (int k = 0; k < n; ++k) s += jac[static_cast<std::size_t>(r * n + k)] * Y[c * n + k];
                dY[c * n + r] = s;
            }
    };
}

}  // namespace

FlowResult flow_with_variational(const SystemSpec& spec, const Eigen::VectorXd& x0, double t_end,
                                 double tol, double eps) {
    const int n = spec.dimension();
    if (x0.size() != n) throw InvalidArgument("initial state has wrong dimension");
    if (t_end < 0.0) throw InvalidArgument("t_end must be non-negative");
    if (t_end == 0.0) {
        Eigen::VectorXd f(n);
        spec.eval_psi(x0.data(), f.data());
        return {x0, Eigen::MatrixXd::Identity(n, n), Trajectory({0.0}, {x0}, {f})};
    }
    Eigen::VectorXd z0(n + n * n);
    z0.head(n) = x0;
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    z0.tail(n * n) = Eigen::Map<const Eigen::VectorXd>(I.data(), n * n);
    Trajectory aug = integrate(variational_rhs(spec, eps), z0, 0.0, t_end, tol);
    const Eigen::VectorXd& zf = aug.state(aug.size() - 1);
    FlowResult out;
    out.state = zf.head(n);
    out.variational = Eigen::Map<const Eigen::MatrixXd>(zf.data() + n, n, n);
    out.trajectory = aug.components(0, n);
    return out;
}

Eigen::VectorXd flow_endpoint(const SystemSpec& spec, const Eigen::VectorXd& x0, double t_end,
                              double tol, double eps) {
    if (t_end == 0.0) return x0;
    return integrate_endpoint(perturbed_rhs(spec, eps), x0, 0.0, t_end, tol);
}

Trajectory integrate_adjoint(const SystemSpec& spec, const Trajectory& cycle_traj,
                             const Eigen::VectorXd& z_start, double t_a, double t_b, double tol) {
    const int n = spec.dimension();
    if (z_start.size() != n) throw InvalidArgument("adjoint start has wrong dimension");
    const double slack = 1e-12 * (1.0 + std::fabs(t_b - t_a));
    if (t_a < cycle_traj.t_begin() - slack || t_b > cycle_traj.t_end() + slack)
        throw InvalidArgument("cycle trajectory does not cover the adjoint span");
    Rhs rhs = [&spec, &cycle_traj, n](double t, const double* z, double* dz) {
        Eigen::VectorXd x = cycle_traj.at(t);
        std::vector<double> jac(static_cast<std::size_t>(n * n));
        spec.eval_psi_jacobian(x.data(), jac.data());
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += jac[static_cast<std::size_t>(k * n + i)] * z[k];
            dz[i] = -s;
        }
    };
    return integrate(rhs, z_start, t_a, t_b, tol);
}

// ---------------------------------------------------------------------------
// Events

namespace {

int sgn(double v) { return (v > 0.0) - (v < 0.0); }

struct ScanResult {
    std::vector<EventHit> hits;
    std::vector<double> grazes;
};

ScanResult scan(const Trajectory& traj, const EventSpec& ev, double t_a, double t_b) {
    if (!(t_a < t_b)) throw InvalidArgument("event search needs t_a < t_b");
    const double span = t_b - t_a;
    const double slack = 1e-12 * (1.0 + span);
    if (t_a < traj.t_begin() - slack || t_b > traj.t_end() + slack)
        throw InvalidArgument("event search lies outside the trajectory");
    t_a = std::max(t_a, traj.t_begin());
    t_b = std::min(t_b, traj.t_end());

    // Node grid refined to four points per integrator step.
    std::vector<double> grid{t_a};
    for (double tn : traj.times())
        if (tn > t_a && tn < t_b) grid.push_back(tn);
    grid.push_back(t_b);
    std::vector<double> ts;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        for (int k = 0; k < 4; ++k) ts.push_back(grid[i] + (grid[i + 1] - grid[i]) * k / 4.0);
    ts.push_back(t_b);

    auto g = [&](double t) { return ev.g(traj.at(t)); };
    std::vector<double> gs(ts.size());
    double scale = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        gs[i] = g(ts[i]);
        scale = std::max(scale, std::fabs(gs[i]));
    }
    ScanResult out;
    if (scale < ev.transversality_tol) {
        // g vanishes along the whole stretch: the trajectory lies on the boundary.
        out.grazes.push_back(t_a);
        return out;
    }
    const double zero_tol = 1e-10 * scale;

    std::vector<int> sg(gs.size());
    for (std::size_t i = 0; i < gs.size(); ++i) sg[i] = sgn(gs[i]);
    // A start on the boundary takes the sign of the motion away from it.
    if (std::fabs(gs[0]) <= zero_tol) {
        for (std::size_t i = 1; i < gs.size(); ++i)
            if (std::fabs(gs[i]) > zero_tol) {
                sg[0] = sgn(gs[i]);
                break;
            }
    }

    auto tangential_at_end = [&](double t0, double dir) {
        double delta = 1e-4 * span;
        double g0 = g(t0);
        double d1 = g(t0 + dir * delta) - g0, d2 = g(t0 + 2 * dir * delta) - g0;
        if (std::fabs(d1) < 1e-300) return true;
        return d2 / d1 > 3.0;  // quadratic rather than linear departure
    };
    if (std::fabs(gs.front()) < ev.transversality_tol && tangential_at_end(t_a, 1.0))
        out.grazes.push_back(t_a);

    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
        if (sg[i] != 0 && sg[i + 1] != sg[i]) {
            double lo = ts[i], hi = ts[i + 1];
            double glo = gs[i];
            if (sg[i + 1] == 0) {
                lo = hi;
            } else {
                while (hi - lo > 1e-12 * span) {
                    double mid = 0.5 * (lo + hi);
                    double gm = g(mid);
                    if (gm == 0.0) {
                        lo = hi = mid;
                        break;
                    }
                    if (sgn(gm) == sgn(glo)) {
                        lo = mid;
                        glo = gm;
                    } else {
                        hi = mid;
                    }
                }
            }
            double tstar = 0.5 * (lo + hi);
            double delta = std::min(1e-4 * span, 0.25 * (ts[i + 1] - ts[i]) + 1e-9 * span);
            double tl = std::max(t_a, tstar - delta), tr = std::min(t_b, tstar + delta);
            double slope = (g(tr) - g(tl)) / (tr - tl);
            if (std::fabs(slope) * span < 1e-6 * scale) out.grazes.push_back(tstar);
            out.hits.push_back({tstar, sg[i] < 0 ? +1 : -1});
            continue;
        }
        // Interior local minimum of |g| with no sign change around it.
        if (i >= 1 && sg[i - 1] == sg[i] && sg[i] == sg[i + 1] &&
            std::fabs(gs[i]) <= std::fabs(gs[i - 1]) && std::fabs(gs[i]) <= std::fabs(gs[i + 1]) &&
            std::fabs(gs[i]) < 1e3 * ev.transversality_tol + 1e-6 * scale) {
            // golden-section search for the minimum of |g|
            double a = ts[i - 1], b = ts[i + 1];
            const double r = 0.5 * (std::sqrt(5.0) - 1.0);
            double c = b - r * (b - a), d = a + r * (b - a);
            double fc = std::fabs(g(c)), fd = std::fabs(g(d));
            for (int it = 0; it < 80 && b - a > 1e-13 * span; ++it) {
                if (fc < fd) {
                    b = d; d = c; fd = fc;
                    c = b - r * (b - a); fc = std::fabs(g(c));
                } else {
                    a = c; c = d; fc = fd;
                    d = a + r * (b - a); fd = std::fabs(g(d));
                }
            }
            if (std::min(fc, fd) < ev.transversality_tol) out.grazes.push_back(0.5 * (a + b));
        }
    }
    if (std::fabs(gs.back()) < ev.transversality_tol && sg[sg.size() - 2] == sg.back() &&
        tangential_at_end(t_b, -1.0))
        out.grazes.push_back(t_b);
    std::sort(out.grazes.begin(), out.grazes.end());
    return out;
}

[[noreturn]] void throw_graze(double t) {
    throw GrazingContact("tangential contact with the boundary near t=" + std::to_string(t));
}

}  // namespace

std::vector<EventHit> find_events(const Trajectory& traj, const EventSpec& ev, double t_a,
                                  double t_b) {
    ScanResult r = scan(traj, ev, t_a, t_b);
    if (!r.grazes.empty()) throw_graze(r.grazes.front());
    std::vector<EventHit> out;
    for (const EventHit& h : r.hits)
        if (ev.direction == 0 || h.direction == ev.direction) out.push_back(h);
    return out;
}

std::optional<double> locate_event(const Trajectory& traj, const EventSpec& ev, double t_a,
                                   double t_b) {
    ScanResult r = scan(traj, ev, t_a, t_b);
    std::optional<double> first;
    for (const EventHit& h : r.hits)
        if (ev.direction == 0 || h.direction == ev.direction) {
            first = h.time;
            break;
        }
    for (double tg : r.grazes)
        if (!first || tg <= *first) throw_graze(tg);
    return first;
}

}  // namespace cycledeg
