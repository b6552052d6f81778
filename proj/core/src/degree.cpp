#include "cycledeg/degree.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cycledeg/errors.hpp"
#include "cycledeg/ode.hpp"

namespace cycledeg {

namespace {

std::string format_point(const Eigen::VectorXd& x) {
    std::ostringstream out;
    out << "(";
    for (Eigen::Index i = 0; i < x.size(); ++i) out << (i ? ", " : "") << x[i];
    out << ")";
    return out.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Region

Region Region::ball(Eigen::VectorXd center, double radius) {
    if (center.size() < 1) throw InvalidArgument("ball center must be non-empty");
    if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidArgument("ball radius must be positive");
    Region r;
    r.shape_ = Shape::Ball;
    r.a_ = std::move(center);
    r.radius_ = radius;
    return r;
}

Region Region::box(Eigen::VectorXd lo, Eigen::VectorXd hi) {
    if (lo.size() < 1 || lo.size() != hi.size()) throw InvalidArgument("box bounds must have equal, non-zero length");
    for (Eigen::Index i = 0; i < lo.size(); ++i)
        if (!(lo[i] < hi[i])) throw InvalidArgument("box needs lo < hi in every coordinate");
    Region r;
    r.shape_ = Shape::Box;
    r.a_ = std::move(lo);
    r.b_ = std::move(hi);
    return r;
}

double Region::signed_distance(const Eigen::VectorXd& x) const {
    if (x.size() != a_.size()) throw InvalidArgument("point dimension does not match region");
    if (shape_ == Shape::Ball) return (x - a_).norm() - radius_;
    Eigen::VectorXd c = 0.5 * (a_ + b_);
    Eigen::VectorXd h = 0.5 * (b_ - a_);
    Eigen::VectorXd q = (x - c).cwiseAbs() - h;
    double outside = q.cwiseMax(0.0).norm();
    double inside = std::min(q.maxCoeff(), 0.0);
    return outside + inside;
}

double Region::scale() const {
    if (shape_ == Shape::Ball) return std::max(1.0, radius_);
    return std::max(1.0, 0.5 * (b_ - a_).maxCoeff());
}

Eigen::VectorXd Region::bbox_lo() const {
    return shape_ == Shape::Ball ? Eigen::VectorXd(a_.array() - radius_) : a_;
}

Eigen::VectorXd Region::bbox_hi() const {
    return shape_ == Shape::Ball ? Eigen::VectorXd(a_.array() + radius_) : b_;
}

std::vector<Eigen::VectorXd> Region::boundary_polygon(int count) const {
    if (dimension() != 2) throw InvalidArgument("boundary polygon needs a planar region");
    if (count < 8) throw InvalidArgument("boundary polygon needs at least 8 vertices");
    std::vector<Eigen::VectorXd> pts;
    pts.reserve(static_cast<std::size_t>(count));
    if (shape_ == Shape::Ball) {
        for (int i = 0; i < count; ++i) {
            double a = 2.0 * std::numbers::pi * i / count;
            pts.push_back(a_ + radius_ * Eigen::Vector2d(std::cos(a), std::sin(a)));
        }
        return pts;
    }
    Eigen::Vector2d corners[4] = {{a_[0], a_[1]}, {b_[0], a_[1]}, {b_[0], b_[1]}, {a_[0], b_[1]}};
    double len[4], total = 0.0;
    for (int e = 0; e < 4; ++e) total += len[e] = (corners[(e + 1) % 4] - corners[e]).norm();
    int used = 0;
    for (int e = 0; e < 4; ++e) {
        int k = e == 3 ? count - used : std::max(1, static_cast<int>(std::lround(count * len[e] / total)));
        used += k;
        for (int i = 0; i < k; ++i)
            pts.push_back(corners[e] + (static_cast<double>(i) / k) * (corners[(e + 1) % 4] - corners[e]));
    }
    return pts;
}

std::vector<Eigen::VectorXd> Region::boundary_samples(int count) const {
    const int n = dimension();
    if (n == 2) return boundary_polygon(std::max(count, 8));
    Lcg rng;
    std::vector<Eigen::VectorXd> pts;
    pts.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        Eigen::VectorXd u(n);
        for (int j = 0; j < n; ++j) u[j] = rng.uniform();
        if (shape_ == Shape::Ball) {
            Eigen::VectorXd d = 2.0 * u.array() - 1.0;
            double norm = d.norm();
            if (norm < 1e-3) d = Eigen::VectorXd::Unit(n, 0), norm = 1.0;
            pts.push_back(a_ + radius_ * d / norm);
        } else {
            int face = i % (2 * n);
            Eigen::VectorXd x = a_.array() + u.array() * (b_ - a_).array();
            x[face / 2] = face % 2 ? b_[face / 2] : a_[face / 2];
            pts.push_back(x);
        }
    }
    return pts;
}

// ---------------------------------------------------------------------------
// Contacts

CycleContactReport cycle_contacts(const LimitCycle& cycle, const Region& region) {
    if (region.dimension() != cycle.dimension()) throw InvalidArgument("region dimension does not match the cycle");
    const double T = cycle.period;
    const double L = T / cycle.p;
    const double scale = region.scale();
    auto g = [&region](const Eigen::VectorXd& x) { return region.signed_distance(x); };
    EventSpec any{g, 0, 1e-8 * scale};

    std::vector<EventHit> hits = find_events(cycle.trajectory, any, 0.0, L);
    // a contact exactly at s = 0 is not reported by the scan
    if (std::fabs(g(cycle.xi0)) <= 1e-12 * scale) {
        double after = g(cycle.trajectory.at(1e-6 * L));
        hits.insert(hits.begin(), EventHit{0.0, after > 0.0 ? 1 : -1});
    }
    CycleContactReport report;
    for (const EventHit& h : hits) {
        double s = h.time;
        if (s >= L - 1e-9 * T) {
            if (!report.contacts.empty() && report.contacts.front().phase == 0.0) continue;
            s = 0.0;
        }
        Contact c;
        c.phase = s;
        c.entering = h.direction < 0;
        if (c.entering) {
            Trajectory shifted = cycle.shifted(s);
            EventSpec exit{g, +1, 1e-8 * scale};
            c.theta_exit = locate_event(shifted, exit, 0.0, T);
        }
        report.contacts.push_back(c);
    }
    std::sort(report.contacts.begin(), report.contacts.end(),
              [](const Contact& a, const Contact& b) { return a.phase < b.phase; });
    return report;
}

// ---------------------------------------------------------------------------
// Brouwer degree of psi

int brouwer_degree_psi(const SystemSpec& spec, const Region& region) {
    const int n = spec.dimension();
    if (region.dimension() != n) throw InvalidArgument("region dimension does not match the system");
    if (n > 4) throw DimensionTooLarge("equilibrium enumeration is limited to n <= 4");
    const double scale = region.scale();

    for (const Eigen::VectorXd& x : region.boundary_samples(n == 2 ? kWindingPoints : 4096)) {
        double norm = spec.psi_at(x).norm();
        if (!(norm > 1e-8))
            throw BoundaryZeroOfPsi("psi vanishes on the region boundary near " + format_point(x));
    }

    const Eigen::VectorXd lo = region.bbox_lo(), hi = region.bbox_hi();
    const Eigen::VectorXd width = hi - lo;
    constexpr int kPerAxis = 8;
    int starts = 1;
    for (int i = 0; i < n; ++i) starts *= kPerAxis;

    Lcg rng;
    std::vector<Eigen::VectorXd> roots;
    std::vector<int> signs;
    Eigen::VectorXd x(n), f(n);
    Eigen::MatrixXd J(n, n);
    for (int s = 0; s < starts; ++s) {
        int code = s;
        for (int i = 0; i < n; ++i) {
            int cell = code % kPerAxis;
            code /= kPerAxis;
            x[i] = lo[i] + width[i] * (cell + 0.25 + 0.5 * rng.uniform()) / kPerAxis;
        }
        bool converged = false;
        try {
            for (int it = 0; it < 60; ++it) {
                spec.eval_psi(x.data(), f.data());
                if (f.norm() <= 1e-13 * scale) {
                    converged = true;
                    break;
                }
                J = spec.psi_jacobian_at(x);
                Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
                if (!(std::fabs(lu.determinant()) > 0.0)) break;
                Eigen::VectorXd dx = lu.solve(f);
                x -= dx;
                if (!x.allFinite() || (x - 0.5 * (lo + hi)).norm() > 10.0 * width.norm()) break;
                if (dx.norm() <= 1e-14 * (1.0 + x.norm())) {
                    spec.eval_psi(x.data(), f.data());
                    converged = f.norm() <= 1e-10 * scale;
                    break;
                }
            }
        } catch (const NonFiniteValue&) {
            converged = false;
        }
        if (!converged) continue;
        double g = region.signed_distance(x);
        if (std::fabs(g) <= 1e-9 * scale)
            throw BoundaryZeroOfPsi("equilibrium on the region boundary at " + format_point(x));
        if (g > 0.0) continue;
        bool seen = false;
        for (const Eigen::VectorXd& r : roots)
            if ((r - x).norm() <= 1e-6) seen = true;
        if (seen) continue;
        double det = spec.psi_jacobian_at(x).determinant();
        if (!(std::fabs(det) > 1e-10))
            throw DegenerateEquilibrium("equilibrium at " + format_point(x) + " has det psi' = " +
                                        std::to_string(det));
        roots.push_back(x);
        signs.push_back(det > 0.0 ? 1 : -1);
    }
    int degree = 0;
    for (int s : signs) degree += s;
    return degree;
}

// ---------------------------------------------------------------------------
// Winding numbers

namespace {

double angle_step(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double d = std::atan2(b[1], b[0]) - std::atan2(a[1], a[0]);
    if (d > std::numbers::pi) d -= 2.0 * std::numbers::pi;
    if (d <= -std::numbers::pi) d += 2.0 * std::numbers::pi;
    return d;
}

Eigen::VectorXd checked_field(const PlanarField& field, const Eigen::VectorXd& p) {
    Eigen::VectorXd v = field(p);
    if (v.size() != 2) throw InvalidArgument("planar field must return two components");
    if (!v.allFinite()) throw NonFiniteValue("field is not finite at " + format_point(p));
    if (!(v.norm() > 1e-12)) throw ZeroOnBoundary("field vanishes on the boundary near " + format_point(p));
    return v;
}

constexpr int kMaxRefinements = 2;

double segment_angle(const PlanarField& field, const Eigen::VectorXd& p, const Eigen::VectorXd& q,
                     const Eigen::VectorXd& fp, const Eigen::VectorXd& fq, int level) {
    double d = angle_step(fp, fq);
    if (std::fabs(d) <= 0.5 * std::numbers::pi) return d;
    if (level == kMaxRefinements)
        throw UnderResolved("field angle jumps by " + std::to_string(d) + " between " + format_point(p) +
                            " and " + format_point(q) + " after refinement");
    double sum = 0.0;
    Eigen::VectorXd a = p, fa = fp;
    for (int k = 1; k <= 4; ++k) {
        Eigen::VectorXd b = k == 4 ? q : Eigen::VectorXd(p + (k / 4.0) * (q - p));
        Eigen::VectorXd fb = k == 4 ? fq : checked_field(field, b);
        sum += segment_angle(field, a, b, fa, fb, level + 1);
        a = b;
        fa = fb;
    }
    return sum;
}

}  // namespace

int winding_degree(const PlanarField& field, const Region& region, int points) {
    if (region.dimension() != 2) throw InvalidArgument("winding numbers need a planar region");
    std::vector<Eigen::VectorXd> poly = region.boundary_polygon(points);
    std::vector<Eigen::VectorXd> vals;
    vals.reserve(poly.size());
    for (const Eigen::VectorXd& p : poly) vals.push_back(checked_field(field, p));
    double total = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        std::size_t j = (i + 1) % poly.size();
        total += segment_angle(field, poly[i], poly[j], vals[i], vals[j], 0);
    }
    return static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
}

int poincare_degree(const SystemSpec& spec, const Region& region, double eps, double tol) {
    if (spec.dimension() != 2) throw InvalidArgument("the Poincare map degree is computed for n = 2 only");
    if (!(eps >= 0.0)) throw InvalidArgument("eps must be non-negative");
    const double T = spec.period();
    PlanarField field = [&spec, T, eps, tol](const Eigen::VectorXd& xi) {
        return Eigen::VectorXd(xi - flow_endpoint(spec, xi, T, tol, eps));
    };
    return winding_degree(field, region);
}

// ---------------------------------------------------------------------------
// Degree formula

DegreeReport predicted_degree(const SystemSpec& spec, const LimitCycle& cycle,
                              const AdjointCycle& adj, const BifurcationFunction& bf,
                              const Region& region) {
    const double T = cycle.period;
    if (std::fabs(adj.period() - T) > 1e-9 * std::max(1.0, T) ||
        std::fabs(bf.period() - T) > 1e-9 * std::max(1.0, T))
        throw InvalidArgument("adjoint and bifurcation function must belong to the cycle");
    DegreeReport report;
    report.n = spec.dimension();
    report.d_psi = brouwer_degree_psi(spec, region);
    CycleContactReport contacts = cycle_contacts(cycle, region);

    const double thr = 1e-9 * bf.max_abs();
    int sum = 0;
    for (const Contact& c : contacts.contacts) {
        Contribution term;
        term.phase = c.phase;
        term.entering = c.entering;
        term.beta = cycle.beta;
        term.theta_exit = c.theta_exit;
        if (c.theta_exit) {
            term.f_start = bf.at(c.phase);
            term.f_exit = bf.at(c.phase + *c.theta_exit);
            auto fail = [&](const char* which, double value) {
                std::ostringstream msg;
                msg << "f vanishes at the " << which << " of the contact at s = " << c.phase
                    << " (value " << value << ", threshold " << thr << ")";
                throw HypothesisViolation(msg.str());
            };
            if (bf.identically_zero() || !(std::fabs(term.f_start) > thr)) fail("start", term.f_start);
            if (!(std::fabs(term.f_exit) > thr)) fail("exit time", term.f_exit);
            term.interval_degree = degree_on_interval(shift_f(bf, c.phase), 0.0, *c.theta_exit);
            sum += (term.beta % 2 == 0 ? 1 : -1) * term.interval_degree;
        }
        report.contributions.push_back(term);
    }
    report.total = (report.n % 2 == 0 ? 1 : -1) * report.d_psi - sum;
    return report;
}

}  // namespace cycledeg
