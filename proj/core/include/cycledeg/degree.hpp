#pragma once

// Boundary contacts of a cycle with a region, Brouwer degree of psi, planar
// winding numbers, and the degree of I - Omega_eps predicted from f.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cycledeg/adjoint.hpp"
#include "cycledeg/cycle.hpp"
#include "cycledeg/expr.hpp"
#include "cycledeg/malkin.hpp"

namespace cycledeg {

/// Deterministic generator for multistart grids and boundary samples:
/// x <- 6364136223846793005 x + 1442695040888963407 (mod 2^64), seed 0x5EED.
class Lcg {
public:
    static constexpr std::uint64_t kSeed = 0x5EED;
    explicit Lcg(std::uint64_t seed = kSeed) : engine_(seed) {}
    /// Uniform in [0, 1) from the top 53 bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::linear_congruential_engine<std::uint64_t, 6364136223846793005ULL,
                                    1442695040888963407ULL, 0ULL>
        engine_;
};

class Region {
public:
    enum class Shape { Ball, Box };

    static Region ball(Eigen::VectorXd center, double radius);
    static Region box(Eigen::VectorXd lo, Eigen::VectorXd hi);

    [[nodiscard]] Shape shape() const { return shape_; }
    [[nodiscard]] int dimension() const { return static_cast<int>(a_.size()); }
    [[nodiscard]] const Eigen::VectorXd& center() const { return a_; }
    [[nodiscard]] double radius() const { return radius_; }
    [[nodiscard]] const Eigen::VectorXd& lo() const { return a_; }
    [[nodiscard]] const Eigen::VectorXd& hi() const { return b_; }

    /// < 0 inside, 0 on the boundary, > 0 outside (Euclidean distance).
    [[nodiscard]] double signed_distance(const Eigen::VectorXd& x) const;
    /// Characteristic size used to scale tolerances.
    [[nodiscard]] double scale() const;
    [[nodiscard]] Eigen::VectorXd bbox_lo() const;
    [[nodiscard]] Eigen::VectorXd bbox_hi() const;

    /// Planar boundary as a closed, positively oriented polygon with `count`
    /// vertices (box corners are vertices).
    [[nodiscard]] std::vector<Eigen::VectorXd> boundary_polygon(int count) const;
    /// Points on the boundary in any dimension.
    [[nodiscard]] std::vector<Eigen::VectorXd> boundary_samples(int count) const;

private:
    Shape shape_ = Shape::Ball;
    Eigen::VectorXd a_, b_;
    double radius_ = 0.0;
};

struct Contact {
    double phase = 0.0;  // s with x0(s) on the boundary
    bool entering = false;
    std::optional<double> theta_exit;  // first exit time of t -> x0(t + s); empty if not entering
};

struct CycleContactReport {
    std::vector<Contact> contacts;
};

/// Contacts over one least period [0, T/p). Throws GrazingContact on
/// tangential touches.
CycleContactReport cycle_contacts(const LimitCycle& cycle, const Region& region);

/// Sum of sign det psi'(x*) over the equilibria in the region, found by
/// multistart Newton from a jittered 8^n grid (n <= 4).
int brouwer_degree_psi(const SystemSpec& spec, const Region& region);

using PlanarField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

inline constexpr int kWindingPoints = 4096;

/// Winding number of a planar field along the region boundary. Segments whose
/// angle increment exceeds pi/2 are split 4 ways, at most twice.
int winding_degree(const PlanarField& field, const Region& region, int points = kWindingPoints);

inline constexpr double kDefaultPoincareEps = 1e-3;

/// Winding number of xi -> xi - x_eps(T, xi) along the boundary (n = 2).
int poincare_degree(const SystemSpec& spec, const Region& region, double eps = kDefaultPoincareEps,
                    double tol = 1e-9);

struct Contribution {
    double phase = 0.0;
    bool entering = false;
    int beta = 0;
    std::optional<double> theta_exit;
    int interval_degree = 0;  // zero when theta_exit is empty
    double f_start = 0.0;     // f(s)
    double f_exit = 0.0;      // f(s + theta_exit)
};

struct DegreeReport {
    int n = 0;
    int d_psi = 0;
    std::vector<Contribution> contributions;
    int total = 0;
};

/// total = (-1)^n d_psi - sum over entering contacts of
/// (-1)^beta deg(f(. + s), (0, theta_exit)).
/// Throws HypothesisViolation if f vanishes at a contact or at its exit time.
DegreeReport predicted_degree(const SystemSpec& spec, const LimitCycle& cycle,
                              const AdjointCycle& adj, const BifurcationFunction& bf,
                              const Region& region);

}  // namespace cycledeg
