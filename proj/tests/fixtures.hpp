#pragma once

#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "cycledeg/adjoint.hpp"
#include "cycledeg/cycle.hpp"
#include "cycledeg/malkin.hpp"

namespace fixtures {

inline constexpr double kPi = std::numbers::pi;

inline const std::vector<std::string> kCirclePsi = {"-x2 + x1*(1 - x1^2 - x2^2)",
                                                    "x1 + x2*(1 - x1^2 - x2^2)"};
inline const std::vector<std::string> kVdpPsi = {"x2", "(1 - x1^2)*x2 - x1"};

struct System {
    cycledeg::SystemSpec spec;
    cycledeg::LimitCycle cycle;
    cycledeg::AdjointCycle adj;
};

inline System circle(const std::vector<std::string>& phi = {"cos(t)", "sin(t)"}) {
    using namespace cycledeg;
    SystemSpec spec = SystemSpec::from_strings(2, 2 * kPi, kCirclePsi, phi);
    LimitCycle cyc = find_cycle(spec, Eigen::Vector2d(1.1, 0.0), Section{2, 0.0, 1});
    AdjointCycle adj = periodic_adjoint(spec, cyc);
    return {spec, cyc, adj};
}

inline double vdp_period() {
    using namespace cycledeg;
    static const double T = [] {
        SystemSpec base = SystemSpec::from_strings(2, 6.6, kVdpPsi, {"0", "0"});
        return period_solve(base, Eigen::Vector2d(2.0, 0.0), Section{2, 0.0, -1}).least_period;
    }();
    return T;
}

/// van der Pol with phi = (cos(2 pi t / T), 0).
inline System vanderpol() {
    using namespace cycledeg;
    const double T = vdp_period();
    char w[64];
    std::snprintf(w, sizeof w, "%.17g", 2 * kPi / T);
    SystemSpec spec = SystemSpec::from_strings(2, T, kVdpPsi, {"cos(" + std::string(w) + "*t)", "0"});
    LimitCycle cyc = find_cycle(spec, Eigen::Vector2d(2.0, 0.0), Section{2, 0.0, -1});
    AdjointCycle adj = periodic_adjoint(spec, cyc);
    return {spec, cyc, adj};
}

inline double cyclic_distance(double a, double b, double T) {
    double d = std::fmod(std::fabs(a - b), T);
    return std::min(d, T - d);
}

}  // namespace fixtures
