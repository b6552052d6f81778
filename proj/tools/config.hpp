#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cycledeg/cycle.hpp"
#include "cycledeg/degree.hpp"
#include "cycledeg/expr.hpp"

namespace cycledeg::cli {

/// Malformed or out-of-range configuration (exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Numerics {
    double tol = 1e-10;
    double mult_tol = 1e-6;
    int samples = 256;
    int panels = 64;
    double eps0 = 1e-2;
    int halvings = 8;
};

struct AnalysisConfig {
    int dimension = 0;
    std::optional<double> period;  // empty: solve for the least period
    std::vector<std::string> psi;
    std::vector<std::string> phi;
    Eigen::VectorXd seed;
    Section section;
    std::optional<Region> region;
    Numerics numerics;
};

AnalysisConfig parse_config(const std::string& text, const std::string& origin = "<string>");
AnalysisConfig load_config(const std::string& path);

/// The system with its expressions parsed; the period is a placeholder when it is to be solved.
SystemSpec build_spec(const AnalysisConfig& config);

}  // namespace cycledeg::cli
