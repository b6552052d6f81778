#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cycledeg/errors.hpp"

namespace cycledeg::cli {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) throw ConfigError("unknown field '" + it.key() + "' in " + where);
}

const json& require(const json& obj, const std::string& key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError("missing field '" + key + "' in " + where);
    return *it;
}

double number(const json& v, const std::string& what) {
    if (!v.is_number()) throw ConfigError(what + " must be a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(what + " must be finite");
    return d;
}

int integer(const json& v, const std::string& what) {
    if (!v.is_number_integer()) throw ConfigError(what + " must be an integer");
    return v.get<int>();
}

Eigen::VectorXd vector(const json& v, const std::string& what) {
    if (!v.is_array() || v.empty()) throw ConfigError(what + " must be a non-empty array of numbers");
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = number(v[i], what);
    return out;
}

std::vector<std::string> strings(const json& v, const std::string& what) {
    if (!v.is_array()) throw ConfigError(what + " must be an array of strings");
    std::vector<std::string> out;
    for (const json& s : v) {
        if (!s.is_string()) throw ConfigError(what + " must be an array of strings");
        out.push_back(s.get<std::string>());
    }
    return out;
}

void check_range(double v, double lo, double hi, const std::string& what) {
    if (!(v >= lo && v <= hi)) {
        std::ostringstream msg;
        msg << what << " = " << v << " outside [" << lo << ", " << hi << "]";
        throw ConfigError(msg.str());
    }
}

Region parse_region(const json& r, int n) {
    if (!r.is_object()) throw ConfigError("region must be an object");
    const json& type = require(r, "type", "region");
    if (type == "box") {
        reject_unknown(r, {"type", "lo", "hi"}, "region");
        Eigen::VectorXd lo = vector(require(r, "lo", "region"), "region.lo");
        Eigen::VectorXd hi = vector(require(r, "hi", "region"), "region.hi");
        if (lo.size() != n || hi.size() != n) throw ConfigError("region bounds must have length dimension");
        try {
            return Region::box(lo, hi);
        } catch (const Error& e) {
            throw ConfigError(std::string("region: ") + e.what());
        }
    }
    if (type == "ball") {
        reject_unknown(r, {"type", "center", "radius"}, "region");
        Eigen::VectorXd c = vector(require(r, "center", "region"), "region.center");
        double radius = number(require(r, "radius", "region"), "region.radius");
        if (c.size() != n) throw ConfigError("region center must have length dimension");
        try {
            return Region::ball(c, radius);
        } catch (const Error& e) {
            throw ConfigError(std::string("region: ") + e.what());
        }
    }
    throw ConfigError("region type must be \"box\" or \"ball\"");
}

}  // namespace

AnalysisConfig parse_config(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(origin + ": " + e.what());
    }
    reject_unknown(doc, {"dimension", "period", "psi", "phi", "seed", "section", "region", "numerics"},
                   "configuration");
    AnalysisConfig cfg;
    cfg.dimension = integer(require(doc, "dimension", "configuration"), "dimension");
    if (cfg.dimension < 1) throw ConfigError("dimension must be positive");
    const int n = cfg.dimension;

    const json& period = require(doc, "period", "configuration");
    if (period.is_string()) {
        if (period != "solve") throw ConfigError("period must be a number or \"solve\"");
    } else {
        cfg.period = number(period, "period");
        if (!(*cfg.period > 0.0)) throw ConfigError("period must be positive");
    }
    cfg.psi = strings(require(doc, "psi", "configuration"), "psi");
    cfg.phi = strings(require(doc, "phi", "configuration"), "phi");
    if (static_cast<int>(cfg.psi.size()) != n || static_cast<int>(cfg.phi.size()) != n)
        throw ConfigError("psi and phi must each have dimension entries");
    cfg.seed = vector(require(doc, "seed", "configuration"), "seed");
    if (cfg.seed.size() != n) throw ConfigError("seed must have dimension entries");

    const json& sec = require(doc, "section", "configuration");
    reject_unknown(sec, {"coord", "value", "direction"}, "section");
    cfg.section.coord = integer(require(sec, "coord", "section"), "section.coord");
    cfg.section.value = number(require(sec, "value", "section"), "section.value");
    cfg.section.direction = integer(require(sec, "direction", "section"), "section.direction");
    if (cfg.section.coord < 1 || cfg.section.coord > n) throw ConfigError("section.coord must lie in [1, dimension]");
    if (cfg.section.direction != 1 && cfg.section.direction != -1)
        throw ConfigError("section.direction must be 1 or -1");

    if (auto it = doc.find("region"); it != doc.end()) cfg.region = parse_region(*it, n);

    if (auto it = doc.find("numerics"); it != doc.end()) {
        const json& num = *it;
        reject_unknown(num, {"tol", "mult_tol", "samples", "panels", "eps0", "halvings"}, "numerics");
        Numerics& nm = cfg.numerics;
        if (num.contains("tol")) nm.tol = number(num["tol"], "numerics.tol");
        if (num.contains("mult_tol")) nm.mult_tol = number(num["mult_tol"], "numerics.mult_tol");
        if (num.contains("samples")) nm.samples = integer(num["samples"], "numerics.samples");
        if (num.contains("panels")) nm.panels = integer(num["panels"], "numerics.panels");
        if (num.contains("eps0")) nm.eps0 = number(num["eps0"], "numerics.eps0");
        if (num.contains("halvings")) nm.halvings = integer(num["halvings"], "numerics.halvings");
    }
    const Numerics& nm = cfg.numerics;
    check_range(nm.tol, 1e-13, 1e-3, "numerics.tol");
    check_range(nm.mult_tol, 1e-12, 1e-2, "numerics.mult_tol");
    check_range(nm.samples, 16, 1 << 20, "numerics.samples");
    check_range(nm.panels, 1, 1 << 16, "numerics.panels");
    check_range(nm.eps0, 1e-12, 1e-2, "numerics.eps0");
    check_range(nm.halvings, 4, 12, "numerics.halvings");
    return cfg;
}

AnalysisConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path);
}

SystemSpec build_spec(const AnalysisConfig& cfg) {
    try {
        return SystemSpec::from_strings(cfg.dimension, cfg.period.value_or(1.0), cfg.psi, cfg.phi);
    } catch (const SyntaxError& e) {
        throw ConfigError(std::string("expression: SyntaxError: ") + e.what());
    } catch (const UnknownVariable& e) {
        throw ConfigError(std::string("expression: UnknownVariable: ") + e.what());
    } catch (const UnknownFunction& e) {
        throw ConfigError(std::string("expression: UnknownFunction: ") + e.what());
    } catch (const InvalidSystem& e) {
        throw ConfigError(std::string("system: InvalidSystem: ") + e.what());
    }
}

}  // namespace cycledeg::cli
