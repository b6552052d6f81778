#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#include "cycledeg/degree.hpp"
#include "cycledeg/errors.hpp"
#include "cycledeg/malkin.hpp"
#include "cycledeg/verify.hpp"

namespace cycledeg::cli {

std::string format17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string fmt_vec(const Eigen::VectorXd& v) {
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i]);
    return s;
}

const char* kind_name(ZeroKind k) { return k == ZeroKind::SignChange ? "sign_change" : "tangential_suspect"; }

CycleOptions cycle_options(const AnalysisConfig& cfg) {
    CycleOptions opt;
    opt.tol = cfg.numerics.tol;
    opt.mult_tol = cfg.numerics.mult_tol;
    return opt;
}

/// CSV goes to --out when given, else to stdout.
class CsvSink {
public:
    CsvSink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw ConfigError("cannot write '" + path + "'");
            out_ = &file_;
        }
    }
    std::ostream& stream() { return *out_; }
    [[nodiscard]] bool to_stdout() const { return !file_.is_open(); }

private:
    std::ofstream file_;
    std::ostream* out_;
};

struct Options {
    std::string config;
    std::string out;
    int samples = 0;
    std::optional<double> eps;
    std::optional<double> theta0;
};

int cmd_find_cycle(const AnalysisConfig& cfg, std::ostream& out) {
    Analysis a = analyse(cfg);
    out << "xi0=" << fmt_vec(a.cycle.xi0) << "\n";
    out << "T_least=" << format17(a.cycle.period / a.cycle.p) << "\n";
    out << "p=" << a.cycle.p << "\n";
    out << "period=" << fmt(a.cycle.period) << "\n";
    return kOk;
}

int cmd_floquet(const AnalysisConfig& cfg, std::ostream& out) {
    Analysis a = analyse(cfg);
    const LimitCycle& c = a.cycle;
    out << "monodromy:\n";
    for (Eigen::Index i = 0; i < c.monodromy.rows(); ++i)
        out << "  " << fmt_vec(c.monodromy.row(i).transpose()) << "\n";
    out << "multipliers:\n";
    for (std::size_t i = 0; i < c.multipliers.size(); ++i)
        out << "  " << fmt(c.multipliers[i].real()) << (c.multipliers[i].imag() < 0 ? " - " : " + ")
            << fmt(std::fabs(c.multipliers[i].imag())) << "i  |lambda|=" << fmt(std::abs(c.multipliers[i]))
            << (static_cast<int>(i) == c.trivial_index ? "  (trivial)" : "") << "\n";
    out << "trivial_index=" << c.trivial_index << "\n";
    out << "beta=" << c.beta << "\n";
    out << "nondegenerate=" << (c.nondegenerate ? "yes" : "no") << "\n";
    return kOk;
}

int cmd_adjoint(const AnalysisConfig& cfg, std::ostream& out) {
    Analysis a = analyse(cfg);
    AdjointCycle adj = periodic_adjoint(a.spec, a.cycle);
    out << "z0(0)=" << fmt_vec(adj.z_traj.state(0)) << "\n";
    out << "perron_constant=" << fmt(adj.perron_constant) << "\n";
    out << "sign_factor=" << adj.sign_factor << "\n";
    out << "perron_residual=" << fmt(perron_residual(a.spec, a.cycle, adj)) << "\n";
    return kOk;
}

void print_zeros(const BifurcationFunction& bf, std::ostream& os) {
    if (bf.identically_zero()) {
        os << "IdenticallyZeroSuspect: f vanishes at every sample (max |f| = " << fmt(bf.max_abs()) << ")\n";
        return;
    }
    os << "zeros=" << bf.zeros().size() << "\n";
    for (const ZeroRecord& z : bf.zeros())
        os << "  theta=" << fmt(z.theta) << " kind=" << kind_name(z.kind) << " bracket=[" << fmt(z.lo) << ", "
           << fmt(z.hi) << "] residual=" << fmt(z.residual) << "\n";
}

int cmd_bifurcation(const AnalysisConfig& cfg, const Options& o, std::ostream& out, std::ostream& err) {
    Analysis a = analyse(cfg);
    AdjointCycle adj = periodic_adjoint(a.spec, a.cycle);
    int m = o.samples > 0 ? o.samples : cfg.numerics.samples;
    BifurcationFunction bf = sample_f(a.spec, a.cycle, adj, m, cfg.numerics.panels);
    CsvSink csv(o.out, out);
    csv.stream() << "theta,f\n";
    for (int i = 0; i <= bf.samples(); ++i)
        csv.stream() << format17(bf.theta(i)) << "," << format17(bf.values()[static_cast<std::size_t>(i)]) << "\n";
    std::ostream& report = csv.to_stdout() ? err : out;
    report << "samples=" << bf.samples() << " panels=" << bf.panels() << " rule=" << bf.rule() << "\n";
    print_zeros(bf, report);
    return kOk;
}

double default_theta0(const BifurcationFunction& bf) {
    for (const ZeroRecord& z : bf.zeros())
        if (z.kind == ZeroKind::SignChange) return z.theta;
    return 0.0;
}

int cmd_predict(const AnalysisConfig& cfg, std::ostream& out) {
    if (!cfg.region) throw ConfigError("predict needs a region in the configuration");
    Analysis a = analyse(cfg);
    AdjointCycle adj = periodic_adjoint(a.spec, a.cycle);
    BifurcationFunction bf = sample_f(a.spec, a.cycle, adj, cfg.numerics.samples, cfg.numerics.panels);
    DegreeReport rep = predicted_degree(a.spec, a.cycle, adj, bf, *cfg.region);
    out << "n=" << rep.n << "\n";
    out << "d_psi=" << rep.d_psi << "\n";
    out << "beta=" << a.cycle.beta << "\n";
    out << "contacts=" << rep.contributions.size() << "\n";
    for (const Contribution& c : rep.contributions) {
        out << "  s=" << fmt(c.phase) << (c.entering ? " entering" : " not-entering");
        if (c.theta_exit)
            out << " theta_exit=" << fmt(*c.theta_exit) << " f(s)=" << fmt(c.f_start)
                << " f(s+theta_exit)=" << fmt(c.f_exit) << " interval_degree=" << c.interval_degree;
        else
            out << " theta_exit=none";
        out << "\n";
    }
    out << "total=" << rep.total << "\n";
    ConditionSummary summary = check_existence_conditions(bf, rep);
    out << "verdicts:\n";
    for (const Verdict& v : summary.verdicts)
        out << "  " << v.name << ": " << (v.applies ? "applies" : "does not apply") << " (" << v.witness << ")\n";
    return kOk;
}

void print_orbit(const PerturbedOrbit& o, std::ostream& out) {
    out << "eps=" << fmt(o.eps) << "\n";
    out << "xi_eps=" << fmt_vec(o.xi_eps) << "\n";
    out << "residual=" << fmt(o.residual) << "\n";
    out << "theta_hat=" << fmt(o.theta_hat) << "\n";
    out << "phase_error=" << fmt(o.phase_error) << "\n";
    out << "sup_distance=" << fmt(o.sup_distance) << "\n";
    out << "newton_iterations=" << o.iterations << "\n";
}

std::vector<double> sign_change_zeros(const BifurcationFunction& bf) {
    std::vector<double> out;
    for (const ZeroRecord& z : bf.zeros())
        if (z.kind == ZeroKind::SignChange) out.push_back(z.theta);
    return out;
}

int cmd_verify(const AnalysisConfig& cfg, const Options& o, std::ostream& out) {
    Analysis a = analyse(cfg);
    AdjointCycle adj = periodic_adjoint(a.spec, a.cycle);
    BifurcationFunction bf = sample_f(a.spec, a.cycle, adj, cfg.numerics.samples, cfg.numerics.panels);
    double eps = o.eps.value_or(cfg.numerics.eps0);
    if (!(eps >= 0.0 && eps <= 0.1)) throw ConfigError("--eps must lie in [0, 0.1]");
    double theta0 = o.theta0.value_or(default_theta0(bf));
    out << "theta0=" << fmt(theta0) << "\n";
    print_orbit(find_perturbed_orbit(a.spec, a.cycle, theta0, eps, sign_change_zeros(bf)), out);
    return kOk;
}

void write_sweep(const SweepReport& rep, CsvSink& csv, std::ostream& report) {
    csv.stream() << "eps,sup_distance,theta_hat,residual\n";
    for (const PerturbedOrbit& o : rep.orbits)
        csv.stream() << format17(o.eps) << "," << format17(o.sup_distance) << "," << format17(o.theta_hat) << ","
                     << format17(o.residual) << "\n";
    report << "solves=" << rep.orbits.size() << " largest_converged_eps="
           << (rep.eps.empty() ? std::string("none") : fmt(rep.eps.front())) << " slope=" << fmt(rep.slope)
           << " slope_residual=" << fmt(rep.slope_residual) << "\n";
}

int cmd_sweep(const AnalysisConfig& cfg, const Options& o, std::ostream& out, std::ostream& err) {
    Analysis a = analyse(cfg);
    AdjointCycle adj = periodic_adjoint(a.spec, a.cycle);
    BifurcationFunction bf = sample_f(a.spec, a.cycle, adj, cfg.numerics.samples, cfg.numerics.panels);
    double theta0 = o.theta0.value_or(default_theta0(bf));
    CsvSink csv(o.out, out);
    std::ostream& report = csv.to_stdout() ? err : out;
    report << "theta0=" << fmt(theta0) << "\n";
    try {
        SweepReport rep = epsilon_sweep(a.spec, a.cycle, bf, theta0, cfg.numerics.eps0, cfg.numerics.halvings);
        write_sweep(rep, csv, report);
    } catch (const PartialSweep& e) {
        write_sweep(e.partial(), csv, report);
        throw;
    }
    return kOk;
}

}  // namespace

Analysis analyse(const AnalysisConfig& cfg) {
    SystemSpec spec = build_spec(cfg);
    CycleOptions opt = cycle_options(cfg);
    Eigen::VectorXd seed = cfg.seed;
    if (!cfg.period) {
        PeriodSolution ps = period_solve(spec, seed, cfg.section, opt);
        spec = spec.with_period(ps.least_period);
        seed = ps.xi0;
    }
    LimitCycle cycle = find_cycle(spec, seed, cfg.section, opt);
    return Analysis{std::move(spec), std::move(cycle)};
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Limit cycles, bifurcation functions and degree predictions for periodically perturbed systems",
                 "cycledeg"};
    app.require_subcommand(1);
    Options o;

    auto add = [&](const std::string& name, const std::string& help) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("config", o.config, "JSON configuration file")->required();
        return sub;
    };
    CLI::App* find_cycle_cmd = add("find-cycle", "Locate the limit cycle and its least period");
    CLI::App* floquet_cmd = add("floquet", "Monodromy matrix, multipliers and beta");
    CLI::App* adjoint_cmd = add("adjoint", "Periodic adjoint solution and Perron constant");
    CLI::App* bif_cmd = add("bifurcation", "Sample the bifurcation function and list its zeros");
    bif_cmd->add_option("--samples", o.samples, "Number of grid intervals on [0, T]")->check(CLI::Range(16, 1 << 20));
    bif_cmd->add_option("--out", o.out, "CSV output path (default: stdout)");
    CLI::App* predict_cmd = add("predict", "Degree of the Poincare map predicted from f, with existence verdicts");
    CLI::App* verify_cmd = add("verify", "Solve for the perturbed periodic orbit at one eps");
    verify_cmd->add_option("--eps", o.eps, "Perturbation size (default numerics.eps0)");
    verify_cmd->add_option("--theta0", o.theta0, "Seed phase (default: first sign change of f)");
    CLI::App* sweep_cmd = add("sweep", "Perturbed orbits along eps0 * 2^-k and the log-log slope");
    sweep_cmd->add_option("--theta0", o.theta0, "Seed phase (default: first sign change of f)");
    sweep_cmd->add_option("--out", o.out, "CSV output path (default: stdout)");
    CLI::App* selftest_cmd = app.add_subcommand("selftest", "Run the built-in invariant checks");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (selftest_cmd->parsed()) return selftest(out) ? kOk : kComputationError;
        AnalysisConfig cfg = load_config(o.config);
        if (find_cycle_cmd->parsed()) return cmd_find_cycle(cfg, out);
        if (floquet_cmd->parsed()) return cmd_floquet(cfg, out);
        if (adjoint_cmd->parsed()) return cmd_adjoint(cfg, out);
        if (bif_cmd->parsed()) return cmd_bifurcation(cfg, o, out, err);
        if (predict_cmd->parsed()) return cmd_predict(cfg, out);
        if (verify_cmd->parsed()) return cmd_verify(cfg, o, out);
        if (sweep_cmd->parsed()) return cmd_sweep(cfg, o, out, err);
    } catch (const ConfigError& e) {
        err << "error: config: " << e.what() << "\n";
        return kConfigError;
    } catch (const Error& e) {
        err << "error: " << e.kind() << ": " << e.what() << "\n";
        return kComputationError;
    }
    return kConfigError;
}

}  // namespace cycledeg::cli
