// memsolve: exponential-sum compression of weakly singular memory kernels and
// unconditionally stable time stepping for the resulting local evolution
// systems, demonstrated on a 2-D relaxation problem.

#include "CLI11.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "expmem/expmem.hpp"

namespace fs = std::filesystem;
using namespace expmem;

namespace {

struct KernelCli {
    double alpha = 0.5;
    double delta = 1.0;
    int m = 10;
    double s_max = 1000.0;
    int n_samples = 2000;
    bool no_gamma2 = false;
    std::string kernel_file;
};

void add_fit_flags(CLI::App* cmd, KernelCli& k) {
    cmd->add_option("--alpha", k.alpha, "kernel exponent, in (0,1)")->capture_default_str();
    cmd->add_option("--delta", k.delta, "tempering rate, >= 0")->capture_default_str();
    cmd->add_option("--m", k.m, "number of exponential terms")->capture_default_str();
    cmd->add_option("--smax", k.s_max, "right end of the Laplace fit interval")->capture_default_str();
    cmd->add_option("--samples", k.n_samples, "sample count on the fit interval")->capture_default_str();
    cmd->add_flag("--no-gamma2", k.no_gamma2, "pin the instantaneous (constant) term to zero");
}

void add_kernel_flags(CLI::App* cmd, KernelCli& k) {
    add_fit_flags(cmd, k);
    cmd->add_option("--kernel-file", k.kernel_file, "coefficient file to load instead of fitting");
}

FitConfig fit_config(const KernelCli& k) {
    FitConfig cfg;
    cfg.m = k.m;
    cfg.s_max = k.s_max;
    cfg.n_samples = k.n_samples;
    cfg.include_gamma2 = !k.no_gamma2;
    return cfg;
}

ExpSumKernel obtain_kernel(const KernelCli& k) {
    if (!k.kernel_file.empty()) return load_coefficients(k.kernel_file);
    return fit_exp_sum(AnalyticKernel(k.alpha, k.delta), fit_config(k)).kernel;
}

struct ProblemCli {
    int grid = 64;
    double c = 1.0;
};

void add_problem_flags(CLI::App* cmd, ProblemCli& p) {
    cmd->add_option("--grid", p.grid, "interior resolution: N x N cells on the unit square")->capture_default_str();
    cmd->add_option("--c", p.c, "memory coupling strength, >= 0")->capture_default_str();
}

std::string time_label(double t) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", t);
    return buf;
}

// step level of a requested time, or a validation error when it does not sit
// on the time grid
int aligned_level(double t, double tau, int n_steps, const std::string& what) {
    const double raw = t / tau;
    const long level = std::lround(raw);
    if (level < 0 || level > n_steps || std::abs(raw - static_cast<double>(level)) > 1e-9 * std::max(1.0, raw))
        throw std::invalid_argument(what + " " + time_label(t) + " does not align with the step size " +
                                    time_label(tau));
    return static_cast<int>(level);
}

int steps_for_horizon(double t_end, double tau) {
    if (!(t_end > 0.0)) throw std::invalid_argument("horizon must be > 0");
    const int n = aligned_level(t_end, tau, std::numeric_limits<int>::max(), "horizon");
    if (n < 1) throw std::invalid_argument("horizon shorter than one step");
    return n;
}

MonitorMode parse_monitor(const std::string& name) {
    if (name == "off") return MonitorMode::off;
    if (name == "warn") return MonitorMode::warn;
    return MonitorMode::fail;
}

// checkpoints filtered (defaulted list) or validated (user list) against the
// horizon, then mapped to step levels
std::vector<int> checkpoint_levels(std::vector<double> times, bool user_supplied, double t_end, double tau,
                                   int n_steps) {
    std::vector<int> levels;
    for (double t : times) {
        if (t > t_end * (1.0 + 1e-12)) {
            if (user_supplied) throw std::invalid_argument("checkpoint " + time_label(t) + " lies beyond the horizon");
            continue;
        }
        if (t < 0.0) throw std::invalid_argument("checkpoint must be >= 0");
        levels.push_back(aligned_level(t, tau, n_steps, "checkpoint"));
    }
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
    return levels;
}

int run_fit_kernel(const KernelCli& k, const std::string& out_dir) {
    AnalyticKernel target(k.alpha, k.delta);
    FitConfig cfg = fit_config(k);
    FitReport rep = fit_exp_sum(target, cfg);
    Certification cert =
        certify(target, rep.kernel, default_s_grid(cfg.s_max, target.delta() > 0.0), default_t_grid());

    const fs::path dir(out_dir);
    char header[160];
    std::snprintf(header, sizeof(header), "# tempered kernel, alpha = %g, delta = %g, m = %d\n", k.alpha, k.delta,
                  k.m);
    write_text_atomic(dir / "coefficients.txt", header + format_coefficients(rep.kernel));
    write_text_atomic(dir / "laplace_error.csv", laplace_error_csv(cert.laplace));
    write_text_atomic(dir / "time_error.csv", time_error_csv(cert.time));

    std::cout << "fit: m = " << rep.kernel.size() << ", gamma2 = " << sci(rep.kernel.gamma2()) << '\n'
              << "max |K~ - K| on [0, " << time_label(cfg.s_max) << "]: " << sci(cert.laplace.max_err) << '\n'
              << "max |k~ - k| on [1e-3, 1e2]:  " << sci(cert.time.max_err) << '\n'
              << "positive type on the check grid: " << (rep.positivity_ok ? "yes" : "NO") << '\n'
              << "wrote " << (dir / "coefficients.txt").string() << ", laplace_error.csv, time_error.csv\n";
    if (!rep.positivity_ok) {
        std::cerr << "fit-kernel: compressed kernel failed the positive-type check\n";
        return 3;
    }
    return 0;
}

struct SolveCli {
    KernelCli kernel;
    ProblemCli problem;
    double sigma = 0.5;
    double tau = 1e-3;
    double t_end = 1.0;
    int steps = 0;  // 0: derive from t_end
    std::vector<double> probe{0.5, 0.5};
    std::vector<double> checkpoints{0.05, 0.1, 0.25, 0.5, 1.0};
    bool checkpoints_given = false;
    std::string monitor = "fail";
    double cg_tol = 1e-10;
    int cg_max_iter = -1;
    std::string out_dir = "out";
};

int run_solve(const SolveCli& o) {
    auto lap = std::make_shared<GridLaplacian>(o.problem.grid, o.problem.grid);
    ProblemSpec spec = make_relaxation_spec(lap, o.problem.c, obtain_kernel(o.kernel));

    SchemeConfig cfg;
    cfg.sigma = o.sigma;
    cfg.tau = o.tau;
    cfg.n_steps = o.steps > 0 ? o.steps : steps_for_horizon(o.t_end, o.tau);
    cfg.cg_tol = o.cg_tol;
    cfg.cg_max_iter = o.cg_max_iter;
    const double t_end = cfg.n_steps * cfg.tau;

    RunOptions opt;
    opt.monitor = parse_monitor(o.monitor);
    opt.probe_index = nearest_node(*lap, o.probe.at(0), o.probe.at(1));
    opt.snapshot_steps = checkpoint_levels(o.checkpoints, o.checkpoints_given, t_end, cfg.tau, cfg.n_steps);

    RunResult res = run(spec, cfg, opt);

    const fs::path dir(o.out_dir);
    write_text_atomic(dir / "probe.csv", probe_csv(res.probe));
    write_text_atomic(dir / "energy.csv", energy_csv(res.energy));
    for (const auto& [level, field] : res.snapshots)
        write_text_atomic(dir / ("snapshot_" + time_label(level * cfg.tau) + ".csv"), snapshot_csv(*lap, field));

    double max_ratio = 0.0;
    for (std::size_t i = 0; i < res.energy.energy.size(); ++i)
        if (res.energy.bound[i] > 0.0) max_ratio = std::max(max_ratio, res.energy.energy[i] / res.energy.bound[i]);
    std::cout << "solve: " << cfg.n_steps << " steps of tau = " << time_label(cfg.tau) << " (sigma = " << o.sigma
              << ", grid " << o.problem.grid << "x" << o.problem.grid << ")\n"
              << "probe value at t = " << time_label(res.state.time) << ": " << sci(res.probe.back().second) << '\n'
              << "energy/bound max ratio: " << sci(max_ratio) << (res.energy.violated ? "  (bound exceeded)" : "")
              << '\n'
              << "wrote " << (dir / "probe.csv").string() << ", energy.csv and " << res.snapshots.size()
              << " snapshot file(s)\n";
    return 0;
}

struct CompareCli {
    KernelCli kernel;
    ProblemCli problem;
    double sigma = 0.5;
    double t_end = 1.0;
    std::vector<double> taus{0.02, 0.01, 0.005};
    std::vector<double> checkpoints{0.05, 0.1, 0.25, 0.5, 1.0};
    bool checkpoints_given = false;
    double cg_tol = 1e-10;
    std::string out_dir = "out";
    int reference_steps = 1000;
};

// snapshots of one scheme run at the checkpoint levels
std::vector<std::pair<int, Vector>> snapshots_at(const ProblemSpec& spec, double sigma, double tau, int n_steps,
                                                 const std::vector<int>& levels, double cg_tol) {
    SchemeConfig cfg;
    cfg.sigma = sigma;
    cfg.tau = tau;
    cfg.n_steps = n_steps;
    cfg.cg_tol = cg_tol;
    RunOptions opt;
    opt.snapshot_steps = levels;
    return run(spec, cfg, opt).snapshots;
}

int run_compare(const CompareCli& o) {
    if (o.taus.empty()) throw std::invalid_argument("compare: need at least one tau");
    auto lap = std::make_shared<GridLaplacian>(o.problem.grid, o.problem.grid);
    ProblemSpec spec = make_relaxation_spec(lap, o.problem.c, obtain_kernel(o.kernel));

    const double tau_ref = o.t_end / o.reference_steps;
    std::vector<int> ref_levels =
        checkpoint_levels(o.checkpoints, o.checkpoints_given, o.t_end, tau_ref, o.reference_steps);
    auto ref = snapshots_at(spec, 0.5, tau_ref, o.reference_steps, ref_levels, std::min(o.cg_tol, 1e-12));

    std::ostringstream out;
    out << "tau,t,eps2,epsinf\n";
    for (double tau : o.taus) {
        const int n_steps = steps_for_horizon(o.t_end, tau);
        std::vector<int> levels;
        for (int rl : ref_levels) levels.push_back(aligned_level(rl * tau_ref, tau, n_steps, "checkpoint"));
        auto snaps = snapshots_at(spec, o.sigma, tau, n_steps, levels, o.cg_tol);
        for (std::size_t i = 0; i < snaps.size(); ++i) {
            const Vector diff = snaps[i].second - ref[i].second;
            out << sci(tau) << ',' << sci(snaps[i].first * tau) << ',' << sci(norm(diff, spec.space_weight)) << ','
                << sci(diff.cwiseAbs().maxCoeff()) << '\n';
        }
    }
    const fs::path target = fs::path(o.out_dir) / "errors.csv";
    write_text_atomic(target, out.str());
    std::cout << "compare: " << o.taus.size() << " step sizes against the sigma = 0.5, N = " << o.reference_steps
              << " reference\nwrote " << target.string() << '\n';
    return 0;
}

struct ConvergenceCli {
    KernelCli kernel;
    ProblemCli problem;
    double sigma = 0.5;
    double t_end = 1.0;
    std::vector<double> taus{0.05, 0.025, 0.0125};
    double cg_tol = 1e-10;
    std::string out_dir = "out";
    int reference_steps = 1000;
};

int run_convergence(const ConvergenceCli& o) {
    if (o.taus.size() < 3) throw std::invalid_argument("convergence: need at least 3 step sizes");
    const double ratio = o.taus[0] / o.taus[1];
    if (!(ratio > 1.0)) throw std::invalid_argument("convergence: step sizes must decrease");
    for (std::size_t i = 0; i + 1 < o.taus.size(); ++i)
        if (std::abs(o.taus[i] / o.taus[i + 1] - ratio) > 1e-9 * ratio)
            throw std::invalid_argument("convergence: step sizes must form a geometric sequence");

    auto lap = std::make_shared<GridLaplacian>(o.problem.grid, o.problem.grid);
    ProblemSpec spec = make_relaxation_spec(lap, o.problem.c, obtain_kernel(o.kernel));

    const double tau_ref = o.t_end / o.reference_steps;
    auto ref = snapshots_at(spec, 0.5, tau_ref, o.reference_steps, {o.reference_steps}, std::min(o.cg_tol, 1e-12));

    std::vector<double> errors;
    for (double tau : o.taus) {
        const int n_steps = steps_for_horizon(o.t_end, tau);
        auto snaps = snapshots_at(spec, o.sigma, tau, n_steps, {n_steps}, o.cg_tol);
        errors.push_back(norm(snaps[0].second - ref[0].second, spec.space_weight));
    }

    std::ostringstream out;
    out << "tau,error,order\n";
    std::cout << "convergence at t = " << time_label(o.t_end) << " (sigma = " << o.sigma << "):\n";
    for (std::size_t i = 0; i < o.taus.size(); ++i) {
        out << sci(o.taus[i]) << ',' << sci(errors[i]) << ',';
        std::string shown = "-";
        if (i > 0 && errors[i] > 0.0 && errors[i - 1] > 0.0) {
            const double order = std::log(errors[i - 1] / errors[i]) / std::log(ratio);
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.3f", order);
            out << buf;
            shown = buf;
        }
        out << '\n';
        std::cout << "  tau = " << time_label(o.taus[i]) << "  error = " << sci(errors[i]) << "  order = " << shown
                  << '\n';
    }
    const fs::path target = fs::path(o.out_dir) / "orders.csv";
    write_text_atomic(target, out.str());
    std::cout << "wrote " << target.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "exponential-sum kernel compression and unconditionally stable time stepping\n"
        "for evolution equations with memory acting on the time derivative"};
    app.set_config("--config", "", "read options from a config file");
    app.require_subcommand(1);

    SolveCli solve_opts;
    CompareCli compare_opts;
    ConvergenceCli conv_opts;
    KernelCli fit_opts;
    std::string fit_out = "out";

    CLI::App* fit = app.add_subcommand("fit-kernel", "compress a tempered power kernel and certify the fit");
    add_fit_flags(fit, fit_opts);
    fit->add_option("--out-dir", fit_out, "output directory")->capture_default_str();

    CLI::App* solve = app.add_subcommand("solve", "integrate the relaxation problem on the unit square");
    add_kernel_flags(solve, solve_opts.kernel);
    add_problem_flags(solve, solve_opts.problem);
    solve->add_option("--sigma", solve_opts.sigma, "scheme weight, in (0,1]")->capture_default_str();
    solve->add_option("--tau", solve_opts.tau, "time step")->capture_default_str();
    CLI::Option* opt_t = solve->add_option("--T", solve_opts.t_end, "time horizon")->capture_default_str();
    CLI::Option* opt_steps = solve->add_option("--steps", solve_opts.steps, "step count (overrides --T)");
    opt_steps->excludes(opt_t);
    solve->add_option("--probe", solve_opts.probe, "probe point x1 x2")->expected(2);
    CLI::Option* opt_cp =
        solve->add_option("--checkpoints", solve_opts.checkpoints, "times at which the field is written");
    solve->add_option("--monitor", solve_opts.monitor, "energy monitor: off, warn or fail")
        ->check(CLI::IsMember({"off", "warn", "fail"}))
        ->capture_default_str();
    solve->add_option("--cg-tol", solve_opts.cg_tol, "linear solver tolerance")->capture_default_str();
    solve->add_option("--cg-max-iter", solve_opts.cg_max_iter, "linear solver iteration cap (-1: automatic)");
    solve->add_option("--out-dir", solve_opts.out_dir, "output directory")->capture_default_str();

    CLI::App* compare = app.add_subcommand("compare", "error of coarse runs against a fine reference run");
    add_kernel_flags(compare, compare_opts.kernel);
    add_problem_flags(compare, compare_opts.problem);
    compare->add_option("--sigma", compare_opts.sigma, "scheme weight of the coarse runs")->capture_default_str();
    compare->add_option("--T", compare_opts.t_end, "time horizon")->capture_default_str();
    compare->add_option("--taus", compare_opts.taus, "coarse step sizes");
    CLI::Option* cmp_cp =
        compare->add_option("--checkpoints", compare_opts.checkpoints, "comparison times");
    compare->add_option("--cg-tol", compare_opts.cg_tol, "linear solver tolerance")->capture_default_str();
    compare->add_option("--reference-steps", compare_opts.reference_steps, "reference step count")
        ->capture_default_str();
    compare->add_option("--out-dir", compare_opts.out_dir, "output directory")->capture_default_str();

    CLI::App* conv = app.add_subcommand("convergence", "observed order on a geometric step-size sequence");
    add_kernel_flags(conv, conv_opts.kernel);
    add_problem_flags(conv, conv_opts.problem);
    conv->add_option("--sigma", conv_opts.sigma, "scheme weight")->capture_default_str();
    conv->add_option("--T", conv_opts.t_end, "time horizon")->capture_default_str();
    conv->add_option("--taus", conv_opts.taus, "geometric step-size sequence (>= 3 entries)");
    conv->add_option("--cg-tol", conv_opts.cg_tol, "linear solver tolerance")->capture_default_str();
    conv->add_option("--reference-steps", conv_opts.reference_steps, "reference step count")->capture_default_str();
    conv->add_option("--out-dir", conv_opts.out_dir, "output directory")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    solve_opts.checkpoints_given = opt_cp->count() > 0;
    compare_opts.checkpoints_given = cmp_cp->count() > 0;

    try {
        if (app.got_subcommand(fit)) return run_fit_kernel(fit_opts, fit_out);
        if (app.got_subcommand(solve)) return run_solve(solve_opts);
        if (app.got_subcommand(compare)) return run_compare(compare_opts);
        return run_convergence(conv_opts);
    } catch (const ParseError& e) {
        std::cerr << "invalid coefficient file: " << e.what() << '\n';
        return 2;
    } catch (const FitFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const ConversionFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const NoConvergence& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const StabilityViolation& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const SingularMass& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const NegativeQuadraticForm& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const QuadratureFailure& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::logic_error& e) {
        std::cerr << "invalid request: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
