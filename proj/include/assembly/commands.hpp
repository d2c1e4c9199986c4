#ifndef ASSEMBLY_COMMANDS_HPP
#define ASSEMBLY_COMMANDS_HPP

// The four CLI commands. Each returns a process exit status:
// 0 success, 1 verification or comparison failure, 2 configuration error.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "config.hpp"
#include "errors.hpp"
#include "integrators.hpp"
#include "io.hpp"
#include "optimizer.hpp"
#include "saa.hpp"
#include "schedule.hpp"
#include "verifier.hpp"

namespace assembly {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

struct CommandContext {
    ExperimentConfig config;
    unsigned threads = 1;
    std::ostream* out = nullptr;  // result tables
    std::ostream* log = nullptr;  // progress, diagnostics
};

namespace cmd_detail {

inline std::filesystem::path out_path(const ExperimentConfig& cfg, const std::string& name) {
    return std::filesystem::path(cfg.out_dir) / name;
}

inline SystemState initial_state(const ExperimentConfig& cfg) {
    if (cfg.init_file.empty()) return sample_initial_state(cfg.init, cfg.params, cfg.seed_train, 0);
    SystemState s = io::read_state_csv(cfg.init_file);
    if (s.size() != static_cast<std::size_t>(cfg.params.n_particles)) {
        throw ConfigError("init.file: holds " + std::to_string(s.size()) + " particles, system.n is " +
                          std::to_string(cfg.params.n_particles));
    }
    validate_state(s, cfg.params);
    return s;
}

inline SolverOptions solver_options(const CommandContext& ctx) {
    SolverOptions opt;
    opt.max_iterations = ctx.config.max_iterations;
    opt.tolerance = ctx.config.tolerance;
    opt.variable = ctx.config.variable;
    opt.threads = ctx.threads;
    opt.dump_path = out_path(ctx.config, "failed_iterate.csv");
    if (ctx.log) {
        std::ostream* log = ctx.log;
        opt.on_iteration = [log](int it, double obj) {
            if (it % 25 == 0) *log << "  iteration " << it << "  objective " << io::format_double(obj) << '\n';
        };
    }
    return opt;
}

inline TemperatureSchedule baseline_schedule(const ExperimentConfig& cfg, const TimeGrid& grid) {
    return newton_cooling_schedule(cfg.newton_u0, cfg.newton_uenv, cfg.cooling_rate(), grid);
}

inline OptimizationReport run_optimizer(const CommandContext& ctx, const TimeGrid& grid) {
    const auto& cfg = ctx.config;
    if (ctx.log) *ctx.log << "optimizing: M = " << cfg.samples << ", N = " << cfg.params.n_particles << '\n';
    const SaaProblem problem = make_saa_problem(cfg.params, grid, cfg.init, cfg.samples, cfg.seed_train, cfg.u_min,
                                                cfg.u_max, cfg.monotone);
    const auto start = project_feasible(baseline_schedule(cfg, grid).values, cfg.u_min, cfg.u_max, cfg.monotone);
    return optimize_schedule(problem, start, solver_options(ctx));
}

}  // namespace cmd_detail

/// Turns a schedule source into concrete values on the config grid.
inline TemperatureSchedule resolve_schedule(const ScheduleSource& source, const CommandContext& ctx) {
    const auto& cfg = ctx.config;
    const TimeGrid grid = cfg.grid();
    switch (source.kind) {
        case SourceKind::optimize:
            return cmd_detail::run_optimizer(ctx, grid).schedule;
        case SourceKind::newton:
            return cmd_detail::baseline_schedule(cfg, grid);
        case SourceKind::constant:
            return constant_schedule(source.argument.empty() ? cfg.constant_u : io::parse_double(source.argument),
                                     grid);
        case SourceKind::file: {
            const std::string path = source.argument.empty() ? cfg.schedule_file : source.argument;
            TemperatureSchedule s;
            s.values = io::read_schedule_csv(path, grid);
            for (double u : s.values) {
                if (!(u >= 0.0)) throw ConfigError(path + ": temperatures must be non-negative");
            }
            s.u_min = *std::min_element(s.values.begin(), s.values.end());
            s.u_max = *std::max_element(s.values.begin(), s.values.end());
            s.monotone_nonincreasing = std::is_sorted(s.values.rbegin(), s.values.rend());
            return s;
        }
    }
    throw ConfigError("unhandled schedule source");
}

/// One trajectory from the configured initial state. With sim.noise the
/// schedule from control.source drives noise path 0 of seed.train.
inline int cmd_simulate(const CommandContext& ctx) {
    const auto& cfg = ctx.config;
    const TimeGrid grid = cfg.grid();
    const SystemState initial = cmd_detail::initial_state(cfg);
    const auto n = static_cast<std::size_t>(cfg.params.n_particles);

    TrajectoryRecord traj;
    if (cfg.noise) {
        const TemperatureSchedule schedule = resolve_schedule(cfg.source, ctx);
        std::vector<Vec3> increments(grid.n_steps() * n);
        draw_noise_path(cfg.seed_train, 0, grid.n_steps(), n, grid.dt(), increments);
        traj = rollout(initial, schedule.values, NoisePath(increments, grid.n_steps(), n), grid, cfg.params);
    } else {
        traj = rollout_noise_free(initial, grid, cfg.params);
    }

    io::ensure_directory(cfg.out_dir);
    io::write_text_file(cmd_detail::out_path(cfg, "trajectory.csv"), io::trajectory_csv(traj));
    io::write_text_file(cmd_detail::out_path(cfg, "summary.csv"), io::summary_csv(traj));
    io::write_text_file(cmd_detail::out_path(cfg, "hamiltonian_plot.csv"),
                        io::plot_csv({"time", "hamiltonian"}, {traj.times, traj.hamiltonians}));
    if (cfg.svg) {
        io::write_text_file(cmd_detail::out_path(cfg, "hamiltonian.svg"),
                            io::svg_line_plot("Hamiltonian", "t", "H(t)", {{"H", traj.times, traj.hamiltonians}}));
    }
    if (ctx.out) {
        *ctx.out << "H(0) = " << io::format_double(traj.hamiltonians.front())
                 << "\nH(T) = " << io::format_double(traj.hamiltonians.back()) << '\n';
    }
    return kExitSuccess;
}

/// Optimizes the schedule on seed.train, then scores it on eval.holdout
/// fresh paths from seed.holdout.
inline int cmd_optimize(const CommandContext& ctx) {
    const auto& cfg = ctx.config;
    if (cfg.source.kind != SourceKind::optimize) {
        throw ConfigError("control.source: optimize requires control.source = optimize");
    }
    const TimeGrid grid = cfg.grid();
    io::ensure_directory(cfg.out_dir);
    const auto report_path = cmd_detail::out_path(cfg, "report.json");

    OptimizationReport report;
    try {
        report = cmd_detail::run_optimizer(ctx, grid);
    } catch (const SolverFailure& e) {
        io::write_text_file(report_path, io::dump(io::to_json(e.partial())));
        throw;
    }
    report.holdout =
        evaluate_holdout(report.schedule, cfg.params, grid, cfg.init, cfg.holdout, cfg.seed_holdout, ctx.threads);

    io::write_text_file(report_path, io::dump(io::to_json(report)));
    io::write_text_file(cmd_detail::out_path(cfg, "schedule.csv"), io::schedule_csv(report.schedule, grid));
    std::vector<double> times(grid.n_points());
    for (std::size_t k = 0; k < times.size(); ++k) times[k] = grid.time(k);
    io::write_text_file(cmd_detail::out_path(cfg, "schedule_plot.csv"),
                        io::plot_csv({"time", "u"}, {times, report.schedule.values}));
    if (cfg.svg) {
        io::write_text_file(cmd_detail::out_path(cfg, "schedule.svg"),
                            io::svg_line_plot("Optimized temperature", "t", "u(t)",
                                              {{"optimized", times, report.schedule.values}}));
    }
    if (ctx.out) {
        *ctx.out << "iterations " << report.iterations << (report.converged ? " (converged)" : " (not converged)")
                 << "\nholdout mean H(T) = " << io::format_double(report.holdout->mean)
                 << " +- " << io::format_double(report.holdout->std_error) << '\n';
    }
    return kExitSuccess;
}

/// Scores compare.a and compare.b on the same held-out paths. Fails (1)
/// when a's mean H(T) exceeds b's.
inline int cmd_compare(const CommandContext& ctx) {
    const auto& cfg = ctx.config;
    const TimeGrid grid = cfg.grid();
    const auto a = resolve_schedule(cfg.compare_a, ctx);
    const auto b = resolve_schedule(cfg.compare_b, ctx);
    if (a.values.size() != grid.n_points() || b.values.size() != grid.n_points()) {
        throw ConfigError("compare: schedules do not share the configured grid");
    }
    const auto ha = evaluate_holdout(a, cfg.params, grid, cfg.init, cfg.holdout, cfg.seed_holdout, ctx.threads);
    const auto hb = evaluate_holdout(b, cfg.params, grid, cfg.init, cfg.holdout, cfg.seed_holdout, ctx.threads);
    const auto diff = paired_difference(ha.terminal_energies, hb.terminal_energies);
    const std::string name_a = cfg.compare_a.str();
    const std::string name_b = cfg.compare_b.str();

    io::ensure_directory(cfg.out_dir);
    std::string table = "schedule,mean_h_T,stderr\n";
    table += name_a + ',' + io::format_double(ha.mean) + ',' + io::format_double(ha.std_error) + '\n';
    table += name_b + ',' + io::format_double(hb.mean) + ',' + io::format_double(hb.std_error) + '\n';
    io::write_text_file(cmd_detail::out_path(cfg, "comparison.csv"), table);

    std::vector<double> times(grid.n_points());
    for (std::size_t k = 0; k < times.size(); ++k) times[k] = grid.time(k);
    io::write_text_file(cmd_detail::out_path(cfg, "compare_plot.csv"),
                        io::plot_csv({"time", "mean_h_a", "mean_h_b"}, {times, ha.mean_curve, hb.mean_curve}));
    nlohmann::json summary = {{"a", name_a},
                              {"b", name_b},
                              {"mean_a", ha.mean},
                              {"mean_b", hb.mean},
                              {"paired_difference", diff.mean},
                              {"paired_stderr", diff.std_error},
                              {"samples", cfg.holdout}};
    io::write_text_file(cmd_detail::out_path(cfg, "comparison.json"), io::dump(summary));
    if (cfg.svg) {
        io::write_text_file(cmd_detail::out_path(cfg, "compare.svg"),
                            io::svg_line_plot("Mean Hamiltonian", "t", "E H(t)",
                                              {{name_a, times, ha.mean_curve}, {name_b, times, hb.mean_curve}}));
    }
    if (ctx.out) {
        *ctx.out << table << "paired difference (a - b) = " << io::format_double(diff.mean) << " +- "
                 << io::format_double(diff.std_error) << '\n';
    }
    return ha.mean <= hb.mean ? kExitSuccess : kExitFailure;
}

/// Noise-free convergence checks on one trajectory.
inline int cmd_verify(const CommandContext& ctx) {
    const auto& cfg = ctx.config;
    if (cfg.noise) throw ConfigError("sim.noise: verify runs noise-free dynamics; set sim.noise = false");
    const TimeGrid grid = cfg.grid();
    const auto traj = rollout_noise_free(cmd_detail::initial_state(cfg), grid, cfg.params);
    const auto diss = check_dissipation(traj, cfg.params);
    const auto report = verify_convergence(traj, cfg.params, cfg.v_tol, cfg.f_tol);

    io::ensure_directory(cfg.out_dir);
    auto j = io::to_json(report);
    j["worst_step"] = diss.worst_step;
    j["identity_residual"] = diss.identity_residual;
    j["passed"] = report.all_passed();
    io::write_text_file(cmd_detail::out_path(cfg, "verify_report.json"), io::dump(j));

    if (ctx.out) {
        auto& o = *ctx.out;
        const auto mark = [](bool ok) { return ok ? "pass" : "FAIL"; };
        o << "check             result  detail\n";
        o << "H non-increasing  " << mark(report.h_monotone) << "    worst increase "
          << io::format_double(report.worst_violation);
        if (!report.h_monotone) o << " at step " << diss.worst_step;
        o << '\n';
        o << "equilibrium       " << mark(report.equilibrium_reached) << "    max|V| "
          << io::format_double(report.terminal_speed) << ", max|f| " << io::format_double(report.terminal_force)
          << '\n';
        o << "distance floor    " << mark(report.distance_floor_ok) << "    min r "
          << io::format_double(report.min_distance) << ", floor " << io::format_double(report.distance_floor)
          << '\n';
    }
    return report.all_passed() ? kExitSuccess : kExitFailure;
}

/// Runs a command, mapping exceptions onto exit statuses.
inline int run_guarded(const std::function<int()>& command, std::ostream& err) {
    try {
        return command();
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const IoError& e) {
        err << "i/o error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const SolverError& e) {
        err << "solver failure: " << e.what() << '\n';
        return kExitFailure;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

}  // namespace assembly

#endif
