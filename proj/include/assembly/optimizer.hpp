#ifndef ASSEMBLY_OPTIMIZER_HPP
#define ASSEMBLY_OPTIMIZER_HPP

// Schedule optimization over box and monotone constraints, plus held-out
// evaluation of schedules.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "errors.hpp"
#include "integrators.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "saa.hpp"
#include "schedule.hpp"

namespace assembly {

/// Variable the solver iterates on. With u_min = 0 the automatic choice is
/// s = sqrt(u), in which the noise amplitude sqrt(2 B u) = sqrt(2 B) s is
/// linear and the objective is smooth at the lower bound.
enum class ControlVariable { automatic, temperature, root_temperature };

struct SolverOptions {
    int max_iterations = 500;
    double tolerance = 1e-6;  // on the projected-gradient norm
    double armijo = 1e-4;
    double backtrack = 0.5;
    int max_backtracks = 50;
    /// First trial step; 0 picks a step moving the largest entry by 10% of
    /// the feasible range.
    double initial_step = 0.0;
    ControlVariable variable = ControlVariable::automatic;
    unsigned threads = 1;
    /// Where to write the offending iterate if the objective turns non-finite.
    std::optional<std::filesystem::path> dump_path;
    std::function<void(int iteration, double objective)> on_iteration;
};

struct HoldoutEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
    /// Set when a single sample makes the standard error meaningless.
    bool degenerate = false;
    std::vector<double> terminal_energies;
    /// Mean H(t_k) over the held-out paths at every grid point.
    std::vector<double> mean_curve;
};

struct OptimizationReport {
    TemperatureSchedule schedule;
    std::vector<double> objective_history;
    int iterations = 0;
    bool converged = false;
    std::optional<HoldoutEstimate> holdout;
};

/// Solver failure that carries the report accumulated up to the failing
/// iterate.
class SolverFailure : public SolverError {
public:
    SolverFailure(const std::string& what, OptimizationReport partial)
        : SolverError(what), partial_(std::move(partial)) {}
    const OptimizationReport& partial() const { return partial_; }

private:
    OptimizationReport partial_;
};

class ScheduleSolver {
public:
    virtual ~ScheduleSolver() = default;
    virtual OptimizationReport solve(const SaaProblem& problem, const TemperatureSchedule& init) const = 0;
};

/// Projected gradient descent with Armijo backtracking along the projection
/// arc. Accepted steps never increase the objective.
class ProjectedGradientSolver final : public ScheduleSolver {
public:
    explicit ProjectedGradientSolver(SolverOptions options = {}) : options_(std::move(options)) {}

    OptimizationReport solve(const SaaProblem& problem, const TemperatureSchedule& init) const override {
        problem.validate();
        check_initial(problem, init);
        const bool root = use_root(problem);
        if (!root && problem.u_min < kGradientFloor && problem.grid.n_steps() > 0) {
            throw ConfigError("solver variable 'temperature' needs u_min >= 1e-12; use 'sqrt' or 'auto'");
        }
        const double lo = root ? std::sqrt(problem.u_min) : problem.u_min;
        const double hi = root ? std::sqrt(problem.u_max) : problem.u_max;
        const std::size_t n_steps = problem.grid.n_steps();

        OptimizationReport report;
        report.schedule = init;
        if (n_steps == 0) {
            report.objective_history.push_back(saa_objective(init, problem, options_.threads));
            report.converged = true;
            return report;
        }

        std::vector<double> z(n_steps);
        for (std::size_t n = 0; n < n_steps; ++n) z[n] = root ? std::sqrt(init.values[n + 1]) : init.values[n + 1];
        z = project_values(z, lo, hi, problem.monotone);

        auto [f, g] = guarded(problem, z, root, report, [&] { return value_and_gradient(problem, z, root); });
        report.objective_history.push_back(f);
        if (!std::isfinite(f)) fail_non_finite(problem, z, root, report);

        double step = options_.initial_step;
        if (!(step > 0.0)) {
            const double g_max = max_abs(g);
            step = g_max > 0.0 ? 0.1 * std::max(hi - lo, 1e-12) / g_max : 1.0;
        }

        std::vector<double> trial(n_steps);
        for (int it = 0; it < options_.max_iterations; ++it) {
            if (projected_gradient_norm(z, g, lo, hi, problem.monotone) <= options_.tolerance) {
                report.converged = true;
                break;
            }
            bool accepted = false;
            double f_trial = f;
            for (int bt = 0; bt < options_.max_backtracks; ++bt) {
                for (std::size_t n = 0; n < n_steps; ++n) trial[n] = z[n] - step * g[n];
                trial = project_values(trial, lo, hi, problem.monotone);
                double slope = 0.0;
                bool moved = false;
                for (std::size_t n = 0; n < n_steps; ++n) {
                    const double d = trial[n] - z[n];
                    slope += g[n] * d;
                    moved = moved || d != 0.0;
                }
                if (!moved) break;
                report.schedule = to_schedule(problem, z, root);
                f_trial = guarded(problem, trial, root, report, [&] {
                    return saa_objective(to_schedule(problem, trial, root).values, problem, options_.threads);
                });
                if (!std::isfinite(f_trial)) fail_non_finite(problem, trial, root, report);
                if (f_trial <= f + options_.armijo * slope) {
                    accepted = true;
                    break;
                }
                step *= options_.backtrack;
            }
            if (!accepted) break;

            z = trial;
            f = f_trial;
            g = guarded(problem, z, root, report, [&] { return value_and_gradient(problem, z, root); }).second;
            report.objective_history.push_back(f);
            report.iterations = it + 1;
            if (options_.on_iteration) options_.on_iteration(report.iterations, f);
            step /= options_.backtrack;
        }
        if (!report.converged && report.iterations < options_.max_iterations) {
            report.converged = projected_gradient_norm(z, g, lo, hi, problem.monotone) <= options_.tolerance;
        }
        report.schedule = to_schedule(problem, z, root);
        return report;
    }

    const SolverOptions& options() const { return options_; }

private:
    bool use_root(const SaaProblem& problem) const {
        switch (options_.variable) {
            case ControlVariable::temperature:
                return false;
            case ControlVariable::root_temperature:
                return true;
            case ControlVariable::automatic:
                break;
        }
        return problem.u_min < kGradientFloor;
    }

    static void check_initial(const SaaProblem& problem, const TemperatureSchedule& init) {
        if (init.values.size() != problem.grid.n_points()) {
            throw ConfigError("initial schedule length does not match the grid");
        }
        TemperatureSchedule bounded = init;
        bounded.u_min = problem.u_min;
        bounded.u_max = problem.u_max;
        bounded.monotone_nonincreasing = problem.monotone;
        if (!bounded.is_feasible()) throw ConfigError("initial schedule is not feasible");
    }

    /// Schedule for working variables z; u(t_0) mirrors u(t_1) since the
    /// dynamics never read it.
    static TemperatureSchedule to_schedule(const SaaProblem& problem, std::span<const double> z, bool root) {
        TemperatureSchedule s;
        s.u_min = problem.u_min;
        s.u_max = problem.u_max;
        s.monotone_nonincreasing = problem.monotone;
        s.values.resize(z.size() + 1);
        for (std::size_t n = 0; n < z.size(); ++n) {
            s.values[n + 1] = std::clamp(root ? z[n] * z[n] : z[n], problem.u_min, problem.u_max);
        }
        s.values[0] = s.values.size() > 1 ? s.values[1] : problem.u_min;
        return s;
    }

    std::pair<double, std::vector<double>> value_and_gradient(const SaaProblem& problem, std::span<const double> z,
                                                              bool root) const {
        const auto u = to_schedule(problem, z, root).values;
        if (!root) {
            const double f = saa_objective(u, problem, options_.threads);
            if (!std::isfinite(f)) return {f, std::vector<double>(z.size(), 0.0)};
            return {f, saa_gradient(u, problem, options_.threads)};
        }
        const auto sg = saa_sigma_gradient(u, problem, options_.threads);
        const double scale = std::sqrt(2.0 * problem.params.damping);
        const double heating = heating_coefficient(problem.params, problem.grid);
        std::vector<double> g(z.size());
        for (std::size_t n = 0; n < z.size(); ++n) g[n] = sg.d_sigma[n] * scale + 2.0 * heating * z[n];
        return {sg.objective, std::move(g)};
    }

    static double projected_gradient_norm(std::span<const double> z, std::span<const double> g, double lo, double hi,
                                          bool monotone) {
        std::vector<double> shifted(z.size());
        for (std::size_t n = 0; n < z.size(); ++n) shifted[n] = z[n] - g[n];
        const auto p = project_values(shifted, lo, hi, monotone);
        double sum = 0.0;
        for (std::size_t n = 0; n < z.size(); ++n) sum += (p[n] - z[n]) * (p[n] - z[n]);
        return std::sqrt(sum);
    }

    static double max_abs(std::span<const double> v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }

    /// Runs an evaluation at z; a rollout that leaves the finite range is a
    /// non-finite objective.
    template <class Fn>
    auto guarded(const SaaProblem& problem, std::span<const double> z, bool root, const OptimizationReport& partial,
                 Fn&& fn) const -> std::invoke_result_t<Fn&> {
        try {
            return fn();
        } catch (const DomainError& e) {
            fail_non_finite(problem, z, root, partial, e.what());
        }
    }

    [[noreturn]] void fail_non_finite(const SaaProblem& problem, std::span<const double> z, bool root,
                                      const OptimizationReport& partial, const std::string& cause = {}) const {
        std::string where = "no dump path configured";
        if (options_.dump_path) {
            std::ofstream out(*options_.dump_path);
            const auto s = to_schedule(problem, z, root);
            out << "step,u\n" << std::setprecision(17);
            for (std::size_t n = 0; n < s.values.size(); ++n) out << n << ',' << s.values[n] << '\n';
            where = out ? "iterate written to " + options_.dump_path->string() : "failed to write iterate dump";
        }
        throw SolverFailure("objective is not finite (" + where + ")" + (cause.empty() ? "" : ": " + cause), partial);
    }

    SolverOptions options_;
};

inline OptimizationReport optimize_schedule(const SaaProblem& problem, const TemperatureSchedule& init,
                                            const SolverOptions& options = {}) {
    return ProjectedGradientSolver(options).solve(problem, init);
}

/// Mean and standard error of H(T) over m fresh sample paths drawn from
/// `seed`. Schedules compared with the same seed see identical initial
/// states and noise.
inline HoldoutEstimate evaluate_holdout(const TemperatureSchedule& schedule, const SystemParams& params,
                                        const TimeGrid& grid, const InitialDistribution& dist, std::size_t m_holdout,
                                        std::uint64_t seed, unsigned threads = 1) {
    if (m_holdout == 0) throw ConfigError("holdout sample count must be positive");
    if (schedule.values.size() != grid.n_points()) throw ConfigError("schedule length does not match the grid");
    const std::size_t points = grid.n_points();
    const auto n = static_cast<std::size_t>(params.n_particles);
    std::vector<double> curves(m_holdout * points);
    parallel_for(m_holdout, threads, [&](std::size_t k) {
        try {
            const SystemState initial = sample_initial_state(dist, params, seed, k);
            std::vector<Vec3> increments(grid.n_steps() * n);
            draw_noise_path(seed, k, grid.n_steps(), n, grid.dt(), increments);
            simulate(initial, schedule.values, NoisePath(increments, grid.n_steps(), n), grid, params,
                     [&](std::size_t t, std::span<const Vec3> x, std::span<const Vec3> v) {
                         curves[k * points + t] = kinetic_energy(v) + potential_energy(x, params);
                     });
        } catch (const DomainError& e) {
            throw DomainError("holdout sample " + std::to_string(k) + ": " + e.what());
        }
    });

    HoldoutEstimate est;
    est.samples = m_holdout;
    est.mean_curve.assign(points, 0.0);
    est.terminal_energies.resize(m_holdout);
    for (std::size_t k = 0; k < m_holdout; ++k) {
        for (std::size_t t = 0; t < points; ++t) est.mean_curve[t] += curves[k * points + t];
        est.terminal_energies[k] = curves[k * points + points - 1];
    }
    for (auto& c : est.mean_curve) c /= static_cast<double>(m_holdout);
    est.mean = est.mean_curve.back();
    if (m_holdout == 1) {
        est.degenerate = true;
        return est;
    }
    double ss = 0.0;
    for (double h : est.terminal_energies) ss += (h - est.mean) * (h - est.mean);
    est.std_error = std::sqrt(ss / static_cast<double>(m_holdout - 1) / static_cast<double>(m_holdout));
    return est;
}

/// Mean and standard error of the per-path differences a_k - b_k.
struct PairedDifference {
    double mean = 0.0;
    double std_error = 0.0;
};

inline PairedDifference paired_difference(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) throw DomainError("paired_difference needs equal, non-empty samples");
    const auto m = static_cast<double>(a.size());
    PairedDifference d;
    for (std::size_t k = 0; k < a.size(); ++k) d.mean += a[k] - b[k];
    d.mean /= m;
    if (a.size() < 2) return d;
    double ss = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) ss += (a[k] - b[k] - d.mean) * (a[k] - b[k] - d.mean);
    d.std_error = std::sqrt(ss / (m - 1.0) / m);
    return d;
}

}  // namespace assembly

#endif
