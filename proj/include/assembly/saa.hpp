#ifndef ASSEMBLY_SAA_HPP
#define ASSEMBLY_SAA_HPP

// Sample-average approximation of E[H(T)] over M fixed sample paths and its
// exact gradient with respect to the temperature schedule.
//
// For each path k the discrete energy balance reads
//
//   J_k = H_k(0) - B dt sum_{n=1..N_T} sum_i |V_i^k(t_n)|^2
//               + d N B dt sum_{n=1..N_T} u(t_n)
//
// with d = 3 the spatial dimension: each of the 3N velocity components
// receives a Brownian kick of variance 2 B u dt, heating the system by
// B u dt per component. The objective is the mean of J_k over k.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "integrators.hpp"
#include "parallel.hpp"
#include "potential.hpp"
#include "random.hpp"
#include "schedule.hpp"

namespace assembly {

/// Derivatives are refused below this temperature; sqrt(2 B u) is not
/// differentiable at 0.
inline constexpr double kGradientFloor = 1e-12;

struct SaaProblem {
    SystemParams params;
    TimeGrid grid;
    std::vector<SystemState> initial_states;
    NoiseRealization noise;
    double u_min = 0.0;
    double u_max = 0.0;
    bool monotone = true;

    std::size_t n_samples() const { return initial_states.size(); }

    void validate() const {
        params.validate();
        check_bounds(u_min, u_max);
        if (initial_states.empty()) throw ConfigError("SAA problem needs at least one sample path");
        if (noise.n_paths() != initial_states.size() || noise.n_steps() != grid.n_steps() ||
            noise.n_particles() != static_cast<std::size_t>(params.n_particles)) {
            throw ConfigError("noise realization shape does not match (M, N_T, N)");
        }
        for (const auto& s : initial_states) validate_state(s, params);
    }
};

/// Draws M initial states and noise paths from `seed` (common random
/// numbers for every later evaluation).
inline SaaProblem make_saa_problem(const SystemParams& params, const TimeGrid& grid, const InitialDistribution& dist,
                                   std::size_t n_samples, std::uint64_t seed, double u_min, double u_max,
                                   bool monotone) {
    if (n_samples == 0) throw ConfigError("number of sample paths must be positive");
    SaaProblem p;
    p.params = params;
    p.grid = grid;
    p.u_min = u_min;
    p.u_max = u_max;
    p.monotone = monotone;
    p.initial_states.reserve(n_samples);
    for (std::size_t k = 0; k < n_samples; ++k) p.initial_states.push_back(sample_initial_state(dist, params, seed, k));
    p.noise = NoiseRealization::generate(seed, n_samples, grid.n_steps(), static_cast<std::size_t>(params.n_particles),
                                         grid.dt());
    p.validate();
    return p;
}

/// Coefficient of sum_n u(t_n) in every J_k.
inline double heating_coefficient(const SystemParams& params, const TimeGrid& grid) {
    return kDimension * params.n_particles * params.damping * grid.dt();
}

/// Per-path pieces of the energy balance.
struct PathTerms {
    double initial_energy = 0.0;   // H_k(0)
    double dissipation = 0.0;      // B dt sum_n sum_i |V_i(t_n)|^2, n = 1..N_T
    double heating = 0.0;          // d N B dt sum_n u(t_n), n = 1..N_T
    double terminal_energy = 0.0;  // H_k(t_{N_T}) evaluated directly

    double balance() const { return initial_energy - dissipation + heating; }
};

namespace detail {

inline double heating_term(std::span<const double> u, const SystemParams& params, const TimeGrid& grid) {
    double sum = 0.0;
    for (std::size_t n = 1; n < u.size(); ++n) sum += u[n];
    return heating_coefficient(params, grid) * sum;
}

inline PathTerms path_terms(const SystemState& initial, std::span<const double> u, NoisePath noise,
                            const TimeGrid& grid, const SystemParams& params) {
    PathTerms t;
    double velocity_sum = 0.0;
    simulate(initial, u, noise, grid, params, [&](std::size_t k, std::span<const Vec3> x, std::span<const Vec3> v) {
        const double ke = kinetic_energy(v);
        if (k == 0) t.initial_energy = ke + potential_energy(x, params);
        if (k > 0) velocity_sum += 2.0 * ke;
        if (k == grid.n_steps()) t.terminal_energy = ke + potential_energy(x, params);
    });
    t.dissipation = params.damping * grid.dt() * velocity_sum;
    t.heating = heating_term(u, params, grid);
    return t;
}

/// Objective contribution of one path and dJ_k/dsigma_n for n = 1..N_T,
/// where sigma_n = sqrt(2 B u(t_n)) multiplies the step n-1 increments.
/// Reverse-mode sweep through the stepper recursion with the increments
/// held fixed.
inline double path_sigma_gradient(const SystemState& initial, std::span<const double> u, NoisePath noise,
                                  const TimeGrid& grid, const SystemParams& params, std::span<double> d_sigma) {
    const std::size_t n_steps = grid.n_steps();
    const std::size_t n = initial.size();
    const double dt = grid.dt();
    const double b = params.damping;

    std::vector<Vec3> xs((n_steps + 1) * n);
    std::vector<Vec3> vs((n_steps + 1) * n);
    simulate(initial, u, noise, grid, params, [&](std::size_t k, std::span<const Vec3> x, std::span<const Vec3> v) {
        std::copy(x.begin(), x.end(), xs.begin() + static_cast<std::ptrdiff_t>(k * n));
        std::copy(v.begin(), v.end(), vs.begin() + static_cast<std::ptrdiff_t>(k * n));
    });

    double velocity_sum = 0.0;
    for (std::size_t k = 1; k <= n_steps; ++k) {
        velocity_sum += 2.0 * kinetic_energy(std::span<const Vec3>(vs).subspan(k * n, n));
    }
    const double value = kinetic_energy(std::span<const Vec3>(vs).subspan(0, n)) +
                         potential_energy(std::span<const Vec3>(xs).subspan(0, n), params) -
                         b * dt * velocity_sum + heating_term(u, params, grid);

    std::fill(d_sigma.begin(), d_sigma.end(), 0.0);
    if (n_steps == 0) return value;

    const double inv_denom = 1.0 / (1.0 + b * dt);
    const double cost_weight = -2.0 * b * dt;
    std::vector<Vec3> adj_x(n, Vec3{0.0, 0.0, 0.0});
    std::vector<Vec3> adj_v(n);
    std::vector<Vec3> w(n);
    std::vector<Vec3> jw(n);
    for (std::size_t i = 0; i < n; ++i) adj_v[i] = cost_weight * vs[n_steps * n + i];

    for (std::size_t step = n_steps; step-- > 0;) {
        // adj_x, adj_v hold dJ/dX_{step+1}, dJ/dV_{step+1}.
        for (std::size_t i = 0; i < n; ++i) w[i] = inv_denom * (adj_v[i] + dt * adj_x[i]);
        if (!noise.is_zero()) {
            const auto dw = noise.step(step);
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += dot(w[i], dw[i]);
            d_sigma[step] = acc;
        }
        const auto x_step = std::span<const Vec3>(xs).subspan(step * n, n);
        force_jacobian_product_into(x_step, w, params, jw);
        for (std::size_t i = 0; i < n; ++i) {
            adj_x[i] += dt * jw[i];
            adj_v[i] = w[i];
            if (step > 0) adj_v[i] += cost_weight * vs[step * n + i];
        }
    }
    return value;
}

inline void check_schedule_shape(std::span<const double> u, const SaaProblem& problem) {
    if (u.size() != problem.grid.n_points()) {
        throw DomainError("schedule has " + std::to_string(u.size()) + " values, grid has " +
                          std::to_string(problem.grid.n_points()) + " points");
    }
}

template <class Fn>
auto with_sample_index(std::size_t k, Fn&& fn) {
    try {
        return fn();
    } catch (const DomainError& e) {
        throw DomainError("sample " + std::to_string(k) + ": " + e.what());
    }
}

}  // namespace detail

/// Per-path energy-balance terms under schedule u for every sample.
inline std::vector<PathTerms> saa_path_terms(std::span<const double> u, const SaaProblem& problem,
                                             unsigned threads = 1) {
    detail::check_schedule_shape(u, problem);
    std::vector<PathTerms> terms(problem.n_samples());
    parallel_for(terms.size(), threads, [&](std::size_t k) {
        terms[k] = detail::with_sample_index(k, [&] {
            return detail::path_terms(problem.initial_states[k], u, problem.noise.path(k), problem.grid,
                                      problem.params);
        });
    });
    return terms;
}

/// Sample average of J_k. The control-independent H(0) term is included.
inline double saa_objective(std::span<const double> u, const SaaProblem& problem, unsigned threads = 1) {
    const auto terms = saa_path_terms(u, problem, threads);
    double sum = 0.0;
    for (const auto& t : terms) sum += t.balance();
    return sum / static_cast<double>(terms.size());
}

inline double saa_objective(const TemperatureSchedule& u, const SaaProblem& problem, unsigned threads = 1) {
    return saa_objective(std::span<const double>(u.values), problem, threads);
}

/// Objective together with d(objective)/d sigma_n, n = 1..N_T.
struct SigmaGradient {
    double objective = 0.0;
    std::vector<double> d_sigma;
};

inline SigmaGradient saa_sigma_gradient(std::span<const double> u, const SaaProblem& problem, unsigned threads = 1) {
    detail::check_schedule_shape(u, problem);
    const std::size_t m = problem.n_samples();
    const std::size_t n_steps = problem.grid.n_steps();
    std::vector<double> values(m);
    std::vector<double> per_path(m * n_steps);
    parallel_for(m, threads, [&](std::size_t k) {
        values[k] = detail::with_sample_index(k, [&] {
            return detail::path_sigma_gradient(problem.initial_states[k], u, problem.noise.path(k), problem.grid,
                                               problem.params,
                                               std::span<double>(per_path).subspan(k * n_steps, n_steps));
        });
    });
    SigmaGradient out;
    out.d_sigma.assign(n_steps, 0.0);
    double sum = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        sum += values[k];
        for (std::size_t n = 0; n < n_steps; ++n) out.d_sigma[n] += per_path[k * n_steps + n];
    }
    const double inv_m = 1.0 / static_cast<double>(m);
    out.objective = sum * inv_m;
    for (auto& g : out.d_sigma) g *= inv_m;
    return out;
}

/// d(objective)/du(t_n) for n = 1..N_T.
inline std::vector<double> saa_gradient(std::span<const double> u, const SaaProblem& problem, unsigned threads = 1) {
    detail::check_schedule_shape(u, problem);
    for (std::size_t n = 1; n < u.size(); ++n) {
        if (u[n] < kGradientFloor) {
            throw DomainError("saa_gradient: u(t_" + std::to_string(n) +
                              ") is below the differentiability floor; optimize in s = sqrt(u) instead");
        }
    }
    const auto sg = saa_sigma_gradient(u, problem, threads);
    const double b = problem.params.damping;
    const double heating = heating_coefficient(problem.params, problem.grid);
    std::vector<double> g(sg.d_sigma.size());
    for (std::size_t n = 0; n < g.size(); ++n) {
        g[n] = sg.d_sigma[n] * std::sqrt(b / (2.0 * u[n + 1])) + heating;
    }
    return g;
}

inline std::vector<double> saa_gradient(const TemperatureSchedule& u, const SaaProblem& problem,
                                        unsigned threads = 1) {
    return saa_gradient(std::span<const double>(u.values), problem, threads);
}

}  // namespace assembly

#endif
