#ifndef ASSEMBLY_INTEGRATORS_HPP
#define ASSEMBLY_INTEGRATORS_HPP

// Time stepping for the damped Lennard-Jones particle system.
//
// Both steppers share one update, implicit in the damping term and explicit
// in the forces:
//
//   V_{n+1} = (V_n + f(X_n) dt + sqrt(2 B u_{n+1}) dW_n) / (1 + B dt)
//   X_{n+1} = X_n + V_{n+1} dt
//
// The noise-free stepper is the u = 0 case.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "potential.hpp"
#include "random.hpp"
#include "vec3.hpp"

namespace assembly {

/// Uniform grid t_k = k dt on [0, horizon]. A zero-step grid holds only
/// t_0 = 0.
class TimeGrid {
public:
    TimeGrid() = default;

    static TimeGrid uniform(double horizon, std::size_t n_steps) {
        if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("grid horizon must be positive and finite");
        TimeGrid g;
        g.horizon_ = horizon;
        g.n_steps_ = n_steps;
        g.dt_ = n_steps == 0 ? horizon : horizon / static_cast<double>(n_steps);
        return g;
    }

    double horizon() const { return horizon_; }
    std::size_t n_steps() const { return n_steps_; }
    std::size_t n_points() const { return n_steps_ + 1; }
    double dt() const { return dt_; }
    double time(std::size_t k) const { return static_cast<double>(k) * dt_; }

    bool operator==(const TimeGrid&) const = default;

private:
    double horizon_ = 1.0;
    std::size_t n_steps_ = 1;
    double dt_ = 1.0;
};

namespace detail {

/// One step in place. `forces` holds f(X_n); an empty `dw` means no noise.
inline void advance(std::span<Vec3> x, std::span<Vec3> v, std::span<const Vec3> forces, double dt, double damping,
                    double sigma, std::span<const Vec3> dw) {
    const double denom = 1.0 + damping * dt;
    for (std::size_t i = 0; i < x.size(); ++i) {
        Vec3 s = v[i] + forces[i] * dt;
        if (!dw.empty()) s += sigma * dw[i];
        v[i] = {s[0] / denom, s[1] / denom, s[2] / denom};
        x[i] += dt * v[i];
    }
}

inline void check_step_inputs(const SystemState& state, double dt, const SystemParams& params) {
    validate_state(state, params);
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("time step must be positive and finite");
}

}  // namespace detail

inline SystemState step_noise_free(const SystemState& state, double dt, const SystemParams& params) {
    detail::check_step_inputs(state, dt, params);
    SystemState next = state;
    std::vector<Vec3> forces(state.size());
    total_forces_into(state.positions, params, forces);
    detail::advance(next.positions, next.velocities, forces, dt, params.damping, 0.0, {});
    return next;
}

/// Langevin step with temperature u_next = u(t_{n+1}) and Wiener increments
/// dw (one 3-vector per particle, variance dt per component).
inline SystemState step_langevin(const SystemState& state, double dt, double u_next, std::span<const Vec3> dw,
                                 const SystemParams& params) {
    detail::check_step_inputs(state, dt, params);
    if (!(u_next >= 0.0) || !std::isfinite(u_next)) throw DomainError("temperature must be non-negative and finite");
    if (dw.size() != state.size()) {
        throw DomainError("noise increments: got " + std::to_string(dw.size()) + " vectors for " +
                          std::to_string(state.size()) + " particles");
    }
    if (u_next == 0.0) return step_noise_free(state, dt, params);
    SystemState next = state;
    std::vector<Vec3> forces(state.size());
    total_forces_into(state.positions, params, forces);
    detail::advance(next.positions, next.velocities, forces, dt, params.damping, std::sqrt(2.0 * params.damping * u_next),
                    dw);
    return next;
}

/// Drives the stepper over the grid, calling observe(k, positions, velocities)
/// at every grid point k = 0..N_T. `u` holds u(t_0..t_{N_T}); step n uses
/// u[n + 1], u[0] is never used by the dynamics.
template <class Observer>
void simulate(const SystemState& initial, std::span<const double> u, NoisePath noise, const TimeGrid& grid,
              const SystemParams& params, Observer&& observe) {
    validate_state(initial, params);
    const std::size_t n_steps = grid.n_steps();
    const std::size_t n = initial.size();
    if (u.size() != grid.n_points()) {
        throw DomainError("schedule has " + std::to_string(u.size()) + " values for " +
                          std::to_string(grid.n_points()) + " grid points");
    }
    if (!noise.is_zero() && (noise.n_steps() != n_steps || noise.n_particles() != n)) {
        throw DomainError("noise path shape does not match grid and particle count");
    }
    for (double value : u) {
        if (!(value >= 0.0) || !std::isfinite(value)) throw DomainError("temperature must be non-negative and finite");
    }

    std::vector<Vec3> x = initial.positions;
    std::vector<Vec3> v = initial.velocities;
    std::vector<Vec3> forces(n);
    const double dt = grid.dt();
    observe(std::size_t{0}, std::span<const Vec3>(x), std::span<const Vec3>(v));
    for (std::size_t step = 0; step < n_steps; ++step) {
        try {
            total_forces_into(x, params, forces);
        } catch (const DomainError& e) {
            throw DomainError("step " + std::to_string(step) + ": " + e.what());
        }
        const double u_next = u[step + 1];
        const bool noisy = u_next > 0.0 && !noise.is_zero();
        detail::advance(x, v, forces, dt, params.damping, noisy ? std::sqrt(2.0 * params.damping * u_next) : 0.0,
                        noisy ? noise.step(step) : std::span<const Vec3>{});
        for (std::size_t i = 0; i < n; ++i) {
            if (!is_finite(x[i]) || !is_finite(v[i])) {
                throw DomainError("step " + std::to_string(step) + ": non-finite state for particle " +
                                  std::to_string(i));
            }
        }
        observe(step + 1, std::span<const Vec3>(x), std::span<const Vec3>(v));
    }
}

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<SystemState> states;
    std::vector<double> hamiltonians;
    std::vector<double> min_pair_distance;
    /// u(t_k) at every grid point; all zero for noise-free runs.
    std::vector<double> controls;

    std::size_t size() const { return times.size(); }
    bool operator==(const TrajectoryRecord&) const = default;
};

inline TrajectoryRecord rollout(const SystemState& initial, std::span<const double> u, NoisePath noise,
                                const TimeGrid& grid, const SystemParams& params) {
    TrajectoryRecord rec;
    const std::size_t points = grid.n_points();
    rec.times.reserve(points);
    rec.states.reserve(points);
    rec.hamiltonians.reserve(points);
    rec.min_pair_distance.reserve(points);
    simulate(initial, u, noise, grid, params,
             [&](std::size_t k, std::span<const Vec3> x, std::span<const Vec3> v) {
                 rec.times.push_back(grid.time(k));
                 SystemState s{{x.begin(), x.end()}, {v.begin(), v.end()}};
                 rec.hamiltonians.push_back(kinetic_energy(v) + potential_energy(x, params));
                 rec.min_pair_distance.push_back(min_pair_distance(x));
                 rec.states.push_back(std::move(s));
             });
    rec.controls.assign(u.begin(), u.end());
    return rec;
}

inline TrajectoryRecord rollout_noise_free(const SystemState& initial, const TimeGrid& grid,
                                           const SystemParams& params) {
    const std::vector<double> zeros(grid.n_points(), 0.0);
    return rollout(initial, zeros, NoisePath{}, grid, params);
}

enum class VelocityLaw { gaussian, uniform };

/// Distribution of initial states: positions i.i.d. uniform in
/// [box_lo, box_hi]^3; velocity components i.i.d. N(0, vel_variance) or
/// uniform in [vel_lo, vel_hi]. Placements with a pair closer than
/// min_separation * r_m are redrawn.
struct InitialDistribution {
    double box_lo = 0.0;
    double box_hi = 10.0;
    VelocityLaw velocity = VelocityLaw::gaussian;
    double vel_variance = 4.0;
    double vel_lo = 0.0;
    double vel_hi = 1.0;
    double min_separation = 0.1;

    void validate() const {
        if (!(box_hi > box_lo) || !std::isfinite(box_lo) || !std::isfinite(box_hi)) {
            throw ConfigError("initial position box must satisfy lo < hi");
        }
        if (!(vel_variance >= 0.0) || !std::isfinite(vel_variance)) {
            throw ConfigError("initial velocity variance must be non-negative");
        }
        if (!(vel_hi >= vel_lo) || !std::isfinite(vel_lo) || !std::isfinite(vel_hi)) {
            throw ConfigError("initial velocity range must satisfy lo <= hi");
        }
        if (!(min_separation >= 0.0) || !std::isfinite(min_separation)) {
            throw ConfigError("initial minimum separation must be non-negative");
        }
    }

    bool operator==(const InitialDistribution&) const = default;
};

inline constexpr int kInitialStateAttempts = 1000;

/// Draws initial state number `sample` of the stream selected by `seed`.
inline SystemState sample_initial_state(const InitialDistribution& dist, const SystemParams& params, std::uint64_t seed,
                                        std::size_t sample = 0) {
    dist.validate();
    params.validate();
    const auto n = static_cast<std::size_t>(params.n_particles);
    std::mt19937_64 engine(derive_seed(seed, kInitialStateStream, sample, 0));
    std::uniform_real_distribution<double> position(dist.box_lo, dist.box_hi);
    const double min_distance = dist.min_separation * params.lj_rmin;

    SystemState state;
    state.positions.resize(n);
    int attempt = 0;
    for (;; ++attempt) {
        if (attempt == kInitialStateAttempts) {
            throw ConfigError("could not place " + std::to_string(n) + " particles without overlap in " +
                              std::to_string(kInitialStateAttempts) + " attempts; use a larger position box");
        }
        for (auto& p : state.positions) p = {position(engine), position(engine), position(engine)};
        if (min_pair_distance(state.positions) >= min_distance) break;
    }

    state.velocities.assign(n, Vec3{0.0, 0.0, 0.0});
    if (dist.velocity == VelocityLaw::gaussian) {
        if (dist.vel_variance > 0.0) {
            std::normal_distribution<double> gauss(0.0, std::sqrt(dist.vel_variance));
            for (auto& v : state.velocities) v = {gauss(engine), gauss(engine), gauss(engine)};
        }
    } else {
        std::uniform_real_distribution<double> uniform(dist.vel_lo, dist.vel_hi);
        for (auto& v : state.velocities) v = {uniform(engine), uniform(engine), uniform(engine)};
    }
    return state;
}

}  // namespace assembly

#endif
