#ifndef ASSEMBLY_VERIFIER_HPP
#define ASSEMBLY_VERIFIER_HPP

// Finite-horizon checks of noise-free convergence: energy dissipation,
// terminal equilibrium, the pair-distance floor, and the stochastic energy
// balance E H(T) = E H(0) + E int B sum_i (d u - |V_i|^2) dt.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "integrators.hpp"
#include "potential.hpp"

namespace assembly {

struct DissipationCheck {
    bool ok = true;
    /// Largest single-step increase of H (0 if H never increases).
    double worst_violation = 0.0;
    /// Step with the largest increase relative to its tolerance.
    std::size_t worst_step = 0;
    /// max_n |(H_{n+1} - H_n)/dt + B sum_i |V_i(t_{n+1})|^2|.
    double identity_residual = 0.0;
};

struct DistanceFloorCheck {
    bool ok = true;
    double min_observed = std::numeric_limits<double>::infinity();
    double floor = 0.0;
};

struct ConvergenceReport {
    bool h_monotone = true;
    double worst_violation = 0.0;
    double terminal_speed = 0.0;
    double terminal_force = 0.0;
    bool distance_floor_ok = true;
    double min_distance = std::numeric_limits<double>::infinity();
    double distance_floor = 0.0;
    bool equilibrium_reached = false;

    bool all_passed() const { return h_monotone && distance_floor_ok && equilibrium_reached; }
};

struct EnergyBalanceCheck {
    double gap = 0.0;  // mean direct H(T) minus mean integral-form estimate
    double std_error = 0.0;
    bool pass = false;
    double direct_mean = 0.0;
    double integral_mean = 0.0;
};

inline constexpr double kDistanceFloorSlack = 0.9;
inline constexpr double kDefaultSpeedTolerance = 1e-4;
inline constexpr double kDefaultForceTolerance = 1e-3;
inline constexpr std::size_t kMinBalanceSamples = 30;

/// Per-step allowance for H increases from the first-order discretization.
inline double dissipation_tolerance(double dt, double h) { return 10.0 * dt * dt * (1.0 + std::abs(h)); }

namespace detail {

inline void require_noise_free(const TrajectoryRecord& traj) {
    for (double u : traj.controls) {
        if (u > 0.0) throw DomainError("trajectory comes from a noisy rollout (u > 0); checks need a noise-free run");
    }
}

inline double max_norm(std::span<const Vec3> v) {
    double m = 0.0;
    for (const auto& x : v) m = std::max(m, norm(x));
    return m;
}

}  // namespace detail

inline DissipationCheck check_dissipation(const TrajectoryRecord& traj, const SystemParams& params) {
    detail::require_noise_free(traj);
    DissipationCheck out;
    double worst_ratio = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n + 1 < traj.size(); ++n) {
        const double dt = traj.times[n + 1] - traj.times[n];
        const double dh = traj.hamiltonians[n + 1] - traj.hamiltonians[n];
        const double tol = dissipation_tolerance(dt, traj.hamiltonians[n]);
        if (dh > tol) out.ok = false;
        out.worst_violation = std::max(out.worst_violation, dh);
        if (dh / tol > worst_ratio) {
            worst_ratio = dh / tol;
            out.worst_step = n;
        }
        double speed_sq = 0.0;
        for (const auto& v : traj.states[n + 1].velocities) speed_sq += norm_squared(v);
        out.identity_residual = std::max(out.identity_residual, std::abs(dh / dt + params.damping * speed_sq));
    }
    return out;
}

/// Terminal speed/force against tolerances. Equilibrium additionally needs
/// the speed and force envelopes to be non-increasing over the last 10% of
/// the record (split into up to five windows); envelopes already below
/// 1e-3 of their tolerance count as settled.
inline ConvergenceReport check_equilibrium(const TrajectoryRecord& traj, const SystemParams& params,
                                           double v_tol = kDefaultSpeedTolerance,
                                           double f_tol = kDefaultForceTolerance) {
    ConvergenceReport r;
    if (traj.size() == 0) return r;
    const auto& last = traj.states.back();
    std::vector<Vec3> forces(last.size());
    total_forces_into(last.positions, params, forces);
    r.terminal_speed = detail::max_norm(last.velocities);
    r.terminal_force = detail::max_norm(forces);

    const std::size_t len = traj.size();
    const std::size_t window = std::min(len, std::max<std::size_t>(2, (len + 9) / 10));
    const std::size_t first = len - window;
    const std::size_t chunks = std::min<std::size_t>(5, window);
    std::vector<double> speed_env(chunks, 0.0);
    std::vector<double> force_env(chunks, 0.0);
    for (std::size_t k = first; k < len; ++k) {
        const std::size_t c = (k - first) * chunks / window;
        const auto& s = traj.states[k];
        total_forces_into(s.positions, params, forces);
        speed_env[c] = std::max(speed_env[c], detail::max_norm(s.velocities));
        force_env[c] = std::max(force_env[c], detail::max_norm(forces));
    }
    bool decreasing = true;
    for (std::size_t c = 1; c < chunks; ++c) {
        if (speed_env[c] > speed_env[c - 1] && speed_env[c] > 1e-3 * v_tol) decreasing = false;
        if (force_env[c] > force_env[c - 1] && force_env[c] > 1e-3 * f_tol) decreasing = false;
    }
    r.equilibrium_reached = r.terminal_speed < v_tol && r.terminal_force < f_tol && decreasing;
    return r;
}

inline DistanceFloorCheck check_distance_floor(const TrajectoryRecord& traj, const SystemParams& params) {
    DistanceFloorCheck out;
    if (traj.size() == 0) return out;
    out.floor = pairwise_distance_floor(traj.hamiltonians.front(), params);
    for (double d : traj.min_pair_distance) out.min_observed = std::min(out.min_observed, d);
    out.ok = out.min_observed >= kDistanceFloorSlack * out.floor;
    return out;
}

/// Runs all noise-free checks on one trajectory.
inline ConvergenceReport verify_convergence(const TrajectoryRecord& traj, const SystemParams& params,
                                            double v_tol = kDefaultSpeedTolerance,
                                            double f_tol = kDefaultForceTolerance) {
    const auto diss = check_dissipation(traj, params);
    const auto floor = check_distance_floor(traj, params);
    ConvergenceReport r = check_equilibrium(traj, params, v_tol, f_tol);
    r.h_monotone = diss.ok;
    r.worst_violation = diss.worst_violation;
    r.distance_floor_ok = floor.ok;
    r.min_distance = floor.min_observed;
    r.distance_floor = floor.floor;
    return r;
}

/// Compares the mean of H(T) with the mean of an integral-form estimate of
/// H(0) + int B (d N u - sum_i |V_i|^2) dt over independent trajectories.
/// Passes when the paired gap is within three standard errors (plus a
/// rounding allowance).
///
/// The quadrature follows the stepper's exact kinetic-energy identity,
/// (|V'|^2 - |V|^2)/2 = (V' - V).(V' + V)/2: dissipation is sampled as
/// B dt V_{n+1}.(V_n + V_{n+1})/2 and the Ito heating as
/// d N B dt u_{n+1}/(1 + B dt). Plain right-endpoint sums carry an O(dt)
/// bias because the damped scheme's stationary variance is u/(1 + B dt/2);
/// `riemann` selects them.
enum class BalanceQuadrature { consistent, riemann };

inline EnergyBalanceCheck check_energy_balance_stochastic(std::span<const TrajectoryRecord> trajs,
                                                          std::span<const double> schedule,
                                                          const SystemParams& params,
                                                          BalanceQuadrature quadrature = BalanceQuadrature::consistent) {
    if (trajs.size() < kMinBalanceSamples) {
        throw DomainError("energy balance needs at least " + std::to_string(kMinBalanceSamples) +
                          " trajectories, got " + std::to_string(trajs.size()));
    }
    const auto m = static_cast<double>(trajs.size());
    const double b = params.damping;
    const double dn = kDimension * params.n_particles;
    std::vector<double> diffs;
    diffs.reserve(trajs.size());
    EnergyBalanceCheck out;
    for (const auto& traj : trajs) {
        if (traj.size() != schedule.size()) throw DomainError("trajectory length does not match schedule");
        double integral = traj.hamiltonians.front();
        for (std::size_t n = 1; n < traj.size(); ++n) {
            const double dt = traj.times[n] - traj.times[n - 1];
            const auto& prev = traj.states[n - 1].velocities;
            const auto& next = traj.states[n].velocities;
            double speed = 0.0;
            for (std::size_t i = 0; i < next.size(); ++i) {
                speed += quadrature == BalanceQuadrature::riemann ? norm_squared(next[i])
                                                                  : 0.5 * dot(next[i], next[i] + prev[i]);
            }
            const double heat = quadrature == BalanceQuadrature::riemann ? 1.0 : 1.0 / (1.0 + b * dt);
            integral += b * dt * (dn * schedule[n] * heat - speed);
        }
        out.direct_mean += traj.hamiltonians.back();
        out.integral_mean += integral;
        diffs.push_back(traj.hamiltonians.back() - integral);
    }
    out.direct_mean /= m;
    out.integral_mean /= m;
    for (double d : diffs) out.gap += d;
    out.gap /= m;
    double ss = 0.0;
    for (double d : diffs) ss += (d - out.gap) * (d - out.gap);
    out.std_error = std::sqrt(ss / (m - 1.0) / m);
    // Rounding allowance for ensembles without spread.
    const double rounding = 1e-10 * (1.0 + std::abs(out.direct_mean));
    out.pass = std::abs(out.gap) <= 3.0 * out.std_error + rounding;
    return out;
}

}  // namespace assembly

#endif
