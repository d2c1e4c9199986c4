#ifndef ASSEMBLY_POTENTIAL_HPP
#define ASSEMBLY_POTENTIAL_HPP

// Lennard-Jones pair interaction, additive total forces and the system
// Hamiltonian. Particles carry unit mass.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "vec3.hpp"

namespace assembly {

/// Spatial dimension of the particle system.
inline constexpr int kDimension = 3;

/// Distances below this fraction of r_m count as coincident particles.
inline constexpr double kCoincidenceFraction = 1e-9;

struct SystemParams {
    int n_particles = 1;
    double damping = 1.0;   // B
    double lj_depth = 1.0;  // epsilon
    double lj_rmin = 1.0;   // r_m, location of the potential minimum
    /// When false, total forces and the potential part of the Hamiltonian
    /// vanish. Used to isolate the thermal terms.
    bool interactions = true;

    void validate() const {
        if (n_particles < 1) throw ConfigError("n_particles must be >= 1");
        if (!(damping > 0.0) || !std::isfinite(damping)) throw ConfigError("damping must be positive and finite");
        if (!(lj_depth > 0.0) || !std::isfinite(lj_depth)) throw ConfigError("lj_depth must be positive and finite");
        if (!(lj_rmin > 0.0) || !std::isfinite(lj_rmin)) throw ConfigError("lj_rmin must be positive and finite");
    }

    bool operator==(const SystemParams&) const = default;
};

struct SystemState {
    std::vector<Vec3> positions;
    std::vector<Vec3> velocities;

    std::size_t size() const { return positions.size(); }

    static SystemState at_rest(std::vector<Vec3> positions) {
        SystemState s;
        s.velocities.assign(positions.size(), Vec3{0.0, 0.0, 0.0});
        s.positions = std::move(positions);
        return s;
    }

    bool operator==(const SystemState&) const = default;
};

/// Throws unless the state has n_particles finite positions and velocities.
inline void validate_state(const SystemState& state, const SystemParams& params) {
    const auto n = static_cast<std::size_t>(params.n_particles);
    if (state.positions.size() != n || state.velocities.size() != n) {
        throw DomainError("state has " + std::to_string(state.positions.size()) + " positions and " +
                          std::to_string(state.velocities.size()) + " velocities, expected " + std::to_string(n));
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!is_finite(state.positions[i]) || !is_finite(state.velocities[i])) {
            throw DomainError("non-finite state entry for particle " + std::to_string(i));
        }
    }
}

/// Pair potential epsilon * ((r_m/r)^12 - 2 (r_m/r)^6).
inline double lj_potential(double r, const SystemParams& params) {
    if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("lj_potential: distance must be positive and finite");
    const double q = params.lj_rmin / r;
    const double q6 = q * q * q * q * q * q;
    return params.lj_depth * (q6 * q6 - 2.0 * q6);
}

namespace detail {

inline void check_separation(double r2, const SystemParams& params, std::size_t i, std::size_t j) {
    const double floor = kCoincidenceFraction * params.lj_rmin;
    if (!(r2 >= floor * floor)) {
        throw DomainError("coincident particles " + std::to_string(i) + " and " + std::to_string(j) +
                          " (distance " + std::to_string(std::sqrt(r2)) + ")");
    }
}

/// Force magnitude coefficient c(r) with f_ij = c(r) (x_j - x_i):
/// c = 12 eps (r_m^6 / r^8 - r_m^12 / r^14).
inline double force_coefficient(double r2, const SystemParams& params) {
    const double s2 = params.lj_rmin * params.lj_rmin / r2;
    const double s6 = s2 * s2 * s2;
    return 12.0 * params.lj_depth * (s6 - s6 * s6) / r2;
}

/// c'(r) / r, used by the force Jacobian:
/// c'(r) = 12 eps (-8 r_m^6 / r^9 + 14 r_m^12 / r^15).
inline double force_coefficient_slope_over_r(double r2, const SystemParams& params) {
    const double s2 = params.lj_rmin * params.lj_rmin / r2;
    const double s6 = s2 * s2 * s2;
    return 12.0 * params.lj_depth * (14.0 * s6 * s6 - 8.0 * s6) / (r2 * r2);
}

}  // namespace detail

/// Force on the particle at x_i exerted by the particle at x_j.
inline Vec3 pair_force(const Vec3& x_i, const Vec3& x_j, const SystemParams& params) {
    const Vec3 d = x_j - x_i;
    const double r2 = norm_squared(d);
    const double floor = kCoincidenceFraction * params.lj_rmin;
    if (!std::isfinite(r2)) throw DomainError("pair_force: non-finite positions");
    if (!(r2 >= floor * floor)) throw DomainError("pair_force: coincident positions");
    return detail::force_coefficient(r2, params) * d;
}

/// Total force on every particle. Entry i accumulates pair forces over
/// ascending j, so the result does not depend on evaluation scheduling.
inline void total_forces_into(std::span<const Vec3> positions, const SystemParams& params, std::span<Vec3> out) {
    const std::size_t n = positions.size();
    for (std::size_t i = 0; i < n; ++i) {
        Vec3 acc{0.0, 0.0, 0.0};
        if (params.interactions) {
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const Vec3 d = positions[j] - positions[i];
                const double r2 = norm_squared(d);
                detail::check_separation(r2, params, std::min(i, j), std::max(i, j));
                acc += detail::force_coefficient(r2, params) * d;
            }
        }
        out[i] = acc;
    }
}

inline std::vector<Vec3> total_forces(const SystemState& state, const SystemParams& params) {
    validate_state(state, params);
    std::vector<Vec3> out(state.size());
    total_forces_into(state.positions, params, out);
    return out;
}

/// Product of the force Jacobian dF/dX (symmetric, minus the potential
/// Hessian) with a per-particle vector field w.
inline void force_jacobian_product_into(std::span<const Vec3> positions, std::span<const Vec3> w,
                                        const SystemParams& params, std::span<Vec3> out) {
    const std::size_t n = positions.size();
    for (std::size_t i = 0; i < n; ++i) {
        Vec3 acc{0.0, 0.0, 0.0};
        if (params.interactions) {
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const Vec3 d = positions[j] - positions[i];
                const double r2 = norm_squared(d);
                detail::check_separation(r2, params, std::min(i, j), std::max(i, j));
                const Vec3 dw = w[j] - w[i];
                acc += detail::force_coefficient(r2, params) * dw;
                acc += (detail::force_coefficient_slope_over_r(r2, params) * dot(d, dw)) * d;
            }
        }
        out[i] = acc;
    }
}

inline double kinetic_energy(std::span<const Vec3> velocities) {
    double sum = 0.0;
    for (const auto& v : velocities) sum += norm_squared(v);
    return 0.5 * sum;
}

inline double potential_energy(std::span<const Vec3> positions, const SystemParams& params) {
    if (!params.interactions) return 0.0;
    const std::size_t n = positions.size();
    const double rm2 = params.lj_rmin * params.lj_rmin;
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double r2 = norm_squared(positions[j] - positions[i]);
            detail::check_separation(r2, params, i, j);
            const double s2 = rm2 / r2;
            const double s6 = s2 * s2 * s2;
            sum += params.lj_depth * (s6 * s6 - 2.0 * s6);
        }
    }
    return sum;
}

/// Kinetic plus pairwise Lennard-Jones energy.
inline double hamiltonian(const SystemState& state, const SystemParams& params) {
    validate_state(state, params);
    return kinetic_energy(state.velocities) + potential_energy(state.positions, params);
}

/// Smallest pairwise distance; +infinity for a single particle.
inline double min_pair_distance(std::span<const Vec3> positions) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < positions.size(); ++i) {
        for (std::size_t j = i + 1; j < positions.size(); ++j) {
            best = std::min(best, norm_squared(positions[j] - positions[i]));
        }
    }
    return std::sqrt(best);
}

/// Lower bound on every pair distance of a noise-free trajectory whose
/// initial energy is h0. Any pair with potential above
/// h0 + eps * N(N-1)/2 would push H above its initial value, so the bound
/// is the smaller root r of eps((r_m/r)^12 - 2(r_m/r)^6) = h0 + eps N(N-1)/2,
/// solved as a quadratic in s = (r_m/r)^6.
inline double pairwise_distance_floor(double h0, const SystemParams& params) {
    if (!std::isfinite(h0)) throw DomainError("pairwise_distance_floor: initial energy must be finite");
    const double n = params.n_particles;
    const double budget = (h0 + params.lj_depth * n * (n - 1.0) / 2.0) / params.lj_depth;
    // s^2 - 2 s - budget = 0; budget >= -1 for any physical state.
    const double s = 1.0 + std::sqrt(std::max(0.0, 1.0 + budget));
    return params.lj_rmin / std::pow(s, 1.0 / 6.0);
}

}  // namespace assembly

#endif
