#ifndef ASSEMBLY_SCHEDULE_HPP
#define ASSEMBLY_SCHEDULE_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "integrators.hpp"

namespace assembly {

/// Temperature control u(t_0..t_{N_T}) on a uniform grid.
struct TemperatureSchedule {
    std::vector<double> values;
    double u_min = 0.0;
    double u_max = 0.0;
    bool monotone_nonincreasing = false;

    /// True when every value lies in [u_min, u_max] and, if required, the
    /// sequence never increases. Exact comparison.
    bool is_feasible() const {
        for (std::size_t n = 0; n < values.size(); ++n) {
            if (!(values[n] >= u_min && values[n] <= u_max)) return false;
            if (monotone_nonincreasing && n > 0 && values[n] > values[n - 1]) return false;
        }
        return true;
    }

    bool operator==(const TemperatureSchedule&) const = default;
};

inline void check_bounds(double u_min, double u_max) {
    if (!std::isfinite(u_min) || !std::isfinite(u_max)) throw ConfigError("temperature bounds must be finite");
    if (u_min > u_max) throw ConfigError("temperature bounds: u_min > u_max");
}

/// Antitonic (non-increasing) least-squares fit by pool-adjacent-violators.
inline std::vector<double> antitonic_regression(std::span<const double> z) {
    struct Block {
        double sum;
        std::size_t count;
        double mean() const { return sum / static_cast<double>(count); }
    };
    std::vector<Block> blocks;
    blocks.reserve(z.size());
    for (double value : z) {
        blocks.push_back({value, 1});
        while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() < blocks.back().mean()) {
            const Block last = blocks.back();
            blocks.pop_back();
            blocks.back().sum += last.sum;
            blocks.back().count += last.count;
        }
    }
    std::vector<double> out;
    out.reserve(z.size());
    for (const auto& b : blocks) out.insert(out.end(), b.count, b.mean());
    return out;
}

/// Euclidean projection of z onto {u_min <= u <= u_max} intersected, when
/// `monotone` is set, with the non-increasing sequences. Clamping the
/// antitonic fit is exact because the bounds are uniform.
inline std::vector<double> project_values(std::span<const double> z, double u_min, double u_max, bool monotone) {
    check_bounds(u_min, u_max);
    for (double value : z) {
        if (!std::isfinite(value)) throw DomainError("project_feasible: non-finite entry");
    }
    std::vector<double> out = monotone ? antitonic_regression(z) : std::vector<double>(z.begin(), z.end());
    for (auto& value : out) value = std::clamp(value, u_min, u_max);
    return out;
}

inline TemperatureSchedule project_feasible(std::span<const double> raw, double u_min, double u_max, bool monotone) {
    return {project_values(raw, u_min, u_max, monotone), u_min, u_max, monotone};
}

/// Rate constant for which u(T) = u_env + 0.01 (u0 - u_env).
inline double default_cooling_rate(double horizon) { return std::log(100.0) / horizon; }

/// Newton's-law-of-cooling curve u(t) = u_env + (u0 - u_env) exp(-k t).
inline TemperatureSchedule newton_cooling_schedule(double u0, double u_env, double rate, const TimeGrid& grid) {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("cooling rate must be positive");
    if (!(u0 >= u_env) || !(u_env >= 0.0) || !std::isfinite(u0)) throw ConfigError("cooling requires u0 >= u_env >= 0");
    TemperatureSchedule s;
    s.u_min = u_env;
    s.u_max = u0;
    s.monotone_nonincreasing = true;
    s.values.resize(grid.n_points());
    for (std::size_t n = 0; n < s.values.size(); ++n) {
        s.values[n] = u_env + (u0 - u_env) * std::exp(-rate * grid.time(n));
    }
    return s;
}

inline TemperatureSchedule constant_schedule(double u, const TimeGrid& grid) {
    if (!(u >= 0.0) || !std::isfinite(u)) throw ConfigError("constant temperature must be non-negative");
    return {std::vector<double>(grid.n_points(), u), u, u, true};
}

}  // namespace assembly

#endif
