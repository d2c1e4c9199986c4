#ifndef ASSEMBLY_RANDOM_HPP
#define ASSEMBLY_RANDOM_HPP

// Seed derivation and pre-drawn Wiener increments.
//
// Every random quantity comes from its own substream, a std::mt19937_64
// seeded with derive_seed(seed, tag, a, b). Noise for sample path k and
// particle i uses (kNoiseStream, k, i); the initial state of sample k uses
// (kInitialStateStream, k, 0). Draws therefore do not depend on evaluation
// order or on how many paths are generated.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "vec3.hpp"

namespace assembly {

inline constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;         // "noise"
inline constexpr std::uint64_t kInitialStateStream = 0x696e6974ULL;    // "init"

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t a, std::uint64_t b) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ tag);
    h = splitmix64(h ^ a);
    return splitmix64(h ^ (b + 0x632be59bd9b4e019ULL));
}

/// Read-only view of the Wiener increments of one sample path, laid out
/// step-major: increment(n, i) is the 3-vector for step n, particle i.
/// An empty view stands for a zero-noise path.
class NoisePath {
public:
    NoisePath() = default;
    NoisePath(std::span<const Vec3> data, std::size_t n_steps, std::size_t n_particles)
        : data_(data), n_steps_(n_steps), n_particles_(n_particles) {
        if (data.size() != n_steps * n_particles) throw DomainError("noise path has wrong size");
    }

    bool is_zero() const { return data_.empty(); }
    std::size_t n_steps() const { return n_steps_; }
    std::size_t n_particles() const { return n_particles_; }

    /// Increments for step n as a contiguous block of n_particles 3-vectors.
    std::span<const Vec3> step(std::size_t n) const { return data_.subspan(n * n_particles_, n_particles_); }

private:
    std::span<const Vec3> data_;
    std::size_t n_steps_ = 0;
    std::size_t n_particles_ = 0;
};

/// Draws the increments of path k into `out` (n_steps * n_particles entries,
/// step-major).
inline void draw_noise_path(std::uint64_t seed, std::size_t k, std::size_t n_steps, std::size_t n_particles,
                            double dt, std::span<Vec3> out) {
    if (!(dt > 0.0) && n_steps > 0) throw DomainError("noise: dt must be positive");
    std::normal_distribution<double> gauss(0.0, std::sqrt(dt));
    for (std::size_t i = 0; i < n_particles; ++i) {
        std::mt19937_64 engine(derive_seed(seed, kNoiseStream, k, i));
        for (std::size_t n = 0; n < n_steps; ++n) {
            Vec3& slot = out[n * n_particles + i];
            slot[0] = gauss(engine);
            slot[1] = gauss(engine);
            slot[2] = gauss(engine);
        }
    }
}

/// M x N_T x N x 3 Wiener increments, each N(0, dt).
class NoiseRealization {
public:
    NoiseRealization() = default;

    static NoiseRealization generate(std::uint64_t seed, std::size_t n_paths, std::size_t n_steps,
                                     std::size_t n_particles, double dt) {
        NoiseRealization r;
        r.seed_ = seed;
        r.n_paths_ = n_paths;
        r.n_steps_ = n_steps;
        r.n_particles_ = n_particles;
        r.dt_ = dt;
        r.increments_.resize(n_paths * r.path_stride());
        for (std::size_t k = 0; k < n_paths; ++k) {
            draw_noise_path(seed, k, n_steps, n_particles, dt,
                            std::span<Vec3>(r.increments_).subspan(k * r.path_stride(), r.path_stride()));
        }
        return r;
    }

    /// All-zero increments with the given shape.
    static NoiseRealization zeros(std::size_t n_paths, std::size_t n_steps, std::size_t n_particles, double dt) {
        NoiseRealization r;
        r.n_paths_ = n_paths;
        r.n_steps_ = n_steps;
        r.n_particles_ = n_particles;
        r.dt_ = dt;
        r.increments_.assign(n_paths * r.path_stride(), Vec3{0.0, 0.0, 0.0});
        return r;
    }

    NoisePath path(std::size_t k) const {
        if (k >= n_paths_) throw DomainError("noise path index " + std::to_string(k) + " out of range");
        return NoisePath(std::span<const Vec3>(increments_).subspan(k * path_stride(), path_stride()), n_steps_,
                         n_particles_);
    }

    std::span<const Vec3> increments() const { return increments_; }
    std::span<Vec3> mutable_increments() { return increments_; }
    std::uint64_t seed() const { return seed_; }
    std::size_t n_paths() const { return n_paths_; }
    std::size_t n_steps() const { return n_steps_; }
    std::size_t n_particles() const { return n_particles_; }
    double dt() const { return dt_; }

private:
    std::size_t path_stride() const { return n_steps_ * n_particles_; }

    std::vector<Vec3> increments_;
    std::uint64_t seed_ = 0;
    std::size_t n_paths_ = 0;
    std::size_t n_steps_ = 0;
    std::size_t n_particles_ = 0;
    double dt_ = 0.0;
};

}  // namespace assembly

#endif
