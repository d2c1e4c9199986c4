#ifndef ASSEMBLY_VEC3_HPP
#define ASSEMBLY_VEC3_HPP

#include <array>
#include <cmath>

namespace assembly {

using Vec3 = std::array<double, 3>;

inline constexpr Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline constexpr Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline constexpr Vec3 operator-(const Vec3& a) { return {-a[0], -a[1], -a[2]}; }
inline constexpr Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline constexpr Vec3 operator*(const Vec3& a, double s) { return s * a; }

inline constexpr Vec3& operator+=(Vec3& a, const Vec3& b) {
    a[0] += b[0];
    a[1] += b[1];
    a[2] += b[2];
    return a;
}

inline constexpr double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline constexpr double norm_squared(const Vec3& a) { return dot(a, a); }
inline double norm(const Vec3& a) { return std::sqrt(norm_squared(a)); }

inline bool is_finite(const Vec3& a) {
    return std::isfinite(a[0]) && std::isfinite(a[1]) && std::isfinite(a[2]);
}

}  // namespace assembly

#endif
