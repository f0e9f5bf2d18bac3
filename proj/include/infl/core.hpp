#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace infl {

/** @brief Error raised for invalid inputs and guard violations. */
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class FieldType { EM, GR };
enum class Label { A, B };

inline std::string_view to_string(FieldType f) { return f == FieldType::EM ? "EM" : "GR"; }
inline std::string_view to_string(Label l) { return l == Label::A ? "A" : "B"; }

struct Vec3 {
    double x = 0, y = 0, z = 0;

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }
constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline bool finite(const Vec3& a) { return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z); }

struct SpacetimePoint {
    double t = 0;
    Vec3 x;
};

using FourVector = std::array<double, 4>;
using Tensor4 = std::array<std::array<double, 4>, 4>;

/** Minkowski metric, signature (-,+,+,+). */
constexpr double eta(int mu, int nu) { return mu != nu ? 0.0 : (mu == 0 ? -1.0 : 1.0); }

constexpr FourVector four_velocity(const Vec3& v) { return {1.0, v.x, v.y, v.z}; }

inline Tensor4 outer(const FourVector& a, const FourVector& b) {
    Tensor4 t{};
    for (int m = 0; m < 4; ++m)
        for (int n = 0; n < 4; ++n) t[m][n] = a[m] * b[n];
    return t;
}

}  // namespace infl
