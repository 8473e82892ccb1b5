#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace lagtess {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3() = default;
    Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm2() const { return dot(*this); }
    double norm() const { return std::sqrt(norm2()); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

// Rectangular box W = [0,a] x [0,b] x [0,c], wrapped on a 3D torus.
struct Window {
    double a = 1.0, b = 1.0, c = 1.0;

    Window() = default;
    Window(double a_, double b_, double c_) : a(a_), b(b_), c(c_) {
        if (!(a > 0.0 && b > 0.0 && c > 0.0))
            throw std::invalid_argument("window dimensions must be positive");
    }

    double volume() const { return a * b * c; }
    double minSide() const { return std::min(a, std::min(b, c)); }
    double halfDiagonal() const { return 0.5 * std::sqrt(a * a + b * b + c * c); }
    std::array<double, 3> sides() const { return {a, b, c}; }

    // Map a point into [0,a) x [0,b) x [0,c).
    Vec3 wrap(const Vec3& p) const {
        auto w1 = [](double v, double len) {
            double r = std::fmod(v, len);
            if (r < 0.0) r += len;
            if (r >= len) r = 0.0;  // fmod can round up to len
            return r;
        };
        return {w1(p.x, a), w1(p.y, b), w1(p.z, c)};
    }

    // Minimal-image displacement q - p, components in [-L/2, L/2).
    Vec3 delta(const Vec3& p, const Vec3& q) const {
        auto d1 = [](double d, double len) {
            d = std::fmod(d, len);
            if (d < -0.5 * len) d += len;
            else if (d >= 0.5 * len) d -= len;
            return d;
        };
        return {d1(q.x - p.x, a), d1(q.y - p.y, b), d1(q.z - p.z, c)};
    }

    double dist2(const Vec3& p, const Vec3& q) const { return delta(p, q).norm2(); }
    double dist(const Vec3& p, const Vec3& q) const { return std::sqrt(dist2(p, q)); }

    bool contains(const Vec3& p) const {
        return p.x >= 0.0 && p.x < a && p.y >= 0.0 && p.y < b && p.z >= 0.0 && p.z < c;
    }
};

}  // namespace lagtess
