#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace tafall {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const Vec2& o) const = default;

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::sqrt(x * x + y * y); }
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    bool operator==(const Vec3& o) const = default;

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const {
        const double n = norm();
        return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{};
    }
    Vec2 xy() const { return {x, y}; }
};

// Row-major 3x3 matrix; enough linear algebra for camera orientation.
struct Mat3 {
    double m[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};

    static Mat3 from_rows(const Vec3& r0, const Vec3& r1, const Vec3& r2) {
        Mat3 out;
        out.m[0][0] = r0.x; out.m[0][1] = r0.y; out.m[0][2] = r0.z;
        out.m[1][0] = r1.x; out.m[1][1] = r1.y; out.m[1][2] = r1.z;
        out.m[2][0] = r2.x; out.m[2][1] = r2.y; out.m[2][2] = r2.z;
        return out;
    }
    static Mat3 rotation_z(double angle_rad) {
        const double c = std::cos(angle_rad), s = std::sin(angle_rad);
        return from_rows({c, -s, 0}, {s, c, 0}, {0, 0, 1});
    }
    // Rodrigues rotation about a unit axis.
    static Mat3 rotation_axis(const Vec3& axis, double angle_rad) {
        const double c = std::cos(angle_rad), s = std::sin(angle_rad), t = 1.0 - c;
        const double x = axis.x, y = axis.y, z = axis.z;
        return from_rows({t * x * x + c, t * x * y - s * z, t * x * z + s * y},
                         {t * x * y + s * z, t * y * y + c, t * y * z - s * x},
                         {t * x * z - s * y, t * y * z + s * x, t * z * z + c});
    }

    Vec3 operator*(const Vec3& v) const {
        return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
                m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
                m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
    }
    Mat3 transposed() const {
        Mat3 out;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) out.m[r][c] = m[c][r];
        return out;
    }
};

// z-component of (a-o) x (b-o): positive for a counter-clockwise turn.
inline double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Andrew's monotone chain. Returns the hull in counter-clockwise order with
// strictly convex corners: points whose cross product falls within
// collinear_tol of zero are treated as collinear and dropped. Ties in the
// initial sort are broken lexicographically (x, then y).
std::vector<Vec2> convex_hull(std::vector<Vec2> points, double collinear_tol = 1e-12);

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);

// Boundary counts as inside. Vertices must be in CCW order.
bool point_in_convex_polygon(const Vec2& p, std::span<const Vec2> ccw_vertices,
                             double boundary_tol = 0.0);

// Min distance from p to the closed polyline a0-a1-...-an-a0.
double polygon_boundary_distance(const Vec2& p, std::span<const Vec2> vertices);

}  // namespace tafall
