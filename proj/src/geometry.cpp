#include "tafall/geometry.hpp"

#include <algorithm>
#include <limits>

namespace tafall {

std::vector<Vec2> convex_hull(std::vector<Vec2> points, double collinear_tol) {
    const size_t n = points.size();
    if (n <= 1) return points;

    std::sort(points.begin(), points.end(), [](const Vec2& a, const Vec2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    points.erase(std::unique(points.begin(), points.end()), points.end());
    if (points.size() <= 2) return points;

    std::vector<Vec2> hull(2 * points.size());
    size_t k = 0;

    // Lower hull, then upper hull; non-left turns (including collinear within
    // tolerance) are popped so the result is strictly convex.
    for (size_t i = 0; i < points.size(); ++i) {
        while (k >= 2 && cross2(hull[k - 2], hull[k - 1], points[i]) <= collinear_tol) --k;
        hull[k++] = points[i];
    }
    for (size_t i = points.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross2(hull[k - 2], hull[k - 1], points[i]) <= collinear_tol) --k;
        hull[k++] = points[i];
    }
    hull.resize(k - 1);  // last point repeats the first
    return hull;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.dot(ab);
    if (len2 == 0.0) return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + ab * t)).norm();
}

bool point_in_convex_polygon(const Vec2& p, std::span<const Vec2> ccw, double boundary_tol) {
    const size_t n = ccw.size();
    if (n == 0) return false;
    if (n == 1) return (p - ccw[0]).norm() <= boundary_tol;
    for (size_t i = 0; i < n; ++i) {
        const Vec2& a = ccw[i];
        const Vec2& b = ccw[(i + 1) % n];
        if (cross2(a, b, p) < -boundary_tol) return false;
    }
    return true;
}

double polygon_boundary_distance(const Vec2& p, std::span<const Vec2> vertices) {
    const size_t n = vertices.size();
    if (n == 0) return std::numeric_limits<double>::quiet_NaN();
    if (n == 1) return (p - vertices[0]).norm();
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < n; ++i) {
        best = std::min(best, point_segment_distance(p, vertices[i], vertices[(i + 1) % n]));
    }
    return best;
}

}  // namespace tafall
