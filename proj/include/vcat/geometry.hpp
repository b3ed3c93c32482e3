#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace vcat {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    double norm2() const { return x * x + y * y; }
};

// Wrap an angle into (-pi, pi].
inline double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * M_PI);
    if (a <= -M_PI) a += 2.0 * M_PI;
    if (a > M_PI) a -= 2.0 * M_PI;
    return a;
}

// Oriented rectangle given by center, heading and full extents.
struct Obb {
    Vec2 center;
    double heading = 0.0;
    double length = 0.0; // along heading
    double width = 0.0;  // across heading

    std::array<Vec2, 4> corners() const {
        const double c = std::cos(heading), s = std::sin(heading);
        const Vec2 ax{c, s};           // longitudinal
        const Vec2 ay{-s, c};          // lateral
        const Vec2 hl = ax * (0.5 * length);
        const Vec2 hw = ay * (0.5 * width);
        return {center + hl + hw, center + hl - hw, center - hl - hw, center - hl + hw};
    }

    // Closed-set membership: points on the boundary count as inside.
    bool contains(const Vec2& p) const {
        const double c = std::cos(heading), s = std::sin(heading);
        const Vec2 d = p - center;
        const double lx = d.x * c + d.y * s;
        const double ly = -d.x * s + d.y * c;
        return std::abs(lx) <= 0.5 * length && std::abs(ly) <= 0.5 * width;
    }

    // Signed depth of p below the nearest edge when inside (>= 0), negative
    // outside. Used to pick the deepest-penetration contact point.
    double penetration(const Vec2& p) const {
        const double c = std::cos(heading), s = std::sin(heading);
        const Vec2 d = p - center;
        const double lx = d.x * c + d.y * s;
        const double ly = -d.x * s + d.y * c;
        const double dx = 0.5 * length - std::abs(lx);
        const double dy = 0.5 * width - std::abs(ly);
        return std::min(dx, dy);
    }
};

// Separating-axis overlap test for two oriented rectangles. Touching edges
// count as overlap (closed sets).
inline bool obb_overlap(const Obb& a, const Obb& b) {
    const auto ca = a.corners();
    const auto cb = b.corners();
    const auto axes = [](const Obb& o) {
        const double c = std::cos(o.heading), s = std::sin(o.heading);
        return std::array<Vec2, 2>{Vec2{c, s}, Vec2{-s, c}};
    };
    const std::array<Vec2, 4> all{axes(a)[0], axes(a)[1], axes(b)[0], axes(b)[1]};
    for (const Vec2& ax : all) {
        double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
        for (const Vec2& p : ca) {
            const double t = p.dot(ax);
            amin = std::min(amin, t);
            amax = std::max(amax, t);
        }
        for (const Vec2& p : cb) {
            const double t = p.dot(ax);
            bmin = std::min(bmin, t);
            bmax = std::max(bmax, t);
        }
        if (amax < bmin || bmax < amin) return false;
    }
    return true;
}

// Contact point for an overlapping pair: the corner with the deepest
// penetration into the other rectangle. Falls back to the midpoint between
// centers when the overlap has no contained corner (cross-shaped overlap).
inline Vec2 obb_contact_point(const Obb& a, const Obb& b) {
    Vec2 best = (a.center + b.center) * 0.5;
    double best_depth = -1.0;
    for (const Vec2& p : a.corners()) {
        const double d = b.penetration(p);
        if (d >= 0.0 && d > best_depth) {
            best_depth = d;
            best = p;
        }
    }
    for (const Vec2& p : b.corners()) {
        const double d = a.penetration(p);
        if (d >= 0.0 && d > best_depth) {
            best_depth = d;
            best = p;
        }
    }
    return best;
}

// Piecewise-linear route with arclength bookkeeping and per-waypoint target
// speeds. Waypoints are expected to be densely sampled (sub-meter spacing).
struct Route {
    std::vector<Vec2> points;
    std::vector<double> speed_hint; // target speed at each waypoint
    std::vector<double> arclen;     // cumulative arclength, arclen[0] == 0

    void finalize() {
        arclen.assign(points.size(), 0.0);
        for (std::size_t i = 1; i < points.size(); ++i)
            arclen[i] = arclen[i - 1] + (points[i] - points[i - 1]).norm();
        if (speed_hint.size() != points.size()) speed_hint.assign(points.size(), 0.0);
    }

    double total_length() const { return arclen.empty() ? 0.0 : arclen.back(); }

    // Distance from p to the polyline and the arclength of the closest point.
    struct Projection {
        double distance = 0.0;
        double s = 0.0; // arclength coordinate of closest point
    };

    Projection project(const Vec2& p) const {
        Projection best{1e300, 0.0};
        for (std::size_t i = 0; i + 1 < points.size(); ++i) {
            const Vec2 a = points[i];
            const Vec2 d = points[i + 1] - a;
            const double len2 = d.norm2();
            double t = len2 > 0.0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
            const Vec2 q = a + d * t;
            const double dist = (p - q).norm();
            if (dist < best.distance) {
                best.distance = dist;
                best.s = arclen[i] + std::sqrt(len2) * t;
            }
        }
        return best;
    }

    // Point at a given arclength, clamped to the route ends.
    Vec2 at(double s) const {
        if (points.empty()) return {};
        if (s <= 0.0) return points.front();
        if (s >= total_length()) return points.back();
        const auto it = std::upper_bound(arclen.begin(), arclen.end(), s);
        const std::size_t i = static_cast<std::size_t>(it - arclen.begin()) - 1;
        const double seg = arclen[i + 1] - arclen[i];
        const double t = seg > 0.0 ? (s - arclen[i]) / seg : 0.0;
        return points[i] + (points[i + 1] - points[i]) * t;
    }

    // Tangent direction at arclength s, as an angle.
    double heading_at(double s) const {
        const double h = 0.05;
        const double lo = std::clamp(s - h, 0.0, total_length());
        const double hi = std::clamp(s + h, 0.0, total_length());
        const Vec2 d = at(hi) - at(lo);
        return std::atan2(d.y, d.x);
    }

    double speed_at(double s) const {
        if (points.empty()) return 0.0;
        if (s <= 0.0) return speed_hint.front();
        if (s >= total_length()) return speed_hint.back();
        const auto it = std::upper_bound(arclen.begin(), arclen.end(), s);
        const std::size_t i = static_cast<std::size_t>(it - arclen.begin()) - 1;
        return std::min(speed_hint[i], speed_hint[i + 1]);
    }
};

// Convex hull area (monotone chain + shoelace). Degenerate sets give 0.
inline double convex_hull_area(std::vector<Vec2> pts) {
    if (pts.size() < 3) return 0.0;
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    std::vector<Vec2> hull(2 * pts.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        while (k >= 2 && (hull[k - 1] - hull[k - 2]).cross(pts[i] - hull[k - 2]) <= 0) --k;
        hull[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = pts.size() - 1; i-- > 0;) {
        while (k >= lower && (hull[k - 1] - hull[k - 2]).cross(pts[i] - hull[k - 2]) <= 0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k > 1 ? k - 1 : 0);
    double area2 = 0.0;
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const Vec2& p = hull[i];
        const Vec2& q = hull[(i + 1) % hull.size()];
        area2 += p.cross(q);
    }
    return 0.5 * std::abs(area2);
}

} // namespace vcat
