#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "vcat/errors.hpp"
#include "vcat/geometry.hpp"

namespace vcat {

enum class ScenarioId { nsjcr, sjrt, sjlt };

inline std::string to_string(ScenarioId id) {
    switch (id) {
        case ScenarioId::nsjcr: return "nsjcr";
        case ScenarioId::sjrt: return "sjrt";
        case ScenarioId::sjlt: return "sjlt";
    }
    return "nsjcr";
}

inline ScenarioId scenario_from_string(const std::string& s) {
    if (s == "nsjcr" || s == "NSJCR") return ScenarioId::nsjcr;
    if (s == "sjrt" || s == "SJRT") return ScenarioId::sjrt;
    if (s == "sjlt" || s == "SJLT") return ScenarioId::sjlt;
    throw ConfigError("unknown scenario id: " + s);
}

struct VehicleState {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0; // radians, (-pi, pi]
    double speed = 0.0;   // m/s
    double length = 4.5;
    double width = 2.0;

    Vec2 pos() const { return {x, y}; }
    Vec2 velocity() const { return {speed * std::cos(heading), speed * std::sin(heading)}; }
    Obb footprint() const { return Obb{{x, y}, heading, length, width}; }
};

struct AabbRegion {
    double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;

    bool contains(const Vec2& p) const {
        return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
    }
    Vec2 center() const { return {0.5 * (xmin + xmax), 0.5 * (ymin + ymax)}; }
};

// Declarative lane geometry; sampled into polylines for distance queries.
struct LaneSegment {
    enum class Kind { straight, arc } kind = Kind::straight;
    Vec2 a, b;          // straight endpoints
    Vec2 center;        // arc center
    double radius = 0.0;
    double ang0 = 0.0, ang1 = 0.0; // arc sweep, signed direction ang0 -> ang1
};

namespace detail {

inline void append_line(std::vector<Vec2>& pts, Vec2 a, Vec2 b, double step) {
    const double len = (b - a).norm();
    const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
    const bool skip_first = !pts.empty();
    for (int i = skip_first ? 1 : 0; i <= n; ++i)
        pts.push_back(a + (b - a) * (static_cast<double>(i) / n));
}

inline void append_arc(std::vector<Vec2>& pts, Vec2 c, double r, double a0, double a1,
                       double step) {
    const double sweep = a1 - a0;
    const int n = std::max(1, static_cast<int>(std::ceil(std::abs(sweep) * r / step)));
    const bool skip_first = !pts.empty();
    for (int i = skip_first ? 1 : 0; i <= n; ++i) {
        const double a = a0 + sweep * (static_cast<double>(i) / n);
        pts.push_back({c.x + r * std::cos(a), c.y + r * std::sin(a)});
    }
}

} // namespace detail

// Two perpendicular two-lane roads crossing at the origin. Lane width 4 m,
// right-hand traffic, lane centerlines at +-2 m. The victim always drives
// north on x = +2 toward a goal box past the junction; the attacker's
// approach differs per scenario:
//   nsjcr  eastbound through traffic on y = -2, crossing the victim's lane
//   sjrt   westbound on y = +2, right turn (R = 6 m) merging into the
//          victim's lane at (2, 8)
//   sjlt   southbound on x = -2, left turn (R = 10 m) crossing the victim's
//          lane at (2, 0), leaving eastbound on y = -2
struct ScenarioSpec {
    ScenarioId id = ScenarioId::nsjcr;

    std::vector<LaneSegment> lane_geometry;
    Route victim_route;
    Route attacker_route;
    VehicleState victim_spawn;
    AabbRegion attacker_spawn_region;
    double attacker_spawn_speed_min = 4.0;
    double attacker_spawn_speed_max = 10.0;
    AabbRegion goal_region;
    int episode_horizon = 160;

    // dynamics constants
    double dt = 0.1;
    double wheelbase = 2.7;
    double a_max = 2.0;       // m/s^2 at |accel_cmd| = 1
    double steer_max = 0.5;   // rad at |steer_cmd| = 1
    double v_max = 15.0;
    double vehicle_length = 4.5;
    double vehicle_width = 2.0;

    // road corridor: on-road while within lane_half_width + offroad_margin
    // of some lane centerline
    double lane_half_width = 2.0;
    double offroad_margin = 2.0;

    // observation normalization bounds
    double pos_scale = 50.0;
    double rel_scale = 100.0;
    double goal_dist_scale = 100.0;

    std::vector<Route> lane_polylines; // sampled from lane_geometry

    static ScenarioSpec make(ScenarioId id);

    // Distance from p to the nearest lane centerline.
    double corridor_distance(const Vec2& p) const {
        double best = 1e300;
        for (const Route& r : lane_polylines) best = std::min(best, r.project(p).distance);
        return best;
    }

    bool off_road(const Vec2& p) const {
        return corridor_distance(p) > lane_half_width + offroad_margin;
    }

    void validate() const {
        if (goal_region.contains(victim_spawn.pos()))
            throw ConfigError("victim spawn inside goal region");
        const Obb vf = victim_spawn.footprint();
        const Obb sr{attacker_spawn_region.center(), 0.0,
                     attacker_spawn_region.xmax - attacker_spawn_region.xmin,
                     attacker_spawn_region.ymax - attacker_spawn_region.ymin};
        if (obb_overlap(vf, sr))
            throw ConfigError("attacker spawn region overlaps victim spawn");
        if (episode_horizon <= 0) throw ConfigError("episode horizon must be positive");
        if (dt <= 0.0 || wheelbase <= 0.0 || a_max <= 0.0 || steer_max <= 0.0 || v_max <= 0.0)
            throw ConfigError("dynamics constants must be positive");
        if (attacker_spawn_speed_min < 0.0 ||
            attacker_spawn_speed_max < attacker_spawn_speed_min)
            throw ConfigError("attacker spawn speed range is invalid");
        if (victim_route.points.size() < 2 || attacker_route.points.size() < 2)
            throw ConfigError("routes must have at least two waypoints");
    }
};

namespace detail {

inline Route sample_lane(const std::vector<LaneSegment>& segs, double step) {
    Route r;
    for (const LaneSegment& s : segs) {
        if (s.kind == LaneSegment::Kind::straight)
            append_line(r.points, s.a, s.b, step);
        else
            append_arc(r.points, s.center, s.radius, s.ang0, s.ang1, step);
    }
    r.finalize();
    return r;
}

inline Route make_route(const std::vector<LaneSegment>& segs, double cruise, double turn,
                        double step) {
    Route r;
    r.points.clear();
    for (const LaneSegment& s : segs) {
        const std::size_t before = r.points.size();
        if (s.kind == LaneSegment::Kind::straight)
            append_line(r.points, s.a, s.b, step);
        else
            append_arc(r.points, s.center, s.radius, s.ang0, s.ang1, step);
        const double hint = s.kind == LaneSegment::Kind::straight ? cruise : turn;
        r.speed_hint.resize(r.points.size(), hint);
        if (before == 0 && !r.points.empty()) r.speed_hint[0] = hint;
    }
    r.finalize();
    return r;
}

} // namespace detail

inline ScenarioSpec ScenarioSpec::make(ScenarioId id) {
    constexpr double kRoad = 100.0;  // road half extent; route traffic cannot run out of
                                     // lane within the episode horizon
    constexpr double kStep = 0.25;   // polyline sampling
    constexpr double kCruise = 8.0;
    constexpr double kTurn = 5.0;

    ScenarioSpec s;
    s.id = id;

    const LaneSegment north{LaneSegment::Kind::straight, {2, -kRoad}, {2, kRoad}};
    const LaneSegment south{LaneSegment::Kind::straight, {-2, kRoad}, {-2, -kRoad}};
    const LaneSegment east{LaneSegment::Kind::straight, {-kRoad, -2}, {kRoad, -2}};
    const LaneSegment west{LaneSegment::Kind::straight, {kRoad, 2}, {-kRoad, 2}};
    s.lane_geometry = {north, south, east, west};

    s.victim_route = detail::make_route({north}, kCruise, kTurn, kStep);
    s.victim_spawn = VehicleState{2.0, -30.0, M_PI / 2.0, 6.0};
    s.goal_region = AabbRegion{0.0, 4.0, 25.0, 31.0};

    switch (id) {
        case ScenarioId::nsjcr: {
            s.attacker_route = detail::make_route({east}, kCruise, kTurn, kStep);
            s.attacker_spawn_region = AabbRegion{-34.0, -22.0, -3.0, -1.0};
            break;
        }
        case ScenarioId::sjrt: {
            const LaneSegment in{LaneSegment::Kind::straight, {kRoad, 2}, {8, 2}};
            LaneSegment arc;
            arc.kind = LaneSegment::Kind::arc;
            arc.center = {8, 8};
            arc.radius = 6.0;
            arc.ang0 = -M_PI / 2.0;
            arc.ang1 = -M_PI;
            const LaneSegment out{LaneSegment::Kind::straight, {2, 8}, {2, kRoad}};
            s.attacker_route = detail::make_route({in, arc, out}, kCruise, kTurn, kStep);
            s.attacker_spawn_region = AabbRegion{22.0, 34.0, 1.0, 3.0};
            s.lane_geometry.push_back(arc);
            break;
        }
        case ScenarioId::sjlt: {
            const LaneSegment in{LaneSegment::Kind::straight, {-2, kRoad}, {-2, 8}};
            LaneSegment arc;
            arc.kind = LaneSegment::Kind::arc;
            arc.center = {8, 8};
            arc.radius = 10.0;
            arc.ang0 = M_PI;
            arc.ang1 = 1.5 * M_PI;
            const LaneSegment out{LaneSegment::Kind::straight, {8, -2}, {kRoad, -2}};
            s.attacker_route = detail::make_route({in, arc, out}, kCruise, kTurn, kStep);
            s.attacker_spawn_region = AabbRegion{-3.0, -1.0, 22.0, 34.0};
            s.lane_geometry.push_back(arc);
            break;
        }
    }

    s.lane_polylines.clear();
    for (const LaneSegment& seg : s.lane_geometry)
        s.lane_polylines.push_back(detail::sample_lane({seg}, kStep));

    s.validate();
    return s;
}

} // namespace vcat
