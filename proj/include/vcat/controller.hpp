#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "vcat/geometry.hpp"
#include "vcat/scenario.hpp"
#include "vcat/sim.hpp"

namespace vcat {

// Pure-pursuit route tracking with proportional speed control. Lookahead
// grows with speed; gains keep the corner-cut on the turn arcs under the
// lane margin at any admissible speed.
struct PurePursuitConfig {
    double lookahead_min = 2.0;
    double lookahead_gain = 0.35; // seconds of travel
    double accel_gain = 0.5;      // (m/s^2) per (m/s) of speed error
};

inline Action pure_pursuit_action(const VehicleState& v, const Route& route,
                                  double target_speed, const ScenarioSpec& spec,
                                  PurePursuitConfig cfg = {}) {
    const auto proj = route.project(v.pos());
    const double ld = std::max(cfg.lookahead_min, cfg.lookahead_gain * v.speed);
    const Vec2 goal = route.at(proj.s + ld);

    const Vec2 d = goal - v.pos();
    const double eta = wrap_angle(std::atan2(d.y, d.x) - v.heading);
    const double dist = std::max(d.norm(), 1e-6);
    const double steer = std::atan2(2.0 * spec.wheelbase * std::sin(eta), dist);

    Action a;
    a.steer_cmd = std::clamp(steer / spec.steer_max, -1.0, 1.0);
    a.accel_cmd = std::clamp(cfg.accel_gain * (target_speed - v.speed) / spec.a_max, -1.0, 1.0);
    return a;
}

// ---------------------------------------------------------------------------
// Scripted junction driver: pure pursuit plus a kinematic yield decision at
// the point where the two routes cross. Used to generate demonstrations for
// the victim policy.

// Closest approach of the two routes, as arclengths along each.
struct ConflictGeometry {
    bool exists = false;
    double s_victim = 0.0;
    double s_attacker = 0.0;
};

inline ConflictGeometry find_conflict(const Route& victim_route, const Route& attacker_route) {
    ConflictGeometry g;
    double best = std::numeric_limits<double>::max();
    const double coarse = 1.0;
    for (double sv = 0.0; sv <= victim_route.total_length(); sv += coarse) {
        const Vec2 pv = victim_route.at(sv);
        for (double sa = 0.0; sa <= attacker_route.total_length(); sa += coarse) {
            const double d = (attacker_route.at(sa) - pv).norm();
            if (d < best) {
                best = d;
                g.s_victim = sv;
                g.s_attacker = sa;
            }
        }
    }
    g.exists = best < 6.0;
    return g;
}

struct YieldConfig {
    double lead = 1.5;         // spare seconds required when passing first
    double follow = 1.0;       // spare seconds required when passing second
    double stop_back = 7.0;    // hold line distance short of the conflict
    double clear_length = 7.0; // extra travel that counts as through the conflict
};

// Time to cover dist starting at speed v, accelerating toward cruise at a.
inline double travel_time(double dist, double v, double cruise, double a) {
    if (dist <= 0.0) return 0.0;
    v = std::max(v, 0.0);
    if (v >= cruise) return dist / std::max(cruise, 0.1);
    const double d_accel = (cruise * cruise - v * v) / (2.0 * a);
    if (d_accel >= dist) return (std::sqrt(v * v + 2.0 * a * dist) - v) / a;
    return (cruise - v) / a + (dist - d_accel) / cruise;
}

// True when the driver should hold short of the conflict point. The pass-
// first test assumes a sluggish crossing and the pass-second test a brisk
// one, so both err toward waiting.
inline bool should_yield(const VehicleState& v, const VehicleState& other,
                         const Route& victim_route, const Route& other_route,
                         const ConflictGeometry& g, double cruise, const YieldConfig& yc = {}) {
    if (!g.exists) return false;

    const double d_v = g.s_victim - victim_route.project(v.pos()).s;
    if (d_v < yc.stop_back * 0.5) return false; // committed, clear the box

    const double d_o = g.s_attacker - other_route.project(other.pos()).s;
    if (d_o < -yc.clear_length) return false; // they are already through

    const double t_v_clear = travel_time(d_v + yc.clear_length, v.speed, cruise, 0.8);
    const double t_o_enter = (d_o - yc.clear_length * 0.5) / std::max(other.speed, 0.2);
    if (t_v_clear + yc.lead < t_o_enter) return false;

    const double t_o_clear = (d_o + yc.clear_length) / std::max(other.speed, 0.2);
    const double t_v_enter = travel_time(d_v - yc.clear_length * 0.5, v.speed, cruise, 2.0);
    if (t_o_clear + yc.follow < t_v_enter) return false;

    return true;
}

// Route tracking with a constant-deceleration stop at the hold line while
// yielding; the proportional speed loop is too soft to hit a line.
inline Action yield_driver_action(const WorldState& w, const ConflictGeometry& g,
                                  const ScenarioSpec& spec, const YieldConfig& yc = {}) {
    const Route& vr = spec.victim_route;
    const auto pv = vr.project(w.victim.pos());
    const double cruise = vr.speed_at(pv.s);

    Action a = pure_pursuit_action(w.victim, vr, cruise, spec);
    if (should_yield(w.victim, w.attacker, vr, spec.attacker_route, g, cruise, yc)) {
        const double room = (g.s_victim - pv.s) - yc.stop_back;
        const double v0 = w.victim.speed;
        double brake;
        if (room < 0.3 || v0 < 0.3)
            brake = -1.0;
        else
            brake = -(v0 * v0) / (2.0 * room) / spec.a_max - 0.1;
        a.accel_cmd = std::clamp(brake, -1.0, 0.0);
    }
    return a;
}

} // namespace vcat
