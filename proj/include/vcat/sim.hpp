#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "vcat/errors.hpp"
#include "vcat/geometry.hpp"
#include "vcat/rng.hpp"
#include "vcat/scenario.hpp"

namespace vcat {

struct Action {
    double accel_cmd = 0.0; // [-1, 1]
    double steer_cmd = 0.0; // [-1, 1]
};

inline Action clamp_action(Action a) {
    a.accel_cmd = std::clamp(a.accel_cmd, -1.0, 1.0);
    a.steer_cmd = std::clamp(a.steer_cmd, -1.0, 1.0);
    return a;
}

enum class TerminalKind { running, collision, victim_goal, timeout, off_road };

inline std::string to_string(TerminalKind t) {
    switch (t) {
        case TerminalKind::running: return "running";
        case TerminalKind::collision: return "collision";
        case TerminalKind::victim_goal: return "victim_goal";
        case TerminalKind::timeout: return "timeout";
        case TerminalKind::off_road: return "off_road";
    }
    return "running";
}

struct WorldState {
    VehicleState victim;
    VehicleState attacker;
    int t = 0;
    const ScenarioSpec* scenario = nullptr;
    TerminalKind terminal = TerminalKind::running;

    bool done() const { return terminal != TerminalKind::running; }
};

enum class Role { victim, attacker };

constexpr int kObsDim = 11;
using Observation = std::vector<double>;

inline bool check_collision(const VehicleState& v1, const VehicleState& v2) {
    return obb_overlap(v1.footprint(), v2.footprint());
}

struct AttackerInit {
    enum class Mode { sample, fixed } mode = Mode::sample;
    VehicleState pose;

    static AttackerInit sampled() { return AttackerInit{Mode::sample, {}}; }
    static AttackerInit fixed(const VehicleState& p) { return AttackerInit{Mode::fixed, p}; }
};

inline WorldState reset(const ScenarioSpec& spec, const AttackerInit& init, Rng& rng) {
    spec.validate();
    WorldState w;
    w.scenario = &spec;
    w.t = 0;
    w.terminal = TerminalKind::running;
    w.victim = spec.victim_spawn;
    w.victim.length = spec.vehicle_length;
    w.victim.width = spec.vehicle_width;

    if (init.mode == AttackerInit::Mode::fixed) {
        w.attacker = init.pose;
    } else {
        VehicleState a;
        a.x = rng.uniform(spec.attacker_spawn_region.xmin, spec.attacker_spawn_region.xmax);
        a.y = rng.uniform(spec.attacker_spawn_region.ymin, spec.attacker_spawn_region.ymax);
        const auto proj = spec.attacker_route.project({a.x, a.y});
        a.heading = wrap_angle(spec.attacker_route.heading_at(proj.s));
        a.speed = rng.uniform(spec.attacker_spawn_speed_min, spec.attacker_spawn_speed_max);
        w.attacker = a;
    }
    w.attacker.length = spec.vehicle_length;
    w.attacker.width = spec.vehicle_width;
    return w;
}

namespace detail {

// Explicit Euler, fixed statement order: position advances with the old
// speed and heading, then speed, then heading (with the updated speed).
inline VehicleState integrate(const VehicleState& v, Action a, const ScenarioSpec& spec) {
    a = clamp_action(a);
    VehicleState n = v;
    n.x = v.x + v.speed * std::cos(v.heading) * spec.dt;
    n.y = v.y + v.speed * std::sin(v.heading) * spec.dt;
    n.speed = std::clamp(v.speed + a.accel_cmd * spec.a_max * spec.dt, 0.0, spec.v_max);
    n.heading = wrap_angle(v.heading +
                           (n.speed / spec.wheelbase) * std::tan(a.steer_cmd * spec.steer_max) *
                               spec.dt);
    return n;
}

} // namespace detail

inline WorldState step(const WorldState& w, const Action& a_victim, const Action& a_attacker) {
    if (w.done()) throw UsageError("step called on a terminal state");
    const ScenarioSpec& spec = *w.scenario;

    WorldState n = w;
    n.victim = detail::integrate(w.victim, a_victim, spec);
    n.attacker = detail::integrate(w.attacker, a_attacker, spec);
    n.t = w.t + 1;

    if (check_collision(n.victim, n.attacker))
        n.terminal = TerminalKind::collision;
    else if (spec.goal_region.contains(n.victim.pos()))
        n.terminal = TerminalKind::victim_goal;
    else if (spec.off_road(n.victim.pos()) || spec.off_road(n.attacker.pos()))
        n.terminal = TerminalKind::off_road;
    else if (n.t >= spec.episode_horizon)
        n.terminal = TerminalKind::timeout;
    else
        n.terminal = TerminalKind::running;
    return n;
}

// Observation layout (all entries scaled into [-1, 1]):
//   0..3  ego x, y, heading, speed
//   4..8  other-vehicle dx, dy, dvx, dvy, dheading
//   9     ego distance to goal (victim: goal box center; attacker: route end)
//   10    episode time fraction
inline Observation observe(const WorldState& w, Role role) {
    const ScenarioSpec& spec = *w.scenario;
    const VehicleState& ego = role == Role::victim ? w.victim : w.attacker;
    const VehicleState& other = role == Role::victim ? w.attacker : w.victim;

    const Vec2 goal = role == Role::victim ? spec.goal_region.center()
                                           : spec.attacker_route.points.back();
    const Vec2 ev = ego.velocity();
    const Vec2 ov = other.velocity();

    Observation o(kObsDim);
    o[0] = ego.x / spec.pos_scale;
    o[1] = ego.y / spec.pos_scale;
    o[2] = ego.heading / M_PI;
    o[3] = ego.speed / spec.v_max;
    o[4] = (other.x - ego.x) / spec.rel_scale;
    o[5] = (other.y - ego.y) / spec.rel_scale;
    o[6] = (ov.x - ev.x) / (2.0 * spec.v_max);
    o[7] = (ov.y - ev.y) / (2.0 * spec.v_max);
    o[8] = wrap_angle(other.heading - ego.heading) / M_PI;
    o[9] = (goal - ego.pos()).norm() / spec.goal_dist_scale;
    o[10] = static_cast<double>(w.t) / spec.episode_horizon;
    return o;
}

struct VictimRewardTerms {
    double r_target = 0.0;
    double r_acc = 0.0;
    double r_collision = 0.0;
};

inline VictimRewardTerms victim_reward_terms(const WorldState& /*w_prev*/, const Action& a_victim,
                                             const WorldState& w_next) {
    const Action a = clamp_action(a_victim);
    VictimRewardTerms r;
    r.r_target = w_next.terminal == TerminalKind::victim_goal ? 1.0 : 0.0;
    r.r_acc = a.accel_cmd * a.accel_cmd;
    r.r_collision = w_next.terminal == TerminalKind::collision ? 1.0 : 0.0;
    return r;
}

inline double attacker_reward(const WorldState& /*w_prev*/, const WorldState& w_next) {
    return w_next.terminal == TerminalKind::collision ? 1.0 : 0.0;
}

} // namespace vcat
