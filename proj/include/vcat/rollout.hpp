#pragma once

#include <vector>

#include "vcat/controller.hpp"
#include "vcat/errors.hpp"
#include "vcat/policy.hpp"
#include "vcat/rng.hpp"
#include "vcat/sim.hpp"
#include "vcat/vuln.hpp"

namespace vcat {

struct Transition {
    Observation obs_attacker;
    Observation obs_victim;
    Observation obs_attacker_next;
    Observation obs_victim_next;

    std::vector<double> act_attacker;
    std::vector<double> act_attacker_presquash;
    double log_prob_attacker = 0.0;
    std::vector<double> act_victim;
    std::vector<double> act_victim_presquash;
    double log_prob_victim = 0.0;

    double r_alpha = 0.0;
    VictimRewardTerms victim_terms;
    double r_victim_hat = 0.0; // estimated victim reward, Van's TD target
    double r_ins = 0.0;        // normalized intrinsic reward, filled post-hoc
    double r_ins_raw = 0.0;

    VehicleState victim_state;      // at the start of the step
    VehicleState victim_state_next;

    bool terminal = false;
    TerminalKind terminal_kind = TerminalKind::running;
    int step_index = 0;
    int episode_id = 0;
};

struct EpisodeSummary {
    TerminalKind terminal = TerminalKind::running;
    int steps = 0;
    VehicleState victim_at_end;
    VehicleState attacker_at_end;
};

struct RolloutBuffer {
    std::vector<Transition> transitions;
    std::vector<EpisodeSummary> episodes;

    int collisions() const {
        int n = 0;
        for (const EpisodeSummary& e : episodes)
            if (e.terminal == TerminalKind::collision) ++n;
        return n;
    }

    double crash_rate() const {
        if (episodes.empty()) return 0.0;
        return static_cast<double>(collisions()) / static_cast<double>(episodes.size());
    }
};

// How one of the two vehicles picks actions during collection.
struct Actor {
    enum class Kind { policy, route_follow } kind = Kind::policy;
    const GaussianPolicy* policy = nullptr;
    bool sample = true;           // policy kind; false runs the head mean
    double target_speed = -1.0; // route_follow; < 0 means hold the spawn speed

    static Actor from_policy(const GaussianPolicy& p) {
        Actor a;
        a.kind = Kind::policy;
        a.policy = &p;
        return a;
    }
    // Deterministic deployment for evaluation.
    static Actor policy_mean(const GaussianPolicy& p) {
        Actor a = from_policy(p);
        a.sample = false;
        return a;
    }
    static Actor route_follower(double target_speed = -1.0) {
        Actor a;
        a.kind = Kind::route_follow;
        a.target_speed = target_speed;
        return a;
    }
};

namespace detail {

struct ActorStep {
    Action action;
    std::vector<double> act_vec;
    std::vector<double> presquash;
    double log_prob = 0.0;
};

inline ActorStep act(const Actor& actor, const Observation& obs, const VehicleState& vs,
                     const Route& route, double episode_target_speed, const ScenarioSpec& spec,
                     Rng& rng) {
    ActorStep out;
    if (actor.kind == Actor::Kind::policy) {
        const PolicySample s = actor.sample ? sample_action(*actor.policy, obs, rng)
                                           : mean_action(*actor.policy, obs);
        out.action = Action{s.action[0], s.action.size() > 1 ? s.action[1] : 0.0};
        out.act_vec = s.action;
        out.presquash = s.presquash;
        out.log_prob = s.log_prob;
    } else {
        const double target =
            actor.target_speed >= 0.0 ? actor.target_speed : episode_target_speed;
        out.action = pure_pursuit_action(vs, route, target, spec);
        out.act_vec = {out.action.accel_cmd, out.action.steer_cmd};
        out.presquash = out.act_vec;
    }
    return out;
}

} // namespace detail

// Runs whole episodes until at least min_steps transitions are collected
// (always at least one episode). Episode randomness comes from rng: spawn
// sampling first, then per-step action noise, in a fixed order.
inline RolloutBuffer collect_rollouts(const ScenarioSpec& spec, const Actor& victim,
                                      const Actor& attacker, int min_steps, Rng& rng,
                                      const RewardWeights& weights = {}, int episode_cap = 0) {
    RolloutBuffer buf;
    int episode_id = 0;
    while ((buf.transitions.size() < static_cast<std::size_t>(min_steps) &&
            (episode_cap <= 0 || episode_id < episode_cap)) ||
           episode_id == 0) {
        WorldState w = reset(spec, AttackerInit::sampled(), rng);
        const double attacker_spawn_speed = w.attacker.speed;
        const double victim_spawn_speed = w.victim.speed;

        while (!w.done()) {
            Transition tr;
            tr.obs_victim = observe(w, Role::victim);
            tr.obs_attacker = observe(w, Role::attacker);

            const detail::ActorStep va = detail::act(victim, tr.obs_victim, w.victim,
                                                     spec.victim_route, victim_spawn_speed,
                                                     spec, rng);
            const detail::ActorStep aa = detail::act(attacker, tr.obs_attacker, w.attacker,
                                                     spec.attacker_route, attacker_spawn_speed,
                                                     spec, rng);

            const WorldState next = step(w, va.action, aa.action);

            tr.act_victim = va.act_vec;
            tr.act_victim_presquash = va.presquash;
            tr.log_prob_victim = va.log_prob;
            tr.act_attacker = aa.act_vec;
            tr.act_attacker_presquash = aa.presquash;
            tr.log_prob_attacker = aa.log_prob;
            tr.obs_victim_next = observe(next, Role::victim);
            tr.obs_attacker_next = observe(next, Role::attacker);
            tr.r_alpha = attacker_reward(w, next);
            tr.victim_terms = victim_reward_terms(w, va.action, next);
            tr.victim_state = w.victim;
            tr.victim_state_next = next.victim;
            tr.r_victim_hat = estimate_victim_reward(tr.victim_terms, weights);
            tr.terminal = next.done();
            tr.terminal_kind = next.terminal;
            tr.step_index = w.t;
            tr.episode_id = episode_id;
            buf.transitions.push_back(std::move(tr));
            w = next;
        }

        EpisodeSummary e;
        e.terminal = w.terminal;
        e.steps = w.t;
        e.victim_at_end = w.victim;
        e.attacker_at_end = w.attacker;
        buf.episodes.push_back(e);
        ++episode_id;
    }
    return buf;
}

} // namespace vcat
