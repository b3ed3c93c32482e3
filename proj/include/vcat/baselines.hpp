#pragma once

#include <string>
#include <vector>

#include "vcat/errors.hpp"
#include "vcat/rollout.hpp"
#include "vcat/trainer.hpp"

namespace vcat {

enum class AttackMethod { mc, ppo, ppo_va, proposed };

inline std::string to_string(AttackMethod m) {
    switch (m) {
        case AttackMethod::mc: return "mc";
        case AttackMethod::ppo: return "ppo";
        case AttackMethod::ppo_va: return "ppo-va";
        case AttackMethod::proposed: return "proposed";
    }
    return "mc";
}

inline AttackMethod method_from_string(const std::string& s) {
    if (s == "mc" || s == "MC") return AttackMethod::mc;
    if (s == "ppo" || s == "PPO") return AttackMethod::ppo;
    if (s == "ppo-va" || s == "ppo_va" || s == "PPO-VA") return AttackMethod::ppo_va;
    if (s == "proposed" || s == "PROPOSED" || s == "vcat") return AttackMethod::proposed;
    throw ConfigError("unknown attack method: " + s);
}

// Maps a method onto trainer toggles. The ladder is strictly nested:
//   ppo      clipped surrogate on the extrinsic advantage only
//   ppo-va   adds the subtracted victim-advantage surrogate, curiosity off
//   proposed adds the curiosity channel on top
// mc has no trainer at all.
inline StageConfig build_attacker(AttackMethod m, StageConfig base) {
    switch (m) {
        case AttackMethod::mc:
            throw ConfigError("mc attacker has no training stage");
        case AttackMethod::ppo:
            base.use_van = false;
            base.use_rnd = false;
            base.use_opponent_term = false;
            base.ppo.lambda_curiosity = 0.0;
            break;
        case AttackMethod::ppo_va:
            base.use_van = true;
            base.use_rnd = false;
            base.use_opponent_term = true;
            base.ppo.lambda_curiosity = 0.0;
            break;
        case AttackMethod::proposed:
            base.use_van = true;
            base.use_rnd = true;
            base.use_opponent_term = true;
            break;
    }
    return base;
}

// Names of loss terms active in a stage configuration; the nesting of the
// method ladder is asserted over these.
inline std::vector<std::string> active_loss_terms(const StageConfig& cfg) {
    std::vector<std::string> t{"clip_extrinsic"};
    if (cfg.use_opponent_term) t.push_back("clip_opponent_value");
    if (cfg.use_rnd && cfg.ppo.lambda_curiosity > 0.0) t.push_back("curiosity");
    return t;
}

// One episode of the randomized-spawn baseline: the attacker spawns uniformly
// in its region and then tracks its route at the sampled speed; the victim
// runs its policy.
inline RolloutBuffer mc_attack_episode(const ScenarioSpec& spec, const GaussianPolicy& victim,
                                       Rng& rng, const RewardWeights& weights = {}) {
    return collect_rollouts(spec, Actor::from_policy(victim), Actor::route_follower(), 1, rng,
                            weights, 1);
}

} // namespace vcat
