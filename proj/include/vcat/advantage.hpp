#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "vcat/errors.hpp"
#include "vcat/policy.hpp"
#include "vcat/rollout.hpp"
#include "vcat/vuln.hpp"

namespace vcat {

// One-step TD advantage per transition: r + gamma * V(s') * (1 - terminal) - V(s).
inline std::vector<double> td_advantages(
    const RolloutBuffer& buf, const std::function<double(const Observation&)>& value_fn,
    const std::function<double(const Transition&)>& reward_fn, bool victim_obs, double gamma) {
    if (buf.transitions.empty()) throw UsageError("td_advantages: empty buffer");
    std::vector<double> adv(buf.transitions.size());
    for (std::size_t i = 0; i < buf.transitions.size(); ++i) {
        const Transition& t = buf.transitions[i];
        const Observation& o = victim_obs ? t.obs_victim : t.obs_attacker;
        const Observation& on = victim_obs ? t.obs_victim_next : t.obs_attacker_next;
        const double v = value_fn(o);
        const double vn = t.terminal ? 0.0 : value_fn(on);
        adv[i] = reward_fn(t) + gamma * vn - v;
    }
    return adv;
}

// Same TD advantage with an explicit per-transition reward vector.
inline std::vector<double> td_advantages_vec(
    const RolloutBuffer& buf, const std::function<double(const Observation&)>& value_fn,
    const std::vector<double>& rewards, bool victim_obs, double gamma) {
    if (rewards.size() != buf.transitions.size())
        throw UsageError("td_advantages_vec: reward size mismatch");
    std::size_t i = 0;
    return td_advantages(
        buf, value_fn, [&](const Transition&) { return rewards[i++]; }, victim_obs, gamma);
}

// In-place z-scoring with a population std; a degenerate channel goes to 0.
inline void normalize_advantages(std::vector<double>& a) {
    if (a.empty()) return;
    double mean = 0.0;
    for (double x : a) mean += x;
    mean /= static_cast<double>(a.size());
    double var = 0.0;
    for (double x : a) var += (x - mean) * (x - mean);
    var /= static_cast<double>(a.size());
    const double inv = 1.0 / (std::sqrt(var) + 1e-8);
    for (double& x : a) x = (x - mean) * inv;
}

struct AdvantageRecord {
    // values fed to the policy update (normalized when enabled)
    double a_alpha = 0.0;
    double a_victim = 0.0;
    double a_ins = 0.0;
    double a_fused = 0.0;
    // pre-normalization values, kept for the fusion identity check
    double raw_alpha = 0.0;
    double raw_victim = 0.0;
    double raw_ins = 0.0;
    double raw_fused = 0.0;
};

struct AdvantageConfig {
    double gamma = 0.95;
    double lambda_curiosity = 0.2;
    bool normalize = true;
    // Audit switch: detector channel driven by the estimated victim reward
    // instead of the intrinsic reward (the literal reading; off by default).
    bool intrinsic_uses_victim_reward = false;
};

// Attack-stage advantage records over the attacker's observation stream.
// Pass nullptr for van / v_ins when the method does not use that channel.
inline std::vector<AdvantageRecord> compute_advantages(const RolloutBuffer& buf,
                                                       const ValueNet& v_alpha,
                                                       const VanNet* van, const ValueNet* v_ins,
                                                       const AdvantageConfig& cfg) {
    if (buf.transitions.empty()) throw UsageError("compute_advantages: empty buffer");
    const std::size_t n = buf.transitions.size();

    std::vector<double> a_alpha = td_advantages(
        buf, [&](const Observation& o) { return value(v_alpha, o); },
        [](const Transition& t) { return t.r_alpha; }, false, cfg.gamma);

    std::vector<double> a_victim(n, 0.0);
    if (van)
        a_victim = td_advantages(
            buf, [&](const Observation& o) { return van_value(*van, o); },
            [](const Transition& t) { return t.r_victim_hat; }, false, cfg.gamma);

    std::vector<double> a_ins(n, 0.0);
    if (v_ins)
        a_ins = td_advantages(
            buf, [&](const Observation& o) { return value(*v_ins, o); },
            [&](const Transition& t) {
                return cfg.intrinsic_uses_victim_reward ? t.r_victim_hat : t.r_ins;
            },
            false, cfg.gamma);

    std::vector<AdvantageRecord> rec(n);
    for (std::size_t i = 0; i < n; ++i) {
        rec[i].raw_alpha = a_alpha[i];
        rec[i].raw_victim = a_victim[i];
        rec[i].raw_ins = a_ins[i];
        rec[i].raw_fused = a_alpha[i] + cfg.lambda_curiosity * a_ins[i];
    }
    if (cfg.normalize) {
        normalize_advantages(a_alpha);
        if (van) normalize_advantages(a_victim);
        if (v_ins) normalize_advantages(a_ins);
    }
    for (std::size_t i = 0; i < n; ++i) {
        rec[i].a_alpha = a_alpha[i];
        rec[i].a_victim = a_victim[i];
        rec[i].a_ins = a_ins[i];
        rec[i].a_fused = a_alpha[i] + cfg.lambda_curiosity * a_ins[i];
    }
    return rec;
}

} // namespace vcat
