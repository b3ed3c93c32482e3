#pragma once

#include <chrono>
#include <deque>
#include <string>
#include <vector>

#include "vcat/advantage.hpp"
#include "vcat/errors.hpp"
#include "vcat/ppo.hpp"
#include "vcat/rnd.hpp"
#include "vcat/rollout.hpp"

namespace vcat {

struct MetricsRow {
    int iteration = 0;
    int episodes = 0; // cumulative over the stage
    double crash_rate = 0.0;
    double mean_r_ins_raw = 0.0;
    double policy_loss = 0.0;
    double van_loss = 0.0;
    double rnd_loss = 0.0;
    std::int64_t wall_time_ms = 0;
};

struct StageConfig {
    PpoConfig ppo;
    RewardWeights weights;
    bool use_van = true;
    bool use_rnd = true;
    bool use_opponent_term = true; // the subtracted opponent-advantage surrogate
    int episode_budget = 2000;
    int max_iterations = 10000;

    // Attack stage only: before any surrogate update the attacker is regressed
    // onto noisy route-following demonstrations. Without that warm start the
    // fresh policy leaves the road in nearly every episode, those episodes
    // terminate with zero reward, and the surrogate has no slope to follow.
    // Demonstration episodes are not counted against episode_budget.
    int prior_demo_samples = 4000; // 0 skips the warm start
    double prior_demo_noise = 0.3;
    int prior_clone_epochs = 20;
    int prior_clone_batch = 128;
    double prior_clone_lr = 1e-3;

    bool early_stop = false;       // flat-crash-rate stop, defense stage default
    int early_stop_window = 10;
    double early_stop_delta = 0.02;
    int early_stop_min_iters = 15;
    bool timing = false;           // off: wall_time_ms written as 0 (reproducible logs)

    void validate() const {
        ppo.validate();
        weights.validate();
        if (episode_budget < 1 || max_iterations < 1)
            throw ConfigError("stage budgets must be >= 1");
        if (prior_demo_samples < 0)
            throw ConfigError("prior_demo_samples must be >= 0");
        if (prior_demo_samples > 0 &&
            (prior_clone_epochs < 1 || prior_clone_batch < 1 || prior_clone_lr <= 0.0 ||
             prior_demo_noise < 0.0))
            throw ConfigError("attacker warm start needs positive epochs, batch, lr and "
                              "non-negative noise");
    }
};

namespace detail {

struct BufferViews {
    std::vector<const std::vector<double>*> obs, obs_next, presquash;
    std::vector<double> log_prob_old;
    std::vector<unsigned char> terminal;
};

inline BufferViews attacker_views(const RolloutBuffer& buf) {
    BufferViews v;
    for (const Transition& t : buf.transitions) {
        v.obs.push_back(&t.obs_attacker);
        v.obs_next.push_back(&t.obs_attacker_next);
        v.presquash.push_back(&t.act_attacker_presquash);
        v.log_prob_old.push_back(t.log_prob_attacker);
        v.terminal.push_back(t.terminal ? 1 : 0);
    }
    return v;
}

inline BufferViews victim_views(const RolloutBuffer& buf) {
    BufferViews v;
    for (const Transition& t : buf.transitions) {
        v.obs.push_back(&t.obs_victim);
        v.obs_next.push_back(&t.obs_victim_next);
        v.presquash.push_back(&t.act_victim_presquash);
        v.log_prob_old.push_back(t.log_prob_victim);
        v.terminal.push_back(t.terminal ? 1 : 0);
    }
    return v;
}

inline std::vector<double> channel(const RolloutBuffer& buf, double Transition::*field) {
    std::vector<double> r;
    r.reserve(buf.transitions.size());
    for (const Transition& t : buf.transitions) r.push_back(t.*field);
    return r;
}

// Runs VanNet TD fitting over the buffer in minibatch epochs, delegating
// each step to van_td_update. victim_obs selects the observation stream;
// reward picks the TD target channel.
inline double van_epochs(VanNet& van, const RolloutBuffer& buf, double Transition::*reward,
                         bool victim_obs, double gamma, double lr, int epochs, int batch_size,
                         Rng& rng) {
    const std::size_t n = buf.transitions.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    double loss_sum = 0.0;
    int steps = 0;
    for (int e = 0; e < epochs; ++e) {
        rng.shuffle(idx);
        for (std::size_t start = 0; start < n; start += batch_size) {
            const std::size_t end = std::min(n, start + batch_size);
            std::vector<VanTransition> batch;
            batch.reserve(end - start);
            for (std::size_t k = start; k < end; ++k) {
                const Transition& t = buf.transitions[idx[k]];
                VanTransition vt;
                vt.obs = victim_obs ? t.obs_victim : t.obs_attacker;
                vt.obs_next = victim_obs ? t.obs_victim_next : t.obs_attacker_next;
                vt.reward = t.*reward;
                vt.terminal = t.terminal;
                batch.push_back(std::move(vt));
            }
            loss_sum += van_td_update(van, batch, gamma, lr);
            ++steps;
        }
    }
    return loss_sum / static_cast<double>(steps);
}

// Fraction of flagged episodes over the most recent `window` entries.
// Crash-rate curves are reported over this window rather than per buffer,
// so the column is comparable across iterations of different episode counts.
class RollingRate {
  public:
    explicit RollingRate(int window) : window_(window) {}

    void add(bool flagged) {
        hits_.push_back(flagged ? 1 : 0);
        sum_ += hits_.back();
        if (static_cast<int>(hits_.size()) > window_) {
            sum_ -= hits_.front();
            hits_.pop_front();
        }
    }

    double rate() const {
        return hits_.empty() ? 0.0
                             : static_cast<double>(sum_) / static_cast<double>(hits_.size());
    }

    bool full() const { return static_cast<int>(hits_.size()) >= window_; }

  private:
    std::deque<unsigned char> hits_;
    int window_;
    int sum_ = 0;
};

inline constexpr int kCrashWindow = 100;

inline std::int64_t elapsed_ms(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now() - t0)
        .count();
}

} // namespace detail

// Computes intrinsic rewards for every transition from the given VAN
// snapshot, in buffer order; returns the extracted features for the
// detector's own update.
inline std::vector<std::vector<double>> fill_intrinsic(RolloutBuffer& buf, const VanNet& van,
                                                       RndPair& rnd) {
    std::vector<std::vector<double>> feats;
    feats.reserve(buf.transitions.size());
    for (Transition& t : buf.transitions) {
        feats.push_back(extract_features(van, t.obs_attacker));
        t.r_ins_raw = raw_intrinsic_reward(rnd, feats.back());
        t.r_ins = intrinsic_reward(rnd, feats.back());
    }
    return feats;
}

struct AttackArtifacts {
    GaussianPolicy attacker;
    ValueNet v_alpha;
    ValueNet v_ins;
    VanNet van;
    RndPair rnd;
    std::vector<MetricsRow> metrics;
    int episodes_total = 0;
};

// Adversarial attack stage: the victim stays frozen while the attacker is
// trained on the dual clipped surrogate, with the VAN chasing the victim's
// value and the novelty detector shaping exploration.
inline AttackArtifacts train_attack(const GaussianPolicy& victim, const ScenarioSpec& spec,
                                    const StageConfig& cfg, Rng& rng) {
    cfg.validate();
    const std::uint64_t victim_sum = net_checksum(victim.trunk);

    Rng rng_policy = rng.derive(0xA1);
    Rng rng_values = rng.derive(0xA2);
    Rng rng_collect = rng.derive(0xA3);
    Rng rng_update = rng.derive(0xA4);

    AttackArtifacts art;
    art.attacker = policy_init(kObsDim, 2, rng_policy, cfg.ppo.init_log_std);
    if (cfg.prior_demo_samples > 0) {
        Rng rng_prior_collect = rng.derive(0xA5);
        Rng rng_prior_update = rng.derive(0xA6);
        std::vector<std::vector<double>> demo_obs, demo_act;
        demo_obs.reserve(static_cast<std::size_t>(cfg.prior_demo_samples));
        demo_act.reserve(static_cast<std::size_t>(cfg.prior_demo_samples));
        while (static_cast<int>(demo_obs.size()) < cfg.prior_demo_samples) {
            WorldState w = reset(spec, AttackerInit::sampled(), rng_prior_collect);
            const double cruise = w.attacker.speed;
            while (!w.done()) {
                const Action expert =
                    pure_pursuit_action(w.attacker, spec.attacker_route, cruise, spec);
                demo_obs.push_back(observe(w, Role::attacker));
                demo_act.push_back({expert.accel_cmd, expert.steer_cmd});
                const PolicySample vs =
                    sample_action(victim, observe(w, Role::victim), rng_prior_collect);
                const Action noisy{
                    expert.accel_cmd + cfg.prior_demo_noise * rng_prior_collect.normal(),
                    expert.steer_cmd + cfg.prior_demo_noise * rng_prior_collect.normal()};
                w = step(w, Action{vs.action[0], vs.action[1]}, clamp_action(noisy));
            }
        }
        fit_behavior_clone(art.attacker, demo_obs, demo_act, cfg.prior_clone_epochs,
                           cfg.prior_clone_batch, cfg.prior_clone_lr, rng_prior_update);
    }
    art.v_alpha = value_init(kObsDim, "attacker_extrinsic", rng_values);
    art.v_ins = value_init(kObsDim, "attacker_intrinsic", rng_values);
    art.van = van_init(kObsDim, rng_values);
    art.rnd = rnd_init(kVanFeatureDim, rng_values);

    AdvantageConfig advcfg;
    advcfg.gamma = cfg.ppo.gamma;
    advcfg.lambda_curiosity = cfg.use_rnd ? cfg.ppo.lambda_curiosity : 0.0;
    advcfg.normalize = cfg.ppo.normalize_advantages;
    advcfg.intrinsic_uses_victim_reward = cfg.ppo.intrinsic_uses_victim_reward;

    int iter = 0;
    detail::RollingRate crash_window(detail::kCrashWindow);
    while (iter < cfg.max_iterations && art.episodes_total < cfg.episode_budget) {
        const auto t0 = std::chrono::steady_clock::now();
        RolloutBuffer buf =
            collect_rollouts(spec, Actor::from_policy(victim), Actor::from_policy(art.attacker),
                             cfg.ppo.buffer_capacity, rng_collect, cfg.weights);
        art.episodes_total += static_cast<int>(buf.episodes.size());
        for (const EpisodeSummary& e : buf.episodes)
            crash_window.add(e.terminal == TerminalKind::collision);

        std::vector<std::vector<double>> feats;
        if (cfg.use_rnd) feats = fill_intrinsic(buf, art.van, art.rnd);

        const std::vector<AdvantageRecord> recs =
            compute_advantages(buf, art.v_alpha, cfg.use_van ? &art.van : nullptr,
                               cfg.use_rnd ? &art.v_ins : nullptr, advcfg);

        std::vector<double> adv_push, adv_pull;
        adv_push.reserve(recs.size());
        for (const AdvantageRecord& r : recs) adv_push.push_back(r.a_fused);
        if (cfg.use_opponent_term)
            for (const AdvantageRecord& r : recs) adv_pull.push_back(r.a_victim);

        detail::BufferViews views = detail::attacker_views(buf);
        const PpoStats stats =
            ppo_dual_update(art.attacker, views.obs, views.presquash, views.log_prob_old,
                            adv_push, adv_pull, cfg.ppo, rng_update);

        MetricsRow row;
        row.policy_loss = stats.policy_loss;

        const std::vector<double> r_alpha = detail::channel(buf, &Transition::r_alpha);
        value_td_epochs(art.v_alpha, views.obs, views.obs_next, r_alpha, views.terminal,
                        cfg.ppo.gamma, cfg.ppo.lr_value, cfg.ppo.value_epochs,
                        cfg.ppo.batch_size, rng_update);
        if (cfg.use_rnd) {
            const std::vector<double> r_ins = detail::channel(buf, &Transition::r_ins);
            value_td_epochs(art.v_ins, views.obs, views.obs_next, r_ins, views.terminal,
                            cfg.ppo.gamma, cfg.ppo.lr_value, cfg.ppo.value_epochs,
                            cfg.ppo.batch_size, rng_update);
        }
        if (cfg.use_van)
            row.van_loss = detail::van_epochs(art.van, buf, &Transition::r_victim_hat, false,
                                              cfg.ppo.gamma, cfg.ppo.lr_van,
                                              cfg.ppo.value_epochs, cfg.ppo.batch_size,
                                              rng_update);
        if (cfg.use_rnd) {
            std::vector<std::size_t> idx(feats.size());
            std::iota(idx.begin(), idx.end(), 0);
            rng_update.shuffle(idx);
            double loss_sum = 0.0;
            int steps = 0;
            for (std::size_t start = 0; start < feats.size();
                 start += cfg.ppo.batch_size) {
                const std::size_t end =
                    std::min(feats.size(), start + cfg.ppo.batch_size);
                std::vector<std::vector<double>> batch;
                for (std::size_t k = start; k < end; ++k) batch.push_back(feats[idx[k]]);
                loss_sum += rnd_update(art.rnd, batch, cfg.ppo.lr_rnd);
                ++steps;
            }
            row.rnd_loss = loss_sum / static_cast<double>(steps);

            double raw_sum = 0.0;
            for (const Transition& t : buf.transitions) raw_sum += t.r_ins_raw;
            row.mean_r_ins_raw = raw_sum / static_cast<double>(buf.transitions.size());
        }

        row.iteration = iter;
        row.episodes = art.episodes_total;
        row.crash_rate = crash_window.rate();
        row.wall_time_ms = cfg.timing ? detail::elapsed_ms(t0) : 0;
        art.metrics.push_back(row);
        ++iter;
    }

    if (net_checksum(victim.trunk) != victim_sum)
        throw TrainingError("victim parameters changed during the attack stage");
    return art;
}

struct DefenseArtifacts {
    GaussianPolicy victim;
    ValueNet v_victim;
    VanNet attacker_value_approx;
    std::vector<MetricsRow> metrics;
    int episodes_total = 0;
};

// Adversarial defense stage: roles swap. The attacker is frozen; the victim
// maximizes its own clipped advantage surrogate minus the surrogate of an
// attacker-value approximation. No curiosity channel here.
inline DefenseArtifacts train_defense(const GaussianPolicy& attacker,
                                      const GaussianPolicy& victim_start,
                                      const ScenarioSpec& spec, const StageConfig& cfg,
                                      Rng& rng) {
    cfg.validate();
    const std::uint64_t attacker_sum = net_checksum(attacker.trunk);

    Rng rng_values = rng.derive(0xD2);
    Rng rng_collect = rng.derive(0xD3);
    Rng rng_update = rng.derive(0xD4);

    DefenseArtifacts art;
    art.victim = victim_start;
    art.v_victim = value_init(kObsDim, "victim_defense", rng_values);
    art.attacker_value_approx = van_init(kObsDim, rng_values);

    int iter = 0;
    std::vector<double> crash_history;
    detail::RollingRate crash_window(detail::kCrashWindow);
    while (iter < cfg.max_iterations && art.episodes_total < cfg.episode_budget) {
        const auto t0 = std::chrono::steady_clock::now();
        RolloutBuffer buf =
            collect_rollouts(spec, Actor::from_policy(art.victim),
                             Actor::from_policy(attacker), cfg.ppo.buffer_capacity,
                             rng_collect, cfg.weights);
        art.episodes_total += static_cast<int>(buf.episodes.size());
        for (const EpisodeSummary& e : buf.episodes)
            crash_window.add(e.terminal == TerminalKind::collision);

        std::vector<double> adv_push = td_advantages(
            buf, [&](const Observation& o) { return value(art.v_victim, o); },
            [](const Transition& t) { return t.r_victim_hat; }, true, cfg.ppo.gamma);
        std::vector<double> adv_pull;
        if (cfg.use_opponent_term)
            adv_pull = td_advantages(
                buf,
                [&](const Observation& o) { return van_value(art.attacker_value_approx, o); },
                [](const Transition& t) { return t.r_alpha; }, true, cfg.ppo.gamma);
        if (cfg.ppo.normalize_advantages) {
            normalize_advantages(adv_push);
            normalize_advantages(adv_pull);
        }

        detail::BufferViews views = detail::victim_views(buf);
        const PpoStats stats =
            ppo_dual_update(art.victim, views.obs, views.presquash, views.log_prob_old,
                            adv_push, adv_pull, cfg.ppo, rng_update);

        const std::vector<double> r_hat = detail::channel(buf, &Transition::r_victim_hat);
        value_td_epochs(art.v_victim, views.obs, views.obs_next, r_hat, views.terminal,
                        cfg.ppo.gamma, cfg.ppo.lr_value, cfg.ppo.value_epochs,
                        cfg.ppo.batch_size, rng_update);
        double ava_loss = 0.0;
        if (cfg.use_opponent_term)
            ava_loss = detail::van_epochs(art.attacker_value_approx, buf,
                                          &Transition::r_alpha, true, cfg.ppo.gamma,
                                          cfg.ppo.lr_van, cfg.ppo.value_epochs,
                                          cfg.ppo.batch_size, rng_update);

        MetricsRow row;
        row.iteration = iter;
        row.episodes = art.episodes_total;
        row.crash_rate = crash_window.rate();
        row.policy_loss = stats.policy_loss;
        row.van_loss = ava_loss;
        row.wall_time_ms = cfg.timing ? detail::elapsed_ms(t0) : 0;
        art.metrics.push_back(row);
        crash_history.push_back(row.crash_rate);
        ++iter;

        if (cfg.early_stop && iter >= cfg.early_stop_min_iters &&
            static_cast<int>(crash_history.size()) >= cfg.early_stop_window) {
            double lo = 1.0, hi = 0.0;
            for (std::size_t k = crash_history.size() - cfg.early_stop_window;
                 k < crash_history.size(); ++k) {
                lo = std::min(lo, crash_history[k]);
                hi = std::max(hi, crash_history[k]);
            }
            if (hi - lo < cfg.early_stop_delta) break;
        }
    }

    if (net_checksum(attacker.trunk) != attacker_sum)
        throw TrainingError("attacker parameters changed during the defense stage");
    return art;
}

} // namespace vcat
