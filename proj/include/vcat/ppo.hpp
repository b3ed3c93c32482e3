#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "vcat/errors.hpp"
#include "vcat/policy.hpp"
#include "vcat/rng.hpp"

namespace vcat {

struct PpoConfig {
    double clip_eps = 0.2; // 0.9 in the original hyperparameter table, selectable
    double gamma = 0.95;
    double lambda_curiosity = 0.2;
    int epochs_per_update = 10;
    int batch_size = 128;
    int buffer_capacity = 5000;
    double lr_policy = 5e-4;
    double lr_value = 5e-3;
    double lr_van = 1e-3;
    double lr_rnd = 1e-3;
    int value_epochs = 4;
    bool normalize_advantages = true;
    bool intrinsic_uses_victim_reward = false;
    double init_log_std = -0.5;

    void validate() const {
        if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw ConfigError("clip_eps must be in (0, 1)");
        if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in (0, 1]");
        if (lambda_curiosity < 0.0) throw ConfigError("lambda_curiosity must be >= 0");
        if (epochs_per_update < 1 || value_epochs < 1) throw ConfigError("epochs must be >= 1");
        if (batch_size < 1 || buffer_capacity < 1) throw ConfigError("batch sizes must be >= 1");
        if (lr_policy <= 0.0 || lr_value <= 0.0 || lr_van <= 0.0 || lr_rnd <= 0.0)
            throw ConfigError("learning rates must be positive");
    }
};

struct PpoStats {
    double objective = 0.0;    // mean dual surrogate over all processed samples
    double mean_ratio = 0.0;
    double clip_fraction = 0.0;
    double policy_loss = 0.0;  // -objective
};

// Clipped-surrogate ascent on adv_push minus clipped surrogate of adv_pull,
// both built from the same learner importance ratio. An empty adv_pull gives
// plain single-term clipped PPO.
inline PpoStats ppo_dual_update(GaussianPolicy& pol,
                                const std::vector<const std::vector<double>*>& obs,
                                const std::vector<const std::vector<double>*>& presquash,
                                const std::vector<double>& log_prob_old,
                                const std::vector<double>& adv_push,
                                const std::vector<double>& adv_pull, const PpoConfig& cfg,
                                Rng& rng) {
    const std::size_t n = obs.size();
    if (n == 0) throw UsageError("ppo_dual_update: empty batch");
    if (presquash.size() != n || log_prob_old.size() != n || adv_push.size() != n ||
        (!adv_pull.empty() && adv_pull.size() != n))
        throw UsageError("ppo_dual_update: misaligned inputs");

    const double lo = 1.0 - cfg.clip_eps;
    const double hi = 1.0 + cfg.clip_eps;
    const bool dual = !adv_pull.empty();

    PpoStats stats;
    std::size_t processed = 0;
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);

    ParamGrads g = grads_like(pol.trunk);
    GradientTape tape;
    for (int epoch = 0; epoch < cfg.epochs_per_update; ++epoch) {
        rng.shuffle(idx);
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t end = std::min(n, start + cfg.batch_size);
            const double inv_m = 1.0 / static_cast<double>(end - start);
            for (auto& w : g.d_w) std::fill(w.begin(), w.end(), 0.0);
            for (auto& b : g.d_b) std::fill(b.begin(), b.end(), 0.0);

            for (std::size_t k = start; k < end; ++k) {
                const std::size_t i = idx[k];
                const PolicyHead h = policy_head(pol, *obs[i], &tape);
                const double lp = gaussian_log_prob(h, *presquash[i]);
                const double ratio =
                    std::clamp(std::exp(lp - log_prob_old[i]), 1e-8, 1e8);
                const double clipped = std::clamp(ratio, lo, hi);

                double obj = 0.0;
                double d_lp = 0.0; // d(objective)/d(log prob)

                const double a = adv_push[i];
                const double u1 = ratio * a;
                const double c1 = clipped * a;
                if (u1 <= c1) {
                    obj += u1;
                    d_lp += a * ratio;
                } else {
                    obj += c1;
                }
                if (dual) {
                    const double b = adv_pull[i];
                    const double u2 = ratio * b;
                    const double c2 = clipped * b;
                    if (u2 <= c2) {
                        obj -= u2;
                        d_lp -= b * ratio;
                    } else {
                        obj -= c2;
                    }
                }
                if (!std::isfinite(obj))
                    throw TrainingError("ppo update aborted: non-finite objective");

                stats.objective += obj;
                stats.mean_ratio += ratio;
                if (ratio < lo || ratio > hi) stats.clip_fraction += 1.0;
                ++processed;

                const std::vector<double> ograd =
                    log_prob_output_grad(pol, h, *presquash[i], -d_lp * inv_m);
                net_backward_accum(pol.trunk, tape, ograd, g);
            }
            mask_log_std_grads(pol, g);
            try {
                adam_step(pol.trunk, g, cfg.lr_policy);
            } catch (const NumericError& e) {
                throw TrainingError(std::string("ppo update aborted: ") + e.what());
            }
            clamp_log_std(pol);
        }
    }

    const double inv_p = 1.0 / static_cast<double>(processed);
    stats.objective *= inv_p;
    stats.mean_ratio *= inv_p;
    stats.clip_fraction *= inv_p;
    stats.policy_loss = -stats.objective;
    return stats;
}

// Minibatch semi-gradient TD fitting for a scalar value net; returns the
// mean pre-step squared TD error over all minibatch steps.
inline double value_td_epochs(ValueNet& v, const std::vector<const std::vector<double>*>& obs,
                              const std::vector<const std::vector<double>*>& obs_next,
                              const std::vector<double>& rewards,
                              const std::vector<unsigned char>& terminal, double gamma,
                              double lr, int epochs, int batch_size, Rng& rng) {
    const std::size_t n = obs.size();
    if (n == 0) throw UsageError("value_td_epochs: empty batch");

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);

    double loss_sum = 0.0;
    int steps = 0;
    ParamGrads g = grads_like(v.net);
    GradientTape tape;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(idx);
        for (std::size_t start = 0; start < n; start += batch_size) {
            const std::size_t end = std::min(n, start + batch_size);
            const double inv_m = 1.0 / static_cast<double>(end - start);
            for (auto& w : g.d_w) std::fill(w.begin(), w.end(), 0.0);
            for (auto& b : g.d_b) std::fill(b.begin(), b.end(), 0.0);

            double loss = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const std::size_t i = idx[k];
                const double vn = terminal[i] ? 0.0 : net_forward(v.net, *obs_next[i])[0];
                const double target = rewards[i] + gamma * vn;
                const double val = net_forward(v.net, *obs[i], &tape)[0];
                const double err = val - target;
                loss += err * err * inv_m;
                net_backward_accum(v.net, tape, {2.0 * err * inv_m}, g);
            }
            if (!std::isfinite(loss)) throw NumericError("value_td_epochs: non-finite loss");
            adam_step(v.net, g, lr);
            loss_sum += loss;
            ++steps;
        }
    }
    return loss_sum / static_cast<double>(steps);
}

} // namespace vcat
