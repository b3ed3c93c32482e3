#pragma once

#include <string>
#include <vector>

#include "vcat/errors.hpp"
#include "vcat/net.hpp"
#include "vcat/rng.hpp"
#include "vcat/sim.hpp"

namespace vcat {

struct RewardWeights {
    double lambda1 = 1.0; // goal term
    double lambda2 = 0.1; // comfort (acceleration) term
    double lambda3 = 1.0; // collision term

    void validate() const {
        if (lambda1 < 0.0 || lambda2 < 0.0 || lambda3 < 0.0)
            throw ConfigError("reward weights must be non-negative");
    }
};

inline double estimate_victim_reward(const VictimRewardTerms& t, const RewardWeights& w) {
    return w.lambda1 * t.r_target - w.lambda2 * t.r_acc - w.lambda3 * t.r_collision;
}

constexpr int kVanFeatureDim = 64;

// Surrogate for the black-box victim's state value. The 64-wide hidden layer
// doubles as the feature map fed to the novelty detector.
struct VanNet {
    MlpNet net; // [obs, 64, 1], tanh hidden, identity out
};

inline VanNet van_init(int obs_dim, Rng& rng) {
    VanNet v;
    v.net = net_init({obs_dim, kVanFeatureDim, 1}, {Act::tanh, Act::identity}, rng);
    return v;
}

inline double van_value(const VanNet& v, const std::vector<double>& obs) {
    return net_forward(v.net, obs)[0];
}

inline std::vector<double> extract_features(const VanNet& v, const std::vector<double>& obs) {
    GradientTape tape;
    net_forward(v.net, obs, &tape);
    return tape.inputs[1]; // hidden activations feeding the output layer
}

struct VanTransition {
    std::vector<double> obs;
    double reward = 0.0; // estimated victim reward
    std::vector<double> obs_next;
    bool terminal = false;
};

// One semi-gradient TD step: targets are held constant, the fit chases
// reward + gamma * V(next). Returns the pre-step mean squared TD error.
inline double van_td_update(VanNet& van, const std::vector<VanTransition>& batch, double gamma,
                            double lr) {
    if (batch.empty()) throw UsageError("van_td_update: empty batch");

    ParamGrads g = grads_like(van.net);
    GradientTape tape;
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    for (const VanTransition& t : batch) {
        const double v_next = t.terminal ? 0.0 : net_forward(van.net, t.obs_next)[0];
        const double target = t.reward + gamma * v_next;
        const double v = net_forward(van.net, t.obs, &tape)[0];
        const double err = v - target;
        loss += err * err * inv_n;
        net_backward_accum(van.net, tape, {2.0 * err * inv_n}, g);
    }
    if (!std::isfinite(loss)) throw NumericError("van_td_update: non-finite loss");
    adam_step(van.net, g, lr);
    return loss;
}

} // namespace vcat
