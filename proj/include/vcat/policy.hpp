#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "vcat/net.hpp"
#include "vcat/rng.hpp"

namespace vcat {

constexpr double kLogStdMin = -5.0;
constexpr double kLogStdMax = 1.0;
constexpr double kLog2Pi = 1.8378770664093453;

// Diagonal-Gaussian policy. The trunk outputs 2*action_dim values: the first
// half are tanh-squashed into the action mean, the second half are the
// per-dimension log-std, realized as final-layer bias entries whose weight
// rows are zeroed at init and masked out of every gradient, which makes the
// log-std state-independent but still learnable.
struct GaussianPolicy {
    MlpNet trunk; // [obs, 128, 64, 2*action_dim], tanh hidden, identity out
    int action_dim = 2;
};

inline GaussianPolicy policy_init(int obs_dim, int action_dim, Rng& rng,
                                  double init_log_std = -0.5) {
    GaussianPolicy p;
    p.action_dim = action_dim;
    p.trunk = net_init({obs_dim, 128, 64, 2 * action_dim},
                       {Act::tanh, Act::tanh, Act::identity}, rng);
    const std::size_t last = p.trunk.num_layers() - 1;
    const int cols = p.trunk.layer_dims[last];
    for (int r = action_dim; r < 2 * action_dim; ++r) {
        for (int c = 0; c < cols; ++c)
            p.trunk.weights[last][static_cast<std::size_t>(r) * cols + c] = 0.0;
        p.trunk.biases[last][r] = std::clamp(init_log_std, kLogStdMin, kLogStdMax);
    }
    p.trunk.version += 1;
    return p;
}

struct PolicyHead {
    std::vector<double> mean;    // tanh-squashed, in (-1, 1)
    std::vector<double> log_std; // clamped to [kLogStdMin, kLogStdMax]
};

inline PolicyHead policy_head(const GaussianPolicy& p, const std::vector<double>& obs,
                              GradientTape* tape = nullptr) {
    const std::vector<double> out = net_forward(p.trunk, obs, tape);
    PolicyHead h;
    h.mean.resize(p.action_dim);
    h.log_std.resize(p.action_dim);
    for (int j = 0; j < p.action_dim; ++j) {
        h.mean[j] = std::tanh(out[j]);
        h.log_std[j] = std::clamp(out[p.action_dim + j], kLogStdMin, kLogStdMax);
    }
    return h;
}

inline double gaussian_log_prob(const PolicyHead& h, const std::vector<double>& presquash) {
    double lp = 0.0;
    for (std::size_t j = 0; j < h.mean.size(); ++j) {
        const double inv_sigma = std::exp(-h.log_std[j]);
        const double z = (presquash[j] - h.mean[j]) * inv_sigma;
        lp += -0.5 * kLog2Pi - h.log_std[j] - 0.5 * z * z;
    }
    return lp;
}

struct PolicySample {
    std::vector<double> action;    // clamped into [-1, 1]
    std::vector<double> presquash; // mean + sigma * noise, before clamping
    double log_prob = 0.0;
};

inline PolicySample sample_action(const GaussianPolicy& p, const std::vector<double>& obs,
                                  Rng& rng) {
    const PolicyHead h = policy_head(p, obs);
    PolicySample s;
    s.presquash.resize(p.action_dim);
    s.action.resize(p.action_dim);
    for (int j = 0; j < p.action_dim; ++j) {
        const double sigma = std::exp(h.log_std[j]);
        s.presquash[j] = h.mean[j] + sigma * rng.normal();
        s.action[j] = std::clamp(s.presquash[j], -1.0, 1.0);
    }
    s.log_prob = gaussian_log_prob(h, s.presquash);
    return s;
}

// Deterministic deployment: the head mean with no noise drawn.
inline PolicySample mean_action(const GaussianPolicy& p, const std::vector<double>& obs) {
    const PolicyHead h = policy_head(p, obs);
    PolicySample s;
    s.presquash = h.mean;
    s.action.resize(static_cast<std::size_t>(p.action_dim));
    for (int j = 0; j < p.action_dim; ++j)
        s.action[static_cast<std::size_t>(j)] = std::clamp(h.mean[static_cast<std::size_t>(j)], -1.0, 1.0);
    s.log_prob = gaussian_log_prob(h, s.presquash);
    return s;
}

inline double log_prob(const GaussianPolicy& p, const std::vector<double>& obs,
                       const std::vector<double>& presquash) {
    return gaussian_log_prob(policy_head(p, obs), presquash);
}

inline double importance_ratio(const GaussianPolicy& p_new, const GaussianPolicy& p_old,
                               const std::vector<double>& obs,
                               const std::vector<double>& presquash) {
    const double d = log_prob(p_new, obs, presquash) - log_prob(p_old, obs, presquash);
    return std::clamp(std::exp(d), 1e-8, 1e8);
}

// Gradient of log pi(presquash | obs) with respect to the trunk output,
// ready for net_backward_accum. scale multiplies the whole gradient.
inline std::vector<double> log_prob_output_grad(const GaussianPolicy& p, const PolicyHead& h,
                                                const std::vector<double>& presquash,
                                                double scale) {
    std::vector<double> g(2 * p.action_dim, 0.0);
    for (int j = 0; j < p.action_dim; ++j) {
        const double inv_var = std::exp(-2.0 * h.log_std[j]);
        const double diff = presquash[j] - h.mean[j];
        const double d_mean = diff * inv_var;
        g[j] = scale * d_mean * (1.0 - h.mean[j] * h.mean[j]);
        g[p.action_dim + j] = scale * (-1.0 + diff * diff * inv_var);
    }
    return g;
}

// Zeroes the weight-row gradients of the log-std outputs so they stay
// state-independent (their bias gradients are kept).
inline void mask_log_std_grads(const GaussianPolicy& p, ParamGrads& g) {
    const std::size_t last = p.trunk.num_layers() - 1;
    const int cols = p.trunk.layer_dims[last];
    for (int r = p.action_dim; r < 2 * p.action_dim; ++r)
        for (int c = 0; c < cols; ++c)
            g.d_w[last][static_cast<std::size_t>(r) * cols + c] = 0.0;
}

// Projects stored log-std biases back into their bounds after an update.
inline void clamp_log_std(GaussianPolicy& p) {
    const std::size_t last = p.trunk.num_layers() - 1;
    for (int r = p.action_dim; r < 2 * p.action_dim; ++r)
        p.trunk.biases[last][r] = std::clamp(p.trunk.biases[last][r], kLogStdMin, kLogStdMax);
    p.trunk.version += 1;
}

// Minibatch regression of the squashed action means onto demonstrated
// commands (half squared error per dimension). Log-std outputs carry no loss,
// so they keep their initialization. Returns the mean per-batch loss of the
// final epoch.
inline double fit_behavior_clone(GaussianPolicy& p, const std::vector<std::vector<double>>& obs,
                                 const std::vector<std::vector<double>>& labels, int epochs,
                                 int batch, double lr, Rng& rng) {
    if (obs.empty() || obs.size() != labels.size())
        throw UsageError("fit_behavior_clone: need matching non-empty obs and labels");
    if (epochs < 1 || batch < 1 || !(lr > 0.0))
        throw UsageError("fit_behavior_clone: epochs, batch, and lr must be positive");

    std::vector<std::size_t> idx(obs.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    double last = 0.0;
    for (int e = 0; e < epochs; ++e) {
        rng.shuffle(idx);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < idx.size(); start += static_cast<std::size_t>(batch)) {
            const std::size_t m =
                std::min<std::size_t>(static_cast<std::size_t>(batch), idx.size() - start);
            ParamGrads grads = grads_like(p.trunk);
            double loss = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                const std::size_t i = idx[start + k];
                GradientTape tape;
                const std::vector<double> out = net_forward(p.trunk, obs[i], &tape);
                std::vector<double> og(out.size(), 0.0);
                for (int j = 0; j < p.action_dim; ++j) {
                    const double mean = std::tanh(out[static_cast<std::size_t>(j)]);
                    const double diff = mean - labels[i][static_cast<std::size_t>(j)];
                    loss += 0.5 * diff * diff;
                    og[static_cast<std::size_t>(j)] = diff * (1.0 - mean * mean);
                }
                net_backward_accum(p.trunk, tape, og, grads, 1.0 / static_cast<double>(m));
            }
            mask_log_std_grads(p, grads);
            adam_step(p.trunk, grads, lr);
            epoch_loss += loss / static_cast<double>(m);
            ++batches;
        }
        last = epoch_loss / static_cast<double>(batches);
    }
    return last;
}

struct ValueNet {
    MlpNet net; // [obs, 128, 64, 1], tanh hidden, identity out
    std::string role;
};

inline ValueNet value_init(int obs_dim, const std::string& role, Rng& rng) {
    ValueNet v;
    v.net = net_init({obs_dim, 128, 64, 1}, {Act::tanh, Act::tanh, Act::identity}, rng);
    v.role = role;
    return v;
}

inline double value(const ValueNet& v, const std::vector<double>& obs) {
    return net_forward(v.net, obs)[0];
}

} // namespace vcat
