#include <cmath>
#include <vector>

#include "catch2/catch_amalgamated.hpp"
#include "vcat/advantage.hpp"
#include "vcat/policy.hpp"
#include "vcat/ppo.hpp"
#include "vcat/rng.hpp"

using namespace vcat;

namespace {

struct Batch {
    std::vector<std::vector<double>> obs_store;
    std::vector<std::vector<double>> pre_store;
    std::vector<const std::vector<double>*> obs;
    std::vector<const std::vector<double>*> presquash;
    std::vector<double> log_prob_old;
    std::vector<double> adv;
};

// Samples a one-armed-bandit batch: a fixed observation, 1-d actions drawn
// from the current policy, advantage = -(presquash - target)^2, normalized.
Batch bandit_batch(const GaussianPolicy& p, const std::vector<double>& obs, double target,
                   int n, Rng& rng) {
    Batch b;
    b.obs_store.reserve(n);
    b.pre_store.reserve(n);
    for (int i = 0; i < n; ++i) {
        const PolicySample s = sample_action(p, obs, rng);
        b.obs_store.push_back(obs);
        b.pre_store.push_back(s.presquash);
        b.log_prob_old.push_back(s.log_prob);
        const double d = s.presquash[0] - target;
        b.adv.push_back(-d * d);
    }
    for (int i = 0; i < n; ++i) {
        b.obs.push_back(&b.obs_store[i]);
        b.presquash.push_back(&b.pre_store[i]);
    }
    normalize_advantages(b.adv);
    return b;
}

} // namespace

TEST_CASE("clipped ascent moves the policy mean toward rewarded actions") {
    Rng rng(81);
    GaussianPolicy p = policy_init(2, 1, rng, -0.5);
    const std::vector<double> obs = {0.3, -0.2};
    const double target = 0.7;

    PpoConfig cfg;
    cfg.epochs_per_update = 4;
    cfg.batch_size = 128;

    Rng sample_rng(82);
    Rng update_rng(83);
    const double mean0 = policy_head(p, obs).mean[0];
    const double ls0 = policy_head(p, obs).log_std[0];
    for (int round = 0; round < 40; ++round) {
        Batch b = bandit_batch(p, obs, target, 256, sample_rng);
        const PpoStats stats =
            ppo_dual_update(p, b.obs, b.presquash, b.log_prob_old, b.adv, {}, cfg, update_rng);
        REQUIRE(std::isfinite(stats.objective));
    }
    const PolicyHead h = policy_head(p, obs);
    INFO("mean " << mean0 << " -> " << h.mean[0] << ", log_std " << ls0 << " -> "
                 << h.log_std[0]);
    CHECK(std::abs(h.mean[0] - target) < 0.1);
    CHECK(std::abs(h.mean[0] - target) < std::abs(mean0 - target));
    // Concentrating on the optimum shrinks the exploration noise.
    CHECK(h.log_std[0] < ls0);
}

TEST_CASE("the pull term pushes the policy away from the anti-target") {
    Rng rng(84);
    GaussianPolicy p = policy_init(2, 1, rng, -0.5);
    const std::vector<double> obs = {0.1, 0.4};
    const double anti = 0.5;

    PpoConfig cfg;
    cfg.epochs_per_update = 4;

    Rng sample_rng(85);
    Rng update_rng(86);
    const double d0 = std::abs(policy_head(p, obs).mean[0] - anti);
    for (int round = 0; round < 25; ++round) {
        Batch b = bandit_batch(p, obs, anti, 256, sample_rng);
        const std::vector<double> zero_push(b.adv.size(), 0.0);
        ppo_dual_update(p, b.obs, b.presquash, b.log_prob_old, zero_push, b.adv, cfg,
                        update_rng);
    }
    const double d1 = std::abs(policy_head(p, obs).mean[0] - anti);
    INFO("distance from anti-target " << d0 << " -> " << d1);
    CHECK(d1 > d0);
}

TEST_CASE("one full-batch update equals a hand-accumulated surrogate step") {
    Rng rng(87);
    GaussianPolicy p = policy_init(3, 2, rng, -0.5);
    GaussianPolicy clone = p;
    const int n = 16;

    Rng sample_rng(88);
    std::vector<std::vector<double>> obs_store, pre_store;
    std::vector<double> lp_old, adv;
    for (int i = 0; i < n; ++i) {
        std::vector<double> o = {sample_rng.uniform(-1.0, 1.0), sample_rng.uniform(-1.0, 1.0),
                                 sample_rng.uniform(-1.0, 1.0)};
        const PolicySample s = sample_action(p, o, sample_rng);
        obs_store.push_back(o);
        pre_store.push_back(s.presquash);
        lp_old.push_back(s.log_prob);
        adv.push_back(sample_rng.uniform(-1.0, 1.0));
    }
    std::vector<const std::vector<double>*> obs, pre;
    for (int i = 0; i < n; ++i) {
        obs.push_back(&obs_store[i]);
        pre.push_back(&pre_store[i]);
    }

    PpoConfig cfg;
    cfg.epochs_per_update = 1;
    cfg.batch_size = n; // one minibatch, one optimizer step
    Rng update_rng(89);
    ppo_dual_update(p, obs, pre, lp_old, adv, {}, cfg, update_rng);

    // Reference: accumulate the clipped-surrogate gradient sample by sample.
    ParamGrads g = grads_like(clone.trunk);
    GradientTape tape;
    const double inv_m = 1.0 / n;
    for (int i = 0; i < n; ++i) {
        const PolicyHead h = policy_head(clone, obs_store[i], &tape);
        const double lp = gaussian_log_prob(h, pre_store[i]);
        const double ratio = std::clamp(std::exp(lp - lp_old[i]), 1e-8, 1e8);
        const double clipped = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
        double d_lp = 0.0;
        if (ratio * adv[i] <= clipped * adv[i]) d_lp = adv[i] * ratio;
        const auto ograd = log_prob_output_grad(clone, h, pre_store[i], -d_lp * inv_m);
        net_backward_accum(clone.trunk, tape, ograd, g);
    }
    mask_log_std_grads(clone, g);
    adam_step(clone.trunk, g, cfg.lr_policy);
    clamp_log_std(clone);

    for (std::size_t l = 0; l < p.trunk.num_layers(); ++l) {
        for (std::size_t i = 0; i < p.trunk.weights[l].size(); ++i)
            REQUIRE(p.trunk.weights[l][i] ==
                    Catch::Approx(clone.trunk.weights[l][i]).margin(1e-12));
        for (std::size_t i = 0; i < p.trunk.biases[l].size(); ++i)
            REQUIRE(p.trunk.biases[l][i] ==
                    Catch::Approx(clone.trunk.biases[l][i]).margin(1e-12));
    }
}

TEST_CASE("log std weight rows stay zero through updates") {
    Rng rng(90);
    GaussianPolicy p = policy_init(2, 1, rng, -0.5);
    Rng sample_rng(91);
    Rng update_rng(92);
    PpoConfig cfg;
    cfg.epochs_per_update = 2;
    for (int round = 0; round < 3; ++round) {
        Batch b = bandit_batch(p, {0.0, 0.0}, 0.3, 64, sample_rng);
        ppo_dual_update(p, b.obs, b.presquash, b.log_prob_old, b.adv, {}, cfg, update_rng);
    }
    const std::size_t last = p.trunk.num_layers() - 1;
    const int cols = p.trunk.layer_dims[last];
    for (int c = 0; c < cols; ++c)
        REQUIRE(p.trunk.weights[last][static_cast<std::size_t>(1) * cols + c] == 0.0);
    const PolicyHead h = policy_head(p, {0.0, 0.0});
    CHECK(h.log_std[0] >= kLogStdMin);
    CHECK(h.log_std[0] <= kLogStdMax);
}

TEST_CASE("update statistics are sane right after sampling") {
    Rng rng(93);
    GaussianPolicy p = policy_init(2, 1, rng, -0.5);
    Rng sample_rng(94);
    Batch b = bandit_batch(p, {0.2, -0.1}, 0.5, 128, sample_rng);
    PpoConfig cfg;
    cfg.epochs_per_update = 1;
    Rng update_rng(95);
    const PpoStats stats =
        ppo_dual_update(p, b.obs, b.presquash, b.log_prob_old, b.adv, {}, cfg, update_rng);
    // First epoch starts from the sampling policy: every ratio is exactly 1.
    CHECK(stats.mean_ratio == Catch::Approx(1.0));
    CHECK(stats.clip_fraction == 0.0);
    CHECK(stats.policy_loss == Catch::Approx(-stats.objective));
}

TEST_CASE("identical seeds give bitwise identical updates") {
    const auto run = [] {
        Rng rng(96);
        GaussianPolicy p = policy_init(2, 1, rng, -0.5);
        Rng sample_rng(97);
        Rng update_rng(98);
        PpoConfig cfg;
        cfg.epochs_per_update = 3;
        for (int round = 0; round < 3; ++round) {
            Batch b = bandit_batch(p, {0.1, 0.1}, 0.4, 96, sample_rng);
            ppo_dual_update(p, b.obs, b.presquash, b.log_prob_old, b.adv, {}, cfg, update_rng);
        }
        return net_checksum(p.trunk);
    };
    CHECK(run() == run());
}

TEST_CASE("malformed update inputs are rejected") {
    Rng rng(99);
    GaussianPolicy p = policy_init(2, 1, rng);
    PpoConfig cfg;
    Rng update_rng(100);
    CHECK_THROWS_AS(ppo_dual_update(p, {}, {}, {}, {}, {}, cfg, update_rng), UsageError);

    Rng sample_rng(101);
    Batch b = bandit_batch(p, {0.0, 0.0}, 0.2, 8, sample_rng);
    std::vector<double> short_adv(4, 0.0);
    CHECK_THROWS_AS(
        ppo_dual_update(p, b.obs, b.presquash, b.log_prob_old, short_adv, {}, cfg, update_rng),
        UsageError);

    std::vector<double> bad_adv(8, std::numeric_limits<double>::quiet_NaN());
    CHECK_THROWS_AS(
        ppo_dual_update(p, b.obs, b.presquash, b.log_prob_old, bad_adv, {}, cfg, update_rng),
        TrainingError);
}

TEST_CASE("invalid configs are rejected up front") {
    PpoConfig cfg;
    cfg.clip_eps = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.gamma = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.lr_policy = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("value td epochs fit a two-state chain") {
    Rng rng(102);
    ValueNet v = value_init(2, "test", rng);
    const std::vector<std::vector<double>> obs_store = {{1.0, 0.0}, {0.0, 1.0}};
    const std::vector<std::vector<double>> next_store = {{0.0, 1.0}, {0.0, 0.0}};
    std::vector<const std::vector<double>*> obs = {&obs_store[0], &obs_store[1]};
    std::vector<const std::vector<double>*> obs_next = {&next_store[0], &next_store[1]};
    const std::vector<double> rewards = {0.3, -0.7};
    const std::vector<unsigned char> terminal = {0, 1};
    const double gamma = 0.9;

    Rng update_rng(103);
    double first = value_td_epochs(v, obs, obs_next, rewards, terminal, gamma, 3e-3, 4, 2,
                                   update_rng);
    bool converged = false;
    double last = first;
    for (int i = 0; i < 2000; ++i) {
        last = value_td_epochs(v, obs, obs_next, rewards, terminal, gamma, 3e-3, 4, 2,
                               update_rng);
        if (std::abs(value(v, obs_store[1]) + 0.7) < 5e-3 &&
            std::abs(value(v, obs_store[0]) - (0.3 + gamma * -0.7)) < 5e-3) {
            converged = true;
            break;
        }
    }
    REQUIRE(converged);
    CHECK(last < first);
    CHECK_THROWS_AS(
        value_td_epochs(v, {}, {}, {}, {}, gamma, 1e-3, 1, 1, update_rng), UsageError);
}
