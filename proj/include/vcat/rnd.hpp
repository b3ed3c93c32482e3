#pragma once

#include <cmath>
#include <vector>

#include "vcat/errors.hpp"
#include "vcat/net.hpp"
#include "vcat/rng.hpp"
#include "vcat/vuln.hpp"

namespace vcat {

// Welford accumulator for the intrinsic-reward scale.
struct RunningStd {
    std::int64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        count += 1;
        const double d = x - mean;
        mean += d / static_cast<double>(count);
        m2 += d * (x - mean);
    }

    double std() const {
        if (count < 2) return 0.0;
        return std::sqrt(m2 / static_cast<double>(count - 1));
    }
};

constexpr int kRndOutDim = 64;

// Novelty detector over VAN features: a frozen random target and a trained
// predictor; their output distance is the curiosity signal.
struct RndPair {
    MlpNet target;    // frozen after init
    MlpNet predictor; // distills the target on visited features
    RunningStd normalizer;
};

inline RndPair rnd_init(int feat_dim, Rng& rng) {
    const std::vector<int> dims{feat_dim, 128, 128, 128, kRndOutDim};
    const std::vector<Act> acts{Act::relu, Act::relu, Act::relu, Act::identity};
    RndPair r;
    Rng target_rng = rng.derive(0x7461726765ULL);
    Rng pred_rng = rng.derive(0x7072656463ULL);
    r.target = net_init(dims, acts, target_rng);
    r.predictor = net_init(dims, acts, pred_rng);
    return r;
}

inline double raw_intrinsic_reward(const RndPair& r, const std::vector<double>& feat) {
    const std::vector<double> t = net_forward(r.target, feat);
    const std::vector<double> p = net_forward(r.predictor, feat);
    double d2 = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double d = p[i] - t[i];
        d2 += d * d;
    }
    return d2;
}

// Raw squared-distance novelty divided by the running std of past raw values;
// the normalizer is fed the raw value afterwards. Until the normalizer has
// seen two samples (or while the spread is degenerate) the raw value passes
// through unscaled.
inline double intrinsic_reward(RndPair& r, const std::vector<double>& feat) {
    const double raw = raw_intrinsic_reward(r, feat);
    const double sd = r.normalizer.std();
    const double out = sd > 1e-12 ? raw / sd : raw;
    r.normalizer.add(raw);
    return out;
}

// One Adam step distilling the target into the predictor on a feature batch.
inline double rnd_update(RndPair& r, const std::vector<std::vector<double>>& feats, double lr) {
    if (feats.empty()) throw UsageError("rnd_update: empty batch");

    ParamGrads g = grads_like(r.predictor);
    GradientTape tape;
    double loss = 0.0;
    const double inv_n = 1.0 / static_cast<double>(feats.size());
    std::vector<double> ograd(kRndOutDim);
    for (const std::vector<double>& f : feats) {
        const std::vector<double> t = net_forward(r.target, f);
        const std::vector<double> p = net_forward(r.predictor, f, &tape);
        double d2 = 0.0;
        for (int i = 0; i < kRndOutDim; ++i) {
            const double d = p[i] - t[i];
            d2 += d * d;
            ograd[i] = 2.0 * d * inv_n;
        }
        loss += d2 * inv_n;
        net_backward_accum(r.predictor, tape, ograd, g);
    }
    if (!std::isfinite(loss)) throw NumericError("rnd_update: non-finite loss");
    adam_step(r.predictor, g, lr);
    return loss;
}

} // namespace vcat
