#include <cmath>
#include <vector>

#include "catch2/catch_amalgamated.hpp"
#include "vcat/policy.hpp"
#include "vcat/rng.hpp"

using namespace vcat;

namespace {

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

PolicyHead head_from_output(int action_dim, const std::vector<double>& out) {
    PolicyHead h;
    h.mean.resize(action_dim);
    h.log_std.resize(action_dim);
    for (int j = 0; j < action_dim; ++j) {
        h.mean[j] = std::tanh(out[j]);
        h.log_std[j] = std::clamp(out[action_dim + j], kLogStdMin, kLogStdMax);
    }
    return h;
}

} // namespace

TEST_CASE("log prob matches the closed-form normal density") {
    PolicyHead h;
    h.mean = {0.3};
    h.log_std = {-0.7};
    const double sigma = std::exp(-0.7);
    for (double x : {-2.0, -0.5, 0.3, 0.9, 4.0}) {
        const double want =
            std::log(1.0 / (sigma * std::sqrt(2.0 * M_PI))) -
            0.5 * (x - 0.3) * (x - 0.3) / (sigma * sigma);
        CHECK(rel_err(gaussian_log_prob(h, {x}), want) < 1e-12);
    }
}

TEST_CASE("multidimensional log prob is the sum of per-dimension terms") {
    PolicyHead h2;
    h2.mean = {0.1, -0.4};
    h2.log_std = {-0.2, 0.3};
    PolicyHead a{{0.1}, {-0.2}}, b{{-0.4}, {0.3}};
    const double got = gaussian_log_prob(h2, {0.6, -1.1});
    CHECK(got == Catch::Approx(gaussian_log_prob(a, {0.6}) + gaussian_log_prob(b, {-1.1})));
}

TEST_CASE("the density integrates to one") {
    PolicyHead h;
    h.mean = {-0.25};
    h.log_std = {0.4};
    const double sigma = std::exp(0.4);
    const double lo = h.mean[0] - 10.0 * sigma;
    const double hi = h.mean[0] + 10.0 * sigma;
    const int n = 4000; // even
    const double dx = (hi - lo) / n;
    double integral = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double x = lo + i * dx;
        const double f = std::exp(gaussian_log_prob(h, {x}));
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        integral += w * f;
    }
    integral *= dx / 3.0;
    CHECK(integral == Catch::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("policy head squashes the mean and clamps the log std") {
    Rng rng(21);
    GaussianPolicy p = policy_init(3, 2, rng, -0.5);
    const std::vector<double> obs = {0.2, -0.1, 0.4};
    const PolicyHead h = policy_head(p, obs);
    REQUIRE(h.mean.size() == 2);
    for (double m : h.mean) {
        CHECK(m > -1.0);
        CHECK(m < 1.0);
    }
    CHECK(h.log_std[0] == Catch::Approx(-0.5));
    CHECK(h.log_std[1] == Catch::Approx(-0.5));
}

TEST_CASE("log std is state independent by construction") {
    Rng rng(22);
    GaussianPolicy p = policy_init(5, 2, rng);
    Rng or_(23);
    std::vector<double> o1(5), o2(5);
    for (double& x : o1) x = or_.uniform(-1.0, 1.0);
    for (double& x : o2) x = or_.uniform(-1.0, 1.0);
    const PolicyHead h1 = policy_head(p, o1);
    const PolicyHead h2 = policy_head(p, o2);
    CHECK(h1.log_std[0] == h2.log_std[0]);
    CHECK(h1.log_std[1] == h2.log_std[1]);
    CHECK(h1.mean != h2.mean);

    const std::size_t last = p.trunk.num_layers() - 1;
    const int cols = p.trunk.layer_dims[last];
    for (int r = p.action_dim; r < 2 * p.action_dim; ++r)
        for (int c = 0; c < cols; ++c)
            REQUIRE(p.trunk.weights[last][static_cast<std::size_t>(r) * cols + c] == 0.0);
}

TEST_CASE("an extreme init log std is projected into bounds") {
    Rng rng(24);
    GaussianPolicy p = policy_init(3, 1, rng, -7.0);
    CHECK(policy_head(p, {0.0, 0.0, 0.0}).log_std[0] == kLogStdMin);
    GaussianPolicy q = policy_init(3, 1, rng, 4.0);
    CHECK(policy_head(q, {0.0, 0.0, 0.0}).log_std[0] == kLogStdMax);
}

TEST_CASE("sampling follows the head distribution") {
    Rng rng(25);
    GaussianPolicy p = policy_init(3, 1, rng, -0.5);
    const std::vector<double> obs = {0.1, 0.2, -0.3};
    const PolicyHead h = policy_head(p, obs);
    const double sigma = std::exp(h.log_std[0]);

    Rng sample_rng(26);
    const int n = 30000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const PolicySample s = sample_action(p, obs, sample_rng);
        sum += s.presquash[0];
        sq += s.presquash[0] * s.presquash[0];
        REQUIRE(s.action[0] >= -1.0);
        REQUIRE(s.action[0] <= 1.0);
        REQUIRE(s.log_prob == gaussian_log_prob(h, s.presquash));
    }
    const double mean = sum / n;
    const double sd = std::sqrt(sq / n - mean * mean);
    CHECK(mean == Catch::Approx(h.mean[0]).margin(4.0 * sigma / std::sqrt(double(n))));
    CHECK(sd == Catch::Approx(sigma).epsilon(0.03));
}

TEST_CASE("actions saturate when the mean sits near the edge") {
    Rng rng(27);
    GaussianPolicy p = policy_init(3, 1, rng, -0.5);
    const std::size_t last = p.trunk.num_layers() - 1;
    p.trunk.biases[last][0] += 3.0;
    p.trunk.version += 1;
    const std::vector<double> obs = {0.0, 0.0, 0.0};
    Rng sample_rng(28);
    int clamped = 0;
    for (int i = 0; i < 500; ++i) {
        const PolicySample s = sample_action(p, obs, sample_rng);
        if (s.action[0] == 1.0) {
            ++clamped;
            CHECK(s.presquash[0] >= 1.0);
        }
    }
    CHECK(clamped > 50);
}

TEST_CASE("sampling is reproducible from the stream seed") {
    Rng rng(29);
    GaussianPolicy p = policy_init(4, 2, rng);
    const std::vector<double> obs = {0.1, -0.2, 0.3, 0.0};
    Rng a(30), b(30);
    for (int i = 0; i < 20; ++i) {
        const PolicySample sa = sample_action(p, obs, a);
        const PolicySample sb = sample_action(p, obs, b);
        REQUIRE(sa.presquash == sb.presquash);
        REQUIRE(sa.log_prob == sb.log_prob);
    }
}

TEST_CASE("importance ratio is exactly one for identical policies and saturates") {
    Rng rng(31);
    const GaussianPolicy p = policy_init(3, 2, rng);
    const std::vector<double> obs = {0.2, 0.1, -0.4};
    const std::vector<double> act = {0.5, -0.5};
    CHECK(importance_ratio(p, p, obs, act) == 1.0);

    Rng rng2(32);
    const GaussianPolicy narrow = policy_init(3, 1, rng2, kLogStdMin);
    const GaussianPolicy wide = policy_init(3, 1, rng2, kLogStdMax);
    const std::vector<double> far = {3.0};
    CHECK(importance_ratio(wide, narrow, obs, far) == 1e8);
    CHECK(importance_ratio(narrow, wide, obs, far) == 1e-8);
}

TEST_CASE("output gradient of the log prob matches finite differences") {
    const int d = 2;
    const std::vector<double> out0 = {0.3, -0.4, -0.2, 0.5};
    const std::vector<double> presquash = {0.7, -1.2};
    GaussianPolicy p;
    p.action_dim = d;

    const PolicyHead h = head_from_output(d, out0);
    const std::vector<double> g = log_prob_output_grad(p, h, presquash, 1.0);
    REQUIRE(g.size() == 4);

    const double eps = 1e-6;
    for (int i = 0; i < 4; ++i) {
        std::vector<double> up = out0, dn = out0;
        up[i] += eps;
        dn[i] -= eps;
        const double fu = gaussian_log_prob(head_from_output(d, up), presquash);
        const double fd = gaussian_log_prob(head_from_output(d, dn), presquash);
        CHECK(rel_err((fu - fd) / (2.0 * eps), g[i]) < 1e-5);
    }

    const std::vector<double> scaled = log_prob_output_grad(p, h, presquash, -2.5);
    for (int i = 0; i < 4; ++i) CHECK(scaled[i] == Catch::Approx(-2.5 * g[i]));
}

TEST_CASE("trunk parameter gradients of the log prob match finite differences") {
    Rng rng(33);
    GaussianPolicy p = policy_init(4, 2, rng);
    const std::vector<double> obs = {0.3, -0.2, 0.15, 0.6};
    const std::vector<double> presquash = {0.4, -0.9};

    GradientTape tape;
    const PolicyHead h = policy_head(p, obs, &tape);
    ParamGrads g = grads_like(p.trunk);
    net_backward_accum(p.trunk, tape, log_prob_output_grad(p, h, presquash, 1.0), g);

    const double eps = 1e-5;
    Rng pick(34);
    for (int k = 0; k < 30; ++k) {
        const std::size_t l = pick.uniform_index(p.trunk.num_layers());
        const std::size_t i = pick.uniform_index(p.trunk.weights[l].size());
        const double keep = p.trunk.weights[l][i];
        p.trunk.weights[l][i] = keep + eps;
        const double fu = log_prob(p, obs, presquash);
        p.trunk.weights[l][i] = keep - eps;
        const double fd = log_prob(p, obs, presquash);
        p.trunk.weights[l][i] = keep;
        const double want = (fu - fd) / (2.0 * eps);
        const double got = g.d_w[l][i];
        if (std::abs(want) < 1e-9 && std::abs(got) < 1e-9) continue;
        CHECK(rel_err(want, got) < 1e-4);
    }
}

TEST_CASE("masking zeroes exactly the log std weight rows") {
    Rng rng(35);
    GaussianPolicy p = policy_init(3, 2, rng);
    ParamGrads g = grads_like(p.trunk);
    for (auto& v : g.d_w)
        for (double& x : v) x = 1.0;
    for (auto& v : g.d_b)
        for (double& x : v) x = 1.0;
    mask_log_std_grads(p, g);

    const std::size_t last = p.trunk.num_layers() - 1;
    const int cols = p.trunk.layer_dims[last];
    for (int r = 0; r < 2 * p.action_dim; ++r)
        for (int c = 0; c < cols; ++c) {
            const double v = g.d_w[last][static_cast<std::size_t>(r) * cols + c];
            if (r < p.action_dim)
                REQUIRE(v == 1.0);
            else
                REQUIRE(v == 0.0);
        }
    // Bias gradients and earlier layers are untouched.
    for (double x : g.d_b[last]) REQUIRE(x == 1.0);
    for (double x : g.d_w[0]) REQUIRE(x == 1.0);
}

TEST_CASE("clamp log std projects runaway biases back into range") {
    Rng rng(36);
    GaussianPolicy p = policy_init(3, 1, rng);
    const std::size_t last = p.trunk.num_layers() - 1;
    p.trunk.biases[last][1] = 9.0;
    clamp_log_std(p);
    CHECK(p.trunk.biases[last][1] == kLogStdMax);
    p.trunk.biases[last][1] = -44.0;
    clamp_log_std(p);
    CHECK(p.trunk.biases[last][1] == kLogStdMin);
}

TEST_CASE("value net maps an observation to one number") {
    Rng rng(37);
    const ValueNet v = value_init(11, "victim", rng);
    CHECK(v.net.layer_dims == std::vector<int>{11, 128, 64, 1});
    CHECK(v.role == "victim");
    const double out = value(v, std::vector<double>(11, 0.1));
    CHECK(std::isfinite(out));
}
