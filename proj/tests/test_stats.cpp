#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "vcat/rng.hpp"
#include "vcat/stats.hpp"

using namespace vcat;

namespace {

// Independent exact enumeration: recursive index-combination walk instead of
// the bitmask scan used by the implementation.
void walk_splits(const std::vector<double>& pool, std::size_t next, std::vector<double>& ga,
                 std::vector<double>& gb, std::size_t na, double u_obs, long& total,
                 long& extreme) {
    if (ga.size() == na && ga.size() + gb.size() == pool.size()) {
        ++total;
        if (mann_whitney_u(ga, gb) >= u_obs - 1e-12) ++extreme;
        return;
    }
    if (next == pool.size()) return;
    if (ga.size() < na) {
        ga.push_back(pool[next]);
        walk_splits(pool, next + 1, ga, gb, na, u_obs, total, extreme);
        ga.pop_back();
    }
    gb.push_back(pool[next]);
    walk_splits(pool, next + 1, ga, gb, na, u_obs, total, extreme);
    gb.pop_back();
}

double enumerated_p_greater(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> pool(a);
    pool.insert(pool.end(), b.begin(), b.end());
    std::vector<double> ga, gb;
    long total = 0, extreme = 0;
    walk_splits(pool, 0, ga, gb, a.size(), mann_whitney_u(a, b), total, extreme);
    return static_cast<double>(extreme) / static_cast<double>(total);
}

} // namespace

TEST_CASE("rank-sum statistic counts wins with half credit for ties") {
    REQUIRE(mann_whitney_u({3, 4}, {1, 2}) == 4.0);
    REQUIRE(mann_whitney_u({1, 2}, {3, 4}) == 0.0);
    REQUIRE(mann_whitney_u({1, 3}, {1, 2}) == 2.5);
    REQUIRE(mann_whitney_u({5}, {5}) == 0.5);

    Rng rng(31);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> a, b;
        const int n = 1 + static_cast<int>(rng.uniform_index(5));
        const int m = 1 + static_cast<int>(rng.uniform_index(5));
        for (int i = 0; i < n; ++i) a.push_back(rng.uniform(-2.0, 2.0));
        for (int i = 0; i < m; ++i) b.push_back(rng.uniform(-2.0, 2.0));
        REQUIRE(mann_whitney_u(a, b) + mann_whitney_u(b, a) ==
                Catch::Approx(static_cast<double>(n * m)).margin(1e-12));
    }
}

TEST_CASE("exact one-sided p-values match hand enumeration") {
    REQUIRE(mann_whitney_p_greater({2}, {1}) == Catch::Approx(0.5));
    REQUIRE(mann_whitney_p_greater({1}, {2}) == Catch::Approx(1.0));
    REQUIRE(mann_whitney_p_greater({3, 4}, {1, 2}) == Catch::Approx(1.0 / 6.0));
    REQUIRE(mann_whitney_p_greater({1, 1}, {1, 1}) == Catch::Approx(1.0));
    REQUIRE(mann_whitney_p_greater({6, 7, 8, 9, 10}, {1, 2, 3, 4, 5}) ==
            Catch::Approx(1.0 / 252.0));

    REQUIRE_THROWS_AS(mann_whitney_p_greater({}, {1.0}), UsageError);
    REQUIRE_THROWS_AS(mann_whitney_p_greater({1.0}, {}), UsageError);
}

TEST_CASE("exact branch agrees with an independent enumeration") {
    Rng rng(77);
    for (int rep = 0; rep < 25; ++rep) {
        std::vector<double> a, b;
        const int n = 1 + static_cast<int>(rng.uniform_index(4));
        const int m = 1 + static_cast<int>(rng.uniform_index(4));
        for (int i = 0; i < n; ++i) a.push_back(std::round(rng.uniform(0.0, 4.0)));
        for (int i = 0; i < m; ++i) b.push_back(std::round(rng.uniform(0.0, 4.0)));
        REQUIRE(mann_whitney_p_greater(a, b) ==
                Catch::Approx(enumerated_p_greater(a, b)).margin(1e-12));
    }
}

TEST_CASE("large samples fall back to the normal tail") {
    std::vector<double> lo, hi;
    for (int i = 0; i < 15; ++i) {
        lo.push_back(static_cast<double>(i));
        hi.push_back(100.0 + i);
    }

    // complete separation: U = 225, mu = 112.5, sigma = sqrt(225 * 31 / 12)
    const double sigma = std::sqrt(225.0 * 31.0 / 12.0);
    const double z = (225.0 - 112.5 - 0.5) / sigma;
    const double expected = 0.5 * std::erfc(z / std::sqrt(2.0));
    REQUIRE(mann_whitney_p_greater(hi, lo) == Catch::Approx(expected).epsilon(1e-12));
    REQUIRE(mann_whitney_p_greater(hi, lo) < 1e-4);
    REQUIRE(mann_whitney_p_greater(lo, hi) > 0.999);

    // same distribution: nothing to detect
    std::vector<double> x(lo), y(lo);
    REQUIRE(mann_whitney_p_greater(x, y) > 0.3);
    REQUIRE(mann_whitney_p_greater(x, y) < 0.7);
}

TEST_CASE("two-sided p doubles the smaller tail and saturates") {
    REQUIRE(mann_whitney_p_two_sided({3, 4}, {1, 2}) == Catch::Approx(1.0 / 3.0));
    REQUIRE(mann_whitney_p_two_sided({1, 2}, {3, 4}) == Catch::Approx(1.0 / 3.0));
    REQUIRE(mann_whitney_p_two_sided({1, 2}, {1, 2}) == 1.0);
}

TEST_CASE("sign test sums binomial tails") {
    REQUIRE(sign_test_p(10, 10) == Catch::Approx(std::pow(0.5, 10)).epsilon(1e-12));
    REQUIRE(sign_test_p(0, 10) == Catch::Approx(1.0).epsilon(1e-12));
    REQUIRE(sign_test_p(8, 10) == Catch::Approx(56.0 / 1024.0).epsilon(1e-12));
    REQUIRE(sign_test_p(3, 5) == Catch::Approx(0.5).epsilon(1e-12));
    REQUIRE(sign_test_p(9, 10) == Catch::Approx(11.0 / 1024.0).epsilon(1e-12));

    REQUIRE_THROWS_AS(sign_test_p(1, 0), UsageError);
    REQUIRE_THROWS_AS(sign_test_p(-1, 5), UsageError);
    REQUIRE_THROWS_AS(sign_test_p(6, 5), UsageError);
}

TEST_CASE("chi-square survival matches closed forms") {
    // two degrees of freedom collapses to exp(-x/2)
    for (double x : {0.5, 1.0, 2.0, 5.0, 10.0})
        REQUIRE(chi2_sf(x, 2) == Catch::Approx(std::exp(-0.5 * x)).epsilon(1e-10));

    // one degree of freedom is the folded normal tail
    for (double x : {0.1, 1.0, 3.841459})
        REQUIRE(chi2_sf(x, 1) == Catch::Approx(std::erfc(std::sqrt(0.5 * x))).epsilon(1e-9));
    REQUIRE(chi2_sf(3.841459, 1) == Catch::Approx(0.05).epsilon(1e-4));

    // four degrees of freedom: Q(2, t) = exp(-t) (1 + t)
    for (double x : {1.0, 2.0, 6.0})
        REQUIRE(chi2_sf(x, 4) ==
                Catch::Approx(std::exp(-0.5 * x) * (1.0 + 0.5 * x)).epsilon(1e-10));

    REQUIRE(chi2_sf(0.0, 3) == 1.0);
    REQUIRE(chi2_sf(5.991465, 2) == Catch::Approx(0.05).epsilon(1e-4));

    REQUIRE_THROWS_AS(chi2_sf(1.0, 0), UsageError);
    REQUIRE_THROWS_AS(gamma_q(-1.0, 1.0), UsageError);
    REQUIRE_THROWS_AS(gamma_q(1.0, -1.0), UsageError);
}

TEST_CASE("uniformity test on equal-probability bins") {
    REQUIRE(chi2_uniform_p({25, 25, 25, 25}) == Catch::Approx(1.0));

    // {30, 20}: statistic 2 on one degree of freedom
    REQUIRE(chi2_uniform_p({30, 20}) == Catch::Approx(std::erfc(1.0)).epsilon(1e-9));

    // gross imbalance is flagged
    REQUIRE(chi2_uniform_p({100, 0, 0, 0}) < 1e-10);

    REQUIRE_THROWS_AS(chi2_uniform_p({5}), UsageError);
}

TEST_CASE("mean and sample deviation helpers") {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    REQUIRE(mean_of(v) == Catch::Approx(2.5));
    REQUIRE(std_of(v) == Catch::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-12));
    REQUIRE(mean_of({}) == 0.0);
    REQUIRE(std_of({7.0}) == 0.0);
}
