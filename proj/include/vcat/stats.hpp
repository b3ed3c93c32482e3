#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "vcat/errors.hpp"

namespace vcat {

// Mann-Whitney U for "a tends to exceed b", ties counted half.
inline double mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b) {
    double u = 0.0;
    for (double x : a)
        for (double y : b) {
            if (x > y)
                u += 1.0;
            else if (x == y)
                u += 0.5;
        }
    return u;
}

// One-sided exact p-value P(U >= observed) under random group assignment.
// Enumerates all C(n+m, n) splits when n + m <= 20, otherwise falls back to
// the normal approximation with continuity correction.
inline double mann_whitney_p_greater(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw UsageError("mann_whitney: empty sample");
    const std::size_t n = a.size(), m = b.size();
    const double u_obs = mann_whitney_u(a, b);

    if (n + m <= 20) {
        std::vector<double> pool(a);
        pool.insert(pool.end(), b.begin(), b.end());
        const std::uint32_t total = 1u << (n + m);
        std::int64_t count = 0, extreme = 0;
        for (std::uint32_t mask = 0; mask < total; ++mask) {
            if (static_cast<std::size_t>(__builtin_popcount(mask)) != n) continue;
            std::vector<double> ga, gb;
            for (std::size_t i = 0; i < n + m; ++i)
                (mask >> i & 1u ? ga : gb).push_back(pool[i]);
            if (mann_whitney_u(ga, gb) >= u_obs - 1e-12) ++extreme;
            ++count;
        }
        return static_cast<double>(extreme) / static_cast<double>(count);
    }

    const double mu = 0.5 * static_cast<double>(n) * static_cast<double>(m);
    const double sigma =
        std::sqrt(static_cast<double>(n) * static_cast<double>(m) * (n + m + 1) / 12.0);
    const double z = (u_obs - mu - 0.5) / sigma;
    return 0.5 * std::erfc(z / std::sqrt(2.0));
}

// One-sided sign test: P(X >= k) for X ~ Binomial(n, 1/2).
inline double sign_test_p(int k, int n) {
    if (n < 1 || k < 0 || k > n) throw UsageError("sign_test: bad counts");
    double p = 0.0;
    for (int i = k; i <= n; ++i) {
        double c = 1.0;
        for (int j = 0; j < i; ++j) c = c * (n - j) / (j + 1);
        p += c;
    }
    return p * std::pow(0.5, n);
}

namespace detail {

inline double gamma_p_series(double s, double x) {
    double sum = 1.0 / s, term = sum;
    for (int k = 1; k < 500; ++k) {
        term *= x / (s + k);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

inline double gamma_q_cf(double s, double x) {
    double b = x + 1.0 - s, c = 1e300, d = 1.0 / b, h = d;
    for (int k = 1; k < 500; ++k) {
        const double an = -static_cast<double>(k) * (k - s);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::abs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return h * std::exp(-x + s * std::log(x) - std::lgamma(s));
}

} // namespace detail

// Upper regularized incomplete gamma Q(s, x).
inline double gamma_q(double s, double x) {
    if (x < 0.0 || s <= 0.0) throw UsageError("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    if (x < s + 1.0) return 1.0 - detail::gamma_p_series(s, x);
    return detail::gamma_q_cf(s, x);
}

// Chi-square survival function with df degrees of freedom.
inline double chi2_sf(double x, int df) {
    if (df < 1) throw UsageError("chi2_sf: df must be >= 1");
    return gamma_q(0.5 * df, 0.5 * x);
}

// Pearson chi-square p-value for equal-probability bins.
inline double chi2_uniform_p(const std::vector<int>& bin_counts) {
    if (bin_counts.size() < 2) throw UsageError("chi2_uniform_p: need >= 2 bins");
    double n = 0.0;
    for (int c : bin_counts) n += c;
    const double expected = n / static_cast<double>(bin_counts.size());
    double stat = 0.0;
    for (int c : bin_counts) stat += (c - expected) * (c - expected) / expected;
    return chi2_sf(stat, static_cast<int>(bin_counts.size()) - 1);
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double std_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

inline double mann_whitney_p_two_sided(const std::vector<double>& x,
                                       const std::vector<double>& y) {
    const double pg = mann_whitney_p_greater(x, y);
    const double pl = mann_whitney_p_greater(y, x);
    return std::min(1.0, 2.0 * std::min(pg, pl));
}

} // namespace vcat
