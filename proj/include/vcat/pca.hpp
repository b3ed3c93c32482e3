#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "vcat/errors.hpp"

namespace vcat {

struct PcaResult {
    std::vector<std::vector<double>> components; // rows, unit length, by variance
    std::vector<double> explained_variance;
    std::vector<double> explained_variance_ratio;
    std::vector<double> mean;
    std::vector<std::vector<double>> projected; // n x n_components
};

namespace detail {

// Cyclic Jacobi eigendecomposition of a symmetric matrix (row-major, d x d).
inline void jacobi_eigen(std::vector<double>& a, int d, std::vector<double>& eigvals,
                         std::vector<double>& eigvecs) {
    eigvecs.assign(static_cast<std::size_t>(d) * d, 0.0);
    for (int i = 0; i < d; ++i) eigvecs[static_cast<std::size_t>(i) * d + i] = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < d; ++p)
            for (int q = p + 1; q < d; ++q) off += a[static_cast<std::size_t>(p) * d + q] *
                                                   a[static_cast<std::size_t>(p) * d + q];
        if (off < 1e-24) break;

        for (int p = 0; p < d; ++p) {
            for (int q = p + 1; q < d; ++q) {
                const double apq = a[static_cast<std::size_t>(p) * d + q];
                if (std::abs(apq) < 1e-300) continue;
                const double app = a[static_cast<std::size_t>(p) * d + p];
                const double aqq = a[static_cast<std::size_t>(q) * d + q];
                const double theta = 0.5 * (aqq - app) / apq;
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (int k = 0; k < d; ++k) {
                    const double akp = a[static_cast<std::size_t>(k) * d + p];
                    const double akq = a[static_cast<std::size_t>(k) * d + q];
                    a[static_cast<std::size_t>(k) * d + p] = c * akp - s * akq;
                    a[static_cast<std::size_t>(k) * d + q] = s * akp + c * akq;
                }
                for (int k = 0; k < d; ++k) {
                    const double apk = a[static_cast<std::size_t>(p) * d + k];
                    const double aqk = a[static_cast<std::size_t>(q) * d + k];
                    a[static_cast<std::size_t>(p) * d + k] = c * apk - s * aqk;
                    a[static_cast<std::size_t>(q) * d + k] = s * apk + c * aqk;
                }
                for (int k = 0; k < d; ++k) {
                    const double vkp = eigvecs[static_cast<std::size_t>(k) * d + p];
                    const double vkq = eigvecs[static_cast<std::size_t>(k) * d + q];
                    eigvecs[static_cast<std::size_t>(k) * d + p] = c * vkp - s * vkq;
                    eigvecs[static_cast<std::size_t>(k) * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    eigvals.resize(d);
    for (int i = 0; i < d; ++i) eigvals[i] = a[static_cast<std::size_t>(i) * d + i];
}

} // namespace detail

inline PcaResult pca_project(const std::vector<std::vector<double>>& rows, int n_components) {
    if (rows.empty()) throw UsageError("pca_project: empty input");
    const int d = static_cast<int>(rows.front().size());
    if (d < 1 || n_components < 1 || n_components > d)
        throw UsageError("pca_project: bad dimensions");
    for (const auto& r : rows)
        if (static_cast<int>(r.size()) != d) throw UsageError("pca_project: ragged input");

    PcaResult out;
    out.mean.assign(d, 0.0);
    for (const auto& r : rows)
        for (int j = 0; j < d; ++j) out.mean[j] += r[j];
    for (int j = 0; j < d; ++j) out.mean[j] /= static_cast<double>(rows.size());

    std::vector<double> cov(static_cast<std::size_t>(d) * d, 0.0);
    for (const auto& r : rows)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                cov[static_cast<std::size_t>(i) * d + j] +=
                    (r[i] - out.mean[i]) * (r[j] - out.mean[j]);
    const double denom = rows.size() > 1 ? static_cast<double>(rows.size() - 1) : 1.0;
    for (double& c : cov) c /= denom;

    std::vector<double> eigvals, eigvecs;
    detail::jacobi_eigen(cov, d, eigvals, eigvecs);

    std::vector<int> order(d);
    for (int i = 0; i < d; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](int x, int y) { return eigvals[x] > eigvals[y]; });

    double total = 0.0;
    for (double e : eigvals) total += std::max(e, 0.0);
    if (total <= 0.0) total = 1.0;

    for (int k = 0; k < n_components; ++k) {
        const int col = order[k];
        std::vector<double> comp(d);
        for (int i = 0; i < d; ++i) comp[i] = eigvecs[static_cast<std::size_t>(i) * d + col];
        // deterministic sign: make the largest-magnitude entry positive
        int big = 0;
        for (int i = 1; i < d; ++i)
            if (std::abs(comp[i]) > std::abs(comp[big])) big = i;
        if (comp[big] < 0.0)
            for (double& x : comp) x = -x;
        out.components.push_back(comp);
        out.explained_variance.push_back(std::max(eigvals[col], 0.0));
        out.explained_variance_ratio.push_back(std::max(eigvals[col], 0.0) / total);
    }

    out.projected.reserve(rows.size());
    for (const auto& r : rows) {
        std::vector<double> p(n_components, 0.0);
        for (int k = 0; k < n_components; ++k)
            for (int j = 0; j < d; ++j) p[k] += (r[j] - out.mean[j]) * out.components[k][j];
        out.projected.push_back(std::move(p));
    }
    return out;
}

} // namespace vcat
