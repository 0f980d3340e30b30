#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include <json.hpp>

#include "headsynth/errors.hpp"
#include "headsynth/rng.hpp"
#include "headsynth/windows.hpp"

namespace headsynth {

struct PcaProjection {
    std::size_t dim = 0; // flattened window dimension (window_len * 3)
    std::vector<double> mean;
    std::array<std::vector<double>, 2> components; // orthonormal, eigenvalue-ordered
    std::array<double, 2> explained_variance{};
    std::vector<std::array<double, 2>> real_points;
    std::vector<std::array<double, 2>> synthetic_points;
};

namespace detail {

// Cyclic Jacobi eigendecomposition of a symmetric matrix (row-major n x n).
// Returns eigenvalues; `vectors` columns hold the corresponding eigenvectors.
inline std::vector<double> jacobi_eigen(std::vector<double> a, std::size_t n,
                                        std::vector<double>& vectors) {
    vectors.assign(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) vectors[i * n + i] = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                const double app = a[p * n + p], aqq = a[q * n + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = vectors[k * n + p], vkq = vectors[k * n + q];
                    vectors[k * n + p] = c * vkp - s * vkq;
                    vectors[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a[i * n + i];
    return eig;
}

inline std::vector<std::size_t> subsample_indices(std::size_t total, std::size_t n, Rng& rng) {
    auto perm = rng.permutation(total);
    perm.resize(n);
    return perm;
}

} // namespace detail

// Flattens windows to window_len*3 vectors, draws equal-size seeded
// subsamples from the two sets, centers on the pooled mean, and projects both
// onto the top-2 principal directions of the pooled covariance.
inline PcaProjection pca_fit_project(const WindowSet& real, const WindowSet& synthetic,
                                     std::size_t sample_n, std::uint64_t seed = 7) {
    if (real.num_windows == 0 || synthetic.num_windows == 0)
        throw ArgumentError("pca_fit_project: empty window set");
    if (real.window_len != synthetic.window_len)
        throw ArgumentError("pca_fit_project: window_len mismatch");
    if (sample_n < 2) throw ArgumentError("pca_fit_project: sample_n must be >= 2");
    if (sample_n > real.num_windows || sample_n > synthetic.num_windows)
        throw ArgumentError("pca_fit_project: sample_n exceeds a set size");

    const std::size_t dim = real.window_len * 3;
    Rng rng(seed);
    auto ridx = detail::subsample_indices(real.num_windows, sample_n, rng);
    auto sidx = detail::subsample_indices(synthetic.num_windows, sample_n, rng);

    PcaProjection proj;
    proj.dim = dim;
    proj.mean.assign(dim, 0.0);
    auto add_mean = [&](const WindowSet& w, const std::vector<std::size_t>& idx) {
        for (std::size_t i : idx) {
            auto win = w.window(i);
            for (std::size_t d = 0; d < dim; ++d) proj.mean[d] += win[d];
        }
    };
    add_mean(real, ridx);
    add_mean(synthetic, sidx);
    const double inv_total = 1.0 / static_cast<double>(2 * sample_n);
    for (double& m : proj.mean) m *= inv_total;

    // Pooled covariance (divisor count-1).
    std::vector<double> cov(dim * dim, 0.0);
    std::vector<double> centered(dim);
    auto accumulate = [&](const WindowSet& w, const std::vector<std::size_t>& idx) {
        for (std::size_t i : idx) {
            auto win = w.window(i);
            for (std::size_t d = 0; d < dim; ++d) centered[d] = win[d] - proj.mean[d];
            for (std::size_t p = 0; p < dim; ++p) {
                const double cp = centered[p];
                for (std::size_t q = p; q < dim; ++q) cov[p * dim + q] += cp * centered[q];
            }
        }
    };
    accumulate(real, ridx);
    accumulate(synthetic, sidx);
    const double inv_n1 = 1.0 / static_cast<double>(2 * sample_n - 1);
    for (std::size_t p = 0; p < dim; ++p)
        for (std::size_t q = p; q < dim; ++q) {
            cov[p * dim + q] *= inv_n1;
            cov[q * dim + p] = cov[p * dim + q];
        }

    std::vector<double> vectors;
    std::vector<double> eig = detail::jacobi_eigen(cov, dim, vectors);

    // Top-2 eigenpairs.
    std::array<std::size_t, 2> top{0, 0};
    for (int c = 0; c < 2; ++c) {
        double best = -1.0;
        for (std::size_t i = 0; i < dim; ++i) {
            if (c == 1 && i == top[0]) continue;
            if (eig[i] > best) {
                best = eig[i];
                top[static_cast<std::size_t>(c)] = i;
            }
        }
    }
    for (int c = 0; c < 2; ++c) {
        auto& comp = proj.components[static_cast<std::size_t>(c)];
        comp.resize(dim);
        const std::size_t col = top[static_cast<std::size_t>(c)];
        for (std::size_t k = 0; k < dim; ++k) comp[k] = vectors[k * dim + col];
        // Deterministic sign: largest-magnitude entry positive.
        std::size_t arg = 0;
        for (std::size_t k = 1; k < dim; ++k)
            if (std::abs(comp[k]) > std::abs(comp[arg])) arg = k;
        if (comp[arg] < 0.0)
            for (double& v : comp) v = -v;
        proj.explained_variance[static_cast<std::size_t>(c)] = eig[col];
    }

    auto project = [&](const WindowSet& w, const std::vector<std::size_t>& idx,
                       std::vector<std::array<double, 2>>& out) {
        out.reserve(idx.size());
        for (std::size_t i : idx) {
            auto win = w.window(i);
            std::array<double, 2> pt{0.0, 0.0};
            for (std::size_t d = 0; d < dim; ++d) {
                const double v = win[d] - proj.mean[d];
                pt[0] += v * proj.components[0][d];
                pt[1] += v * proj.components[1][d];
            }
            out.push_back(pt);
        }
    };
    project(real, ridx, proj.real_points);
    project(synthetic, sidx, proj.synthetic_points);
    return proj;
}

inline nlohmann::json pca_to_json(const PcaProjection& p) {
    auto points = [](const std::vector<std::array<double, 2>>& pts) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& pt : pts) arr.push_back({pt[0], pt[1]});
        return arr;
    };
    return {{"dim", p.dim},
            {"mean", p.mean},
            {"components", {p.components[0], p.components[1]}},
            {"explained_variance", {p.explained_variance[0], p.explained_variance[1]}},
            {"real_points", points(p.real_points)},
            {"synthetic_points", points(p.synthetic_points)}};
}

inline PcaProjection pca_from_json(const nlohmann::json& j) {
    PcaProjection p;
    p.dim = j.at("dim").get<std::size_t>();
    p.mean = j.at("mean").get<std::vector<double>>();
    p.components[0] = j.at("components")[0].get<std::vector<double>>();
    p.components[1] = j.at("components")[1].get<std::vector<double>>();
    p.explained_variance[0] = j.at("explained_variance")[0].get<double>();
    p.explained_variance[1] = j.at("explained_variance")[1].get<double>();
    auto read_points = [](const nlohmann::json& arr) {
        std::vector<std::array<double, 2>> pts;
        for (const auto& pt : arr) pts.push_back({pt[0].get<double>(), pt[1].get<double>()});
        return pts;
    };
    p.real_points = read_points(j.at("real_points"));
    p.synthetic_points = read_points(j.at("synthetic_points"));
    return p;
}

} // namespace headsynth
