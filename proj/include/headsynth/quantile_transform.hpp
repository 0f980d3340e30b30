#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "headsynth/errors.hpp"
#include "headsynth/normal.hpp"
#include "headsynth/windows.hpp"

namespace headsynth {

// Reversible per-axis quantile-to-normal map followed by range scaling to
// [0, 1]: x -> scale(inverse_normal_cdf(empirical_cdf(x))). The empirical CDF
// is a quantile table with linear interpolation; its probabilities are kept
// strictly inside (0, 1) and additionally clamped to [1e-7, 1-1e-7] before
// the normal inverse so the map stays numerically invertible.
struct TransformParams {
    struct Axis {
        std::vector<double> references;    // sorted, non-decreasing
        std::vector<double> probabilities; // strictly inside (0, 1), increasing
        double z_min = 0.0;                // post-normal range bounds of the training data
        double z_max = 0.0;
    };

    std::size_t quantile_count = 1000;
    std::array<Axis, 3> axes;

    static constexpr double kCdfClamp = 1e-7;

    bool fitted() const { return !axes[0].references.empty(); }
};

namespace detail {

// Forward empirical CDF with tie averaging: at a tied reference value the
// midpoint of the tied probability range is used, so the map stays monotone.
inline double empirical_cdf(const TransformParams::Axis& ax, double x) {
    const auto& r = ax.references;
    const auto& p = ax.probabilities;
    if (x <= r.front()) return p.front();
    if (x >= r.back()) return p.back();
    auto lo = std::lower_bound(r.begin(), r.end(), x);
    auto hi = std::upper_bound(r.begin(), r.end(), x);
    if (lo != hi) { // x coincides with one or more table entries
        std::size_t first = static_cast<std::size_t>(lo - r.begin());
        std::size_t last = static_cast<std::size_t>(hi - r.begin()) - 1;
        return 0.5 * (p[first] + p[last]);
    }
    std::size_t i = static_cast<std::size_t>(lo - r.begin()); // r[i-1] < x < r[i]
    double frac = (x - r[i - 1]) / (r[i] - r[i - 1]);
    return p[i - 1] + frac * (p[i] - p[i - 1]);
}

inline double empirical_quantile(const TransformParams::Axis& ax, double u) {
    const auto& r = ax.references;
    const auto& p = ax.probabilities;
    if (u <= p.front()) return r.front();
    if (u >= p.back()) return r.back();
    auto it = std::lower_bound(p.begin(), p.end(), u);
    std::size_t i = static_cast<std::size_t>(it - p.begin());
    if (p[i] == u) return r[i];
    double frac = (u - p[i - 1]) / (p[i] - p[i - 1]);
    return r[i - 1] + frac * (r[i] - r[i - 1]);
}

inline double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

} // namespace detail

// x -> z, before range scaling.
inline double transform_to_normal(const TransformParams::Axis& ax, double x) {
    double u = detail::empirical_cdf(ax, x);
    u = std::clamp(u, TransformParams::kCdfClamp, 1.0 - TransformParams::kCdfClamp);
    return inverse_normal_cdf(u);
}

// x -> [0, 1].
inline double transform_value(const TransformParams::Axis& ax, double x) {
    double z = transform_to_normal(ax, x);
    return detail::clamp01((z - ax.z_min) / (ax.z_max - ax.z_min));
}

// [0, 1] -> x. Caller clamps and counts out-of-range inputs.
inline double invert_value(const TransformParams::Axis& ax, double s) {
    double z = ax.z_min + s * (ax.z_max - ax.z_min);
    double u = normal_cdf(z);
    u = std::clamp(u, ax.probabilities.front(), ax.probabilities.back());
    return detail::empirical_quantile(ax, u);
}

// Builds the per-axis quantile tables over all values of the window set
// (pooled across windows and steps) and records the post-transform range of
// the training data for the [0, 1] scaling.
inline TransformParams fit_transform(const WindowSet& w, std::size_t quantile_count = 1000) {
    if (quantile_count < 2) throw ArgumentError("fit_transform: quantile_count must be >= 2");
    const std::size_t per_axis = w.num_windows * w.window_len;
    if (per_axis < quantile_count)
        throw ArgumentError("fit_transform: need at least quantile_count values per axis, have " +
                            std::to_string(per_axis));

    TransformParams params;
    params.quantile_count = quantile_count;
    for (std::size_t a = 0; a < 3; ++a) {
        std::vector<double> pool(per_axis);
        for (std::size_t i = 0; i < per_axis; ++i) pool[i] = w.data[i * 3 + a];
        std::sort(pool.begin(), pool.end());
        if (pool.front() == pool.back())
            throw ValidationError(std::string("fit_transform: degenerate axis '") + kAxisNames[a] +
                                  "' (zero spread)");

        auto& ax = params.axes[a];
        ax.references.resize(quantile_count);
        ax.probabilities.resize(quantile_count);
        for (std::size_t k = 0; k < quantile_count; ++k) {
            double prob = (static_cast<double>(k) + 0.5) / static_cast<double>(quantile_count);
            ax.probabilities[k] = prob;
            double pos = prob * static_cast<double>(per_axis - 1);
            std::size_t lo = static_cast<std::size_t>(pos);
            double frac = pos - static_cast<double>(lo);
            ax.references[k] =
                lo + 1 < per_axis ? pool[lo] * (1.0 - frac) + pool[lo + 1] * frac : pool.back();
        }
        ax.z_min = transform_to_normal(ax, pool.front());
        ax.z_max = transform_to_normal(ax, pool.back());
        if (!(ax.z_min < ax.z_max))
            throw ValidationError(std::string("fit_transform: degenerate axis '") + kAxisNames[a] + "'");
    }
    return params;
}

inline WindowSet apply_transform(const WindowSet& w, const TransformParams& p) {
    if (!p.fitted()) throw ArgumentError("apply_transform: params not fitted");
    WindowSet out = w;
    out.space = "transformed01";
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = transform_value(p.axes[i % 3], out.data[i]);
    return out;
}

inline WindowSet invert_transform(const WindowSet& w, const TransformParams& p,
                                  std::size_t* clamped_count = nullptr) {
    if (!p.fitted()) throw ArgumentError("invert_transform: params not fitted");
    WindowSet out = w;
    out.space = "degrees";
    std::size_t clamped = 0;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        double s = out.data[i];
        if (s < 0.0 || s > 1.0) {
            ++clamped;
            s = detail::clamp01(s);
        }
        out.data[i] = invert_value(p.axes[i % 3], s);
    }
    if (clamped_count) *clamped_count = clamped;
    return out;
}

// --- JSON round trip.

inline nlohmann::json transform_params_to_json(const TransformParams& p) {
    nlohmann::json axes = nlohmann::json::array();
    for (std::size_t a = 0; a < 3; ++a) {
        axes.push_back({{"name", kAxisNames[a]},
                        {"references", p.axes[a].references},
                        {"probabilities", p.axes[a].probabilities},
                        {"z_min", p.axes[a].z_min},
                        {"z_max", p.axes[a].z_max}});
    }
    return {{"schema_version", 1},
            {"kind", "transform_params"},
            {"quantile_count", p.quantile_count},
            {"axes", axes}};
}

inline TransformParams transform_params_from_json(const nlohmann::json& j) {
    if (j.value("kind", "") != "transform_params")
        throw FormatError("transform params: unexpected kind");
    TransformParams p;
    p.quantile_count = j.at("quantile_count").get<std::size_t>();
    const auto& axes = j.at("axes");
    if (axes.size() != 3) throw FormatError("transform params: expected 3 axes");
    for (std::size_t a = 0; a < 3; ++a) {
        p.axes[a].references = axes[a].at("references").get<std::vector<double>>();
        p.axes[a].probabilities = axes[a].at("probabilities").get<std::vector<double>>();
        p.axes[a].z_min = axes[a].at("z_min").get<double>();
        p.axes[a].z_max = axes[a].at("z_max").get<double>();
    }
    return p;
}

} // namespace headsynth
