#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "headsynth/errors.hpp"
#include "headsynth/trace.hpp"

namespace headsynth {

// Natural cubic spline on a uniform unit-spaced grid. Solves the standard
// tridiagonal system for the knot second derivatives (Thomas algorithm).
class CubicSpline {
public:
    explicit CubicSpline(std::span<const double> knots) : y_(knots.begin(), knots.end()) {
        const std::size_t n = y_.size();
        if (n < 4) throw ArgumentError("CubicSpline: need at least 4 knots");
        m_.assign(n, 0.0);
        std::vector<double> diag(n, 0.0), rhs(n, 0.0);
        // Interior equations: m[i-1] + 4 m[i] + m[i+1] = 6 (y[i-1] - 2 y[i] + y[i+1]);
        // natural ends m[0] = m[n-1] = 0.
        diag[1] = 4.0;
        rhs[1] = 6.0 * (y_[0] - 2.0 * y_[1] + y_[2]);
        for (std::size_t i = 2; i + 1 < n; ++i) {
            double w = 1.0 / diag[i - 1];
            diag[i] = 4.0 - w;
            rhs[i] = 6.0 * (y_[i - 1] - 2.0 * y_[i] + y_[i + 1]) - w * rhs[i - 1];
        }
        for (std::size_t i = n - 2; i >= 1; --i) {
            m_[i] = (rhs[i] - (i + 2 < n ? m_[i + 1] : 0.0)) / diag[i];
            if (i == 1) break;
        }
    }

    // Evaluate at t in [0, n-1]; clamped outside.
    double operator()(double t) const {
        const std::size_t n = y_.size();
        if (t <= 0.0) return y_.front();
        if (t >= static_cast<double>(n - 1)) return y_.back();
        std::size_t i = static_cast<std::size_t>(t);
        double u = t - static_cast<double>(i);
        double a = 1.0 - u;
        return a * y_[i] + u * y_[i + 1] + ((a * a * a - a) * m_[i] + (u * u * u - u) * m_[i + 1]) / 6.0;
    }

private:
    std::vector<double> y_;
    std::vector<double> m_; // second derivatives at knots
};

// Upsamples a trace by an integer factor with a natural cubic spline through
// the existing samples. Output covers the knot span only, so its length is
// (n-1)*factor + 1; knot values are reproduced exactly.
inline Trace spline_upsample(const Trace& t, std::size_t factor) {
    if (factor < 1) throw ArgumentError("spline_upsample: factor must be >= 1");
    if (t.size() < 4) throw ArgumentError("spline_upsample: need at least 4 samples");
    Trace out;
    out.subject_id = t.subject_id;
    out.rate_hz = t.rate_hz * static_cast<double>(factor);
    const std::size_t n_out = (t.size() - 1) * factor + 1;
    for (std::size_t a = 0; a < 3; ++a) {
        CubicSpline s(t.axis(a));
        auto& dst = out.axis(a);
        dst.resize(n_out);
        for (std::size_t j = 0; j < n_out; ++j) {
            if (j % factor == 0) {
                dst[j] = t.axis(a)[j / factor]; // knots exact
            } else {
                dst[j] = s(static_cast<double>(j) / static_cast<double>(factor));
            }
        }
    }
    return out;
}

// One row of the downsampling fidelity analysis: decimate by `factor`, spline
// back up, and summarise the absolute reconstruction error per axis.
struct DownsampleErrorRow {
    std::size_t factor = 0;
    // Indexed [axis][quantile] with quantiles {0.50, 0.90, 0.99, max}.
    double q50[3] = {0, 0, 0};
    double q90[3] = {0, 0, 0};
    double q99[3] = {0, 0, 0};
    double max[3] = {0, 0, 0};
};

namespace detail {

// Quantile by linear interpolation on the sorted sample (numpy convention).
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    double pos = q * static_cast<double>(sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= sorted.size()) return sorted.back();
    double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

} // namespace detail

inline std::vector<DownsampleErrorRow> downsampling_error_cdf(const Trace& t,
                                                              std::span<const std::size_t> factors) {
    std::vector<DownsampleErrorRow> rows;
    for (std::size_t factor : factors) {
        if (factor < 2) throw ArgumentError("downsampling_error_cdf: factors must be >= 2");
        Trace down = downsample(t, factor);
        Trace up = spline_upsample(down, factor);
        DownsampleErrorRow row;
        row.factor = factor;
        for (std::size_t a = 0; a < 3; ++a) {
            const auto& orig = t.axis(a);
            const auto& rec = up.axis(a);
            std::size_t n = std::min(orig.size(), rec.size());
            std::vector<double> err(n);
            for (std::size_t i = 0; i < n; ++i) err[i] = std::abs(orig[i] - rec[i]);
            std::sort(err.begin(), err.end());
            row.q50[a] = detail::sorted_quantile(err, 0.50);
            row.q90[a] = detail::sorted_quantile(err, 0.90);
            row.q99[a] = detail::sorted_quantile(err, 0.99);
            row.max[a] = err.empty() ? 0.0 : err.back();
        }
        rows.push_back(row);
    }
    return rows;
}

} // namespace headsynth
