#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace headsynth {

// Maps a value into [-180, 180) by adding an integer multiple of 360.
inline double wrap_degree(double v) {
    return v - 360.0 * std::floor((v + 180.0) / 360.0);
}

inline std::vector<double> wrap_angles(std::span<const double> series) {
    std::vector<double> out(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) out[i] = wrap_degree(series[i]);
    return out;
}

// Removes +-360 rollover discontinuities: every step of the output is the
// input step wrapped into (-180, 180], so subsequent values shift by whole
// turns whenever the raw series jumps across the representation boundary.
inline std::vector<double> unwrap_angles(std::span<const double> series) {
    std::vector<double> out;
    out.reserve(series.size());
    if (series.empty()) return out;
    out.push_back(series[0]);
    double offset = 0.0;
    for (std::size_t i = 1; i < series.size(); ++i) {
        double delta = series[i] + offset - out.back();
        if (std::abs(delta) > 180.0) {
            double k = std::ceil((delta - 180.0) / 360.0);
            offset -= 360.0 * k;
        }
        out.push_back(series[i] + offset);
    }
    return out;
}

} // namespace headsynth
