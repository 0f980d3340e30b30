#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "headsynth/angles.hpp"
#include "headsynth/errors.hpp"
#include "headsynth/io_util.hpp"
#include "headsynth/trace.hpp"

namespace headsynth {

struct PreprocessConfig {
    std::size_t downsample_factor = 15;
    std::size_t window_len = 25;
    std::size_t window_stride = 1;

    void validate() const {
        if (downsample_factor < 1) throw ArgumentError("downsample_factor must be >= 1");
        if (window_len < 2) throw ArgumentError("window_len must be >= 2");
        if (window_stride < 1) throw ArgumentError("window_stride must be >= 1");
    }
};

// Rank-3 block of preprocessed sequences, [num_windows x window_len x 3 axes],
// window-major, step-major, axis-minor. Axis order is fixed (yaw, pitch, roll).
struct WindowSet {
    std::size_t num_windows = 0;
    std::size_t window_len = 0;
    double rate_hz = 0.0;
    std::string space = "degrees"; // "degrees" or "transformed01"
    std::vector<double> data;

    static WindowSet zeros(std::size_t n, std::size_t len, double rate) {
        WindowSet w;
        w.num_windows = n;
        w.window_len = len;
        w.rate_hz = rate;
        w.data.assign(n * len * 3, 0.0);
        return w;
    }

    double& at(std::size_t w, std::size_t t, std::size_t axis) {
        return data[(w * window_len + t) * 3 + axis];
    }
    double at(std::size_t w, std::size_t t, std::size_t axis) const {
        return data[(w * window_len + t) * 3 + axis];
    }

    std::span<const double> window(std::size_t w) const {
        return {data.data() + w * window_len * 3, window_len * 3};
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

// Unwraps each axis at the native rate, decimates, and slides fixed-length
// windows over each trace independently (windows never span trace
// boundaries). Traces too short for one window are skipped with a warning.
inline WindowSet make_windows(const TraceSet& ts, const PreprocessConfig& cfg,
                              std::vector<std::string>* warnings = nullptr) {
    cfg.validate();
    if (ts.traces.empty()) throw ArgumentError("make_windows: empty trace set");

    const std::size_t L = cfg.window_len;
    const std::size_t S = cfg.window_stride;

    WindowSet out;
    out.window_len = L;
    out.rate_hz = ts.traces.front().rate_hz / static_cast<double>(cfg.downsample_factor);
    out.space = "degrees";

    for (const Trace& trace : ts.traces) {
        Trace unwrapped = trace;
        for (std::size_t a = 0; a < 3; ++a) unwrapped.axis(a) = unwrap_angles(trace.axis(a));
        Trace dec = downsample(unwrapped, cfg.downsample_factor);
        const std::size_t m = dec.size();
        if (m < L) {
            if (warnings)
                warnings->push_back("trace '" + trace.subject_id + "' skipped: " + std::to_string(m) +
                                    " samples after decimation, window needs " + std::to_string(L));
            continue;
        }
        const std::size_t count = (m - L) / S + 1;
        out.data.reserve(out.data.size() + count * L * 3);
        for (std::size_t w = 0; w < count; ++w) {
            const std::size_t start = w * S;
            for (std::size_t t = 0; t < L; ++t)
                for (std::size_t a = 0; a < 3; ++a) out.data.push_back(dec.axis(a)[start + t]);
        }
        out.num_windows += count;
    }
    if (out.num_windows == 0) throw ValidationError("make_windows: every trace was too short to window");
    return out;
}

// --- On-disk archive: directory with manifest.json + flat little-endian f64 block.

inline void save_window_archive(const std::filesystem::path& dir, const WindowSet& w,
                                const nlohmann::json& extra = nlohmann::json::object()) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest{
        {"schema_version", 1},
        {"kind", "windowset"},
        {"num_windows", w.num_windows},
        {"window_len", w.window_len},
        {"rate_hz", w.rate_hz},
        {"axis_order", {"yaw", "pitch", "roll"}},
        {"space", w.space},
        {"layout", "window-major, step-major, axis-minor"},
        {"data_file", "data.f64"},
        {"value_count", w.data.size()},
    };
    if (!extra.empty()) manifest["provenance"] = extra;
    write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");

    std::ofstream out(dir / "data.f64", std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + (dir / "data.f64").string());
    write_f64_le(out, w.data);
}

inline WindowSet load_window_archive(const std::filesystem::path& dir) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError((dir / "manifest.json").string() + ": " + e.what());
    }
    if (manifest.value("kind", "") != "windowset")
        throw FormatError(dir.string() + ": manifest is not a windowset");

    WindowSet w;
    w.num_windows = manifest.at("num_windows").get<std::size_t>();
    w.window_len = manifest.at("window_len").get<std::size_t>();
    w.rate_hz = manifest.at("rate_hz").get<double>();
    w.space = manifest.value("space", "degrees");
    const auto count = manifest.at("value_count").get<std::size_t>();
    if (count != w.num_windows * w.window_len * 3)
        throw FormatError(dir.string() + ": value_count does not match declared shape");

    std::ifstream in(dir / manifest.value("data_file", "data.f64"), std::ios::binary);
    if (!in) throw IoError("cannot open data file in " + dir.string());
    w.data.resize(count);
    read_f64_le(in, w.data);
    return w;
}

} // namespace headsynth
