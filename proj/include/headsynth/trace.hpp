#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "headsynth/errors.hpp"

namespace headsynth {

// One subject's yaw/pitch/roll series in degrees at a fixed sampling rate.
// Timestamps in the source file are validated for monotonicity and discarded.
struct Trace {
    std::string subject_id;
    double rate_hz = 0.0;
    std::vector<double> yaw;
    std::vector<double> pitch;
    std::vector<double> roll;

    std::size_t size() const { return yaw.size(); }

    const std::vector<double>& axis(std::size_t i) const {
        return i == 0 ? yaw : (i == 1 ? pitch : roll);
    }
    std::vector<double>& axis(std::size_t i) { return i == 0 ? yaw : (i == 1 ? pitch : roll); }
};

struct TraceSet {
    std::vector<Trace> traces;
    std::string provenance;
};

inline constexpr const char* kAxisNames[3] = {"yaw", "pitch", "roll"};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

inline double parse_double(std::string_view s, std::size_t row, const char* column) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        // std::from_chars accepts "nan"/"inf"; anything it rejects is a format problem.
        throw FormatError("row " + std::to_string(row) + ": cannot parse " + column + " value '" +
                          std::string(s) + "'");
    }
    return v;
}

} // namespace detail

// Reads the canonical trace CSV: header `timestamp,yaw,pitch,roll`, one sample
// per row, angles in degrees, timestamps in seconds (strictly increasing).
inline Trace load_trace_csv(const std::filesystem::path& path, double rate_hz) {
    if (rate_hz <= 0.0) throw ArgumentError("load_trace_csv: rate_hz must be positive");
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace file: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw FormatError(path.string() + ": missing header row");
    {
        auto header = detail::split_csv(line);
        const char* expected[4] = {"timestamp", "yaw", "pitch", "roll"};
        if (header.size() != 4)
            throw FormatError(path.string() + ": expected 4 columns `timestamp,yaw,pitch,roll`, got " +
                              std::to_string(header.size()));
        for (int i = 0; i < 4; ++i)
            if (header[static_cast<std::size_t>(i)] != expected[i])
                throw FormatError(path.string() + ": unexpected header column '" +
                                  std::string(header[static_cast<std::size_t>(i)]) + "', want '" +
                                  expected[i] + "'");
    }

    Trace t;
    t.subject_id = path.stem().string();
    t.rate_hz = rate_hz;
    double prev_ts = 0.0;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) continue;
        ++row;
        auto fields = detail::split_csv(line);
        if (fields.size() != 4)
            throw FormatError(path.string() + ": row " + std::to_string(row) + " has " +
                              std::to_string(fields.size()) + " columns, want 4");
        double ts = detail::parse_double(fields[0], row, "timestamp");
        double vals[3];
        for (int a = 0; a < 3; ++a) {
            vals[a] = detail::parse_double(fields[static_cast<std::size_t>(a + 1)], row, kAxisNames[a]);
            if (!std::isfinite(vals[a]))
                throw ValidationError(path.string() + ": non-finite " + kAxisNames[a] + " in row " +
                                      std::to_string(row));
        }
        if (!std::isfinite(ts))
            throw ValidationError(path.string() + ": non-finite timestamp in row " + std::to_string(row));
        if (row > 1 && ts <= prev_ts)
            throw ValidationError(path.string() + ": non-monotonic timestamp in row " + std::to_string(row));
        prev_ts = ts;
        t.yaw.push_back(vals[0]);
        t.pitch.push_back(vals[1]);
        t.roll.push_back(vals[2]);
    }
    if (t.size() == 0) throw ValidationError(path.string() + ": empty trace");
    return t;
}

// Writes the canonical trace CSV; round-trips through load_trace_csv to
// better than 1e-9 degrees (shortest-exact float formatting).
inline void save_trace_csv(const std::filesystem::path& path, const Trace& t) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open file for writing: " + path.string());
    out << "timestamp,yaw,pitch,roll\n";
    char buf[128];
    for (std::size_t i = 0; i < t.size(); ++i) {
        double ts = static_cast<double>(i) / t.rate_hz;
        std::snprintf(buf, sizeof(buf), "%.12g,%.17g,%.17g,%.17g\n", ts, t.yaw[i], t.pitch[i],
                      t.roll[i]);
        out << buf;
    }
    if (!out) throw IoError("failed writing trace: " + path.string());
}

// Soft checks on raw input: out-of-range pitch, out-of-range wrapped yaw/roll,
// and >300 degree consecutive yaw jumps that indicate representation rollover.
// Each rule yields at most one warning (with a count and first offending row).
inline std::vector<std::string> validate_trace(const Trace& t) {
    std::vector<std::string> warnings;
    auto report = [&](const char* what, std::size_t count, std::size_t first_row) {
        if (count == 0) return;
        std::ostringstream msg;
        msg << what << " (" << count << " sample" << (count == 1 ? "" : "s") << ", first at row "
            << first_row + 1 << ")";
        warnings.push_back(msg.str());
    };

    std::size_t pitch_out = 0, pitch_first = 0;
    for (std::size_t i = 0; i < t.pitch.size(); ++i)
        if (t.pitch[i] < -90.0 || t.pitch[i] > 90.0) {
            if (pitch_out++ == 0) pitch_first = i;
        }
    report("pitch out of range [-90, 90]", pitch_out, pitch_first);

    for (std::size_t axis : {std::size_t{0}, std::size_t{2}}) {
        const auto& series = t.axis(axis);
        std::size_t out_count = 0, first = 0;
        for (std::size_t i = 0; i < series.size(); ++i)
            if (series[i] < -180.0 || series[i] >= 180.0) {
                if (out_count++ == 0) first = i;
            }
        report((std::string(kAxisNames[axis]) + " outside wrapped range [-180, 180)").c_str(),
               out_count, first);
    }

    std::size_t jumps = 0, jump_first = 0;
    for (std::size_t i = 1; i < t.yaw.size(); ++i)
        if (std::abs(t.yaw[i] - t.yaw[i - 1]) > 300.0) {
            if (jumps++ == 0) jump_first = i;
        }
    report("possible rollover: consecutive yaw jump over 300 degrees", jumps, jump_first);

    return warnings;
}

// Keeps samples at indices 0, factor, 2*factor, ...; rate divides by factor.
inline Trace downsample(const Trace& t, std::size_t factor) {
    if (factor < 1) throw ArgumentError("downsample: factor must be >= 1");
    Trace out;
    out.subject_id = t.subject_id;
    out.rate_hz = t.rate_hz / static_cast<double>(factor);
    for (std::size_t a = 0; a < 3; ++a) {
        const auto& src = t.axis(a);
        auto& dst = out.axis(a);
        dst.reserve((src.size() + factor - 1) / factor);
        for (std::size_t i = 0; i < src.size(); i += factor) dst.push_back(src[i]);
    }
    return out;
}

} // namespace headsynth
