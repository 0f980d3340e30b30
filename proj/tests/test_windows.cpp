#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "headsynth/rng.hpp"
#include "headsynth/windows.hpp"

using namespace headsynth;
namespace fs = std::filesystem;

namespace {

Trace ramp_trace(std::size_t n, double rate = 250.0) {
    Trace t;
    t.subject_id = "ramp";
    t.rate_hz = rate;
    for (std::size_t i = 0; i < n; ++i) {
        t.yaw.push_back(0.01 * static_cast<double>(i));
        t.pitch.push_back(1.0);
        t.roll.push_back(-0.5);
    }
    return t;
}

} // namespace

TEST_CASE("window count follows floor((M - L) / S) + 1") {
    TraceSet ts;
    ts.traces.push_back(ramp_trace(2000 * 15));
    PreprocessConfig cfg; // factor 15, len 25, stride 1
    WindowSet w = make_windows(ts, cfg);
    REQUIRE(w.num_windows == 1976);
    REQUIRE(w.window_len == 25);
    REQUIRE(w.rate_hz == Catch::Approx(250.0 / 15.0));
}

TEST_CASE("a trace of exactly window_len yields one window") {
    TraceSet ts;
    ts.traces.push_back(ramp_trace(25));
    PreprocessConfig cfg;
    cfg.downsample_factor = 1;
    WindowSet w = make_windows(ts, cfg);
    REQUIRE(w.num_windows == 1);
}

TEST_CASE("stride reduces the window count accordingly") {
    TraceSet ts;
    ts.traces.push_back(ramp_trace(100));
    PreprocessConfig cfg;
    cfg.downsample_factor = 1;
    cfg.window_len = 25;
    cfg.window_stride = 5;
    WindowSet w = make_windows(ts, cfg);
    REQUIRE(w.num_windows == (100 - 25) / 5 + 1);
}

TEST_CASE("short traces are skipped with a warning; all-short errors") {
    TraceSet ts;
    ts.traces.push_back(ramp_trace(10));
    ts.traces.push_back(ramp_trace(40));
    PreprocessConfig cfg;
    cfg.downsample_factor = 1;
    std::vector<std::string> warnings;
    WindowSet w = make_windows(ts, cfg, &warnings);
    REQUIRE(w.num_windows == 40 - 25 + 1);
    REQUIRE(warnings.size() == 1);

    TraceSet all_short;
    all_short.traces.push_back(ramp_trace(10));
    REQUIRE_THROWS_AS(make_windows(all_short, cfg), ValidationError);
}

TEST_CASE("windows never span trace boundaries") {
    // Two constant traces with different levels: every window must be constant.
    TraceSet ts;
    for (double level : {0.0, 100.0}) {
        Trace t = ramp_trace(30);
        for (auto& v : t.yaw) v = level;
        ts.traces.push_back(t);
    }
    PreprocessConfig cfg;
    cfg.downsample_factor = 1;
    WindowSet w = make_windows(ts, cfg);
    for (std::size_t i = 0; i < w.num_windows; ++i) {
        for (std::size_t t = 1; t < w.window_len; ++t)
            REQUIRE(w.at(i, t, 0) == w.at(i, 0, 0));
    }
}

TEST_CASE("unwrapping happens before decimation") {
    // A wrapped rollover at full rate: after unwrap + decimate the windowed
    // yaw must be continuous (no 360-degree jumps).
    Trace t;
    t.subject_id = "roll";
    t.rate_hz = 250.0;
    for (std::size_t i = 0; i < 50 * 15; ++i) {
        double v = 170.0 + 0.05 * static_cast<double>(i); // drifts across +180
        t.yaw.push_back(wrap_degree(v));
        t.pitch.push_back(0.0);
        t.roll.push_back(0.0);
    }
    TraceSet ts;
    ts.traces.push_back(t);
    PreprocessConfig cfg;
    WindowSet w = make_windows(ts, cfg);
    for (std::size_t i = 0; i < w.num_windows; ++i)
        for (std::size_t s = 1; s < w.window_len; ++s)
            REQUIRE(std::abs(w.at(i, s, 0) - w.at(i, s - 1, 0)) < 180.0);
}

TEST_CASE("window archive round-trips exactly") {
    WindowSet w = WindowSet::zeros(7, 25, 250.0 / 15.0);
    Rng rng(3);
    for (auto& v : w.data) v = rng.uniform(-200.0, 200.0);
    fs::path dir = fs::temp_directory_path() / "hs_window_archive";
    fs::remove_all(dir);
    save_window_archive(dir, w);
    WindowSet back = load_window_archive(dir);
    REQUIRE(back.num_windows == w.num_windows);
    REQUIRE(back.window_len == w.window_len);
    REQUIRE(back.rate_hz == w.rate_hz);
    REQUIRE(back.space == w.space);
    REQUIRE(back.data == w.data); // bit-exact
}
