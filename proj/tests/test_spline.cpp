#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "headsynth/spline.hpp"

using namespace headsynth;

namespace {

Trace synthetic_trace(double rate, std::size_t n, const std::function<double(double)>& f) {
    Trace t;
    t.rate_hz = rate;
    for (std::size_t i = 0; i < n; ++i) {
        double v = f(static_cast<double>(i) / rate);
        t.yaw.push_back(v);
        t.pitch.push_back(0.5 * v);
        t.roll.push_back(-0.25 * v);
    }
    return t;
}

} // namespace

TEST_CASE("spline reproduces linear data exactly") {
    Trace t = synthetic_trace(10.0, 50, [](double s) { return 3.0 * s - 7.0; });
    Trace up = spline_upsample(t, 4);
    REQUIRE(up.rate_hz == Catch::Approx(40.0));
    for (std::size_t i = 0; i < up.size(); ++i) {
        double s = static_cast<double>(i) / up.rate_hz;
        REQUIRE(up.yaw[i] == Catch::Approx(3.0 * s - 7.0).margin(1e-9));
    }
}

TEST_CASE("spline reproduces knot values exactly") {
    Trace t = synthetic_trace(10.0, 30, [](double s) { return std::sin(s) * 20.0; });
    Trace up = spline_upsample(t, 5);
    for (std::size_t i = 0; i < t.size(); ++i) REQUIRE(up.yaw[i * 5] == t.yaw[i]);
}

TEST_CASE("2 Hz sine survives decimation by 15 and spline reconstruction") {
    const double rate = 250.0;
    Trace t = synthetic_trace(rate, 30000,
                              [](double s) { return std::sin(2.0 * M_PI * 2.0 * s); });
    Trace down = downsample(t, 15);
    Trace up = spline_upsample(down, 15);
    double worst = 0.0;
    for (std::size_t i = 0; i < up.size(); ++i) {
        double s = static_cast<double>(i) / rate;
        worst = std::max(worst, std::abs(up.yaw[i] - std::sin(2.0 * M_PI * 2.0 * s)));
    }
    REQUIRE(worst < 0.05);
}

TEST_CASE("spline rejects tiny inputs") {
    Trace t = synthetic_trace(10.0, 3, [](double s) { return s; });
    REQUIRE_THROWS_AS(spline_upsample(t, 2), ArgumentError);
}

TEST_CASE("error quantiles are zero for constant traces") {
    Trace t = synthetic_trace(250.0, 1000, [](double) { return 4.2; });
    std::vector<std::size_t> factors{2, 5, 15};
    auto rows = downsampling_error_cdf(t, factors);
    REQUIRE(rows.size() == 3);
    for (const auto& row : rows)
        for (int a = 0; a < 3; ++a) {
            REQUIRE(row.q99[a] == 0.0);
            REQUIRE(row.max[a] == 0.0);
        }
}

TEST_CASE("band-limited signal keeps its 99th percentile error under half a degree at factor 15") {
    const double rate = 250.0;
    // Sum of sinusoids at and below 5 Hz, amplitudes summing to ~24 degrees.
    Trace t = synthetic_trace(rate, 30000, [](double s) {
        return 10.0 * std::sin(2.0 * M_PI * 0.7 * s) + 8.0 * std::sin(2.0 * M_PI * 2.3 * s + 0.5) +
               4.0 * std::sin(2.0 * M_PI * 4.1 * s + 1.7) + 2.0 * std::sin(2.0 * M_PI * 5.0 * s + 2.9);
    });
    std::vector<std::size_t> factors{15, 25, 50};
    auto rows = downsampling_error_cdf(t, factors);
    for (int a = 0; a < 3; ++a) REQUIRE(rows[0].q99[a] < 0.5);
    // fidelity deteriorates with coarser decimation past factor 25
    for (int a = 0; a < 3; ++a) REQUIRE(rows[2].q99[a] > rows[1].q99[a]);
}

TEST_CASE("downsampling_error_cdf rejects factors below 2") {
    Trace t = synthetic_trace(250.0, 100, [](double s) { return s; });
    std::vector<std::size_t> factors{1};
    REQUIRE_THROWS_AS(downsampling_error_cdf(t, factors), ArgumentError);
}
