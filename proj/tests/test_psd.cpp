#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "headsynth/psd.hpp"
#include "headsynth/rng.hpp"

using namespace headsynth;

namespace {

Trace sine_trace(double rate, std::size_t n, double freq, double amp = 1.0, double phase = 0.0,
                 double mean = 0.0) {
    Trace t;
    t.subject_id = "sine";
    t.rate_hz = rate;
    for (std::size_t i = 0; i < n; ++i) {
        double v = mean + amp * std::sin(2.0 * M_PI * freq * static_cast<double>(i) / rate + phase);
        t.yaw.push_back(v);
        t.pitch.push_back(v * 0.5);
        t.roll.push_back(v * 0.25);
    }
    return t;
}

} // namespace

TEST_CASE("a pure sinusoid produces a dominant PSD peak at its bin") {
    const double rate = 250.0;
    const std::size_t n = 4096;
    // Use a bin-aligned frequency near 2 Hz to avoid leakage ambiguity.
    const std::size_t kbin = 33; // 33 * 250 / 4096 = 2.014 Hz
    const double freq = static_cast<double>(kbin) * rate / static_cast<double>(n);
    TraceSet ts;
    ts.traces.push_back(sine_trace(rate, n, freq, 10.0));
    PsdModel model = estimate_mean_psd(ts, n);
    REQUIRE(model.bins() == n / 2 + 1);
    const double peak = model.psd[0][kbin];
    for (std::size_t k = 1; k < model.bins(); ++k) {
        if (k + 2 >= kbin && k <= kbin + 2) continue;
        REQUIRE(peak > 100.0 * model.psd[0][k]);
    }
}

TEST_CASE("white noise yields an approximately flat PSD after averaging") {
    const std::size_t n = 64;
    Rng rng(123);
    TraceSet ts;
    for (int i = 0; i < 200; ++i) {
        Trace t;
        t.subject_id = "noise" + std::to_string(i);
        t.rate_hz = 100.0;
        for (std::size_t j = 0; j < n; ++j) {
            t.yaw.push_back(rng.uniform(-1.0, 1.0));
            t.pitch.push_back(rng.uniform(-1.0, 1.0));
            t.roll.push_back(rng.uniform(-1.0, 1.0));
        }
        ts.traces.push_back(t);
    }
    PsdModel model = estimate_mean_psd(ts, n);
    for (std::size_t a = 0; a < 3; ++a) {
        double level = 0.0;
        std::size_t count = 0;
        for (std::size_t k = 1; k < n / 2; ++k) {
            level += model.psd[a][k];
            ++count;
        }
        level /= static_cast<double>(count);
        for (std::size_t k = 1; k < n / 2; ++k)
            REQUIRE(std::abs(model.psd[a][k] - level) / level < 0.3);
    }
}

TEST_CASE("traces shorter than the analysis length are listed in the error") {
    TraceSet ts;
    ts.traces.push_back(sine_trace(250.0, 100, 2.0));
    ts.traces.back().subject_id = "shorty";
    REQUIRE_THROWS_WITH(estimate_mean_psd(ts, 256), Catch::Matchers::ContainsSubstring("shorty"));
}

TEST_CASE("energy fraction behaves at the extremes") {
    const double rate = 250.0;
    const std::size_t n = 4096;
    TraceSet low;
    low.traces.push_back(sine_trace(rate, n, 2.014, 5.0));
    PsdModel lm = estimate_mean_psd(low, n);
    auto frac_low = energy_fraction_below(lm, 5.0);
    for (double f : frac_low) REQUIRE(f > 0.99);
    auto frac_nyq = energy_fraction_below(lm, rate / 2.0);
    for (double f : frac_nyq) REQUIRE(f == Catch::Approx(1.0));

    TraceSet high;
    high.traces.push_back(sine_trace(rate, n, 10.07, 5.0));
    PsdModel hm = estimate_mean_psd(high, n);
    auto frac_high = energy_fraction_below(hm, 5.0);
    for (double f : frac_high) REQUIRE(f < 0.01);

    REQUIRE_THROWS_AS(energy_fraction_below(lm, 0.0), ArgumentError);
    REQUIRE_THROWS_AS(energy_fraction_below(lm, rate), ArgumentError);
}

TEST_CASE("synthesized traces are real, reproducible, and mean-restored") {
    const double rate = 250.0;
    const std::size_t n = 2048;
    TraceSet src;
    for (int i = 0; i < 3; ++i) src.traces.push_back(sine_trace(rate, n, 2.014, 8.0, 0.3 * i, 15.0));
    PsdModel model = estimate_mean_psd(src, n);

    TraceSet a = synthesize_traces(model, 4, 2000, 99);
    TraceSet b = synthesize_traces(model, 4, 2000, 99);
    REQUIRE(a.traces.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        REQUIRE(a.traces[i].size() == 2000);
        REQUIRE(a.traces[i].yaw == b.traces[i].yaw); // bit-identical
    }
    // The synthesized mean should sit near the stored axis mean.
    double mean = 0.0;
    for (double v : a.traces[0].yaw) mean += v;
    mean /= 2000.0;
    REQUIRE(mean == Catch::Approx(15.0).margin(2.0));

    TraceSet c = synthesize_traces(model, 1, 2000, 100);
    REQUIRE(c.traces[0].yaw != a.traces[0].yaw);
}

TEST_CASE("mean periodogram of synthesized traces reproduces the model PSD") {
    const double rate = 250.0;
    const std::size_t n = 1024;
    // Smooth low-frequency model out of filtered noise-like sinusoid mixtures.
    TraceSet src;
    Rng rng(7);
    for (int tr = 0; tr < 6; ++tr) {
        Trace t;
        t.subject_id = "mix" + std::to_string(tr);
        t.rate_hz = rate;
        std::vector<std::array<double, 3>> comps;
        for (int c = 0; c < 12; ++c)
            comps.push_back({rng.uniform(0.3, 5.0), rng.uniform(0.5, 3.0), rng.uniform(0.0, 6.28)});
        for (std::size_t i = 0; i < n; ++i) {
            double s = static_cast<double>(i) / rate;
            double v = 0.0;
            for (auto& c : comps) v += c[1] * std::sin(2.0 * M_PI * c[0] * s + c[2]);
            t.yaw.push_back(v);
            t.pitch.push_back(0.6 * v);
            t.roll.push_back(0.3 * v);
        }
        src.traces.push_back(t);
    }
    PsdModel model = estimate_mean_psd(src, n);

    // Synthesize at the analysis length (no cropping) and average.
    const std::size_t n_traces = 100;
    TraceSet synth = synthesize_traces(model, n_traces, n, 31);
    PsdModel re = estimate_mean_psd(synth, n);

    // Bins carrying the top 90% of energy.
    for (std::size_t a = 0; a < 3; ++a) {
        std::vector<std::size_t> order(model.bins());
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t x, std::size_t y) { return model.psd[a][x] > model.psd[a][y]; });
        double total = 0.0;
        for (double v : model.psd[a]) total += v;
        double cum = 0.0;
        for (std::size_t k : order) {
            if (cum >= 0.9 * total) break;
            cum += model.psd[a][k];
            if (k == 0) continue; // DC handled via mean removal
            REQUIRE(std::abs(re.psd[a][k] - model.psd[a][k]) / model.psd[a][k] < 0.2);
        }
    }
}

TEST_CASE("psd model JSON round trip") {
    TraceSet src;
    src.traces.push_back(sine_trace(250.0, 1024, 2.0, 3.0, 0.1, 5.0));
    PsdModel m = estimate_mean_psd(src, 1024);
    PsdModel back = psd_model_from_json(psd_model_to_json(m));
    REQUIRE(back.analysis_len == m.analysis_len);
    REQUIRE(back.rate_hz == m.rate_hz);
    for (int a = 0; a < 3; ++a) {
        REQUIRE(back.axis_mean[a] == m.axis_mean[a]);
        REQUIRE(back.psd[a] == m.psd[a]);
    }
}

TEST_CASE("estimate_mean_psd is invariant to trace order") {
    TraceSet src;
    for (int i = 0; i < 4; ++i) src.traces.push_back(sine_trace(250.0, 512, 1.0 + i, 2.0, 0.2 * i));
    PsdModel m1 = estimate_mean_psd(src, 512);
    std::swap(src.traces[0], src.traces[3]);
    std::swap(src.traces[1], src.traces[2]);
    PsdModel m2 = estimate_mean_psd(src, 512);
    for (int a = 0; a < 3; ++a)
        for (std::size_t k = 0; k < m1.bins(); ++k)
            REQUIRE(m1.psd[a][k] == Catch::Approx(m2.psd[a][k]).margin(1e-12));
}
