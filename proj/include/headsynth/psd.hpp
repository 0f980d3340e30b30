#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "headsynth/errors.hpp"
#include "headsynth/fft.hpp"
#include "headsynth/rng.hpp"
#include "headsynth/trace.hpp"
#include "headsynth/windows.hpp"

namespace headsynth {

// Per-axis mean power spectral density of a trace set: the average of the
// single-segment periodograms |X_k|^2 / N over traces, one-sided bins
// 0..N/2. Signal means are removed before analysis and kept separately so
// the DC bin does not dominate the model.
struct PsdModel {
    std::size_t analysis_len = 0;
    double rate_hz = 0.0;
    std::array<double, 3> axis_mean{};
    std::array<std::vector<double>, 3> psd;

    std::size_t bins() const { return analysis_len / 2 + 1; }
    double bin_hz() const { return rate_hz / static_cast<double>(analysis_len); }
};

inline PsdModel estimate_mean_psd(const TraceSet& ts, std::size_t analysis_len) {
    if (!is_power_of_two(analysis_len) || analysis_len < 4)
        throw ArgumentError("estimate_mean_psd: analysis_len must be a power of two >= 4");
    if (ts.traces.empty()) throw ArgumentError("estimate_mean_psd: empty trace set");

    std::string offenders;
    for (const Trace& t : ts.traces)
        if (t.size() < analysis_len) offenders += (offenders.empty() ? "" : ", ") + t.subject_id;
    if (!offenders.empty())
        throw ValidationError("estimate_mean_psd: traces shorter than analysis_len: " + offenders);

    PsdModel model;
    model.analysis_len = analysis_len;
    model.rate_hz = ts.traces.front().rate_hz;
    for (auto& p : model.psd) p.assign(analysis_len / 2 + 1, 0.0);

    std::vector<double> seg(analysis_len);
    for (const Trace& t : ts.traces) {
        for (std::size_t a = 0; a < 3; ++a) {
            const auto& series = t.axis(a);
            double mean = 0.0;
            for (std::size_t i = 0; i < analysis_len; ++i) mean += series[i];
            mean /= static_cast<double>(analysis_len);
            for (std::size_t i = 0; i < analysis_len; ++i) seg[i] = series[i] - mean;
            Spectrum spec = fft(seg, analysis_len);
            for (std::size_t k = 0; k <= analysis_len / 2; ++k)
                model.psd[a][k] += std::norm(spec.coeff[k]) / static_cast<double>(analysis_len);
            model.axis_mean[a] += mean;
        }
    }
    const double inv = 1.0 / static_cast<double>(ts.traces.size());
    for (std::size_t a = 0; a < 3; ++a) {
        model.axis_mean[a] *= inv;
        for (double& v : model.psd[a]) v *= inv;
    }
    return model;
}

// Fraction of (non-DC) spectral energy at frequencies <= f, per axis.
inline std::array<double, 3> energy_fraction_below(const PsdModel& model, double f) {
    if (!(f > 0.0 && f <= model.rate_hz / 2.0 + 1e-12))
        throw ArgumentError("energy_fraction_below: f must lie in (0, Nyquist]");
    std::array<double, 3> out{};
    for (std::size_t a = 0; a < 3; ++a) {
        double below = 0.0, total = 0.0;
        for (std::size_t k = 1; k < model.psd[a].size(); ++k) {
            const double freq = static_cast<double>(k) * model.bin_hz();
            total += model.psd[a][k];
            if (freq <= f + 1e-12) below += model.psd[a][k];
        }
        out[a] = total > 0.0 ? below / total : 0.0;
    }
    return out;
}

namespace detail {

// PSD value at an arbitrary frequency, linear interpolation between bins.
inline double psd_at(const PsdModel& model, std::size_t axis, double freq) {
    const double pos = freq / model.bin_hz();
    const auto& p = model.psd[axis];
    if (pos <= 0.0) return p.front();
    if (pos >= static_cast<double>(p.size() - 1)) return p.back();
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    return p[lo] * (1.0 - frac) + p[lo + 1] * frac;
}

} // namespace detail

// Random-phase surrogate synthesis: per axis, builds a spectrum whose
// magnitudes reproduce the model PSD and whose phases are i.i.d. uniform
// (Hermitian symmetry enforced, DC zero, Nyquist real with random sign),
// inverse-transforms, crops, and restores the stored axis mean. Axes and
// traces use independently derived seeds.
inline TraceSet synthesize_traces(const PsdModel& model, std::size_t n_traces, std::size_t out_len,
                                  std::uint64_t seed) {
    if (n_traces < 1) throw ArgumentError("synthesize_traces: n_traces must be >= 1");
    if (out_len < 2) throw ArgumentError("synthesize_traces: out_len must be >= 2");
    const std::size_t n_fft = next_power_of_two(out_len);
    const double two_pi = 2.0 * 3.14159265358979323846;

    TraceSet out;
    out.provenance = "fft-baseline";
    Rng master(seed);
    for (std::size_t i = 0; i < n_traces; ++i) {
        Trace t;
        t.subject_id = "synth_" + std::to_string(i);
        t.rate_hz = model.rate_hz;
        for (std::size_t a = 0; a < 3; ++a) {
            Rng rng = master.derive(i * 3 + a + 1);
            Spectrum spec;
            spec.coeff.assign(n_fft, {0.0, 0.0});
            for (std::size_t j = 1; j < n_fft / 2; ++j) {
                const double freq = static_cast<double>(j) * model.rate_hz / static_cast<double>(n_fft);
                const double mag =
                    std::sqrt(std::max(0.0, detail::psd_at(model, a, freq)) * static_cast<double>(n_fft));
                const double phase = rng.uniform(0.0, two_pi);
                spec.coeff[j] = std::polar(mag, phase);
                spec.coeff[n_fft - j] = std::conj(spec.coeff[j]);
            }
            {
                const double nyq_freq = model.rate_hz / 2.0;
                const double mag = std::sqrt(std::max(0.0, detail::psd_at(model, a, nyq_freq)) *
                                             static_cast<double>(n_fft));
                spec.coeff[n_fft / 2] = {rng.uniform() < 0.5 ? mag : -mag, 0.0};
            }
            std::vector<double> signal = ifft(spec);
            auto& dst = t.axis(a);
            dst.assign(signal.begin(), signal.begin() + static_cast<std::ptrdiff_t>(out_len));
            for (double& v : dst) v += model.axis_mean[a];
        }
        out.traces.push_back(std::move(t));
    }
    return out;
}

// Full baseline pipeline: synthesize full-length traces, then decimate and
// window them exactly like the real data.
inline WindowSet baseline_windows(const PsdModel& model, const PreprocessConfig& cfg,
                                  std::size_t n_traces, std::size_t synth_len, std::uint64_t seed,
                                  std::vector<std::string>* warnings = nullptr) {
    TraceSet ts = synthesize_traces(model, n_traces, synth_len, seed);
    return make_windows(ts, cfg, warnings);
}

// --- JSON round trip.

inline nlohmann::json psd_model_to_json(const PsdModel& m) {
    nlohmann::json axes = nlohmann::json::array();
    for (std::size_t a = 0; a < 3; ++a)
        axes.push_back({{"name", kAxisNames[a]}, {"mean", m.axis_mean[a]}, {"psd", m.psd[a]}});
    return {{"schema_version", 1},
            {"kind", "psd_model"},
            {"analysis_len", m.analysis_len},
            {"rate_hz", m.rate_hz},
            {"axes", axes}};
}

inline PsdModel psd_model_from_json(const nlohmann::json& j) {
    if (j.value("kind", "") != "psd_model") throw FormatError("psd model: unexpected kind");
    PsdModel m;
    m.analysis_len = j.at("analysis_len").get<std::size_t>();
    m.rate_hz = j.at("rate_hz").get<double>();
    const auto& axes = j.at("axes");
    if (axes.size() != 3) throw FormatError("psd model: expected 3 axes");
    for (std::size_t a = 0; a < 3; ++a) {
        m.axis_mean[a] = axes[a].at("mean").get<double>();
        m.psd[a] = axes[a].at("psd").get<std::vector<double>>();
        if (m.psd[a].size() != m.bins()) throw FormatError("psd model: bin count mismatch");
    }
    return m;
}

} // namespace headsynth
