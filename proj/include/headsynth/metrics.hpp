#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "headsynth/angles.hpp"
#include "headsynth/errors.hpp"
#include "headsynth/pca.hpp"
#include "headsynth/windows.hpp"

namespace headsynth {

// Normalized histogram over fixed-width buckets. Orientation histograms use
// centered buckets (bucket k covers [k*w - w/2, k*w + w/2), middle bucket
// centered at 0); range histograms are edge-aligned (bucket k covers
// [k*w, (k+1)*w)).
struct Histogram {
    double bucket_width = 10.0;
    bool centered = true;
    std::map<long long, double> mass; // bucket index -> normalized mass
    std::size_t sample_count = 0;

    double center(long long k) const {
        return centered ? bucket_width * static_cast<double>(k)
                        : bucket_width * (static_cast<double>(k) + 0.5);
    }

    long long bucket_of(double v) const {
        const double shifted = centered ? v + bucket_width / 2.0 : v;
        return static_cast<long long>(std::floor(shifted / bucket_width));
    }

    double total_mass() const {
        double s = 0.0;
        for (const auto& [k, m] : mass) s += m;
        return s;
    }
};

namespace detail {

inline Histogram histogram_from_counts(const std::map<long long, std::size_t>& counts,
                                       double bucket_width, bool centered) {
    Histogram h;
    h.bucket_width = bucket_width;
    h.centered = centered;
    std::size_t total = 0;
    for (const auto& [k, c] : counts) total += c;
    h.sample_count = total;
    for (const auto& [k, c] : counts)
        h.mass[k] = static_cast<double>(c) / static_cast<double>(total);
    return h;
}

} // namespace detail

// Distribution of raw orientation values: every step of every window is one
// data point; yaw and roll are wrapped to [-180, 180) first.
inline Histogram orientation_histogram(const WindowSet& w, std::size_t axis,
                                       double bucket_width = 10.0) {
    if (w.num_windows == 0) throw ArgumentError("orientation_histogram: empty window set");
    if (axis > 2) throw ArgumentError("orientation_histogram: axis out of range");
    Histogram proto;
    proto.bucket_width = bucket_width;
    proto.centered = true;
    std::map<long long, std::size_t> counts;
    const bool wrap = axis != 1;
    for (std::size_t i = axis; i < w.data.size(); i += 3) {
        double v = w.data[i];
        if (wrap) v = wrap_degree(v);
        ++counts[proto.bucket_of(v)];
    }
    return detail::histogram_from_counts(counts, bucket_width, true);
}

// Distribution of per-window motion: max - min of the (unwrapped) values.
inline Histogram range_distribution(const WindowSet& w, std::size_t axis,
                                    double bucket_width = 10.0) {
    if (w.num_windows == 0) throw ArgumentError("range_distribution: empty window set");
    if (axis > 2) throw ArgumentError("range_distribution: axis out of range");
    Histogram proto;
    proto.bucket_width = bucket_width;
    proto.centered = false;
    std::map<long long, std::size_t> counts;
    for (std::size_t wi = 0; wi < w.num_windows; ++wi) {
        double lo = w.at(wi, 0, axis), hi = lo;
        for (std::size_t t = 1; t < w.window_len; ++t) {
            const double v = w.at(wi, t, axis);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        ++counts[proto.bucket_of(hi - lo)];
    }
    return detail::histogram_from_counts(counts, bucket_width, false);
}

// Sum of absolute mass differences over the union of buckets; in [0, 2].
inline double histogram_l1(const Histogram& a, const Histogram& b) {
    if (std::abs(a.bucket_width - b.bucket_width) > 1e-12 || a.centered != b.centered)
        throw ArgumentError("histogram_l1: incompatible bucket grids");
    double sum = 0.0;
    auto ia = a.mass.begin();
    auto ib = b.mass.begin();
    while (ia != a.mass.end() || ib != b.mass.end()) {
        if (ib == b.mass.end() || (ia != a.mass.end() && ia->first < ib->first)) {
            sum += std::abs(ia->second);
            ++ia;
        } else if (ia == a.mass.end() || ib->first < ia->first) {
            sum += std::abs(ib->second);
            ++ib;
        } else {
            sum += std::abs(ia->second - ib->second);
            ++ia;
            ++ib;
        }
    }
    return sum;
}

struct CorrelationCurve {
    std::vector<double> values;            // lag 0..max_lag
    std::vector<std::size_t> contributors; // windows contributing per lag
    std::size_t window_count = 0;          // windows passing the variance check
};

// Mean over windows of the normalized velocity autocorrelation
//   r(k) = sum_t (v_t - vbar)(v_{t+k} - vbar) / sum_t (v_t - vbar)^2 ,
// velocities v_t = x_{t+1} - x_t. Windows with zero velocity variance are
// skipped and counted out.
inline CorrelationCurve velocity_autocorrelation(const WindowSet& w, std::size_t axis,
                                                 std::size_t max_lag) {
    if (w.num_windows == 0) throw ArgumentError("velocity_autocorrelation: empty window set");
    if (w.window_len < max_lag + 2)
        throw ArgumentError("velocity_autocorrelation: window_len must be >= max_lag + 2");
    const std::size_t nv = w.window_len - 1;

    CorrelationCurve curve;
    curve.values.assign(max_lag + 1, 0.0);
    curve.contributors.assign(max_lag + 1, 0);
    std::vector<double> v(nv);
    for (std::size_t wi = 0; wi < w.num_windows; ++wi) {
        double mean = 0.0;
        for (std::size_t t = 0; t < nv; ++t) {
            v[t] = w.at(wi, t + 1, axis) - w.at(wi, t, axis);
            mean += v[t];
        }
        mean /= static_cast<double>(nv);
        double denom = 0.0;
        for (std::size_t t = 0; t < nv; ++t) denom += (v[t] - mean) * (v[t] - mean);
        if (denom == 0.0) continue;
        ++curve.window_count;
        for (std::size_t k = 0; k <= max_lag; ++k) {
            double num = 0.0;
            for (std::size_t t = 0; t + k < nv; ++t) num += (v[t] - mean) * (v[t + k] - mean);
            curve.values[k] += num / denom;
            ++curve.contributors[k];
        }
    }
    for (std::size_t k = 0; k <= max_lag; ++k)
        if (curve.contributors[k]) curve.values[k] /= static_cast<double>(curve.contributors[k]);
    return curve;
}

// Mean over windows of the Pearson correlation between the two axes'
// velocities at each lag, computed on the overlapping segments. By default
// absolute velocities are correlated (motion-magnitude coupling); the signed
// variant is available behind the flag.
inline CorrelationCurve velocity_crosscorrelation(const WindowSet& w, std::size_t axis_a,
                                                  std::size_t axis_b, std::size_t max_lag,
                                                  bool absolute = true) {
    if (axis_a == axis_b) throw ArgumentError("velocity_crosscorrelation: axes must differ");
    if (axis_a > 2 || axis_b > 2) throw ArgumentError("velocity_crosscorrelation: axis out of range");
    if (w.num_windows == 0) throw ArgumentError("velocity_crosscorrelation: empty window set");
    if (w.window_len < max_lag + 2)
        throw ArgumentError("velocity_crosscorrelation: window_len must be >= max_lag + 2");
    const std::size_t nv = w.window_len - 1;

    CorrelationCurve curve;
    curve.values.assign(max_lag + 1, 0.0);
    curve.contributors.assign(max_lag + 1, 0);
    std::vector<double> va(nv), vb(nv);
    for (std::size_t wi = 0; wi < w.num_windows; ++wi) {
        for (std::size_t t = 0; t < nv; ++t) {
            va[t] = w.at(wi, t + 1, axis_a) - w.at(wi, t, axis_a);
            vb[t] = w.at(wi, t + 1, axis_b) - w.at(wi, t, axis_b);
            if (absolute) {
                va[t] = std::abs(va[t]);
                vb[t] = std::abs(vb[t]);
            }
        }
        auto variance = [&](const std::vector<double>& x) {
            double m = 0.0;
            for (double xv : x) m += xv;
            m /= static_cast<double>(x.size());
            double s = 0.0;
            for (double xv : x) s += (xv - m) * (xv - m);
            return s;
        };
        if (variance(va) == 0.0 || variance(vb) == 0.0) continue;
        ++curve.window_count;
        for (std::size_t k = 0; k <= max_lag; ++k) {
            const std::size_t n = nv - k;
            double ma = 0.0, mb = 0.0;
            for (std::size_t t = 0; t < n; ++t) {
                ma += va[t];
                mb += vb[t + k];
            }
            ma /= static_cast<double>(n);
            mb /= static_cast<double>(n);
            double num = 0.0, da = 0.0, db = 0.0;
            for (std::size_t t = 0; t < n; ++t) {
                const double xa = va[t] - ma;
                const double xb = vb[t + k] - mb;
                num += xa * xb;
                da += xa * xa;
                db += xb * xb;
            }
            if (da == 0.0 || db == 0.0) continue;
            curve.values[k] += num / std::sqrt(da * db);
            ++curve.contributors[k];
        }
    }
    for (std::size_t k = 0; k <= max_lag; ++k)
        if (curve.contributors[k]) curve.values[k] /= static_cast<double>(curve.contributors[k]);
    return curve;
}

struct MetricsOptions {
    double bucket_width = 10.0;
    std::size_t max_lag = 10;
    std::size_t pca_sample_n = 0; // 0: min(1000, both set sizes)
    std::uint64_t pca_seed = 7;
    bool signed_xcorr = false;
};

// Axis pairs for cross-correlation, in fixed order.
inline constexpr std::array<std::array<std::size_t, 2>, 3> kAxisPairs{
    {{0, 1}, {0, 2}, {1, 2}}};

struct MetricsReport {
    MetricsOptions options;
    std::array<Histogram, 3> orientation_real, orientation_synthetic;
    std::array<Histogram, 3> range_real, range_synthetic;
    std::array<CorrelationCurve, 3> autocorr_real, autocorr_synthetic;
    std::array<CorrelationCurve, 3> xcorr_real, xcorr_synthetic;
    PcaProjection pca;
    std::array<double, 3> orientation_l1{}, range_l1{};
    std::array<double, 3> autocorr_mean_abs_dev{}; // lags 1..max_lag
    std::array<double, 3> xcorr_lag0_dev{};        // synthetic minus real at lag 0
};

inline MetricsReport compare_datasets(const WindowSet& real, const WindowSet& synthetic,
                                      const MetricsOptions& opt = {}) {
    if (real.window_len != synthetic.window_len)
        throw ArgumentError("compare_datasets: window_len mismatch");
    if (std::abs(real.rate_hz - synthetic.rate_hz) > 1e-9)
        throw ArgumentError("compare_datasets: rate mismatch");

    MetricsReport rep;
    rep.options = opt;
    for (std::size_t a = 0; a < 3; ++a) {
        rep.orientation_real[a] = orientation_histogram(real, a, opt.bucket_width);
        rep.orientation_synthetic[a] = orientation_histogram(synthetic, a, opt.bucket_width);
        rep.range_real[a] = range_distribution(real, a, opt.bucket_width);
        rep.range_synthetic[a] = range_distribution(synthetic, a, opt.bucket_width);
        rep.autocorr_real[a] = velocity_autocorrelation(real, a, opt.max_lag);
        rep.autocorr_synthetic[a] = velocity_autocorrelation(synthetic, a, opt.max_lag);
        rep.orientation_l1[a] = histogram_l1(rep.orientation_real[a], rep.orientation_synthetic[a]);
        rep.range_l1[a] = histogram_l1(rep.range_real[a], rep.range_synthetic[a]);
        double dev = 0.0;
        for (std::size_t k = 1; k <= opt.max_lag; ++k)
            dev += std::abs(rep.autocorr_synthetic[a].values[k] - rep.autocorr_real[a].values[k]);
        rep.autocorr_mean_abs_dev[a] = dev / static_cast<double>(opt.max_lag);
    }
    for (std::size_t p = 0; p < 3; ++p) {
        const auto [a, b] = kAxisPairs[p];
        rep.xcorr_real[p] = velocity_crosscorrelation(real, a, b, opt.max_lag, !opt.signed_xcorr);
        rep.xcorr_synthetic[p] =
            velocity_crosscorrelation(synthetic, a, b, opt.max_lag, !opt.signed_xcorr);
        rep.xcorr_lag0_dev[p] = rep.xcorr_synthetic[p].values[0] - rep.xcorr_real[p].values[0];
    }
    std::size_t sample_n = opt.pca_sample_n;
    if (sample_n == 0)
        sample_n = std::min<std::size_t>({1000, real.num_windows, synthetic.num_windows});
    rep.pca = pca_fit_project(real, synthetic, sample_n, opt.pca_seed);
    return rep;
}

// --- JSON round trip.

inline nlohmann::json histogram_to_json(const Histogram& h) {
    nlohmann::json buckets = nlohmann::json::array();
    for (const auto& [k, m] : h.mass)
        buckets.push_back({{"index", k}, {"center", h.center(k)}, {"mass", m}});
    return {{"bucket_width", h.bucket_width},
            {"centered", h.centered},
            {"sample_count", h.sample_count},
            {"buckets", buckets}};
}

inline Histogram histogram_from_json(const nlohmann::json& j) {
    Histogram h;
    h.bucket_width = j.at("bucket_width").get<double>();
    h.centered = j.at("centered").get<bool>();
    h.sample_count = j.at("sample_count").get<std::size_t>();
    for (const auto& b : j.at("buckets"))
        h.mass[b.at("index").get<long long>()] = b.at("mass").get<double>();
    return h;
}

inline nlohmann::json curve_to_json(const CorrelationCurve& c) {
    return {{"values", c.values}, {"contributors", c.contributors}, {"window_count", c.window_count}};
}

inline CorrelationCurve curve_from_json(const nlohmann::json& j) {
    CorrelationCurve c;
    c.values = j.at("values").get<std::vector<double>>();
    c.contributors = j.at("contributors").get<std::vector<std::size_t>>();
    c.window_count = j.at("window_count").get<std::size_t>();
    return c;
}

inline nlohmann::json metrics_report_to_json(const MetricsReport& r) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["kind"] = "metrics_report";
    j["options"] = {{"bucket_width", r.options.bucket_width},
                    {"max_lag", r.options.max_lag},
                    {"pca_sample_n", r.options.pca_sample_n},
                    {"pca_seed", r.options.pca_seed},
                    {"signed_xcorr", r.options.signed_xcorr}};
    for (std::size_t a = 0; a < 3; ++a) {
        const std::string ax = kAxisNames[a];
        j["orientation"][ax]["real"] = histogram_to_json(r.orientation_real[a]);
        j["orientation"][ax]["synthetic"] = histogram_to_json(r.orientation_synthetic[a]);
        j["orientation"][ax]["l1"] = r.orientation_l1[a];
        j["range"][ax]["real"] = histogram_to_json(r.range_real[a]);
        j["range"][ax]["synthetic"] = histogram_to_json(r.range_synthetic[a]);
        j["range"][ax]["l1"] = r.range_l1[a];
        j["autocorrelation"][ax]["real"] = curve_to_json(r.autocorr_real[a]);
        j["autocorrelation"][ax]["synthetic"] = curve_to_json(r.autocorr_synthetic[a]);
        j["autocorrelation"][ax]["mean_abs_dev"] = r.autocorr_mean_abs_dev[a];
    }
    for (std::size_t p = 0; p < 3; ++p) {
        const auto [a, b] = kAxisPairs[p];
        const std::string key = std::string(kAxisNames[a]) + "_" + kAxisNames[b];
        j["cross_correlation"][key]["real"] = curve_to_json(r.xcorr_real[p]);
        j["cross_correlation"][key]["synthetic"] = curve_to_json(r.xcorr_synthetic[p]);
        j["cross_correlation"][key]["lag0_dev"] = r.xcorr_lag0_dev[p];
    }
    j["pca"] = pca_to_json(r.pca);
    return j;
}

inline MetricsReport metrics_report_from_json(const nlohmann::json& j) {
    if (j.value("kind", "") != "metrics_report") throw FormatError("metrics report: unexpected kind");
    MetricsReport r;
    const auto& o = j.at("options");
    r.options.bucket_width = o.at("bucket_width").get<double>();
    r.options.max_lag = o.at("max_lag").get<std::size_t>();
    r.options.pca_sample_n = o.at("pca_sample_n").get<std::size_t>();
    r.options.pca_seed = o.at("pca_seed").get<std::uint64_t>();
    r.options.signed_xcorr = o.at("signed_xcorr").get<bool>();
    for (std::size_t a = 0; a < 3; ++a) {
        const std::string ax = kAxisNames[a];
        r.orientation_real[a] = histogram_from_json(j.at("orientation").at(ax).at("real"));
        r.orientation_synthetic[a] = histogram_from_json(j.at("orientation").at(ax).at("synthetic"));
        r.orientation_l1[a] = j.at("orientation").at(ax).at("l1").get<double>();
        r.range_real[a] = histogram_from_json(j.at("range").at(ax).at("real"));
        r.range_synthetic[a] = histogram_from_json(j.at("range").at(ax).at("synthetic"));
        r.range_l1[a] = j.at("range").at(ax).at("l1").get<double>();
        r.autocorr_real[a] = curve_from_json(j.at("autocorrelation").at(ax).at("real"));
        r.autocorr_synthetic[a] = curve_from_json(j.at("autocorrelation").at(ax).at("synthetic"));
        r.autocorr_mean_abs_dev[a] = j.at("autocorrelation").at(ax).at("mean_abs_dev").get<double>();
    }
    for (std::size_t p = 0; p < 3; ++p) {
        const auto [a, b] = kAxisPairs[p];
        const std::string key = std::string(kAxisNames[a]) + "_" + kAxisNames[b];
        r.xcorr_real[p] = curve_from_json(j.at("cross_correlation").at(key).at("real"));
        r.xcorr_synthetic[p] = curve_from_json(j.at("cross_correlation").at(key).at("synthetic"));
        r.xcorr_lag0_dev[p] = j.at("cross_correlation").at(key).at("lag0_dev").get<double>();
    }
    r.pca = pca_from_json(j.at("pca"));
    return r;
}

} // namespace headsynth
