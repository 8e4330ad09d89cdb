#include "gaitlab/features.hpp"

#include "gaitlab/parallel.hpp"
#include "gaitlab/signal.hpp"
#include "gaitlab/text.hpp"

#include <algorithm>
#include <cmath>

namespace gaitlab::features {

namespace {

struct WristSignals {
    std::vector<double> magnitude;  // raw |a|, g
    std::vector<double> smoothed;   // low-passed |a| minus its mean
};

WristSignals wrist_signals(std::span<const telemetry::ImuSample> samples, const FeatureConfig& cfg, double rate) {
    WristSignals w;
    w.magnitude = accel_magnitude(samples);
    w.smoothed = lowpass(w.magnitude, cfg.step_cutoff_hz, rate);
    const double baseline = mean(w.smoothed);
    for (double& v : w.smoothed) {
        v -= baseline;
    }
    return w;
}

// Peaks of one wrist's smoothed signal. The threshold is relative to the
// signal's own spread, so scaling the input leaves the result unchanged.
std::vector<double> wrist_peaks(const WristSignals& w, std::span<const double> t_ms, const FeatureConfig& cfg) {
    std::vector<double> rectified(w.smoothed.size());
    std::transform(w.smoothed.begin(), w.smoothed.end(), rectified.begin(), [](double v) { return std::abs(v); });
    const double spread = percentile(rectified, cfg.peak_percentile);
    // Flat input: nothing but rounding residue left after removing gravity.
    if (!(spread > 1e-9 * mean(w.magnitude))) {
        return {};
    }
    const double threshold = cfg.peak_rel_threshold * spread;

    std::vector<double> peaks;
    std::vector<double> heights;
    const auto& x = w.smoothed;
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
        if (!(x[i] > threshold && x[i] > x[i - 1] && x[i] >= x[i + 1])) {
            continue;
        }
        const double t = t_ms[i] / 1000.0;
        if (!peaks.empty() && t - peaks.back() < cfg.refractory_s) {
            if (x[i] > heights.back()) {
                peaks.back() = t;
                heights.back() = x[i];
            }
            continue;
        }
        peaks.push_back(t);
        heights.push_back(x[i]);
    }
    return peaks;
}

std::vector<double> merge_events(std::vector<double> a, const std::vector<double>& b, double window_s) {
    a.insert(a.end(), b.begin(), b.end());
    std::sort(a.begin(), a.end());
    std::vector<double> merged;
    for (double t : a) {
        if (merged.empty() || t - merged.back() > window_s) {
            merged.push_back(t);
        }
    }
    return merged;
}

std::vector<double> axis(std::span<const telemetry::ImuSample> samples, int index) {
    std::vector<double> out(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        out[i] = samples[i].gyro[index];
    }
    return out;
}

double variance(std::span<const double> x) {
    const double sd = stddev(x);
    return sd * sd;
}

std::vector<double> first_difference(std::span<const double> x, double rate) {
    std::vector<double> d;
    if (x.size() < 2) {
        return d;
    }
    d.reserve(x.size() - 1);
    for (std::size_t i = 1; i < x.size(); ++i) {
        d.push_back((x[i] - x[i - 1]) * rate);
    }
    return d;
}

std::size_t lag_samples(double seconds, double rate) {
    return static_cast<std::size_t>(std::max(1L, std::lround(seconds * rate)));
}

} // namespace

const std::vector<std::string>& catalog() {
    static const std::vector<std::string> names{
        "cadence_spm",        "step_time_mean_s",    "step_time_cv",      "step_count",        "accel_rms_g",
        "jerk_rms",           "swing_amp_left_dps",  "swing_amp_right_dps", "swing_asym",      "swing_regularity",
        "step_regularity",    "stride_regularity",   "dominant_freq_hz",  "spectral_ratio",
    };
    return names;
}

double FeatureVector::value(std::string_view name) const {
    const auto& names = catalog();
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end() || values.size() != names.size()) {
        throw Error::schema(std::string(name));
    }
    return values[static_cast<std::size_t>(it - names.begin())];
}

std::vector<double> accel_magnitude(std::span<const telemetry::ImuSample> samples) {
    std::vector<double> m(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& a = samples[i].accel;
        m[i] = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
    }
    return m;
}

std::vector<double> detect_steps(const Session& s, const FeatureConfig& cfg) {
    telemetry::validate(s);
    if (s.duration_s() < cfg.min_detect_s) {
        throw Error(Errc::TooShort, "session " + s.subject_id + " lasts " + text::format_sig(s.duration_s(), 4) +
                                        " s, step detection needs " + text::format_sig(cfg.min_detect_s, 4) + " s");
    }
    const double rate = s.sample_rate_hz;
    const auto left = wrist_peaks(wrist_signals(s.left, cfg, rate), s.t_ms, cfg);
    const auto right = wrist_peaks(wrist_signals(s.right, cfg, rate), s.t_ms, cfg);
    return merge_events(left, right, cfg.merge_window_s);
}

Session trim(const Session& s, double trim_s) {
    Session out = s;
    out.t_ms.clear();
    out.left.clear();
    out.right.clear();
    if (s.t_ms.empty()) {
        return out;
    }
    const double lo = s.t_ms.front() + 1000.0 * trim_s;
    const double hi = s.t_ms.back() - 1000.0 * trim_s;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.t_ms[i] >= lo && s.t_ms[i] <= hi) {
            out.t_ms.push_back(s.t_ms[i]);
            out.left.push_back(s.left[i]);
            out.right.push_back(s.right[i]);
        }
    }
    return out;
}

FeatureVector extract_features(const Session& session, const FeatureConfig& cfg) {
    telemetry::validate(session);
    if (session.duration_s() < cfg.min_extract_s) {
        throw Error(Errc::TooShort, "session " + session.subject_id + " lasts " +
                                        text::format_sig(session.duration_s(), 4) + " s, extraction needs " +
                                        text::format_sig(cfg.min_extract_s, 4) + " s");
    }
    const Session s = trim(session, cfg.trim_s);
    const double rate = s.sample_rate_hz;

    const auto steps = detect_steps(s, cfg);
    if (steps.size() < cfg.min_steps || steps.size() < 2) {
        throw Error(Errc::TooFewSteps, "session " + session.subject_id + "/" + std::string(telemetry::to_string(s.task)) +
                                           " has " + std::to_string(steps.size()) + " steps, need " +
                                           std::to_string(cfg.min_steps));
    }
    std::vector<double> intervals;
    for (std::size_t i = 1; i < steps.size(); ++i) {
        intervals.push_back(steps[i] - steps[i - 1]);
    }
    const double walk_span = steps.back() - steps.front();
    const double step_mean = walk_span / static_cast<double>(steps.size() - 1);
    const double cadence = 60.0 * static_cast<double>(steps.size() - 1) / walk_span;
    const double step_cv = stddev(intervals) / mean(intervals);

    const WristSignals wl = wrist_signals(s.left, cfg, rate);
    const WristSignals wr = wrist_signals(s.right, cfg, rate);

    // Dynamic accel: magnitude without its gravity baseline, averaged over wrists.
    std::vector<double> dyn_l = wl.magnitude;
    std::vector<double> dyn_r = wr.magnitude;
    const double g_l = mean(dyn_l);
    const double g_r = mean(dyn_r);
    for (double& v : dyn_l) v -= g_l;
    for (double& v : dyn_r) v -= g_r;
    const double accel_rms = 0.5 * (rms(dyn_l) + rms(dyn_r));
    const double jerk = 0.5 * (rms(first_difference(wl.magnitude, rate)) + rms(first_difference(wr.magnitude, rate)));

    std::vector<double> vertical(s.size());
    std::vector<double> vertical_raw(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        vertical[i] = 0.5 * (wl.smoothed[i] + wr.smoothed[i]);
        vertical_raw[i] = 0.5 * (dyn_l[i] + dyn_r[i]);
    }
    const double step_reg = autocorrelation(vertical, lag_samples(step_mean, rate));
    const double stride_reg = autocorrelation(vertical, lag_samples(2.0 * step_mean, rate));

    // Pitch = the gyro axis carrying the most variance over both wrists.
    int pitch = 0;
    double best = -1.0;
    for (int a = 0; a < 3; ++a) {
        const double v = variance(axis(s.left, a)) + variance(axis(s.right, a));
        if (v > best) {
            best = v;
            pitch = a;
        }
    }
    const auto swing_l = bandpass(axis(s.left, pitch), cfg.swing_low_hz, cfg.swing_high_hz, rate);
    const auto swing_r = bandpass(axis(s.right, pitch), cfg.swing_low_hz, cfg.swing_high_hz, rate);
    auto amplitude = [&](std::vector<double> x) {
        for (double& v : x) v = std::abs(v);
        return percentile(x, cfg.swing_percentile);
    };
    const double amp_l = amplitude(swing_l);
    const double amp_r = amplitude(swing_r);
    const double larger = std::max(amp_l, amp_r);
    const double asym = larger > 0.0 ? std::abs(amp_l - amp_r) / larger : 0.0;
    const std::size_t stride_lag = lag_samples(2.0 * step_mean, rate);
    const double swing_reg = 0.5 * (autocorrelation(swing_l, stride_lag) + autocorrelation(swing_r, stride_lag));

    const Spectrum spec = power_spectrum(vertical_raw, rate);
    double dominant = 0.0;
    double peak_power = -1.0;
    double band = 0.0;
    double total = 0.0;
    for (std::size_t k = 0; k < spec.power.size(); ++k) {
        const double f = spec.freq_hz[k];
        const double p = spec.power[k];
        total += p;
        if (f >= cfg.spectral_low_hz && f <= cfg.spectral_high_hz) {
            band += p;
        }
        if (f >= cfg.swing_low_hz && p > peak_power) {
            peak_power = p;
            dominant = f;
        }
    }
    const double ratio = total > 0.0 ? band / total : 0.0;

    FeatureVector fv;
    fv.subject_id = session.subject_id;
    fv.task = session.task;
    fv.label = session.label;
    fv.values = {cadence, step_mean, step_cv,   static_cast<double>(steps.size()),
                 accel_rms, jerk,    amp_l,     amp_r,
                 asym,      swing_reg, step_reg, stride_reg,
                 dominant,  ratio};
    for (double v : fv.values) {
        ensure(std::isfinite(v), "extracted feature is not finite");
    }
    return fv;
}

Extraction extract_all(std::span<const Session> sessions, const FeatureConfig& cfg, unsigned threads) {
    std::vector<std::optional<FeatureVector>> slots(sessions.size());
    std::vector<std::optional<Flagged>> flags(sessions.size());
    parallel_for(sessions.size(), threads, [&](std::size_t i) {
        try {
            slots[i] = extract_features(sessions[i], cfg);
        } catch (const Error& e) {
            if (e.code() != Errc::TooFewSteps && e.code() != Errc::TooShort) {
                throw;
            }
            flags[i] = Flagged{sessions[i].subject_id, sessions[i].task, e.code(), e.what()};
        }
    });
    Extraction out;
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        if (slots[i]) {
            out.vectors.push_back(std::move(*slots[i]));
        } else {
            out.flagged.push_back(std::move(*flags[i]));
        }
    }
    return out;
}

std::string feature_table_to_csv(std::span<const FeatureVector> rows, const std::vector<std::string>& comment) {
    std::string out;
    for (const auto& c : comment) {
        out += "# " + c + "\n";
    }
    out += "subject_id,task,label";
    for (const auto& name : catalog()) {
        out += "," + name;
    }
    out += '\n';
    for (const auto& row : rows) {
        ensure(row.values.size() == kCatalogSize, "feature vector does not match the catalog");
        out += row.subject_id + "," + std::string(telemetry::to_string(row.task)) + ",";
        out += row.label ? std::to_string(static_cast<int>(*row.label)) : std::string();
        for (double v : row.values) {
            out += "," + text::format_exact(v);
        }
        out += '\n';
    }
    return out;
}

} // namespace gaitlab::features
