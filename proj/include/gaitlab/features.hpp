#pragma once

#include "gaitlab/error.hpp"
#include "gaitlab/telemetry.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gaitlab::features {

using telemetry::Session;
using telemetry::Task;

/// Thresholds for step detection and swing analysis. Every value can be
/// overridden through the CLI's key=value overrides.
struct FeatureConfig {
    double step_cutoff_hz = 3.5;
    double peak_rel_threshold = 0.3;
    double peak_percentile = 95.0;
    double refractory_s = 0.25;
    double merge_window_s = 0.15;
    double swing_low_hz = 0.3;
    double swing_high_hz = 3.0;
    double swing_percentile = 90.0;
    double spectral_low_hz = 0.5;
    double spectral_high_hz = 3.0;
    double trim_s = 2.0;
    double min_detect_s = 10.0;
    double min_extract_s = 30.0;
    std::size_t min_steps = 10;
};

/// Fixed per-task catalog, in output order.
const std::vector<std::string>& catalog();

inline constexpr std::size_t kCatalogSize = 14;

struct FeatureVector {
    std::string subject_id;
    Task task = Task::Walk;
    std::optional<telemetry::Label> label;
    /// Values in catalog() order.
    std::vector<double> values;

    double value(std::string_view name) const;

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

/// Accel magnitude per sample of one wrist.
std::vector<double> accel_magnitude(std::span<const telemetry::ImuSample> samples);

/// Step instants (s on the session clock) from both wrists, merged and sorted.
/// Throws Errc::TooShort for sessions under cfg.min_detect_s.
std::vector<double> detect_steps(const Session& s, const FeatureConfig& cfg = {});

/// Drops the first and last `trim_s` seconds.
Session trim(const Session& s, double trim_s);

/// Throws TooShort (< cfg.min_extract_s) or TooFewSteps (< cfg.min_steps).
FeatureVector extract_features(const Session& s, const FeatureConfig& cfg = {});

struct Flagged {
    std::string subject_id;
    Task task = Task::Walk;
    Errc reason = Errc::TooFewSteps;
    std::string message;
};

struct Extraction {
    std::vector<FeatureVector> vectors;
    std::vector<Flagged> flagged;
};

/// Extracts every session; degraded sessions are flagged rather than thrown.
/// Output follows input order.
Extraction extract_all(std::span<const Session> sessions, const FeatureConfig& cfg = {}, unsigned threads = 1);

/// Long-form table: `subject_id,task,label,<catalog>` with one row per
/// (subject, task). `comment` lines are written first, each prefixed "# ".
std::string feature_table_to_csv(std::span<const FeatureVector> rows, const std::vector<std::string>& comment = {});

} // namespace gaitlab::features
