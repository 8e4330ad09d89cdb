#pragma once

#include "gaitlab/telemetry.hpp"
#include "gaitlab/text.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gaitlab::gaitsim {

using telemetry::Session;
using telemetry::Task;

/// Wrist kinematics of one simulated walker.
struct GaitParams {
    double cadence_spm = 112.0;
    double step_time_cv = 0.02;
    double swing_amp_left_dps = 120.0;
    double swing_amp_right_dps = 120.0;
    /// Fraction by which the right arm's swing is reduced.
    double swing_asym = 0.0;
    double impact_g = 1.5;
    double tremor_hz = 0.0;
    double tremor_amp_dps = 0.0;
    double noise_g = 0.01;
    double noise_dps = 2.0;
    double duration_s = 60.0;
    int sample_rate_hz = 100;
    std::uint64_t seed = 1;

    friend bool operator==(const GaitParams&, const GaitParams&) = default;
};

/// Throws Errc::InvalidParams on a negative amplitude, non-positive cadence,
/// step_time_cv outside [0, 0.5], swing_asym outside [0, 1) or a duration
/// shorter than one sample.
void validate(const GaitParams& p);

inline constexpr double kDualTaskCadenceFactor = 0.9;
inline constexpr double kDualTaskCvFactor = 1.5;
inline constexpr double kImpactDecayS = 0.010;

struct SimulatedSession {
    Session session;
    /// Ground-truth step instants (s from session start), one impact each.
    std::vector<double> step_times_s;
};

SimulatedSession simulate_session(const GaitParams& p, const std::string& subject_id, Task task);

inline Session generate_session(const GaitParams& p, const std::string& subject_id, Task task) {
    return simulate_session(p, subject_id, task).session;
}

/// Per-field mean and Gaussian jitter (std) for drawing subject parameters.
struct ParamDistribution {
    GaitParams mean;
    GaitParams jitter{0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};

    friend bool operator==(const ParamDistribution&, const ParamDistribution&) = default;
};

struct CohortSpec {
    int n_control = 40;
    int n_pd = 40;
    ParamDistribution control;
    ParamDistribution pd;
    std::uint64_t seed = 7;

    /// "strong": directional PD presets with a large arm-swing effect.
    /// "null": PD presets identical to control.
    static CohortSpec preset(const std::string& name);

    friend bool operator==(const CohortSpec&, const CohortSpec&) = default;
};

/// Throws Errc::InvalidParams when there are fewer than two subjects.
void validate(const CohortSpec& c);

/// Reads `preset`, `n_control`, `n_pd`, `seed`, `duration_s`,
/// `sample_rate_hz` and `control.<field>` / `control.<field>.jitter` (same
/// for `pd.`). Keys the cohort does not own are left for the caller.
CohortSpec cohort_from_config(const text::KeyValues& kv);

/// True when `key` is one cohort_from_config understands.
bool is_cohort_key(const std::string& key);

/// Parameters of subject i (controls first), drawn from the spec's jittered
/// distribution with a subject-specific seed. The two arm amplitudes move
/// together (one shared draw), so left/right asymmetry comes from swing_asym.
GaitParams draw_subject_params(const CohortSpec& c, int subject_index);

std::string subject_name(int subject_index);

/// Two sessions (walk, dual) per subject, controls first; labels attached.
std::vector<Session> generate_cohort(const CohortSpec& c, unsigned threads = 1);

} // namespace gaitlab::gaitsim
