#include "gaitlab/gaitsim.hpp"

#include "gaitlab/parallel.hpp"
#include "gaitlab/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <utility>

namespace gaitlab::gaitsim {

namespace {

constexpr double kPi = std::numbers::pi;

// Jittered fields, by config name.
constexpr std::array<std::pair<const char*, double GaitParams::*>, 10> kFields{{
    {"cadence_spm", &GaitParams::cadence_spm},
    {"step_time_cv", &GaitParams::step_time_cv},
    {"swing_amp_left_dps", &GaitParams::swing_amp_left_dps},
    {"swing_amp_right_dps", &GaitParams::swing_amp_right_dps},
    {"swing_asym", &GaitParams::swing_asym},
    {"impact_g", &GaitParams::impact_g},
    {"tremor_hz", &GaitParams::tremor_hz},
    {"tremor_amp_dps", &GaitParams::tremor_amp_dps},
    {"noise_g", &GaitParams::noise_g},
    {"noise_dps", &GaitParams::noise_dps},
}};

// Stream ids for Rng::derive.
enum Stream : std::uint64_t { kSteps = 1, kNoise = 2, kTremor = 3 };

std::vector<double> step_schedule(double period_s, double cv, double duration_s, Rng& rng) {
    std::vector<double> steps;
    double t = period_s * (0.2 + 0.6 * rng.uniform());
    while (t < duration_s) {
        steps.push_back(t);
        t += period_s * std::max(0.3, 1.0 + cv * rng.normal());
    }
    return steps;
}

// Arm-swing phase: advances by pi per step, linearly within each interval.
double swing_phase(double t, const std::vector<double>& steps, std::size_t& cursor, double period_s) {
    if (steps.empty()) {
        return kPi * t / period_s;
    }
    if (t < steps.front()) {
        return kPi * (t - steps.front()) / period_s;
    }
    while (cursor + 1 < steps.size() && steps[cursor + 1] <= t) {
        ++cursor;
    }
    const double start = steps[cursor];
    const double span = cursor + 1 < steps.size() ? steps[cursor + 1] - start : period_s;
    return kPi * (static_cast<double>(cursor) + (t - start) / span);
}

} // namespace

void validate(const GaitParams& p) {
    auto fail = [](const std::string& what) { throw Error(Errc::InvalidParams, what); };
    if (!(p.cadence_spm > 0.0)) fail("cadence_spm must be positive");
    if (!(p.step_time_cv >= 0.0 && p.step_time_cv <= 0.5)) fail("step_time_cv must lie in [0, 0.5]");
    if (!(p.swing_asym >= 0.0 && p.swing_asym < 1.0)) fail("swing_asym must lie in [0, 1)");
    for (const auto& [name, field] : kFields) {
        if (!(p.*field >= 0.0) || !std::isfinite(p.*field)) {
            fail(std::string(name) + " must be a finite non-negative number");
        }
    }
    if (p.sample_rate_hz <= 0) fail("sample_rate_hz must be positive");
    if (!(p.duration_s * p.sample_rate_hz >= 2.0)) fail("duration_s must cover at least two samples");
    if (p.tremor_amp_dps > 0.0 && !(p.tremor_hz > 0.0 && p.tremor_hz < p.sample_rate_hz / 2.0)) {
        fail("tremor_hz must lie below the Nyquist rate");
    }
}

SimulatedSession simulate_session(const GaitParams& p, const std::string& subject_id, Task task) {
    validate(p);
    const bool dual = task == Task::DualTask;
    const double cadence = p.cadence_spm * (dual ? kDualTaskCadenceFactor : 1.0);
    const double cv = p.step_time_cv * (dual ? kDualTaskCvFactor : 1.0);
    const double period_s = 60.0 / cadence;
    const std::uint64_t task_seed = Rng::derive(p.seed, dual ? 2 : 1);

    Rng step_rng(Rng::derive(task_seed, kSteps));
    Rng noise_rng(Rng::derive(task_seed, kNoise));
    Rng tremor_rng(Rng::derive(task_seed, kTremor));

    SimulatedSession out;
    out.step_times_s = step_schedule(period_s, cv, p.duration_s, step_rng);
    const auto& steps = out.step_times_s;

    const double tremor_phase_left = 2.0 * kPi * tremor_rng.uniform();
    const double tremor_phase_right = 2.0 * kPi * tremor_rng.uniform();
    const double amp_left = p.swing_amp_left_dps;
    const double amp_right = p.swing_amp_right_dps * (1.0 - p.swing_asym);

    Session& s = out.session;
    s.subject_id = subject_id;
    s.task = task;
    s.sample_rate_hz = p.sample_rate_hz;
    const auto n = static_cast<std::size_t>(std::llround(p.duration_s * p.sample_rate_hz));
    s.t_ms.resize(n);
    s.left.resize(n);
    s.right.resize(n);

    std::size_t phase_cursor = 0;
    std::size_t impact_cursor = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / p.sample_rate_hz;
        s.t_ms[i] = 1000.0 * static_cast<double>(i) / p.sample_rate_hz;

        const double phase = swing_phase(t, steps, phase_cursor, period_s);
        while (impact_cursor < steps.size() && steps[impact_cursor] <= t) {
            ++impact_cursor;
        }
        // Transients of earlier steps decay within a few time constants.
        double impact = 0.0;
        for (std::size_t k = impact_cursor; k > 0; --k) {
            const double age = t - steps[k - 1];
            if (age > 20.0 * kImpactDecayS) {
                break;
            }
            impact += p.impact_g * std::exp(-age / kImpactDecayS);
        }

        for (int side = 0; side < 2; ++side) {
            telemetry::ImuSample& sample = side == 0 ? s.left[i] : s.right[i];
            const double amp = side == 0 ? amp_left : amp_right;
            const double sign = side == 0 ? 1.0 : -1.0;
            const double tremor_phase = side == 0 ? tremor_phase_left : tremor_phase_right;
            const double tremor = p.tremor_amp_dps * std::sin(2.0 * kPi * p.tremor_hz * t + tremor_phase);

            sample.gyro[0] = sign * 0.1 * amp * std::cos(phase) + p.noise_dps * noise_rng.normal();
            sample.gyro[1] = sign * amp * std::sin(phase) + tremor + p.noise_dps * noise_rng.normal();
            sample.gyro[2] = 0.5 * tremor + p.noise_dps * noise_rng.normal();

            sample.accel[0] = p.noise_g * noise_rng.normal();
            sample.accel[1] = p.noise_g * noise_rng.normal();
            sample.accel[2] = 1.0 + impact + p.noise_g * noise_rng.normal();

            sample.mag = {22.0, 5.0 * sign, -40.0};
        }
    }
    return out;
}

CohortSpec CohortSpec::preset(const std::string& name) {
    CohortSpec c;
    GaitParams& ctl = c.control.mean;
    ctl = GaitParams{};
    ctl.swing_asym = 0.05;
    GaitParams& ctl_j = c.control.jitter;
    ctl_j.cadence_spm = 6.0;
    ctl_j.step_time_cv = 0.005;
    ctl_j.swing_amp_left_dps = 10.0;
    ctl_j.swing_amp_right_dps = 10.0;
    ctl_j.swing_asym = 0.03;
    ctl_j.impact_g = 0.2;

    if (name == "null") {
        c.pd = c.control;
        return c;
    }
    if (name != "strong") {
        throw Error(Errc::SchemaMismatch, "unknown cohort preset '" + name + "' (expected strong or null)");
    }
    GaitParams& pd = c.pd.mean;
    pd = ctl;
    pd.cadence_spm = 100.0;
    pd.step_time_cv = 0.05;
    pd.swing_amp_left_dps = 70.0;
    pd.swing_amp_right_dps = 70.0;
    pd.swing_asym = 0.4;
    pd.impact_g = 1.2;
    pd.tremor_hz = 5.0;
    pd.tremor_amp_dps = 20.0;
    GaitParams& pd_j = c.pd.jitter;
    pd_j = ctl_j;
    pd_j.cadence_spm = 8.0;
    pd_j.step_time_cv = 0.01;
    pd_j.swing_amp_left_dps = 12.0;
    pd_j.swing_amp_right_dps = 12.0;
    pd_j.swing_asym = 0.08;
    pd_j.tremor_hz = 0.4;
    pd_j.tremor_amp_dps = 6.0;
    return c;
}

void validate(const CohortSpec& c) {
    if (c.n_control < 0 || c.n_pd < 0 || c.n_control + c.n_pd < 2) {
        throw Error(Errc::InvalidParams, "cohort needs n_control + n_pd >= 2");
    }
    validate(c.control.mean);
    validate(c.pd.mean);
}

bool is_cohort_key(const std::string& key) {
    for (const char* global : {"preset", "n_control", "n_pd", "seed", "duration_s", "sample_rate_hz"}) {
        if (key == global) {
            return true;
        }
    }
    for (const char* group : {"control.", "pd."}) {
        if (!key.starts_with(group)) {
            continue;
        }
        std::string rest = key.substr(std::char_traits<char>::length(group));
        if (rest.ends_with(".jitter")) {
            rest.resize(rest.size() - 7);
        }
        for (const auto& [name, field] : kFields) {
            if (rest == name) {
                return true;
            }
        }
    }
    return false;
}

CohortSpec cohort_from_config(const text::KeyValues& kv) {
    CohortSpec c = CohortSpec::preset(kv.string("preset", "strong"));
    c.n_control = static_cast<int>(kv.integer("n_control", c.n_control));
    c.n_pd = static_cast<int>(kv.integer("n_pd", c.n_pd));
    c.seed = static_cast<std::uint64_t>(kv.integer("seed", static_cast<long long>(c.seed)));
    for (ParamDistribution* d : {&c.control, &c.pd}) {
        d->mean.duration_s = kv.number("duration_s", d->mean.duration_s);
        d->mean.sample_rate_hz = static_cast<int>(kv.integer("sample_rate_hz", d->mean.sample_rate_hz));
    }
    for (const auto& [group, dist] : {std::pair{"control.", &c.control}, std::pair{"pd.", &c.pd}}) {
        for (const auto& [name, field] : kFields) {
            const std::string key = std::string(group) + name;
            dist->mean.*field = kv.number(key, dist->mean.*field);
            dist->jitter.*field = kv.number(key + ".jitter", dist->jitter.*field);
        }
    }
    validate(c);
    return c;
}

GaitParams draw_subject_params(const CohortSpec& c, int subject_index) {
    const ParamDistribution& dist = subject_index < c.n_control ? c.control : c.pd;
    const std::uint64_t subject_seed = Rng::derive(c.seed, static_cast<std::uint64_t>(subject_index));
    Rng rng(Rng::derive(subject_seed, 0));
    GaitParams p = dist.mean;
    // Both arms share one amplitude draw; left/right differences come from swing_asym alone.
    double swing_z = 0.0;
    for (const auto& [name, field] : kFields) {
        double z = rng.normal();
        if (field == &GaitParams::swing_amp_left_dps) swing_z = z;
        if (field == &GaitParams::swing_amp_right_dps) z = swing_z;
        p.*field = std::max(0.0, dist.mean.*field + dist.jitter.*field * z);
    }
    p.cadence_spm = std::max(p.cadence_spm, 40.0);
    p.step_time_cv = std::min(p.step_time_cv, 0.5);
    p.swing_asym = std::min(p.swing_asym, 0.95);
    p.tremor_hz = std::min(p.tremor_hz, 0.45 * p.sample_rate_hz);
    p.seed = subject_seed;
    return p;
}

std::string subject_name(int subject_index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "S%03d", subject_index + 1);
    return buf;
}

std::vector<Session> generate_cohort(const CohortSpec& c, unsigned threads) {
    validate(c);
    const int n = c.n_control + c.n_pd;
    std::vector<Session> out(2 * static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t i) {
        const int idx = static_cast<int>(i);
        const GaitParams p = draw_subject_params(c, idx);
        const auto label = idx < c.n_control ? telemetry::Label::Control : telemetry::Label::PD;
        for (Task task : {Task::Walk, Task::DualTask}) {
            Session s = generate_session(p, subject_name(idx), task);
            s.label = label;
            out[2 * i + (task == Task::Walk ? 0 : 1)] = std::move(s);
        }
    });
    return out;
}

} // namespace gaitlab::gaitsim
