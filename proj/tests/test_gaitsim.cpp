#include "gaitlab/features.hpp"
#include "gaitlab/gaitsim.hpp"
#include "gaitlab/signal.hpp"

#include <doctest.h>

#include <cmath>

using namespace gaitlab;
using namespace gaitlab::gaitsim;
using telemetry::Task;

namespace {

GaitParams quiet(double cadence = 112.0) {
    GaitParams p;
    p.cadence_spm = cadence;
    p.step_time_cv = 0.0;
    p.noise_g = 0.0;
    p.noise_dps = 0.0;
    return p;
}

std::vector<double> gyro_axis(const std::vector<telemetry::ImuSample>& ch, int axis) {
    std::vector<double> out;
    for (const auto& s : ch) out.push_back(s.gyro[static_cast<std::size_t>(axis)]);
    return out;
}

} // namespace

TEST_CASE("cadence 120 over 60 s gives 120 +/- 1 impacts") {
    GaitParams p = quiet(120.0);
    p.step_time_cv = 0.02;
    const auto sim = simulate_session(p, "S001", Task::Walk);
    const auto n = static_cast<double>(sim.step_times_s.size());
    CHECK(n >= 119);
    CHECK(n <= 121);
    for (double t : sim.step_times_s) {
        CHECK(t >= 0.0);
        CHECK(t < 60.0);
    }
}

TEST_CASE("dual task slows cadence by ten percent") {
    const GaitParams p = quiet(120.0);
    const auto walk = simulate_session(p, "S001", Task::Walk).step_times_s.size();
    const auto dual = simulate_session(p, "S001", Task::DualTask).step_times_s.size();
    CHECK(static_cast<double>(dual) == doctest::Approx(kDualTaskCadenceFactor * static_cast<double>(walk)).epsilon(0.02));
}

TEST_CASE("symmetric noise-free arms have equal gyro rms") {
    const GaitParams p = quiet();
    const auto s = generate_session(p, "S001", Task::Walk);
    const double left = features::rms(gyro_axis(s.left, 1));
    const double right = features::rms(gyro_axis(s.right, 1));
    CHECK(left > 10.0);
    CHECK(std::fabs(left - right) <= 0.02 * left);
}

TEST_CASE("arms swing in anti-phase") {
    const auto s = generate_session(quiet(), "S001", Task::Walk);
    const auto l = gyro_axis(s.left, 1);
    const auto r = gyro_axis(s.right, 1);
    double dot = 0.0, ll = 0.0, rr = 0.0;
    for (std::size_t i = 0; i < l.size(); ++i) {
        dot += l[i] * r[i];
        ll += l[i] * l[i];
        rr += r[i] * r[i];
    }
    CHECK(dot / std::sqrt(ll * rr) < -0.95);
}

TEST_CASE("same params and seed give identical sessions") {
    GaitParams p;
    p.seed = 99;
    p.tremor_hz = 5.0;
    p.tremor_amp_dps = 20.0;
    const auto a = generate_session(p, "S001", Task::DualTask);
    const auto b = generate_session(p, "S001", Task::DualTask);
    CHECK(a == b);
    CHECK(telemetry::session_to_csv(a) == telemetry::session_to_csv(b));
    p.seed = 100;
    CHECK_FALSE(generate_session(p, "S001", Task::DualTask) == a);
}

TEST_CASE("session shape") {
    const auto s = generate_session(GaitParams{}, "S007", Task::Walk);
    CHECK(s.size() == 6000);
    CHECK(s.sample_rate_hz == 100);
    CHECK(s.subject_id == "S007");
    CHECK(s.t_ms.front() == 0.0);
    CHECK(s.t_ms[1] == 10.0);
    telemetry::validate(s);
}

TEST_CASE("parameter validation") {
    GaitParams p;
    p.cadence_spm = 0;
    CHECK_THROWS_AS(validate(p), Error);
    p = GaitParams{};
    p.step_time_cv = 0.6;
    CHECK_THROWS_AS(validate(p), Error);
    p = GaitParams{};
    p.swing_asym = 1.0;
    CHECK_THROWS_AS(validate(p), Error);
    p = GaitParams{};
    p.impact_g = -1;
    CHECK_THROWS_AS(validate(p), Error);
    CohortSpec c;
    c.n_control = 1;
    c.n_pd = 0;
    CHECK_THROWS_AS(validate(c), Error);
}

TEST_CASE("cohort of 40+40 gives 160 balanced sessions") {
    CohortSpec c = CohortSpec::preset("strong");
    c.control.mean.duration_s = 30;
    c.pd.mean.duration_s = 30;
    const auto sessions = generate_cohort(c, 2);
    REQUIRE(sessions.size() == 160);
    int pd = 0, control = 0;
    for (std::size_t i = 0; i < sessions.size(); ++i) {
        REQUIRE(sessions[i].label.has_value());
        (*sessions[i].label == telemetry::Label::PD ? pd : control) += 1;
        CHECK(sessions[i].task == (i % 2 == 0 ? Task::Walk : Task::DualTask));
    }
    CHECK(pd == 80);
    CHECK(control == 80);
    CHECK(sessions.front().subject_id == "S001");
    CHECK(sessions.back().subject_id == "S080");
    CHECK(generate_cohort(c, 1) == sessions);
}

TEST_CASE("zero jitter gives identical control parameters") {
    CohortSpec c = CohortSpec::preset("strong");
    c.control.jitter = GaitParams{0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
    GaitParams first = draw_subject_params(c, 0);
    for (int i = 1; i < c.n_control; ++i) {
        GaitParams other = draw_subject_params(c, i);
        other.seed = first.seed;
        CHECK(other == first);
    }
    CHECK(draw_subject_params(c, 1).seed != first.seed);
}

TEST_CASE("pd asymmetry shows up in extracted features") {
    CohortSpec c = CohortSpec::preset("strong");
    c.n_control = 8;
    c.n_pd = 8;
    const auto sessions = generate_cohort(c);
    const auto ex = features::extract_all(sessions);
    REQUIRE(ex.flagged.empty());
    double control = 0.0, pd = 0.0;
    for (const auto& v : ex.vectors) {
        (*v.label == telemetry::Label::PD ? pd : control) += v.value("swing_asym") / 16.0;
    }
    CHECK(pd - control > 0.2);
}

TEST_CASE("extracted asymmetry increases strictly with injected asymmetry") {
    double previous = -1.0;
    for (double asym : {0.0, 0.1, 0.2, 0.3, 0.45, 0.6, 0.8}) {
        GaitParams p = quiet();
        p.swing_asym = asym;
        const double got = features::extract_features(generate_session(p, "S001", Task::Walk)).value("swing_asym");
        CHECK(got > previous);
        previous = got;
    }
}

TEST_CASE("cohort config file") {
    const auto kv = text::KeyValues::parse("preset=null\nn_control=3\nn_pd=4\nseed=42\nduration_s=40\n"
                                           "pd.swing_asym=0.3\npd.swing_asym.jitter=0.01\n");
    const CohortSpec c = cohort_from_config(kv);
    CHECK(c.n_control == 3);
    CHECK(c.n_pd == 4);
    CHECK(c.seed == 42);
    CHECK(c.control.mean.duration_s == 40);
    CHECK(c.pd.mean.swing_asym == 0.3);
    CHECK(c.pd.jitter.swing_asym == 0.01);
    CHECK(c.control.mean.swing_asym == CohortSpec::preset("null").control.mean.swing_asym);
    CHECK(is_cohort_key("control.cadence_spm.jitter"));
    CHECK_FALSE(is_cohort_key("folds"));

    const CohortSpec null = CohortSpec::preset("null");
    CHECK(null.control == null.pd);
    CHECK_THROWS_AS(CohortSpec::preset("medium"), Error);
}
