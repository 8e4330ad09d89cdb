#include "gaitlab/features.hpp"
#include "gaitlab/gaitsim.hpp"
#include "gaitlab/signal.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace gaitlab;
using namespace gaitlab::features;
using telemetry::Task;

namespace {

constexpr double kRate = 100.0;

std::vector<double> sine(double freq_hz, double amplitude, std::size_t n) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * i / kRate);
    return x;
}

// Amplitude of the freq_hz component over the middle half, by projection onto sin and cos.
double tone_amplitude(const std::vector<double>& x, double freq_hz) {
    const std::size_t lo = x.size() / 4, hi = 3 * x.size() / 4;
    double s = 0.0, c = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
        const double ph = 2.0 * std::numbers::pi * freq_hz * i / kRate;
        s += x[i] * std::sin(ph);
        c += x[i] * std::cos(ph);
    }
    return 2.0 * std::hypot(s, c) / static_cast<double>(hi - lo);
}

gaitsim::GaitParams params(double cadence = 112.0) {
    gaitsim::GaitParams p;
    p.cadence_spm = cadence;
    p.seed = 17;
    return p;
}

telemetry::Session scaled_accel(telemetry::Session s, double factor) {
    for (auto* ch : {&s.left, &s.right}) {
        for (auto& sample : *ch) {
            for (double& v : sample.accel) v *= factor;
        }
    }
    return s;
}

} // namespace

TEST_CASE("lowpass passes DC unchanged") {
    const std::vector<double> x(500, 0.987);
    for (double v : lowpass(x, 3.5, kRate)) CHECK(v == doctest::Approx(0.987).epsilon(1e-12));
    CHECK(lowpass(x, 3.5, kRate).size() == x.size());
}

TEST_CASE("lowpass keeps 1 Hz and removes 20 Hz") {
    const auto slow = lowpass(sine(1.0, 1.0, 2000), 3.5, kRate);
    CHECK(tone_amplitude(slow, 1.0) == doctest::Approx(1.0).epsilon(0.02));
    const auto fast = lowpass(sine(20.0, 1.0, 2000), 3.5, kRate);
    CHECK(tone_amplitude(fast, 20.0) < 0.1);
}

TEST_CASE("lowpass is zero phase") {
    const auto x = sine(1.0, 1.0, 2000);
    const auto y = lowpass(x, 3.5, kRate);
    // Peak positions agree in the interior.
    std::size_t px = 500, py = 500;
    for (std::size_t i = 500; i < 600; ++i) {
        if (x[i] > x[px]) px = i;
        if (y[i] > y[py]) py = i;
    }
    CHECK(px == py);
}

TEST_CASE("filter parameter errors") {
    const std::vector<double> x(100, 1.0);
    CHECK_THROWS_AS(lowpass(x, 50.0, kRate), Error);
    CHECK_THROWS_AS(lowpass(x, 0.0, kRate), Error);
    CHECK_THROWS_AS(highpass(x, 60.0, kRate), Error);
}

TEST_CASE("signal helpers") {
    const std::vector<double> x{1, 2, 3, 4};
    CHECK(mean(x) == 2.5);
    CHECK(stddev(x) == doctest::Approx(std::sqrt(1.25)));
    CHECK(rms(x) == doctest::Approx(std::sqrt(7.5)));
    CHECK(percentile(x, 50) == 2.5);
    CHECK(percentile(x, 100) == 4);
    CHECK(percentile(x, 0) == 1);
    const auto periodic = sine(2.0, 1.0, 1000);
    CHECK(autocorrelation(periodic, 50) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(autocorrelation(periodic, 25) == doctest::Approx(-1.0).epsilon(1e-6));
    const auto spec = power_spectrum(sine(5.0, 1.0, 1000), kRate);
    std::size_t peak = 0;
    for (std::size_t k = 0; k < spec.power.size(); ++k) {
        if (spec.power[k] > spec.power[peak]) peak = k;
    }
    CHECK(spec.freq_hz[peak] == doctest::Approx(5.0));
}

TEST_CASE("cadence 120 for 60 s gives 120 +/- 3 steps") {
    const auto s = gaitsim::generate_session(params(120.0), "S001", Task::Walk);
    const auto steps = detect_steps(s);
    CHECK(steps.size() >= 117);
    CHECK(steps.size() <= 123);
}

TEST_CASE("detected steps line up with the generator's impacts") {
    const auto sim = gaitsim::simulate_session(params(105.0), "S001", Task::Walk);
    const auto steps = detect_steps(sim.session);
    std::size_t matched = 0;
    for (double truth : sim.step_times_s) {
        for (double t : steps) {
            if (std::fabs(t - truth) < 0.05) {
                ++matched;
                break;
            }
        }
    }
    CHECK(matched >= sim.step_times_s.size() - 2);
}

TEST_CASE("no impacts and no noise gives no steps") {
    auto p = params();
    p.impact_g = 0.0;
    p.noise_g = 0.0;
    p.noise_dps = 0.0;
    CHECK(detect_steps(gaitsim::generate_session(p, "S001", Task::Walk)).empty());
}

TEST_CASE("doubling accel leaves step times unchanged") {
    const auto s = gaitsim::generate_session(params(), "S001", Task::Walk);
    const auto a = detect_steps(s);
    const auto b = detect_steps(scaled_accel(s, 2.0));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-12));
    CHECK(extract_features(scaled_accel(s, 2.0)).value("cadence_spm") == extract_features(s).value("cadence_spm"));
}

TEST_CASE("short sessions are rejected") {
    auto p = params();
    p.duration_s = 8.0;
    const auto tiny = gaitsim::generate_session(p, "S001", Task::Walk);
    CHECK_THROWS_AS(detect_steps(tiny), Error);
    p.duration_s = 20.0;
    try {
        extract_features(gaitsim::generate_session(p, "S001", Task::Walk));
        FAIL("expected TooShort");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::TooShort);
    }
}

TEST_CASE("degraded session is flagged, not extracted") {
    auto p = params();
    p.impact_g = 0.0;
    p.noise_g = 0.0;
    const std::vector<telemetry::Session> sessions{gaitsim::generate_session(params(), "S001", Task::Walk),
                                                   gaitsim::generate_session(p, "S002", Task::Walk)};
    const auto ex = extract_all(sessions);
    REQUIRE(ex.vectors.size() == 1);
    REQUIRE(ex.flagged.size() == 1);
    CHECK(ex.flagged[0].subject_id == "S002");
    CHECK(ex.flagged[0].reason == Errc::TooFewSteps);
}

TEST_CASE("symmetric session has small asymmetry") {
    const auto v = extract_features(gaitsim::generate_session(params(), "S001", Task::Walk));
    CHECK(v.value("swing_asym") < 0.05);
}

TEST_CASE("right arm at half the left gives asymmetry 0.5") {
    auto p = params();
    p.swing_amp_left_dps = 120.0;
    p.swing_amp_right_dps = 60.0;
    const auto v = extract_features(gaitsim::generate_session(p, "S001", Task::Walk));
    CHECK(v.value("swing_asym") == doctest::Approx(0.5).epsilon(0.1));
    CHECK(std::fabs(v.value("swing_asym") - 0.5) <= 0.05);
}

TEST_CASE("cadence 110 is recovered within 2 percent") {
    const auto v = extract_features(gaitsim::generate_session(params(110.0), "S001", Task::Walk));
    CHECK(std::fabs(v.value("cadence_spm") - 110.0) <= 0.02 * 110.0);
}

TEST_CASE("catalog, ranges and the cadence identity") {
    auto p = params();
    p.swing_asym = 0.3;
    const auto s = gaitsim::generate_session(p, "S001", Task::DualTask);
    const auto v = extract_features(s);
    REQUIRE(catalog().size() == kCatalogSize);
    REQUIRE(v.values.size() == kCatalogSize);
    CHECK(catalog().front() == "cadence_spm");
    CHECK(catalog().back() == "spectral_ratio");
    for (double x : v.values) CHECK(std::isfinite(x));
    for (const char* name : {"swing_regularity", "step_regularity", "stride_regularity"}) {
        CHECK(v.value(name) >= -1.0);
        CHECK(v.value(name) <= 1.0);
    }
    CHECK(v.value("swing_asym") >= 0.0);
    CHECK(v.value("swing_asym") <= 1.0);
    CHECK(v.value("spectral_ratio") >= 0.0);
    CHECK(v.value("spectral_ratio") <= 1.0);

    const auto steps = detect_steps(trim(s, FeatureConfig{}.trim_s));
    CHECK(v.value("step_count") == static_cast<double>(steps.size()));
    CHECK(v.value("cadence_spm") == 60.0 * static_cast<double>(steps.size() - 1) / (steps.back() - steps.front()));
    CHECK(v.task == Task::DualTask);
    CHECK_THROWS_AS(v.value("no_such_feature"), Error);
}

TEST_CASE("gyro scaling leaves asymmetry unchanged") {
    auto p = params();
    p.swing_asym = 0.25;
    auto s = gaitsim::generate_session(p, "S001", Task::Walk);
    const double before = extract_features(s).value("swing_asym");
    for (auto* ch : {&s.left, &s.right}) {
        for (auto& sample : *ch) {
            for (double& v : sample.gyro) v *= 3.0;
        }
    }
    CHECK(extract_features(s).value("swing_asym") == doctest::Approx(before).epsilon(1e-9));
}

TEST_CASE("pitch axis is auto-selected") {
    auto s = gaitsim::generate_session(params(), "S001", Task::Walk);
    const double before = extract_features(s).value("swing_amp_left_dps");
    for (auto* ch : {&s.left, &s.right}) {
        for (auto& sample : *ch) std::swap(sample.gyro[0], sample.gyro[1]);
    }
    CHECK(extract_features(s).value("swing_amp_left_dps") == doctest::Approx(before));
}

TEST_CASE("extraction is deterministic and the table is long form") {
    std::vector<telemetry::Session> sessions;
    for (Task t : {Task::Walk, Task::DualTask}) {
        auto s = gaitsim::generate_session(params(), "S001", t);
        s.label = telemetry::Label::PD;
        sessions.push_back(s);
    }
    const auto a = extract_all(sessions, {}, 2);
    const auto b = extract_all(sessions, {}, 1);
    CHECK(a.vectors == b.vectors);
    const std::string csv = feature_table_to_csv(a.vectors, {"note"});
    CHECK(csv.rfind("# note\nsubject_id,task,label,cadence_spm,", 0) == 0);
    CHECK(csv.find("\nS001,walk,1,") != std::string::npos);
    CHECK(csv.find("\nS001,dual,1,") != std::string::npos);
}
