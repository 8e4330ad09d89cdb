#include "gaitlab/signal.hpp"

#include "gaitlab/error.hpp"
#include "gaitlab/text.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>

namespace gaitlab::features {

namespace {

struct Biquad {
    double b0, b1, b2, a1, a2;  // normalised so a0 = 1

    double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
};

enum class Shape { Lowpass, Highpass };

Biquad design(Shape shape, double cutoff_hz, double rate_hz) {
    if (!(cutoff_hz > 0.0) || !(cutoff_hz < rate_hz / 2.0)) {
        throw Error(Errc::InvalidParams, "cutoff " + text::format_sig(cutoff_hz, 6) + " Hz must lie in (0, " +
                                             text::format_sig(rate_hz / 2.0, 6) + ") Hz");
    }
    constexpr double q = std::numbers::sqrt2 / 2.0;
    const double w0 = 2.0 * std::numbers::pi * cutoff_hz / rate_hz;
    const double cw = std::cos(w0);
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad f{};
    if (shape == Shape::Lowpass) {
        f.b0 = (1.0 - cw) / 2.0 / a0;
        f.b1 = (1.0 - cw) / a0;
        f.b2 = f.b0;
    } else {
        f.b0 = (1.0 + cw) / 2.0 / a0;
        f.b1 = -(1.0 + cw) / a0;
        f.b2 = f.b0;
    }
    f.a1 = -2.0 * cw / a0;
    f.a2 = (1.0 - alpha) / a0;
    return f;
}

// Direct form II transposed, state primed as if x[0] had been applied forever.
void run(const Biquad& f, std::vector<double>& x) {
    if (x.empty()) {
        return;
    }
    const double x0 = x.front();
    const double y0 = f.dc_gain() * x0;
    double z1 = y0 - f.b0 * x0;
    double z2 = f.b2 * x0 - f.a2 * y0;
    for (double& v : x) {
        const double in = v;
        const double out = f.b0 * in + z1;
        z1 = f.b1 * in - f.a1 * out + z2;
        z2 = f.b2 * in - f.a2 * out;
        v = out;
    }
}

std::vector<double> filtfilt(const Biquad& f, std::span<const double> signal) {
    std::vector<double> y(signal.begin(), signal.end());
    run(f, y);
    std::reverse(y.begin(), y.end());
    run(f, y);
    std::reverse(y.begin(), y.end());
    return y;
}

// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

} // namespace

std::vector<double> lowpass(std::span<const double> signal, double cutoff_hz, double rate_hz) {
    return filtfilt(design(Shape::Lowpass, cutoff_hz, rate_hz), signal);
}

std::vector<double> highpass(std::span<const double> signal, double cutoff_hz, double rate_hz) {
    return filtfilt(design(Shape::Highpass, cutoff_hz, rate_hz), signal);
}

std::vector<double> bandpass(std::span<const double> signal, double low_hz, double high_hz, double rate_hz) {
    const auto hp = highpass(signal, low_hz, rate_hz);
    return lowpass(hp, high_hz, rate_hz);
}

double mean(std::span<const double> x) {
    if (x.empty()) {
        return 0.0;
    }
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double stddev(std::span<const double> x) {
    if (x.empty()) {
        return 0.0;
    }
    const double m = mean(x);
    double acc = 0.0;
    for (double v : x) {
        acc += (v - m) * (v - m);
    }
    return std::sqrt(acc / static_cast<double>(x.size()));
}

double rms(std::span<const double> x) {
    if (x.empty()) {
        return 0.0;
    }
    double acc = 0.0;
    for (double v : x) {
        acc += v * v;
    }
    return std::sqrt(acc / static_cast<double>(x.size()));
}

double percentile(std::span<const double> x, double q) {
    if (x.empty()) {
        return 0.0;
    }
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    const double pos = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

double autocorrelation(std::span<const double> x, std::size_t lag) {
    if (x.size() < 2 || lag + 1 >= x.size()) {
        return 0.0;
    }
    const std::size_t m = x.size() - lag;
    const auto head = x.first(m);
    const auto tail = x.subspan(lag, m);
    const double mh = mean(head);
    const double mt = mean(tail);
    double cross = 0.0;
    double eh = 0.0;
    double et = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double a = head[i] - mh;
        const double b = tail[i] - mt;
        cross += a * b;
        eh += a * a;
        et += b * b;
    }
    if (eh <= 0.0 || et <= 0.0) {
        return 0.0;
    }
    return std::clamp(cross / std::sqrt(eh * et), -1.0, 1.0);
}

Spectrum power_spectrum(std::span<const double> x, double rate_hz) {
    Spectrum out;
    const std::size_t n = x.size();
    if (n < 2) {
        return out;
    }
    const std::size_t bins = n / 2 + 1;
    std::unique_ptr<double, decltype(&fftw_free)> in(fftw_alloc_real(n), &fftw_free);
    std::unique_ptr<fftw_complex, decltype(&fftw_free)> spec(fftw_alloc_complex(bins), &fftw_free);
    fftw_plan plan = nullptr;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), spec.get(), FFTW_ESTIMATE);
    }
    std::copy(x.begin(), x.end(), in.get());
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    out.freq_hz.reserve(bins - 1);
    out.power.reserve(bins - 1);
    for (std::size_t k = 1; k < bins; ++k) {
        const double re = spec.get()[k][0];
        const double im = spec.get()[k][1];
        out.freq_hz.push_back(static_cast<double>(k) * rate_hz / static_cast<double>(n));
        out.power.push_back(re * re + im * im);
    }
    return out;
}

} // namespace gaitlab::features
