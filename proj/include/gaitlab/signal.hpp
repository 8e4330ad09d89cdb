#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gaitlab::features {

/// Second-order Butterworth (Q = 1/sqrt 2) section from the bilinear
/// transform, run forward then backward for zero phase. Filter state starts at
/// the steady state for the edge sample so a constant input passes unchanged.
/// Throws Errc::InvalidParams unless 0 < cutoff < rate/2.
std::vector<double> lowpass(std::span<const double> signal, double cutoff_hz, double rate_hz);

std::vector<double> highpass(std::span<const double> signal, double cutoff_hz, double rate_hz);

/// Highpass at `low_hz` followed by lowpass at `high_hz`.
std::vector<double> bandpass(std::span<const double> signal, double low_hz, double high_hz, double rate_hz);

double mean(std::span<const double> x);

/// Population standard deviation.
double stddev(std::span<const double> x);

double rms(std::span<const double> x);

/// Linear-interpolated percentile, q in [0, 100].
double percentile(std::span<const double> x, double q);

/// Correlation between x[0, n-lag) and x[lag, n), each segment centred on its
/// own mean and normalised by its own energy; always within [-1, 1]. Returns 0
/// when either segment is constant or lag >= n - 1.
double autocorrelation(std::span<const double> x, std::size_t lag);

struct Spectrum {
    /// Frequencies and one-sided power for bins 1..n/2 (DC excluded).
    std::vector<double> freq_hz;
    std::vector<double> power;
};

Spectrum power_spectrum(std::span<const double> x, double rate_hz);

} // namespace gaitlab::features
