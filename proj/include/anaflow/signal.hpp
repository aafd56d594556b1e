#pragma once

// Waveform analytics used by the function checks.

#include <cstddef>
#include <vector>

namespace anaflow {

/// Indices of local maxima with prominence >= min_prominence, ascending.
/// A flat top bounded by lower samples counts once, at its middle sample.
/// Prominence is the height above the higher of the two flanking minima,
/// each searched up to the nearest strictly higher sample or the border.
std::vector<std::size_t> find_peaks(const std::vector<double>& signal, double min_prominence);

/// find_peaks on the negated signal.
std::vector<std::size_t> find_troughs(const std::vector<double>& signal, double min_prominence);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;  // 1 when the data have no variance and fit exactly
};

/// Ordinary least squares. Throws Error when x has fewer than two points,
/// mismatched lengths or no spread.
LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

struct PeriodStats {
    double mean_period = 0.0;
    double variability = 0.0;  // (max period - min period) / mean period
};

/// Throws Error ("insufficient oscillation") for fewer than three peaks.
PeriodStats period_stats(const std::vector<double>& peak_times);

}  // namespace anaflow
