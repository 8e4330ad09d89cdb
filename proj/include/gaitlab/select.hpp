#pragma once

#include "gaitlab/dataset.hpp"

#include <span>
#include <string>
#include <vector>

namespace gaitlab::select {

inline constexpr int kDefaultBins = 10;
inline constexpr std::size_t kDefaultTopK = 6;

/// Equal-frequency codes in [0, bins): value of sorted rank r goes to bin
/// floor(r * bins / n), and equal values share the lowest bin any of them
/// reaches.
std::vector<int> discretize(std::span<const double> column, int bins);

/// Plug-in mutual information in bits between two code sequences, skipping
/// empty cells and clamped at zero.
double mutual_information(std::span<const int> a, std::span<const int> b);

/// Plug-in entropy in bits.
double entropy_bits(std::span<const int> codes);

struct RankedEntry {
    std::string feature;
    double mi_bits = 0.0;
    std::size_t column = 0;
};

struct RankedFeatures {
    /// Sorted by MI descending; equal scores keep table column order.
    std::vector<RankedEntry> entries;
    std::size_t k_selected = 0;
    int bins = kDefaultBins;
    /// Row ids the scores were computed from.
    std::vector<std::string> fitted_rows;

    std::vector<std::string> selected() const;
};

/// Throws Unlabeled for a prediction-only dataset.
RankedFeatures rank_features(const dataset::Dataset& ds, std::size_t k = kDefaultTopK, int bins = kDefaultBins);

/// `rank,feature,mi_bits,selected`
std::string ranking_to_csv(const RankedFeatures& r, const std::vector<std::string>& comment = {});

/// Horizontal bar chart, one line per feature.
std::string ranking_chart(const RankedFeatures& r, int width = 40);

} // namespace gaitlab::select
