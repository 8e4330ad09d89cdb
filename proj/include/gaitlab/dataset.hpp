#pragma once

#include "gaitlab/error.hpp"
#include "gaitlab/features.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gaitlab::dataset {

/// Dense row-major matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double> column(std::size_t c) const;

    void append_row(std::span<const double> values);

    const std::vector<double>& data() const { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Labeled (or prediction-only) feature table. Values are always finite.
struct Dataset {
    std::vector<std::string> row_ids;
    std::vector<std::string> feature_names;
    Matrix x;
    std::optional<std::vector<int>> y;

    std::size_t rows() const { return x.rows(); }
    std::size_t cols() const { return x.cols(); }
    bool labeled() const { return y.has_value(); }

    /// Rows per class {label 0, label 1}; throws Unlabeled.
    std::array<std::size_t, 2> class_counts() const;

    Dataset subset(std::span<const std::size_t> rows) const;

    /// Columns by name, in the order given. Throws SchemaMismatch naming the
    /// first missing feature.
    Dataset select_columns(std::span<const std::string> names) const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Throws Errc::Invariant when shapes disagree, a value is non-finite or a
/// label is outside {0, 1}.
void validate(const Dataset& ds);

struct LoadReport {
    Dataset data;
    std::size_t dropped_rows = 0;
    std::vector<std::string> dropped_ids;
};

/// Reads either layout:
///   long  `subject_id,task,label,<catalog>` (as written by extraction), pivoted
///         to one row per subject with `walk.<name>` then `dual.<name>` columns;
///   wide  `subject_id[,label],<feature names...>` (as written by write_table).
/// Leading '#' lines are skipped. Rows with an empty or non-finite cell (or a
/// subject missing one task) are dropped and counted. A missing label column,
/// or one holding only "?", gives a prediction-only dataset.
/// Errors: SchemaMismatch, EmptyAfterCleaning.
LoadReport load_table(std::string_view csv);

/// Wide layout with exact (round-trippable) numbers.
std::string write_table(const Dataset& ds, const std::vector<std::string>& comment = {});

/// Pivots per-task vectors into one row per subject (walk then dual columns).
/// Subjects without both tasks are dropped.
LoadReport from_feature_vectors(std::span<const features::FeatureVector> rows);

/// Per-column training statistics. `fitted_rows` records which rows produced
/// them, so callers can prove no held-out row contributed.
struct Scaler {
    std::vector<std::string> feature_names;
    std::vector<double> mean;
    std::vector<double> std;  // population std; 0 marks a constant column
    std::vector<std::string> fitted_rows;

    friend bool operator==(const Scaler&, const Scaler&) = default;
};

/// Population-std z-scores. Constant columns become all zeros. Needs n >= 2.
std::pair<Dataset, Scaler> standardize(const Dataset& train);

/// Applies stored statistics; columns are matched by name.
Dataset apply_scaler(const Scaler& scaler, const Dataset& ds);

void apply_scaler_row(const Scaler& scaler, std::span<double> row);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Per class, round(n_class * test_fraction) rows go to test. Indices come
/// back sorted. Throws SingleClass or InvalidParams.
Split stratified_split_indices(const Dataset& ds, double test_fraction, std::uint64_t seed);

std::pair<Dataset, Dataset> stratified_split(const Dataset& ds, double test_fraction, std::uint64_t seed);

} // namespace gaitlab::dataset
