#pragma once

#include "gaitlab/learn.hpp"
#include "gaitlab/select.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gaitlab::eval {

using dataset::Dataset;
using learn::Model;
using learn::ModelSpec;

enum class SelectionMode {
    None,    // every column
    Honest,  // MI ranking refit on each training fold
    Mimic,   // MI ranking computed once on the full table before splitting
};

std::string_view to_string(SelectionMode m);
SelectionMode parse_selection_mode(std::string_view s);

struct CvOptions {
    int folds = 5;
    std::uint64_t seed = 1;
    SelectionMode selection = SelectionMode::Honest;
    std::size_t k_features = select::kDefaultTopK;
    int bins = select::kDefaultBins;
    unsigned threads = 1;
};

struct Confusion {
    std::size_t tn = 0, fp = 0, fn = 0, tp = 0;

    std::size_t total() const { return tn + fp + fn + tp; }
    double accuracy() const;
    void add(int truth, int predicted);
    friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct EvalReport {
    std::string spec;
    std::uint64_t seed = 0;
    std::vector<double> fold_accuracy_pct;
    double mean_accuracy_pct = 0.0;
    Confusion confusion;
    /// {control recall, PD recall}
    std::array<double, 2> recall{};
    /// Not part of equality or of any written artifact.
    double wall_time_s = 0.0;

    friend bool operator==(const EvalReport& a, const EvalReport& b) {
        return a.spec == b.spec && a.seed == b.seed && a.fold_accuracy_pct == b.fold_accuracy_pct &&
               a.mean_accuracy_pct == b.mean_accuracy_pct && a.confusion == b.confusion && a.recall == b.recall;
    }
};

/// Rows behind each fitted scaler and MI ranking, summed over folds, and how
/// many of them belong to the fold being scored.
struct LeakageAudit {
    std::size_t folds_checked = 0;
    std::size_t scaler_rows_checked = 0;
    std::size_t selection_rows_checked = 0;
    std::size_t scaler_violations = 0;
    std::size_t selection_violations = 0;

    std::size_t violations() const { return scaler_violations + selection_violations; }
};

/// Stratified fold assignment: each class is shuffled and dealt round-robin,
/// continuing the fold counter across classes, so fold sizes differ by at most
/// one and each fold's class counts are floor or ceil of n_class / folds.
/// Errors: Unlabeled, InvalidParams (folds < 2), ClassCountBelowFolds.
std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& ds, int folds, std::uint64_t seed);

EvalReport cross_validate(const ModelSpec& spec, const Dataset& ds, const CvOptions& opt, LeakageAudit* audit = nullptr);

struct TuneEntry {
    ModelSpec spec;
    EvalReport report;
};

struct TuneReport {
    std::vector<TuneEntry> grid;
    std::size_t best = 0;

    const ModelSpec& best_spec() const { return grid.at(best).spec; }
    const EvalReport& best_report() const { return grid.at(best).report; }
};

/// k in {1,3,...,21} x {euclidean, manhattan} x {uniform, inverse_distance}.
std::vector<ModelSpec> default_knn_grid();

/// Every spec is scored on the same folds. Best = highest mean accuracy;
/// ties go to smaller k, then euclidean, then uniform weighting, then grid
/// order. Errors: InvalidParams on an empty grid, plus any CV error.
TuneReport grid_search(std::span<const ModelSpec> grid, const Dataset& ds, const CvOptions& opt);

struct HoldoutResult {
    std::vector<learn::Prediction> predictions;
    /// Present only for labeled test sets.
    std::optional<EvalReport> report;
};

HoldoutResult evaluate_holdout(const Model& model, const Dataset& test);

std::string report_to_csv(const EvalReport& r, const std::vector<std::string>& comment = {});
std::string report_table(const EvalReport& r);
std::string tune_to_csv(const TuneReport& t, const std::vector<std::string>& comment = {});
std::string tune_table(const TuneReport& t);
/// `row_id,label,score`
std::string predictions_to_csv(const Dataset& ds, std::span<const learn::Prediction> p,
                               const std::vector<std::string>& comment = {});

} // namespace gaitlab::eval
