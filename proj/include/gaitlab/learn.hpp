#pragma once

#include "gaitlab/dataset.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace gaitlab::learn {

using dataset::Dataset;
using dataset::Matrix;

enum class Kind { Knn, Logistic, LinearSvm, RandomForest, BoostedTrees };
enum class Metric { Euclidean, Manhattan };
enum class Weighting { Uniform, InverseDistance };

std::string_view to_string(Kind k);
std::string_view to_string(Metric m);
std::string_view to_string(Weighting w);

struct KnnParams {
    int k = 5;
    Metric metric = Metric::Euclidean;
    Weighting weighting = Weighting::Uniform;
    friend bool operator==(const KnnParams&, const KnnParams&) = default;
};

struct LogisticParams {
    double learning_rate = 0.1;
    double l2_lambda = 1e-3;
    int max_iters = 2000;
    double tol = 1e-6;
    friend bool operator==(const LogisticParams&, const LogisticParams&) = default;
};

struct SvmParams {
    double c = 1.0;
    int epochs = 50;
    std::uint64_t seed = 1;
    friend bool operator==(const SvmParams&, const SvmParams&) = default;
};

struct ForestParams {
    int n_trees = 100;
    int max_depth = 8;
    int min_leaf = 1;
    /// 0 selects ceil(sqrt(d)).
    int features_per_split = 0;
    std::uint64_t seed = 1;
    friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

struct BoostParams {
    int n_rounds = 100;
    int max_depth = 2;
    double shrinkage = 0.1;
    double l2_leaf_lambda = 1.0;
    friend bool operator==(const BoostParams&, const BoostParams&) = default;
};

struct ModelSpec {
    std::variant<KnnParams, LogisticParams, SvmParams, ForestParams, BoostParams> params;

    Kind kind() const { return static_cast<Kind>(params.index()); }

    /// key=value pairs, kind first; parse() inverts it.
    std::vector<std::pair<std::string, std::string>> to_pairs() const;

    /// Compact "kind=knn,k=5,metric=euclidean,weighting=uniform".
    std::string describe() const;

    /// Accepts describe() output or newline/comma separated key=value pairs;
    /// missing keys take defaults. Throws SchemaMismatch on unknown keys.
    static ModelSpec parse(std::string_view text);

    /// Throws InvalidParams on non-positive counts, even k and the like.
    void validate() const;

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf: class-1 fraction (forest) or weight (boosting)
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
    std::vector<TreeNode> nodes;

    double evaluate(std::span<const double> row) const;
    friend bool operator==(const Tree&, const Tree&) = default;
};

struct KnnState {
    Matrix x;
    std::vector<int> y;
    friend bool operator==(const KnnState&, const KnnState&) = default;
};

struct LinearState {
    std::vector<double> w;
    double b = 0.0;
    friend bool operator==(const LinearState&, const LinearState&) = default;
};

struct ForestState {
    std::vector<Tree> trees;
    friend bool operator==(const ForestState&, const ForestState&) = default;
};

struct BoostState {
    double base_margin = 0.0;
    std::vector<Tree> trees;
    friend bool operator==(const BoostState&, const BoostState&) = default;
};

using FittedState = std::variant<KnnState, LinearState, ForestState, BoostState>;

/// Fitted classifier on already-prepared (standardized, column-selected) data.
struct Classifier {
    ModelSpec spec;
    std::size_t dims = 0;
    FittedState state;
    friend bool operator==(const Classifier&, const Classifier&) = default;
};

struct Prediction {
    int label = 0;
    double score = 0.0;  // estimated P(label = 1)
    friend bool operator==(const Prediction&, const Prediction&) = default;
};

/// Per-iteration training loss (logistic: regularised log-loss per GD step;
/// boosting: training log-loss of the base margin, then after each round).
struct FitTrace {
    std::vector<double> loss;
};

/// Errors: SingleClass, InvalidParams (including k > n_train), Unlabeled.
Classifier train_classifier(const ModelSpec& spec, const Matrix& x, std::span<const int> y, FitTrace* trace = nullptr);

/// Throws DimensionMismatch when row.size() != c.dims.
Prediction classify(const Classifier& c, std::span<const double> row);

struct Neighbor {
    double distance = 0.0;
    std::size_t index = 0;
};

double distance(Metric m, std::span<const double> a, std::span<const double> b);

/// k nearest training rows, ordered by (distance, index).
std::vector<Neighbor> nearest(const KnnState& s, Metric m, std::span<const double> query, std::size_t k);

/// Vote over neighbours: uniform or 1/d weights (zero-distance neighbours take
/// all the weight). A tied vote goes to the nearest neighbour's label.
Prediction knn_vote(const KnnState& s, const KnnParams& p, std::span<const Neighbor> neighbors);

struct LossGradient {
    double loss = 0.0;
    std::vector<double> grad_w;
    double grad_b = 0.0;
};

/// Mean log-loss plus (lambda/2)|w|^2 (bias unpenalised) and its gradient.
LossGradient logistic_objective(const Matrix& x, std::span<const int> y, std::span<const double> w, double b,
                                double lambda);

double sigmoid(double z);

/// Trained classifier together with the preprocessing it expects.
struct Model {
    ModelSpec spec;
    std::vector<std::string> features;
    dataset::Scaler scaler;
    Classifier classifier;
    friend bool operator==(const Model&, const Model&) = default;
};

/// Selects `features` (all columns when empty), standardizes on `train`,
/// then trains. The scaler carries train-row provenance.
Model fit(const ModelSpec& spec, const Dataset& train, std::span<const std::string> features = {}, FitTrace* trace = nullptr);

/// `raw_row` holds unscaled values in model.features order.
Prediction predict(const Model& m, std::span<const double> raw_row);

/// Columns are matched by name; throws DimensionMismatch naming a missing one.
std::vector<Prediction> predict(const Model& m, const Dataset& ds);

inline constexpr char kModelMagic[4] = {'G', 'L', 'M', '1'};

/// Container: "GLM1" | kind tag (u8) | u32 spec length | key=value spec text |
/// u32 payload length | payload of little-endian float64 | CRC-32 of all
/// preceding bytes (u32 LE). `provenance` lines are added to the spec text.
std::vector<std::uint8_t> save_model(const Model& m, const std::vector<std::pair<std::string, std::string>>& provenance = {});

/// Errors: VersionMismatch (another GLM version), SchemaMismatch (not a model
/// file), ChecksumFailure (truncated or corrupted).
Model load_model(std::span<const std::uint8_t> bytes);

} // namespace gaitlab::learn
