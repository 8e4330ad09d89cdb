#include "support.hpp"

#include "gaitlab/eval.hpp"

#include <doctest.h>

#include <set>

using namespace gaitlab;
using namespace gaitlab::eval;
using learn::KnnParams;
using learn::Metric;
using learn::Weighting;

namespace {

template <class F>
Errc error_code(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error thrown");
    return Errc::Invariant;
}

ModelSpec knn(int k, Metric m = Metric::Euclidean, Weighting w = Weighting::Uniform) {
    return ModelSpec{KnnParams{k, m, w}};
}

} // namespace

TEST_CASE("100 rows into 5 folds gives 20 each, stratified") {
    std::vector<std::vector<double>> rows;
    std::vector<int> y;
    for (int i = 0; i < 100; ++i) {
        rows.push_back({static_cast<double>(i)});
        y.push_back(i < 55 ? 0 : 1);
    }
    const auto ds = oracle::make_dataset(rows, y);
    const auto folds = stratified_folds(ds, 5, 3);
    REQUIRE(folds.size() == 5);
    std::set<std::size_t> seen;
    for (const auto& f : folds) {
        CHECK(f.size() == 20);
        std::size_t pd = 0;
        for (std::size_t i : f) {
            CHECK(seen.insert(i).second);
            pd += static_cast<std::size_t>(y[i]);
        }
        CHECK(pd == 9);
    }
    CHECK(seen.size() == 100);
    CHECK(stratified_folds(ds, 5, 3) == folds);
    CHECK_FALSE(stratified_folds(ds, 5, 4) == folds);
}

TEST_CASE("fold errors") {
    const auto few = oracle::blobs(3, 2, 1.0, 1);
    CHECK(error_code([&] { stratified_folds(few, 5, 1); }) == Errc::ClassCountBelowFolds);
    CHECK(error_code([&] { stratified_folds(few, 1, 1); }) == Errc::InvalidParams);
    auto unlabeled = few;
    unlabeled.y.reset();
    CHECK(error_code([&] { stratified_folds(unlabeled, 2, 1); }) == Errc::Unlabeled);
}

TEST_CASE("no signal gives chance accuracy") {
    const auto ds = oracle::blobs(80, 6, 0.0, 31);
    CvOptions opt;
    opt.seed = 5;
    const auto r = cross_validate(knn(5), ds, opt);
    CHECK(r.mean_accuracy_pct >= 38.0);
    CHECK(r.mean_accuracy_pct <= 62.0);
    CHECK(r.confusion.total() == 160);
    CHECK(r.fold_accuracy_pct.size() == 5);
}

TEST_CASE("cross validation is deterministic and thread count does not matter") {
    const auto ds = oracle::blobs(30, 8, 0.8, 32);
    CvOptions opt;
    opt.seed = 9;
    const auto a = cross_validate(knn(3), ds, opt);
    opt.threads = 3;
    const auto b = cross_validate(knn(3), ds, opt);
    CHECK(a == b);
    CHECK(a.mean_accuracy_pct > 80.0);
    double sum = 0.0;
    for (double f : a.fold_accuracy_pct) sum += f;
    CHECK(a.mean_accuracy_pct == doctest::Approx(sum / 5.0));
    CHECK(a.recall[0] == doctest::Approx(static_cast<double>(a.confusion.tn) / 30.0));
    CHECK(a.recall[1] == doctest::Approx(static_cast<double>(a.confusion.tp) / 30.0));
}

TEST_CASE("leakage audit: honest mode is clean, mimic mode is not") {
    const auto ds = oracle::blobs(20, 10, 0.5, 33);
    CvOptions opt;
    LeakageAudit honest;
    cross_validate(knn(3), ds, opt, &honest);
    CHECK(honest.folds_checked == 5);
    CHECK(honest.scaler_rows_checked > 0);
    CHECK(honest.selection_rows_checked > 0);
    CHECK(honest.violations() == 0);

    opt.selection = SelectionMode::Mimic;
    LeakageAudit mimic;
    cross_validate(knn(3), ds, opt, &mimic);
    CHECK(mimic.scaler_violations == 0);
    CHECK(mimic.selection_violations == 40);

    opt.selection = SelectionMode::None;
    LeakageAudit none;
    cross_validate(knn(3), ds, opt, &none);
    CHECK(none.violations() == 0);
    CHECK(none.selection_rows_checked == 0);
}

TEST_CASE("selection mode names") {
    for (auto m : {SelectionMode::None, SelectionMode::Honest, SelectionMode::Mimic}) {
        CHECK(parse_selection_mode(to_string(m)) == m);
    }
    CHECK_THROWS_AS(parse_selection_mode("sometimes"), Error);
}

TEST_CASE("default grid has 44 distinct specs") {
    const auto grid = default_knn_grid();
    CHECK(grid.size() == 44);
    std::set<std::string> names;
    for (const auto& s : grid) names.insert(s.describe());
    CHECK(names.size() == 44);
}

TEST_CASE("grid search with one spec picks it") {
    const auto ds = oracle::blobs(10, 3, 1.0, 34);
    const std::vector<ModelSpec> grid{knn(3)};
    const auto t = grid_search(grid, ds, CvOptions{});
    CHECK(t.best == 0);
    CHECK(t.best_spec() == grid[0]);
    CHECK(t.best_report() == cross_validate(grid[0], ds, CvOptions{}));
    CHECK(error_code([&] { grid_search(std::span<const ModelSpec>{}, ds, CvOptions{}); }) == Errc::InvalidParams);
}

TEST_CASE("grid ties go to the simpler spec") {
    // Far-apart classes: every spec scores 100%.
    const auto ds = oracle::blobs(15, 2, 20.0, 35);
    CvOptions opt;
    opt.selection = SelectionMode::None;
    const std::vector<ModelSpec> grid{knn(5, Metric::Manhattan, Weighting::InverseDistance), knn(5),
                                      knn(3, Metric::Manhattan), knn(3, Metric::Euclidean, Weighting::InverseDistance),
                                      knn(3)};
    const auto t = grid_search(grid, ds, opt);
    for (const auto& e : t.grid) CHECK(e.report.mean_accuracy_pct == 100.0);
    CHECK(t.best == 4);

    // One feature: both metrics give identical distances, so identical scores.
    const auto line = oracle::blobs(20, 1, 0.7, 36);
    const std::vector<ModelSpec> metrics{knn(5, Metric::Manhattan), knn(5)};
    const auto m = grid_search(metrics, line, opt);
    CHECK(m.grid[0].report.mean_accuracy_pct == m.grid[1].report.mean_accuracy_pct);
    CHECK(m.best == 1);
}

TEST_CASE("conflicting duplicates: every row has a twin with the other label") {
    std::vector<std::vector<double>> rows;
    std::vector<int> y;
    Rng rng(37);
    for (int i = 0; i < 20; ++i) {
        const std::vector<double> r{rng.normal(), rng.normal()};
        rows.push_back(r);
        y.push_back(0);
        rows.push_back(r);
        y.push_back(1);
    }
    const auto ds = oracle::make_dataset(rows, y);
    CvOptions opt;
    opt.selection = SelectionMode::None;
    const auto grid = default_knn_grid();
    const auto t = grid_search(grid, ds, opt);
    for (const auto& e : t.grid) {
        CHECK(e.report.mean_accuracy_pct >= 0.0);
        CHECK(e.report.mean_accuracy_pct <= 100.0);
        CHECK(e.report.confusion.total() == 40);
    }
    double best_k1 = 0.0, best_larger = 0.0;
    for (const auto& e : t.grid) {
        double& slot = std::get<KnnParams>(e.spec.params).k == 1 ? best_k1 : best_larger;
        slot = std::max(slot, e.report.mean_accuracy_pct);
    }
    if (best_larger > best_k1) CHECK(std::get<KnnParams>(t.best_spec().params).k > 1);
    // The winner has the best mean and nothing simpler ties it.
    for (std::size_t i = 0; i < t.grid.size(); ++i) {
        CHECK(t.grid[i].report.mean_accuracy_pct <= t.best_report().mean_accuracy_pct);
        if (t.grid[i].report.mean_accuracy_pct == t.best_report().mean_accuracy_pct) {
            CHECK(std::get<KnnParams>(t.grid[i].spec.params).k >= std::get<KnnParams>(t.best_spec().params).k);
        }
    }
}

TEST_CASE("an all-zero linear model scores 50% on a balanced set") {
    const auto ds = oracle::blobs(25, 3, 1.0, 38);
    Model m = learn::fit(ModelSpec{learn::LogisticParams{}}, ds);
    auto& lin = std::get<learn::LinearState>(m.classifier.state);
    std::fill(lin.w.begin(), lin.w.end(), 0.0);
    lin.b = 0.0;
    const auto h = evaluate_holdout(m, ds);
    REQUIRE(h.report.has_value());
    CHECK(h.report->mean_accuracy_pct == 50.0);
    for (const auto& p : h.predictions) CHECK(p.score == 0.5);
}

TEST_CASE("unlabeled holdout gives predictions and no report") {
    const auto train = oracle::blobs(10, 2, 1.0, 39);
    auto test = oracle::blobs(4, 2, 1.0, 40);
    test.y.reset();
    const Model m = learn::fit(knn(3), train);
    const auto h = evaluate_holdout(m, test);
    CHECK_FALSE(h.report.has_value());
    CHECK(h.predictions.size() == 8);
    const std::string csv = predictions_to_csv(test, h.predictions);
    CHECK(csv.rfind("row_id,label,score\nr0,", 0) == 0);
}

TEST_CASE("report formats") {
    const auto ds = oracle::blobs(10, 2, 2.0, 41);
    const auto r = cross_validate(knn(3), ds, CvOptions{});
    const std::string csv = report_to_csv(r, {"h"});
    CHECK(csv.rfind("# h\nkey,value\n", 0) == 0);
    for (const char* key : {"\nseed,", "\nfolds,5", "\nfold_1_accuracy_pct,", "\nmean_accuracy_pct,", "\ntp,",
                            "\nrecall_pd,"}) {
        CHECK(csv.find(key) != std::string::npos);
    }
    CHECK(report_table(r).find("Accuracy") != std::string::npos);

    const std::vector<ModelSpec> grid{knn(1), knn(3)};
    const auto t = grid_search(grid, ds, CvOptions{});
    CHECK(tune_to_csv(t).rfind("index,spec,mean_accuracy_pct,best\n", 0) == 0);
    CHECK(tune_table(t).find("<- best") != std::string::npos);
}
