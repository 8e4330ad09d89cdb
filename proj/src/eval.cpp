#include "gaitlab/eval.hpp"

#include "gaitlab/parallel.hpp"
#include "gaitlab/rng.hpp"
#include "gaitlab/text.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <set>
#include <tuple>

namespace gaitlab::eval {

namespace {

std::string quoted(const std::string& s) {
    return "\"" + s + "\"";
}

std::string pct(double v) {
    return text::format_fixed(v, 4);
}

std::string pad(std::string s, std::size_t width) {
    if (s.size() < width) s += std::string(width - s.size(), ' ');
    return s;
}

std::string pad_left(std::string s, std::size_t width) {
    if (s.size() < width) s.insert(0, width - s.size(), ' ');
    return s;
}

std::size_t count_in(const std::vector<std::string>& rows, const std::set<std::string>& held_out) {
    std::size_t hits = 0;
    for (const auto& r : rows) hits += held_out.count(r);
    return hits;
}

struct FoldResult {
    Confusion confusion;
    double accuracy_pct = 0.0;
    LeakageAudit audit;
};

// Tie-break key: lower is preferred.
std::tuple<int, int, int> simplicity(const ModelSpec& spec) {
    if (const auto* p = std::get_if<learn::KnnParams>(&spec.params)) {
        return {p->k, static_cast<int>(p->metric), static_cast<int>(p->weighting)};
    }
    return {0, 0, 0};
}

} // namespace

std::string_view to_string(SelectionMode m) {
    switch (m) {
    case SelectionMode::None: return "none";
    case SelectionMode::Honest: return "honest";
    case SelectionMode::Mimic: return "mimic";
    }
    return "unknown";
}

SelectionMode parse_selection_mode(std::string_view s) {
    if (s == "none") return SelectionMode::None;
    if (s == "honest") return SelectionMode::Honest;
    if (s == "mimic") return SelectionMode::Mimic;
    throw Error(Errc::SchemaMismatch, "unknown selection mode '" + std::string(s) + "' (none, honest or mimic)");
}

double Confusion::accuracy() const {
    return total() == 0 ? 0.0 : static_cast<double>(tn + tp) / static_cast<double>(total());
}

void Confusion::add(int truth, int predicted) {
    if (truth == 1) {
        (predicted == 1 ? tp : fn) += 1;
    } else {
        (predicted == 1 ? fp : tn) += 1;
    }
}

std::vector<std::vector<std::size_t>> stratified_folds(const Dataset& ds, int folds, std::uint64_t seed) {
    if (folds < 2) {
        throw Error(Errc::InvalidParams, "cross-validation needs at least two folds");
    }
    const auto counts = ds.class_counts();
    for (int label : {0, 1}) {
        if (counts[static_cast<std::size_t>(label)] < static_cast<std::size_t>(folds)) {
            throw Error(Errc::ClassCountBelowFolds, "class " + std::to_string(label) + " has " +
                                                        std::to_string(counts[static_cast<std::size_t>(label)]) +
                                                        " rows, fewer than " + std::to_string(folds) + " folds");
        }
    }
    Rng rng(seed);
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(folds));
    std::size_t next = 0;
    for (int label : {0, 1}) {
        std::vector<std::size_t> members;
        for (std::size_t r = 0; r < ds.rows(); ++r) {
            if ((*ds.y)[r] == label) members.push_back(r);
        }
        rng.shuffle(std::span(members));
        for (std::size_t r : members) {
            out[next % out.size()].push_back(r);
            ++next;
        }
    }
    for (auto& f : out) std::sort(f.begin(), f.end());
    return out;
}

EvalReport cross_validate(const ModelSpec& spec, const Dataset& ds, const CvOptions& opt, LeakageAudit* audit) {
    const auto start = std::chrono::steady_clock::now();
    spec.validate();
    const auto folds = stratified_folds(ds, opt.folds, opt.seed);

    std::optional<select::RankedFeatures> global;
    if (opt.selection == SelectionMode::Mimic) {
        global = select::rank_features(ds, opt.k_features, opt.bins);
    }

    std::vector<FoldResult> results(folds.size());
    parallel_for(folds.size(), opt.threads, [&](std::size_t f) {
        std::vector<std::size_t> train_rows;
        for (std::size_t g = 0; g < folds.size(); ++g) {
            if (g != f) train_rows.insert(train_rows.end(), folds[g].begin(), folds[g].end());
        }
        std::sort(train_rows.begin(), train_rows.end());
        const Dataset train = ds.subset(train_rows);
        const Dataset test = ds.subset(folds[f]);
        const std::set<std::string> held_out(test.row_ids.begin(), test.row_ids.end());

        FoldResult& res = results[f];
        std::vector<std::string> names;
        if (opt.selection != SelectionMode::None) {
            const select::RankedFeatures ranked =
                opt.selection == SelectionMode::Honest ? select::rank_features(train, opt.k_features, opt.bins) : *global;
            names = ranked.selected();
            res.audit.selection_rows_checked += ranked.fitted_rows.size();
            res.audit.selection_violations += count_in(ranked.fitted_rows, held_out);
        }
        const Model model = learn::fit(spec, train, names);
        res.audit.folds_checked = 1;
        res.audit.scaler_rows_checked += model.scaler.fitted_rows.size();
        res.audit.scaler_violations += count_in(model.scaler.fitted_rows, held_out);

        const auto preds = learn::predict(model, test);
        for (std::size_t i = 0; i < preds.size(); ++i) {
            res.confusion.add((*test.y)[i], preds[i].label);
        }
        res.accuracy_pct = 100.0 * res.confusion.accuracy();
    });

    EvalReport report;
    report.spec = spec.describe();
    report.seed = opt.seed;
    for (const auto& r : results) {
        report.fold_accuracy_pct.push_back(r.accuracy_pct);
        report.confusion.tn += r.confusion.tn;
        report.confusion.fp += r.confusion.fp;
        report.confusion.fn += r.confusion.fn;
        report.confusion.tp += r.confusion.tp;
        if (audit) {
            audit->folds_checked += r.audit.folds_checked;
            audit->scaler_rows_checked += r.audit.scaler_rows_checked;
            audit->selection_rows_checked += r.audit.selection_rows_checked;
            audit->scaler_violations += r.audit.scaler_violations;
            audit->selection_violations += r.audit.selection_violations;
        }
    }
    report.mean_accuracy_pct =
        std::accumulate(report.fold_accuracy_pct.begin(), report.fold_accuracy_pct.end(), 0.0) /
        static_cast<double>(report.fold_accuracy_pct.size());
    const auto& c = report.confusion;
    ensure(c.total() == ds.rows(), "confusion counts must cover every row exactly once");
    report.recall = {c.tn + c.fp ? static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp) : 0.0,
                     c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0};
    report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

std::vector<ModelSpec> default_knn_grid() {
    std::vector<ModelSpec> grid;
    for (int k = 1; k <= 21; k += 2) {
        for (auto metric : {learn::Metric::Euclidean, learn::Metric::Manhattan}) {
            for (auto weighting : {learn::Weighting::Uniform, learn::Weighting::InverseDistance}) {
                grid.push_back(ModelSpec{learn::KnnParams{k, metric, weighting}});
            }
        }
    }
    return grid;
}

TuneReport grid_search(std::span<const ModelSpec> grid, const Dataset& ds, const CvOptions& opt) {
    if (grid.empty()) {
        throw Error(Errc::InvalidParams, "grid search needs at least one spec");
    }
    TuneReport out;
    out.grid.resize(grid.size());
    CvOptions inner = opt;
    inner.threads = 1;
    parallel_for(grid.size(), opt.threads, [&](std::size_t i) {
        out.grid[i] = {grid[i], cross_validate(grid[i], ds, inner)};
    });
    for (std::size_t i = 1; i < out.grid.size(); ++i) {
        const double a = out.grid[i].report.mean_accuracy_pct;
        const double b = out.grid[out.best].report.mean_accuracy_pct;
        if (a > b || (a == b && simplicity(out.grid[i].spec) < simplicity(out.grid[out.best].spec))) {
            out.best = i;
        }
    }
    return out;
}

HoldoutResult evaluate_holdout(const Model& model, const Dataset& test) {
    const auto start = std::chrono::steady_clock::now();
    HoldoutResult out;
    out.predictions = learn::predict(model, test);
    if (!test.labeled()) {
        return out;
    }
    EvalReport r;
    r.spec = model.spec.describe();
    for (std::size_t i = 0; i < out.predictions.size(); ++i) {
        r.confusion.add((*test.y)[i], out.predictions[i].label);
    }
    r.mean_accuracy_pct = 100.0 * r.confusion.accuracy();
    r.fold_accuracy_pct = {r.mean_accuracy_pct};
    const auto& c = r.confusion;
    r.recall = {c.tn + c.fp ? static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp) : 0.0,
                c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0};
    r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.report = std::move(r);
    return out;
}

std::string report_to_csv(const EvalReport& r, const std::vector<std::string>& comment) {
    std::string out;
    for (const auto& c : comment) out += "# " + c + "\n";
    out += "key,value\n";
    out += "spec," + quoted(r.spec) + "\n";
    out += "seed," + std::to_string(r.seed) + "\n";
    out += "folds," + std::to_string(r.fold_accuracy_pct.size()) + "\n";
    for (std::size_t i = 0; i < r.fold_accuracy_pct.size(); ++i) {
        out += "fold_" + std::to_string(i + 1) + "_accuracy_pct," + text::format_exact(r.fold_accuracy_pct[i]) + "\n";
    }
    out += "mean_accuracy_pct," + text::format_exact(r.mean_accuracy_pct) + "\n";
    out += "tn," + std::to_string(r.confusion.tn) + "\n";
    out += "fp," + std::to_string(r.confusion.fp) + "\n";
    out += "fn," + std::to_string(r.confusion.fn) + "\n";
    out += "tp," + std::to_string(r.confusion.tp) + "\n";
    out += "recall_control," + text::format_exact(r.recall[0]) + "\n";
    out += "recall_pd," + text::format_exact(r.recall[1]) + "\n";
    return out;
}

std::string report_table(const EvalReport& r) {
    std::string out = "Model      " + r.spec + "\n";
    out += "Folds     ";
    for (double a : r.fold_accuracy_pct) out += " " + pad_left(pct(a), 9);
    out += "\nAccuracy   " + pct(r.mean_accuracy_pct) + " %\n";
    out += "Confusion  tn=" + std::to_string(r.confusion.tn) + " fp=" + std::to_string(r.confusion.fp) +
           " fn=" + std::to_string(r.confusion.fn) + " tp=" + std::to_string(r.confusion.tp) + "\n";
    out += "Recall     control=" + pct(100.0 * r.recall[0]) + " %  pd=" + pct(100.0 * r.recall[1]) + " %\n";
    return out;
}

std::string tune_to_csv(const TuneReport& t, const std::vector<std::string>& comment) {
    std::string out;
    for (const auto& c : comment) out += "# " + c + "\n";
    out += "index,spec,mean_accuracy_pct,best\n";
    for (std::size_t i = 0; i < t.grid.size(); ++i) {
        out += std::to_string(i) + "," + quoted(t.grid[i].spec.describe()) + "," +
               text::format_exact(t.grid[i].report.mean_accuracy_pct) + "," + (i == t.best ? "1" : "0") + "\n";
    }
    return out;
}

std::string tune_table(const TuneReport& t) {
    std::size_t width = 4;
    for (const auto& e : t.grid) width = std::max(width, e.spec.describe().size());
    std::string out = pad("spec", width) + "  " + pad_left("cv acc %", 9) + "\n";
    out += std::string(width + 11, '-') + "\n";
    for (std::size_t i = 0; i < t.grid.size(); ++i) {
        out += pad(t.grid[i].spec.describe(), width) + "  " + pad_left(pct(t.grid[i].report.mean_accuracy_pct), 9) +
               (i == t.best ? "  <- best" : "") + "\n";
    }
    return out;
}

std::string predictions_to_csv(const Dataset& ds, std::span<const learn::Prediction> p,
                               const std::vector<std::string>& comment) {
    ensure(p.size() == ds.rows(), "one prediction per row");
    std::string out;
    for (const auto& c : comment) out += "# " + c + "\n";
    out += "row_id,label,score\n";
    for (std::size_t i = 0; i < p.size(); ++i) {
        out += ds.row_ids[i] + "," + std::to_string(p[i].label) + "," + text::format_exact(p[i].score) + "\n";
    }
    return out;
}

} // namespace gaitlab::eval
