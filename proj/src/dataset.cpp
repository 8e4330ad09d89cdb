#include "gaitlab/dataset.hpp"

#include "gaitlab/rng.hpp"
#include "gaitlab/text.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

namespace gaitlab::dataset {

namespace {

constexpr std::array<telemetry::Task, 2> kTasks{telemetry::Task::Walk, telemetry::Task::DualTask};

std::string prefixed(telemetry::Task task, const std::string& name) {
    return std::string(telemetry::to_string(task)) + "." + name;
}

std::optional<int> parse_label(std::string_view cell) {
    cell = text::trim(cell);
    if (cell == "0") return 0;
    if (cell == "1") return 1;
    return std::nullopt;
}

// Header and body lines with comments stripped.
std::vector<std::string> content_lines(std::string_view csv) {
    std::vector<std::string> out;
    for (auto& line : text::lines(csv)) {
        if (text::trim(line).empty() || line.starts_with('#')) {
            continue;
        }
        out.push_back(std::move(line));
    }
    return out;
}

// A label column holding only "?" or blanks marks a prediction-only table.
bool label_column_unknown(const std::vector<std::string>& lines, std::size_t column) {
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto fields = text::split(lines[li], ',');
        if (column < fields.size()) {
            const auto cell = text::trim(fields[column]);
            if (!cell.empty() && cell != "?") return false;
        }
    }
    return true;
}

std::string unique_id(const std::string& id, std::set<std::string>& seen) {
    std::string candidate = id;
    for (int n = 2; seen.count(candidate); ++n) {
        candidate = id + "~" + std::to_string(n);
    }
    seen.insert(candidate);
    return candidate;
}

LoadReport load_long(const std::vector<std::string>& lines, const std::vector<std::string>& header) {
    const auto& names = features::catalog();
    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < header.size(); ++i) {
        pos[header[i]] = i;
    }
    for (const char* required : {"subject_id", "task"}) {
        if (!pos.count(required)) throw Error::schema(required);
    }
    for (const auto& n : names) {
        if (!pos.count(n)) throw Error::schema(n);
    }
    for (const auto& h : header) {
        if (h != "subject_id" && h != "task" && h != "label" &&
            std::find(names.begin(), names.end(), h) == names.end()) {
            throw Error::schema(h);
        }
    }
    const bool has_label = pos.count("label") != 0 && !label_column_unknown(lines, pos["label"]);

    std::vector<features::FeatureVector> rows;
    std::set<std::string> bad_subjects;
    std::vector<std::string> order;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto fields = text::split(lines[li], ',');
        if (fields.size() != header.size()) {
            throw Error(Errc::SchemaMismatch, "data line " + std::to_string(li) + " has " +
                                                  std::to_string(fields.size()) + " fields, expected " +
                                                  std::to_string(header.size()));
        }
        features::FeatureVector fv;
        fv.subject_id = std::string(text::trim(fields[pos["subject_id"]]));
        fv.task = telemetry::parse_task(text::trim(fields[pos["task"]]));
        order.push_back(fv.subject_id);
        bool ok = true;
        if (has_label) {
            const auto label = parse_label(fields[pos["label"]]);
            ok = label.has_value();
            if (label) fv.label = static_cast<telemetry::Label>(*label);
        }
        for (const auto& n : names) {
            const auto v = text::parse_double(fields[pos[n]]);
            ok = ok && v && std::isfinite(*v);
            fv.values.push_back(v.value_or(0.0));
        }
        if (!ok) {
            bad_subjects.insert(fv.subject_id);
            continue;
        }
        rows.push_back(std::move(fv));
    }
    std::vector<features::FeatureVector> kept;
    for (auto& r : rows) {
        if (!bad_subjects.count(r.subject_id)) kept.push_back(std::move(r));
    }
    LoadReport report = from_feature_vectors(kept);
    for (const auto& id : bad_subjects) {
        // Subjects dropped for a bad cell may also have been counted as missing a task.
        if (std::find(report.dropped_ids.begin(), report.dropped_ids.end(), id) == report.dropped_ids.end()) {
            report.dropped_ids.push_back(id);
            ++report.dropped_rows;
        }
    }
    if (!has_label) {
        report.data.y.reset();
    }
    return report;
}

LoadReport load_wide(const std::vector<std::string>& lines, const std::vector<std::string>& header) {
    if (header.empty() || header[0] != "subject_id") {
        throw Error::schema("subject_id");
    }
    const bool label_column = header.size() > 1 && header[1] == "label";
    const bool has_label = label_column && !label_column_unknown(lines, 1);
    const std::size_t first_feature = label_column ? 2 : 1;
    if (header.size() <= first_feature) {
        throw Error(Errc::SchemaMismatch, "table has no feature columns");
    }
    LoadReport report;
    Dataset& ds = report.data;
    std::set<std::string> seen_names;
    for (std::size_t i = first_feature; i < header.size(); ++i) {
        if (header[i].empty() || header[i] == "label" || header[i] == "subject_id" || !seen_names.insert(header[i]).second) {
            throw Error::schema(header[i]);
        }
        ds.feature_names.push_back(header[i]);
    }
    ds.x = Matrix(0, ds.feature_names.size());
    if (has_label) ds.y.emplace();

    std::set<std::string> seen_ids;
    std::vector<double> row(ds.feature_names.size());
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto fields = text::split(lines[li], ',');
        if (fields.size() != header.size()) {
            throw Error(Errc::SchemaMismatch, "data line " + std::to_string(li) + " has " +
                                                  std::to_string(fields.size()) + " fields, expected " +
                                                  std::to_string(header.size()));
        }
        const std::string id(text::trim(fields[0]));
        bool ok = true;
        std::optional<int> label;
        if (has_label) {
            label = parse_label(fields[1]);
            ok = label.has_value();
        }
        for (std::size_t c = 0; c < row.size(); ++c) {
            const auto v = text::parse_double(fields[first_feature + c]);
            ok = ok && v && std::isfinite(*v);
            row[c] = v.value_or(0.0);
        }
        if (!ok) {
            ++report.dropped_rows;
            report.dropped_ids.push_back(id);
            continue;
        }
        ds.row_ids.push_back(unique_id(id, seen_ids));
        ds.x.append_row(row);
        if (has_label) ds.y->push_back(*label);
    }
    return report;
}

} // namespace

std::vector<double> Matrix::column(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) {
        out[r] = (*this)(r, c);
    }
    return out;
}

void Matrix::append_row(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) {
        cols_ = values.size();
    }
    ensure(values.size() == cols_, "row width does not match matrix");
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
}

std::array<std::size_t, 2> Dataset::class_counts() const {
    if (!y) {
        throw Error(Errc::Unlabeled, "dataset has no label column");
    }
    std::array<std::size_t, 2> counts{0, 0};
    for (int label : *y) {
        ++counts[static_cast<std::size_t>(label)];
    }
    return counts;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out;
    out.feature_names = feature_names;
    out.x = Matrix(0, cols());
    if (y) out.y.emplace();
    for (std::size_t r : rows) {
        ensure(r < this->rows(), "subset row out of range");
        out.row_ids.push_back(row_ids[r]);
        out.x.append_row(x.row(r));
        if (y) out.y->push_back((*y)[r]);
    }
    return out;
}

Dataset Dataset::select_columns(std::span<const std::string> names) const {
    std::vector<std::size_t> idx;
    for (const auto& n : names) {
        const auto it = std::find(feature_names.begin(), feature_names.end(), n);
        if (it == feature_names.end()) {
            throw Error::schema(n);
        }
        idx.push_back(static_cast<std::size_t>(it - feature_names.begin()));
    }
    Dataset out;
    out.row_ids = row_ids;
    out.feature_names.assign(names.begin(), names.end());
    out.y = y;
    out.x = Matrix(rows(), idx.size());
    for (std::size_t r = 0; r < rows(); ++r) {
        for (std::size_t c = 0; c < idx.size(); ++c) {
            out.x(r, c) = x(r, idx[c]);
        }
    }
    return out;
}

void validate(const Dataset& ds) {
    ensure(ds.x.cols() == ds.feature_names.size(), "dataset width does not match its feature names");
    ensure(ds.row_ids.size() == ds.x.rows(), "dataset row ids do not match its rows");
    if (ds.y) {
        ensure(ds.y->size() == ds.x.rows(), "label count does not match rows");
        for (int label : *ds.y) {
            ensure(label == 0 || label == 1, "labels must be 0 or 1");
        }
    }
    for (double v : ds.x.data()) {
        ensure(std::isfinite(v), "dataset holds a non-finite value");
    }
}

LoadReport load_table(std::string_view csv) {
    const auto lines = content_lines(csv);
    if (lines.empty()) {
        throw Error::schema("subject_id");
    }
    std::vector<std::string> header;
    for (const auto& h : text::split(lines[0], ',')) {
        header.emplace_back(text::trim(h));
    }
    const bool long_form = std::find(header.begin(), header.end(), "task") != header.end();
    LoadReport report = long_form ? load_long(lines, header) : load_wide(lines, header);
    if (report.data.rows() == 0) {
        throw Error(Errc::EmptyAfterCleaning, "no complete rows left after dropping " +
                                                  std::to_string(report.dropped_rows) + " incomplete ones");
    }
    validate(report.data);
    return report;
}

std::string write_table(const Dataset& ds, const std::vector<std::string>& comment) {
    validate(ds);
    std::string out;
    for (const auto& c : comment) {
        out += "# " + c + "\n";
    }
    out += "subject_id";
    if (ds.y) out += ",label";
    for (const auto& n : ds.feature_names) {
        out += "," + n;
    }
    out += '\n';
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        out += ds.row_ids[r];
        if (ds.y) out += "," + std::to_string((*ds.y)[r]);
        for (double v : ds.x.row(r)) {
            out += "," + text::format_exact(v);
        }
        out += '\n';
    }
    return out;
}

LoadReport from_feature_vectors(std::span<const features::FeatureVector> rows) {
    LoadReport report;
    Dataset& ds = report.data;
    for (auto task : kTasks) {
        for (const auto& n : features::catalog()) {
            ds.feature_names.push_back(prefixed(task, n));
        }
    }
    ds.x = Matrix(0, ds.feature_names.size());

    std::vector<std::string> order;
    std::unordered_map<std::string, std::array<const features::FeatureVector*, 2>> by_subject;
    for (const auto& fv : rows) {
        auto [it, inserted] = by_subject.try_emplace(fv.subject_id, std::array<const features::FeatureVector*, 2>{});
        if (inserted) order.push_back(fv.subject_id);
        const std::size_t slot = fv.task == telemetry::Task::Walk ? 0 : 1;
        it->second[slot] = &fv;
    }
    bool all_labeled = !rows.empty();
    for (const auto& fv : rows) {
        all_labeled = all_labeled && fv.label.has_value();
    }
    if (all_labeled) ds.y.emplace();

    std::vector<double> row;
    for (const auto& id : order) {
        const auto& pair = by_subject[id];
        if (!pair[0] || !pair[1]) {
            ++report.dropped_rows;
            report.dropped_ids.push_back(id);
            continue;
        }
        if (pair[0]->label != pair[1]->label) {
            throw Error(Errc::SchemaMismatch, "subject " + id + " has conflicting labels across tasks");
        }
        row.clear();
        for (const auto* fv : pair) {
            ensure(fv->values.size() == features::kCatalogSize, "feature vector does not match the catalog");
            row.insert(row.end(), fv->values.begin(), fv->values.end());
        }
        ds.row_ids.push_back(id);
        ds.x.append_row(row);
        if (ds.y) ds.y->push_back(static_cast<int>(*pair[0]->label));
    }
    return report;
}

std::pair<Dataset, Scaler> standardize(const Dataset& train) {
    if (train.rows() < 2) {
        throw Error(Errc::InvalidParams, "standardization needs at least two rows");
    }
    Scaler scaler;
    scaler.feature_names = train.feature_names;
    scaler.fitted_rows = train.row_ids;
    const double n = static_cast<double>(train.rows());
    for (std::size_t c = 0; c < train.cols(); ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < train.rows(); ++r) sum += train.x(r, c);
        const double m = sum / n;
        double ss = 0.0;
        for (std::size_t r = 0; r < train.rows(); ++r) ss += (train.x(r, c) - m) * (train.x(r, c) - m);
        double sd = std::sqrt(ss / n);
        // Rounding residue of a constant column is not variance.
        if (sd <= 1e-12 * std::max(1.0, std::abs(m))) sd = 0.0;
        scaler.mean.push_back(m);
        scaler.std.push_back(sd);
    }
    return {apply_scaler(scaler, train), scaler};
}

void apply_scaler_row(const Scaler& scaler, std::span<double> row) {
    if (row.size() != scaler.mean.size()) {
        throw Error(Errc::DimensionMismatch, "row has " + std::to_string(row.size()) + " values, scaler expects " +
                                                 std::to_string(scaler.mean.size()));
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
        row[c] = scaler.std[c] > 0.0 ? (row[c] - scaler.mean[c]) / scaler.std[c] : 0.0;
    }
}

Dataset apply_scaler(const Scaler& scaler, const Dataset& ds) {
    Dataset out = ds.feature_names == scaler.feature_names ? ds : ds.select_columns(scaler.feature_names);
    for (std::size_t r = 0; r < out.rows(); ++r) {
        apply_scaler_row(scaler, out.x.row(r));
    }
    return out;
}

Split stratified_split_indices(const Dataset& ds, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw Error(Errc::InvalidParams, "test fraction must lie in (0, 1)");
    }
    const auto counts = ds.class_counts();
    if (counts[0] == 0 || counts[1] == 0) {
        throw Error(Errc::SingleClass, "stratified split needs both classes");
    }
    Rng rng(seed);
    Split split;
    for (int label : {0, 1}) {
        std::vector<std::size_t> members;
        for (std::size_t r = 0; r < ds.rows(); ++r) {
            if ((*ds.y)[r] == label) members.push_back(r);
        }
        rng.shuffle(std::span(members));
        const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(members.size()) * test_fraction));
        split.test.insert(split.test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
        split.train.insert(split.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
    const Split s = stratified_split_indices(ds, test_fraction, seed);
    return {ds.subset(s.train), ds.subset(s.test)};
}

} // namespace gaitlab::dataset
