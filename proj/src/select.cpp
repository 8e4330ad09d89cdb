#include "gaitlab/select.hpp"

#include "gaitlab/text.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace gaitlab::select {

std::vector<int> discretize(std::span<const double> column, int bins) {
    if (bins < 2) {
        throw Error(Errc::InvalidParams, "discretization needs at least two bins");
    }
    const std::size_t n = column.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return column[a] < column[b]; });

    std::vector<int> codes(n, 0);
    std::size_t group_start = 0;
    for (std::size_t r = 0; r < n; ++r) {
        if (r > 0 && column[order[r]] != column[order[r - 1]]) {
            group_start = r;
        }
        codes[order[r]] = static_cast<int>(group_start * static_cast<std::size_t>(bins) / n);
    }
    return codes;
}

double mutual_information(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size()) {
        throw Error(Errc::DimensionMismatch, "mutual information needs sequences of equal length");
    }
    const std::size_t n = a.size();
    if (n == 0) {
        return 0.0;
    }
    std::map<int, std::size_t> ca;
    std::map<int, std::size_t> cb;
    std::map<std::pair<int, int>, std::size_t> joint;
    for (std::size_t i = 0; i < n; ++i) {
        ++ca[a[i]];
        ++cb[b[i]];
        ++joint[{a[i], b[i]}];
    }
    const double total = static_cast<double>(n);
    double mi = 0.0;
    for (const auto& [cell, count] : joint) {
        const double p = static_cast<double>(count) / total;
        const double ratio = static_cast<double>(count) * total /
                             (static_cast<double>(ca[cell.first]) * static_cast<double>(cb[cell.second]));
        mi += p * std::log2(ratio);
    }
    return std::max(0.0, mi);
}

double entropy_bits(std::span<const int> codes) {
    std::map<int, std::size_t> counts;
    for (int c : codes) ++counts[c];
    const double n = static_cast<double>(codes.size());
    double h = 0.0;
    for (const auto& [code, count] : counts) {
        const double p = static_cast<double>(count) / n;
        h -= p * std::log2(p);
    }
    return std::max(0.0, h);
}

std::vector<std::string> RankedFeatures::selected() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < k_selected && i < entries.size(); ++i) {
        out.push_back(entries[i].feature);
    }
    return out;
}

RankedFeatures rank_features(const dataset::Dataset& ds, std::size_t k, int bins) {
    if (!ds.labeled()) {
        throw Error(Errc::Unlabeled, "feature ranking needs a labeled table");
    }
    if (ds.rows() < 2) {
        throw Error(Errc::InvalidParams, "feature ranking needs at least two rows");
    }
    RankedFeatures r;
    r.bins = std::min<int>(bins, static_cast<int>(ds.rows()));
    r.fitted_rows = ds.row_ids;
    const std::vector<int>& y = *ds.y;
    for (std::size_t c = 0; c < ds.cols(); ++c) {
        const auto codes = discretize(ds.x.column(c), r.bins);
        const double mi = mutual_information(codes, y);
        // Plug-in MI can never exceed either marginal entropy.
        ensure(mi <= std::min(entropy_bits(codes), entropy_bits(y)) + 1e-12, "MI exceeds marginal entropy");
        r.entries.push_back({ds.feature_names[c], mi, c});
    }
    std::stable_sort(r.entries.begin(), r.entries.end(),
                     [](const RankedEntry& a, const RankedEntry& b) { return a.mi_bits > b.mi_bits; });
    r.k_selected = std::min(k, r.entries.size());
    return r;
}

std::string ranking_to_csv(const RankedFeatures& r, const std::vector<std::string>& comment) {
    std::string out;
    for (const auto& c : comment) out += "# " + c + "\n";
    out += "rank,feature,mi_bits,selected\n";
    for (std::size_t i = 0; i < r.entries.size(); ++i) {
        out += std::to_string(i + 1) + "," + r.entries[i].feature + "," + text::format_exact(r.entries[i].mi_bits) + "," +
               (i < r.k_selected ? "1" : "0") + "\n";
    }
    return out;
}

std::string ranking_chart(const RankedFeatures& r, int width) {
    std::size_t label_width = 0;
    double top = 0.0;
    for (const auto& e : r.entries) {
        label_width = std::max(label_width, e.feature.size());
        top = std::max(top, e.mi_bits);
    }
    std::string out = "Mutual information with label (bits, " + std::to_string(r.bins) + " equal-frequency bins)\n";
    for (std::size_t i = 0; i < r.entries.size(); ++i) {
        const auto& e = r.entries[i];
        const int bar = top > 0.0 ? static_cast<int>(std::lround(e.mi_bits / top * width)) : 0;
        out += (i < r.k_selected ? "* " : "  ");
        out += e.feature + std::string(label_width - e.feature.size(), ' ') + " |";
        out += std::string(static_cast<std::size_t>(bar), '#');
        out += std::string(static_cast<std::size_t>(width - bar), ' ');
        out += "| " + text::format_fixed(e.mi_bits, 4) + "\n";
    }
    return out;
}

} // namespace gaitlab::select
