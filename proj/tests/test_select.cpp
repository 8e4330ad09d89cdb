#include "support.hpp"

#include "gaitlab/features.hpp"
#include "gaitlab/gaitsim.hpp"
#include "gaitlab/select.hpp"

#include <doctest.h>

#include <cmath>

using namespace gaitlab;
using namespace gaitlab::select;

namespace {

std::vector<std::vector<long>> random_table(Rng& rng) {
    const std::size_t rows = 1 + rng.below(10);
    std::vector<std::vector<long>> t(rows, std::vector<long>(2));
    long total = 0;
    for (auto& r : t) {
        for (auto& c : r) {
            c = static_cast<long>(rng.below(rng.below(3) == 0 ? 2 : 12));
            total += c;
        }
    }
    if (total < 2) t[0] = {1, 1};
    return t;
}

} // namespace

TEST_CASE("discretize examples") {
    const std::vector<double> a{1, 2, 3, 4};
    CHECK(discretize(a, 2) == std::vector<int>{0, 0, 1, 1});
    const std::vector<double> flat(7, 3.0);
    CHECK(discretize(flat, 4) == std::vector<int>(7, 0));
    const std::vector<double> shuffled{4, 1, 3, 2};
    CHECK(discretize(shuffled, 2) == std::vector<int>{1, 0, 1, 0});
}

TEST_CASE("ties go to the lowest bin any of them reaches") {
    const std::vector<double> x{1, 1, 1, 2};
    CHECK(discretize(x, 2) == std::vector<int>{0, 0, 0, 1});
    const std::vector<double> y{5, 2, 2, 9, 9, 9};
    // sorted ranks: 2,2 -> bins 0,0 ; 5 -> 1 ; 9,9,9 -> 1,2,2 -> all 1
    CHECK(discretize(y, 3) == std::vector<int>{1, 0, 0, 1, 1, 1});
}

TEST_CASE("1000 distinct values into 10 bins gives 100 per bin") {
    Rng rng(1);
    std::vector<double> x(1000);
    for (auto& v : x) v = rng.normal();
    const auto codes = discretize(x, 10);
    std::vector<int> counts(10, 0);
    for (int c : codes) {
        REQUIRE(c >= 0);
        REQUIRE(c < 10);
        ++counts[static_cast<std::size_t>(c)];
    }
    for (int c : counts) CHECK(c == 100);
}

TEST_CASE("mutual information examples") {
    const std::vector<int> y{0, 1, 0, 1, 0, 1};
    const std::vector<int> constant(6, 3);
    CHECK(mutual_information(constant, y) == 0.0);
    CHECK(mutual_information(y, y) == 1.0);

    const std::vector<std::vector<long>> table{{2, 0}, {1, 1}, {0, 2}};
    const auto [codes, labels] = oracle::table_to_codes(table);
    CHECK(std::fabs(mutual_information(codes, labels) - oracle::mi_from_table(table)) <= 1e-12);
    // 2/3 bit, worked by hand: (1/3)*log2(2)*2 + 0 for the middle row.
    CHECK(mutual_information(codes, labels) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("random contingency tables match the exhaustive sum") {
    Rng rng(77);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto table = random_table(rng);
        auto [codes, labels] = oracle::table_to_codes(table);
        // Arrival order must not matter.
        std::vector<std::size_t> perm(codes.size());
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(std::span(perm));
        std::vector<int> a(codes.size()), b(codes.size());
        for (std::size_t i = 0; i < perm.size(); ++i) {
            a[i] = codes[perm[i]];
            b[i] = labels[perm[i]];
        }
        const double mi = mutual_information(a, b);
        CHECK(std::fabs(mi - oracle::mi_from_table(table)) <= 1e-12);
        CHECK(mi >= 0.0);
        CHECK(mi <= std::min(entropy_bits(a), entropy_bits(b)) + 1e-12);
        CHECK(std::fabs(mutual_information(b, a) - mi) <= 1e-12);
    }
}

TEST_CASE("entropy") {
    const std::vector<int> fair{0, 1, 0, 1};
    const std::vector<int> four{0, 1, 2, 3};
    const std::vector<int> one{5, 5};
    CHECK(entropy_bits(fair) == 1.0);
    CHECK(entropy_bits(four) == 2.0);
    CHECK(entropy_bits(one) == 0.0);
}

TEST_CASE("ranking basics") {
    auto ds = oracle::blobs(40, 4, 0.0, 3);
    // f2 carries the label; f3 is an exact copy of it.
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        ds.x(r, 2) += 3.0 * (*ds.y)[r];
        ds.x(r, 3) = ds.x(r, 2);
    }
    const auto ranked = rank_features(ds, 2, 10);
    REQUIRE(ranked.entries.size() == 4);
    CHECK(ranked.entries[0].feature == "f2");
    CHECK(ranked.entries[1].feature == "f3");
    CHECK(ranked.entries[0].mi_bits == ranked.entries[1].mi_bits);
    CHECK(ranked.selected() == std::vector<std::string>{"f2", "f3"});
    for (std::size_t i = 1; i < ranked.entries.size(); ++i) {
        CHECK(ranked.entries[i - 1].mi_bits >= ranked.entries[i].mi_bits);
    }
    for (const auto& e : ranked.entries) CHECK(e.mi_bits >= 0.0);
    CHECK(ranked.fitted_rows == ds.row_ids);
    CHECK(ranked.bins == 10);

    const auto all = rank_features(ds, 4, 10);
    auto names = all.selected();
    std::sort(names.begin(), names.end());
    CHECK(names == ds.feature_names);
}

TEST_CASE("ranking is invariant to monotone transforms") {
    auto ds = oracle::blobs(30, 3, 1.0, 9);
    const auto before = rank_features(ds, 3, 5);
    for (std::size_t r = 0; r < ds.rows(); ++r) {
        ds.x(r, 0) = std::exp(ds.x(r, 0));
        ds.x(r, 1) = -1.0 / (1.0 + std::exp(-ds.x(r, 1))) * -7.0 + 3.0;
    }
    const auto after = rank_features(ds, 3, 5);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(after.entries[i].feature == before.entries[i].feature);
        CHECK(after.entries[i].mi_bits == before.entries[i].mi_bits);
    }
}

TEST_CASE("ranking needs labels") {
    auto ds = oracle::blobs(5, 2, 1.0, 1);
    ds.y.reset();
    try {
        rank_features(ds);
        FAIL("expected Unlabeled");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::Unlabeled);
    }
}

TEST_CASE("asymmetry is the top feature when it is the only injected effect") {
    auto c = gaitsim::CohortSpec::preset("null");
    c.n_control = 12;
    c.n_pd = 12;
    c.pd.mean.swing_asym = 0.4;
    const auto ex = features::extract_all(gaitsim::generate_cohort(c));
    REQUIRE(ex.flagged.empty());
    const auto ds = dataset::from_feature_vectors(ex.vectors).data;
    const auto top = rank_features(ds, 6).selected();
    CHECK(std::find(top.begin(), top.end(), "walk.swing_asym") != top.end());
    CHECK(std::find(top.begin(), top.end(), "dual.swing_asym") != top.end());
}

TEST_CASE("ranking report formats") {
    const auto ds = oracle::blobs(10, 3, 1.0, 4);
    const auto ranked = rank_features(ds, 1, 4);
    const std::string csv = ranking_to_csv(ranked, {"hdr"});
    CHECK(csv.rfind("# hdr\nrank,feature,mi_bits,selected\n1,", 0) == 0);
    const std::string chart = ranking_chart(ranked, 20);
    std::size_t lines = 0;
    for (char ch : chart) lines += ch == '\n';
    CHECK(lines >= 3);
    CHECK(chart.find(ranked.entries[0].feature) != std::string::npos);
}
