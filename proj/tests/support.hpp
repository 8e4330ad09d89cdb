#pragma once

// Independent reference implementations used as oracles by the unit and
// acceptance tests. Nothing here calls into the code it checks.

#include "gaitlab/dataset.hpp"
#include "gaitlab/learn.hpp"
#include "gaitlab/rng.hpp"
#include "gaitlab/telemetry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

namespace oracle {

// Bit-at-a-time CRC-8, polynomial x^8 + x^2 + x + 1, zero init, no reflection.
inline std::uint8_t crc8(const std::uint8_t* data, std::size_t n) {
    unsigned reg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (int bit = 7; bit >= 0; --bit) {
            const unsigned in = (data[i] >> bit) & 1u;
            const unsigned top = (reg >> 7) & 1u;
            reg = (reg << 1) & 0xFFu;
            if (top ^ in) reg ^= 0x07u;
        }
    }
    return static_cast<std::uint8_t>(reg);
}

// Whether 27 bytes form a frame the protocol accepts.
inline bool frame_valid(const std::uint8_t* p) {
    return p[0] == 0xA5 && (p[1] == 1 || p[1] == 2) && crc8(p, 26) == p[26];
}

inline std::int16_t le16(const std::uint8_t* p) {
    return static_cast<std::int16_t>(static_cast<std::uint16_t>(p[0] | (p[1] << 8)));
}

inline gaitlab::telemetry::SensorFrame parse_frame(const std::uint8_t* p) {
    gaitlab::telemetry::SensorFrame f;
    f.device = static_cast<gaitlab::telemetry::DeviceId>(p[1]);
    f.seq = static_cast<std::uint16_t>(p[2] | (p[3] << 8));
    f.timestamp_ms = static_cast<std::uint32_t>(p[4]) | (static_cast<std::uint32_t>(p[5]) << 8) |
                     (static_cast<std::uint32_t>(p[6]) << 16) | (static_cast<std::uint32_t>(p[7]) << 24);
    for (int a = 0; a < 3; ++a) {
        f.accel[a] = le16(p + 8 + 2 * a);
        f.gyro[a] = le16(p + 14 + 2 * a);
        f.mag[a] = le16(p + 20 + 2 * a);
    }
    return f;
}

// Scan a byte stream: take a frame wherever 27 valid bytes start, else skip one.
inline std::vector<gaitlab::telemetry::SensorFrame> scan(const std::vector<std::uint8_t>& bytes) {
    std::vector<gaitlab::telemetry::SensorFrame> out;
    std::size_t i = 0;
    while (i + 27 <= bytes.size()) {
        if (frame_valid(bytes.data() + i)) {
            out.push_back(parse_frame(bytes.data() + i));
            i += 27;
        } else {
            ++i;
        }
    }
    return out;
}

inline gaitlab::telemetry::SensorFrame random_frame(gaitlab::Rng& rng) {
    gaitlab::telemetry::SensorFrame f;
    f.device = rng.below(2) == 0 ? gaitlab::telemetry::DeviceId::LeftWrist : gaitlab::telemetry::DeviceId::RightWrist;
    f.seq = static_cast<std::uint16_t>(rng.below(65536));
    f.timestamp_ms = static_cast<std::uint32_t>(rng.next());
    for (auto* axis : {&f.accel, &f.gyro, &f.mag}) {
        for (auto& v : *axis) v = static_cast<std::int16_t>(static_cast<int>(rng.below(65536)) - 32768);
    }
    return f;
}

// Mutual information in bits straight from a contingency table of counts:
// sum over cells of p(a,b) log2 p(a,b) / (p(a) p(b)), empty cells skipped.
inline double mi_from_table(const std::vector<std::vector<long>>& table) {
    long n = 0;
    std::vector<long> row_sum(table.size(), 0);
    std::vector<long> col_sum(table.empty() ? 0 : table[0].size(), 0);
    for (std::size_t r = 0; r < table.size(); ++r) {
        for (std::size_t c = 0; c < table[r].size(); ++c) {
            row_sum[r] += table[r][c];
            col_sum[c] += table[r][c];
            n += table[r][c];
        }
    }
    long double mi = 0.0L;
    for (std::size_t r = 0; r < table.size(); ++r) {
        for (std::size_t c = 0; c < table[r].size(); ++c) {
            if (table[r][c] == 0) continue;
            const long double pj = static_cast<long double>(table[r][c]) / n;
            const long double pr = static_cast<long double>(row_sum[r]) / n;
            const long double pc = static_cast<long double>(col_sum[c]) / n;
            mi += pj * std::log2(pj / (pr * pc));
        }
    }
    return static_cast<double>(std::max(0.0L, mi));
}

// Expands a contingency table into paired code sequences.
inline std::pair<std::vector<int>, std::vector<int>> table_to_codes(const std::vector<std::vector<long>>& table) {
    std::vector<int> a, b;
    for (std::size_t r = 0; r < table.size(); ++r) {
        for (std::size_t c = 0; c < table[r].size(); ++c) {
            for (long i = 0; i < table[r][c]; ++i) {
                a.push_back(static_cast<int>(r));
                b.push_back(static_cast<int>(c));
            }
        }
    }
    return {a, b};
}

// Brute-force nearest-neighbour classification: every pairwise distance,
// full sort by (distance, index), then the vote rules.
struct KnnAnswer {
    int label;
    double score;
};

inline KnnAnswer knn(const std::vector<std::vector<double>>& train, const std::vector<int>& labels,
                     const std::vector<double>& query, int k, bool manhattan, bool inverse_distance) {
    std::vector<std::pair<double, std::size_t>> d(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < query.size(); ++j) {
            const double diff = train[i][j] - query[j];
            acc += manhattan ? std::fabs(diff) : diff * diff;
        }
        d[i] = {manhattan ? acc : std::sqrt(acc), i};
    }
    std::sort(d.begin(), d.end());
    d.resize(std::min<std::size_t>(static_cast<std::size_t>(k), d.size()));
    double votes[2] = {0.0, 0.0};
    const bool any_exact = d.front().first == 0.0;
    for (const auto& [dist, idx] : d) {
        double w = 1.0;
        if (inverse_distance) w = any_exact ? (dist == 0.0 ? 1.0 : 0.0) : 1.0 / dist;
        votes[labels[idx]] += w;
    }
    KnnAnswer out{0, votes[1] / (votes[0] + votes[1])};
    if (votes[1] != votes[0]) {
        out.label = votes[1] > votes[0] ? 1 : 0;
    } else {
        out.label = labels[d.front().second];
    }
    return out;
}

// Regularised mean log-loss, evaluated directly (no shared code with the library).
inline double logistic_loss(const gaitlab::dataset::Matrix& x, const std::vector<int>& y, const std::vector<double>& w,
                            double b, double lambda) {
    long double total = 0.0L;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        double z = b;
        for (std::size_t c = 0; c < x.cols(); ++c) z += w[c] * x(r, c);
        // log(1 + e^z) - y z, written stably
        const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        total += softplus - y[r] * z;
    }
    double reg = 0.0;
    for (double v : w) reg += v * v;
    return static_cast<double>(total / x.rows()) + 0.5 * lambda * reg;
}

inline gaitlab::dataset::Dataset make_dataset(const std::vector<std::vector<double>>& rows, const std::vector<int>& y,
                                              std::vector<std::string> names = {}) {
    gaitlab::dataset::Dataset ds;
    const std::size_t d = rows.empty() ? names.size() : rows.front().size();
    if (names.empty()) {
        for (std::size_t c = 0; c < d; ++c) names.push_back("f" + std::to_string(c));
    }
    ds.feature_names = names;
    ds.x = gaitlab::dataset::Matrix(0, d);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        ds.row_ids.push_back("r" + std::to_string(r));
        ds.x.append_row(rows[r]);
    }
    if (!y.empty()) ds.y = y;
    return ds;
}

// Two Gaussian blobs separated along every axis by `shift`.
inline gaitlab::dataset::Dataset blobs(std::size_t per_class, std::size_t d, double shift, std::uint64_t seed) {
    gaitlab::Rng rng(seed);
    std::vector<std::vector<double>> rows;
    std::vector<int> y;
    for (int label : {0, 1}) {
        for (std::size_t i = 0; i < per_class; ++i) {
            std::vector<double> row(d);
            for (auto& v : row) v = rng.normal() + label * shift;
            rows.push_back(row);
            y.push_back(label);
        }
    }
    return make_dataset(rows, y);
}

} // namespace oracle
