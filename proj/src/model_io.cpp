#include "gaitlab/learn.hpp"

#include "gaitlab/text.hpp"
#include "gaitlab/version.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <map>

namespace gaitlab::learn {

namespace {

class Writer {
public:
    void u8(std::uint8_t v) { bytes_.push_back(v); }

    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void f64(double v) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }

    void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }

    std::vector<std::uint8_t>& bytes() { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8() { return take(1)[0]; }

    std::uint32_t u32() {
        const auto b = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }

    double f64() {
        const auto b = take(8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return std::bit_cast<double>(bits);
    }

    std::size_t count() {
        const double v = f64();
        if (!(v >= 0.0 && v < 1e9) || v != static_cast<double>(static_cast<std::size_t>(v))) {
            throw Error(Errc::SchemaMismatch, "model payload holds an invalid count");
        }
        return static_cast<std::size_t>(v);
    }

    std::string_view text(std::size_t n) {
        const auto b = take(n);
        return {reinterpret_cast<const char*>(b.data()), b.size()};
    }

    std::span<const std::uint8_t> take(std::size_t n) {
        if (bytes_.size() - pos_ < n) {
            throw Error(Errc::SchemaMismatch, "model payload ends early");
        }
        auto out = bytes_.subspan(pos_, n);
        pos_ += n;
        return out;
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out += ',';
        out += s;
    }
    return out;
}

void write_tree(Writer& w, const Tree& t) {
    w.f64(static_cast<double>(t.nodes.size()));
    for (const auto& n : t.nodes) {
        w.f64(n.feature);
        w.f64(n.threshold);
        w.f64(n.left);
        w.f64(n.right);
        w.f64(n.value);
    }
}

Tree read_tree(Reader& r, std::size_t dims) {
    Tree t;
    t.nodes.resize(r.count());
    if (t.nodes.empty()) throw Error(Errc::SchemaMismatch, "model holds an empty tree");
    const auto n = static_cast<int>(t.nodes.size());
    for (auto& node : t.nodes) {
        node.feature = static_cast<int>(r.f64());
        node.threshold = r.f64();
        node.left = static_cast<int>(r.f64());
        node.right = static_cast<int>(r.f64());
        node.value = r.f64();
        if (node.feature >= 0 &&
            (node.feature >= static_cast<int>(dims) || node.left <= 0 || node.left >= n || node.right <= 0 || node.right >= n)) {
            throw Error(Errc::SchemaMismatch, "model holds a malformed tree node");
        }
    }
    return t;
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
    return static_cast<std::uint32_t>(::crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

} // namespace

std::vector<std::uint8_t> save_model(const Model& m, const std::vector<std::pair<std::string, std::string>>& provenance) {
    const std::size_t d = m.features.size();
    ensure(m.scaler.mean.size() == d && m.scaler.std.size() == d && m.classifier.dims == d,
           "model parts disagree on dimension");

    std::string spec;
    for (const auto& [k, v] : m.spec.to_pairs()) spec += k + "=" + v + "\n";
    spec += "features=" + join(m.features) + "\n";
    spec += "scaler_rows=" + join(m.scaler.fitted_rows) + "\n";
    spec += std::string("gaitlab_version=") + kVersion + "\n";
    for (const auto& [k, v] : provenance) spec += "meta." + k + "=" + v + "\n";

    Writer payload;
    for (double v : m.scaler.mean) payload.f64(v);
    for (double v : m.scaler.std) payload.f64(v);
    std::visit(
        [&](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, KnnState>) {
                payload.f64(static_cast<double>(s.x.rows()));
                for (double v : s.x.data()) payload.f64(v);
                for (int y : s.y) payload.f64(y);
            } else if constexpr (std::is_same_v<S, LinearState>) {
                for (double v : s.w) payload.f64(v);
                payload.f64(s.b);
            } else if constexpr (std::is_same_v<S, ForestState>) {
                payload.f64(static_cast<double>(s.trees.size()));
                for (const auto& t : s.trees) write_tree(payload, t);
            } else {
                payload.f64(s.base_margin);
                payload.f64(static_cast<double>(s.trees.size()));
                for (const auto& t : s.trees) write_tree(payload, t);
            }
        },
        m.classifier.state);

    Writer out;
    out.raw(std::string_view(kModelMagic, 4));
    out.u8(static_cast<std::uint8_t>(m.spec.kind()));
    out.u32(static_cast<std::uint32_t>(spec.size()));
    out.raw(spec);
    out.u32(static_cast<std::uint32_t>(payload.bytes().size()));
    out.raw(std::string_view(reinterpret_cast<const char*>(payload.bytes().data()), payload.bytes().size()));
    out.u32(crc32_of(out.bytes()));
    return std::move(out.bytes());
}

Model load_model(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kModelMagic, 3) != 0) {
        throw Error(Errc::SchemaMismatch, "not a gaitlab model file");
    }
    if (bytes[3] != static_cast<std::uint8_t>(kModelMagic[3])) {
        throw Error(Errc::VersionMismatch, std::string("model container version '") + static_cast<char>(bytes[3]) +
                                               "' is not supported (expected '" + kModelMagic[3] + "')");
    }
    constexpr std::size_t kMinSize = 4 + 1 + 4 + 4 + 4;
    if (bytes.size() < kMinSize) {
        throw Error(Errc::ChecksumFailure, "model file is truncated");
    }
    const auto body = bytes.first(bytes.size() - 4);
    Reader tail(bytes.last(4));
    if (crc32_of(body) != tail.u32()) {
        throw Error(Errc::ChecksumFailure, "model file checksum does not match (truncated or corrupted)");
    }

    Reader r(body);
    r.take(4);
    const std::uint8_t kind_tag = r.u8();
    const std::string_view spec_text = r.text(r.u32());
    const std::size_t payload_size = r.u32();
    Reader p(r.take(payload_size));
    if (!r.done()) {
        throw Error(Errc::SchemaMismatch, "model file has trailing bytes");
    }

    std::string spec_only;
    std::map<std::string, std::string> meta;
    for (const auto& line : text::lines(spec_text)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string key = line.substr(0, eq);
        if (key == "features" || key == "scaler_rows" || key == "gaitlab_version" || key.starts_with("meta.")) {
            meta[key] = eq == std::string::npos ? "" : line.substr(eq + 1);
        } else {
            spec_only += line + "\n";
        }
    }

    Model m;
    m.spec = ModelSpec::parse(spec_only);
    if (static_cast<std::uint8_t>(m.spec.kind()) != kind_tag) {
        throw Error(Errc::SchemaMismatch, "model kind tag disagrees with its spec");
    }
    if (!meta.count("features") || meta["features"].empty()) {
        throw Error::schema("features");
    }
    m.features = text::split(meta["features"], ',');
    if (!meta["scaler_rows"].empty()) {
        m.scaler.fitted_rows = text::split(meta["scaler_rows"], ',');
    }
    const std::size_t d = m.features.size();
    m.scaler.feature_names = m.features;
    for (std::size_t i = 0; i < d; ++i) m.scaler.mean.push_back(p.f64());
    for (std::size_t i = 0; i < d; ++i) m.scaler.std.push_back(p.f64());

    m.classifier.spec = m.spec;
    m.classifier.dims = d;
    switch (m.spec.kind()) {
    case Kind::Knn: {
        KnnState s;
        const std::size_t n = p.count();
        s.x = Matrix(n, d);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) s.x(i, j) = p.f64();
        }
        for (std::size_t i = 0; i < n; ++i) s.y.push_back(static_cast<int>(p.f64()));
        m.classifier.state = std::move(s);
        break;
    }
    case Kind::Logistic:
    case Kind::LinearSvm: {
        LinearState s;
        for (std::size_t j = 0; j < d; ++j) s.w.push_back(p.f64());
        s.b = p.f64();
        m.classifier.state = std::move(s);
        break;
    }
    case Kind::RandomForest: {
        ForestState s;
        const std::size_t n = p.count();
        for (std::size_t t = 0; t < n; ++t) s.trees.push_back(read_tree(p, d));
        m.classifier.state = std::move(s);
        break;
    }
    case Kind::BoostedTrees: {
        BoostState s;
        s.base_margin = p.f64();
        const std::size_t n = p.count();
        for (std::size_t t = 0; t < n; ++t) s.trees.push_back(read_tree(p, d));
        m.classifier.state = std::move(s);
        break;
    }
    }
    if (!p.done()) {
        throw Error(Errc::SchemaMismatch, "model payload has trailing values");
    }
    return m;
}

} // namespace gaitlab::learn
