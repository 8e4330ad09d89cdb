#include "gaitlab/text.hpp"

#include "gaitlab/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace gaitlab::text {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            return out;
        }
        out.emplace_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::vector<std::string> lines(std::string_view body) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < body.size()) {
        auto pos = body.find('\n', start);
        if (pos == std::string_view::npos) {
            pos = body.size();
        }
        std::string_view line = body.substr(start, pos - start);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        out.emplace_back(line);
        start = pos + 1;
    }
    return out;
}

std::string format_exact(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string format_sig(double v, int digits) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, digits);
    return std::string(buf, ptr);
}

std::string format_fixed(double v, int decimals) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, decimals);
    return std::string(buf, ptr);
}

std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (s.empty()) {
        return std::nullopt;
    }
    if (s.front() == '+') {
        s.remove_prefix(1);
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

std::optional<long long> parse_int(std::string_view s) {
    s = trim(s);
    if (s.empty()) {
        return std::nullopt;
    }
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

KeyValues KeyValues::parse(std::string_view body) {
    KeyValues kv;
    int line_no = 0;
    for (const auto& raw : lines(body)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw Error(Errc::SchemaMismatch, "config line " + std::to_string(line_no) + " is not key=value");
        }
        kv.set(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
    }
    return kv;
}

std::optional<std::string> KeyValues::get(const std::string& key) const {
    if (auto it = values_.find(key); it != values_.end()) {
        return it->second;
    }
    return std::nullopt;
}

double KeyValues::number(const std::string& key, double fallback) const {
    auto v = get(key);
    if (!v) {
        return fallback;
    }
    auto d = parse_double(*v);
    if (!d || !std::isfinite(*d)) {
        throw Error(Errc::SchemaMismatch, "key '" + key + "' expects a number, got '" + *v + "'");
    }
    return *d;
}

long long KeyValues::integer(const std::string& key, long long fallback) const {
    auto v = get(key);
    if (!v) {
        return fallback;
    }
    auto i = parse_int(*v);
    if (!i) {
        throw Error(Errc::SchemaMismatch, "key '" + key + "' expects an integer, got '" + *v + "'");
    }
    return *i;
}

std::string KeyValues::string(const std::string& key, const std::string& fallback) const {
    return get(key).value_or(fallback);
}

std::string KeyValues::joined(char sep) const {
    std::string out;
    for (const auto& [k, v] : values_) {
        if (!out.empty()) {
            out += sep;
        }
        out += k + "=" + v;
    }
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::Io, "cannot open '" + path + "' for reading");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, std::string_view body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(Errc::Io, "cannot open '" + path + "' for writing");
    }
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) {
        throw Error(Errc::Io, "write to '" + path + "' failed");
    }
}

} // namespace gaitlab::text
