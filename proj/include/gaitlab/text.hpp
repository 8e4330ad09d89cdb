#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gaitlab::text {

std::string_view trim(std::string_view s);

std::vector<std::string> split(std::string_view line, char sep);

/// Splits into lines, stripping a trailing '\r' from each.
std::vector<std::string> lines(std::string_view body);

/// Shortest round-trippable decimal form.
std::string format_exact(double v);

/// `digits` significant digits, general notation.
std::string format_sig(double v, int digits);

/// Fixed notation with `decimals` places.
std::string format_fixed(double v, int decimals);

/// Parses a full field as a finite or non-finite double; nullopt on junk or
/// an empty field.
std::optional<double> parse_double(std::string_view s);

std::optional<long long> parse_int(std::string_view s);

/// Ordered key=value store read from "key=value" lines; '#' starts a comment.
class KeyValues {
public:
    static KeyValues parse(std::string_view body);

    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
    bool contains(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<std::string> get(const std::string& key) const;

    double number(const std::string& key, double fallback) const;
    long long integer(const std::string& key, long long fallback) const;
    std::string string(const std::string& key, const std::string& fallback) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

    /// "k1=v1;k2=v2" in key order, for one-line provenance headers.
    std::string joined(char sep = ';') const;

private:
    std::map<std::string, std::string> values_;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view body);

} // namespace gaitlab::text
