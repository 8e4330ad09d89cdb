#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gaitlab {

/// Error categories surfaced across the pipeline. Each maps to a distinct,
/// countable condition named in the module contracts.
enum class Errc {
    // telemetry
    EncodingError,
    BadMagic,
    BadCrc,
    BadDeviceId,
    Truncated,
    EmptyChannel,
    ClockSkew,
    SchemaMismatch,
    // gaitsim / features
    InvalidParams,
    TooShort,
    TooFewSteps,
    // dataset / select / learn / eval
    EmptyAfterCleaning,
    SingleClass,
    Unlabeled,
    DimensionMismatch,
    VersionMismatch,
    ChecksumFailure,
    ClassCountBelowFolds,
    Io,
    // internal invariant broken; the CLI maps this to exit code 2
    Invariant,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what);

    Errc code() const noexcept { return code_; }

    /// Offending name for schema errors (column, key, feature), else empty.
    const std::string& detail() const noexcept { return detail_; }

    static Error schema(const std::string& column);

private:
    Errc code_;
    std::string detail_;
};

/// Throws Errc::Invariant when `ok` is false.
void ensure(bool ok, std::string_view what);

} // namespace gaitlab
