#include "gaitlab/error.hpp"

namespace gaitlab {

std::string_view to_string(Errc code) {
    switch (code) {
    case Errc::EncodingError: return "EncodingError";
    case Errc::BadMagic: return "BadMagic";
    case Errc::BadCrc: return "BadCrc";
    case Errc::BadDeviceId: return "BadDeviceId";
    case Errc::Truncated: return "Truncated";
    case Errc::EmptyChannel: return "EmptyChannel";
    case Errc::ClockSkew: return "ClockSkew";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::InvalidParams: return "InvalidParams";
    case Errc::TooShort: return "TooShort";
    case Errc::TooFewSteps: return "TooFewSteps";
    case Errc::EmptyAfterCleaning: return "EmptyAfterCleaning";
    case Errc::SingleClass: return "SingleClass";
    case Errc::Unlabeled: return "Unlabeled";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::ChecksumFailure: return "ChecksumFailure";
    case Errc::ClassCountBelowFolds: return "ClassCountBelowFolds";
    case Errc::Io: return "Io";
    case Errc::Invariant: return "Invariant";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

Error Error::schema(const std::string& column) {
    Error e(Errc::SchemaMismatch, "unexpected or missing column '" + column + "'");
    e.detail_ = column;
    return e;
}

void ensure(bool ok, std::string_view what) {
    if (!ok) {
        throw Error(Errc::Invariant, std::string(what));
    }
}

} // namespace gaitlab
