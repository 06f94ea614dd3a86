#include "vrftlab/error.hpp"

namespace vrftlab {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::ImproperFilter: return "ImproperFilter";
        case ErrorKind::SamplePeriodMismatch: return "SamplePeriodMismatch";
        case ErrorKind::PoleOnUnitCircle: return "PoleOnUnitCircle";
        case ErrorKind::UnstableSystem: return "UnstableSystem";
        case ErrorKind::StateOutOfRange: return "StateOutOfRange";
        case ErrorKind::LengthTooShort: return "LengthTooShort";
        case ErrorKind::UnstableLoop: return "UnstableLoop";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::NonMonotonicTimestamps: return "NonMonotonicTimestamps";
        case ErrorKind::DegenerateBandwidth: return "DegenerateBandwidth";
        case ErrorKind::RankDeficient: return "RankDeficient";
        case ErrorKind::AlreadyPrefiltered: return "AlreadyPrefiltered";
        case ErrorKind::EmptySeries: return "EmptySeries";
        case ErrorKind::SeriesTooShort: return "SeriesTooShort";
        case ErrorKind::TooFewRuns: return "TooFewRuns";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::IoError: return "IoError";
        case ErrorKind::MissingArtifacts: return "MissingArtifacts";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

}  // namespace vrftlab
