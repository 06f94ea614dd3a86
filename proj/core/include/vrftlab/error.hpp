#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vrftlab {

enum class ErrorKind {
    InvalidArgument,
    ImproperFilter,
    SamplePeriodMismatch,
    PoleOnUnitCircle,
    UnstableSystem,
    StateOutOfRange,
    LengthTooShort,
    UnstableLoop,
    ParseError,
    NonMonotonicTimestamps,
    DegenerateBandwidth,
    RankDeficient,
    AlreadyPrefiltered,
    EmptySeries,
    SeriesTooShort,
    TooFewRuns,
    ConfigError,
    IoError,
    MissingArtifacts,
};

std::string_view to_string(ErrorKind kind) noexcept;

// All library failures are reported through this type; `kind()` lets callers
// branch without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what);

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace vrftlab
