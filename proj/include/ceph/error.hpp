#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ceph {

enum class Errc {
    UnknownLandmarkName,
    ParseError,
    ValidationError,
    IoError,
    DegenerateChord,
    DegenerateTriple,
    EmptyWindow,
    MissingPopulationStats,
    NoVisibleSamples,
    AllZeroMap,
    ShapeMismatch,
    EmptyZone,
    EmptyPointSet,
    TooFewPoints,
    DegenerateVertex,
    MissingLandmark,
    UnavailableMeasurement,
    LengthMismatch,
    EmptyGroup,
    TooFewValues,
    ZeroVariance,
    AllZeroDifferences,
    DegenerateMarginals,
    ProvenanceMismatch,
};

std::string_view errc_name(Errc code) noexcept;

// Library-wide exception. `context` names the offending record id, file
// path or landmark when one is known.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message, std::string context = {})
        : std::runtime_error(message), code_(code), context_(std::move(context)) {}

    Errc code() const noexcept { return code_; }
    const std::string& context() const noexcept { return context_; }

private:
    Errc code_;
    std::string context_;
};

}  // namespace ceph
