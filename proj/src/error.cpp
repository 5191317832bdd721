#include "ceph/error.hpp"

namespace ceph {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::UnknownLandmarkName: return "UnknownLandmarkName";
        case Errc::ParseError: return "ParseError";
        case Errc::ValidationError: return "ValidationError";
        case Errc::IoError: return "IoError";
        case Errc::DegenerateChord: return "DegenerateChord";
        case Errc::DegenerateTriple: return "DegenerateTriple";
        case Errc::EmptyWindow: return "EmptyWindow";
        case Errc::MissingPopulationStats: return "MissingPopulationStats";
        case Errc::NoVisibleSamples: return "NoVisibleSamples";
        case Errc::AllZeroMap: return "AllZeroMap";
        case Errc::ShapeMismatch: return "ShapeMismatch";
        case Errc::EmptyZone: return "EmptyZone";
        case Errc::EmptyPointSet: return "EmptyPointSet";
        case Errc::TooFewPoints: return "TooFewPoints";
        case Errc::DegenerateVertex: return "DegenerateVertex";
        case Errc::MissingLandmark: return "MissingLandmark";
        case Errc::UnavailableMeasurement: return "UnavailableMeasurement";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::EmptyGroup: return "EmptyGroup";
        case Errc::TooFewValues: return "TooFewValues";
        case Errc::ZeroVariance: return "ZeroVariance";
        case Errc::AllZeroDifferences: return "AllZeroDifferences";
        case Errc::DegenerateMarginals: return "DegenerateMarginals";
        case Errc::ProvenanceMismatch: return "ProvenanceMismatch";
    }
    return "Unknown";
}

}  // namespace ceph
