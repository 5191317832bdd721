#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ceph/geometry.hpp"
#include "ceph/model.hpp"

namespace ceph::clinical {

// Unsigned angle at `vertex` between rays to a and b, degrees in [0, 180].
double angle_at(Point2 vertex, Point2 a, Point2 b);

struct MeasureOptions {
    // +1 when the face points toward +x in image coordinates, -1 otherwise.
    int facing = +1;
    // Report 180 - IMPA (the anterior-inferior angle) instead.
    bool impa_supplement = false;
};

enum class Measurement { ANB, SNB, FMA, IMPA, GoGnSN };
inline constexpr std::array<Measurement, 5> kMeasurements{Measurement::ANB, Measurement::SNB, Measurement::FMA,
                                                          Measurement::IMPA, Measurement::GoGnSN};
std::string_view to_string(Measurement m) noexcept;

struct MeasurementSet {
    std::optional<double> anb;
    std::optional<double> snb;
    std::optional<double> fma;
    std::optional<double> impa;
    std::optional<double> gogn_sn;
    // measurement name -> first missing landmark
    std::map<std::string, std::string> unavailable;

    std::optional<double> get(Measurement m) const;
};

// ANB is signed: positive when A lies anterior of the N-B line.
MeasurementSet measure(std::span<const Landmark> landmarks, const MeasureOptions& options = {});

struct ThresholdScheme {
    std::string name = "steiner";
    double sagittal_lo = 0.0;
    double sagittal_hi = 4.0;
    double vertical_lo = 29.0;
    double vertical_hi = 36.0;
    double boundary_band = 2.0;

    static ThresholdScheme steiner();
    static ThresholdScheme ricketts();
    static ThresholdScheme convention_1_4();
    static ThresholdScheme by_name(std::string_view name);
};

void validate(const ThresholdScheme& scheme);

enum class SagittalClass { I, II, III };
enum class VerticalClass { Hypodivergent, Normodivergent, Hyperdivergent };
std::string_view to_string(SagittalClass c) noexcept;
std::string_view to_string(VerticalClass c) noexcept;
// Position on the ordinal axis: III < I < II, hypo < normo < hyper.
int ordinal(SagittalClass c) noexcept;
int ordinal(VerticalClass c) noexcept;

struct SagittalResult {
    SagittalClass label = SagittalClass::I;
    bool near_lo = false;
    bool near_hi = false;
    bool near_boundary() const noexcept { return near_lo || near_hi; }
};

struct VerticalResult {
    VerticalClass label = VerticalClass::Normodivergent;
    bool near_lo = false;
    bool near_hi = false;
    bool near_boundary() const noexcept { return near_lo || near_hi; }
};

SagittalResult classify_sagittal(double anb, const ThresholdScheme& scheme);
VerticalResult classify_vertical(double gogn_sn, const ThresholdScheme& scheme);

struct Classification {
    SagittalResult sagittal;
    VerticalResult vertical;
};

Classification classify(const MeasurementSet& m, const ThresholdScheme& scheme);

struct AgreementReport {
    std::vector<std::vector<std::size_t>> confusion;  // rows: ground truth, cols: prediction, ordinal order
    std::optional<double> kappa;                      // empty when chance agreement is 1
    bool adjacent_only = true;
    std::size_t extreme_reversals = 0;  // II<->III or hypo<->hyper
    std::size_t n = 0;
};

// Labels as ordinals 0..2.
AgreementReport agreement_report(std::span<const int> pred, std::span<const int> gt);
AgreementReport agreement_report(std::span<const SagittalClass> pred, std::span<const SagittalClass> gt);
AgreementReport agreement_report(std::span<const VerticalClass> pred, std::span<const VerticalClass> gt);

}  // namespace ceph::clinical
