#include "ceph/clinical.hpp"

#include <cmath>
#include <numbers>

#include "ceph/error.hpp"
#include "ceph/stats.hpp"

namespace ceph::clinical {

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;

// Angle between two undirected lines, folded into [0, 90].
double line_angle(Point2 u, Point2 v) {
    const double a = std::atan2(std::abs(cross(u, v)), std::abs(dot(u, v))) * kDeg;
    return a;
}

double vector_angle(Point2 u, Point2 v) { return std::atan2(std::abs(cross(u, v)), dot(u, v)) * kDeg; }

class Lookup {
public:
    explicit Lookup(std::span<const Landmark> lms) {
        for (const auto& l : lms) {
            if (l.visible && std::isfinite(l.x) && std::isfinite(l.y)) pts_[index_of(l.name)] = Point2{l.x, l.y};
        }
    }

    // Fills `out` and returns true when all are present; otherwise records the
    // first missing name.
    template <std::size_t N>
    bool get(const std::array<LandmarkName, N>& names, std::array<Point2, N>& out, std::string& missing) const {
        for (std::size_t i = 0; i < N; ++i) {
            const auto& p = pts_[index_of(names[i])];
            if (!p) {
                missing = std::string(ceph::to_string(names[i]));
                return false;
            }
            out[i] = *p;
        }
        return true;
    }

private:
    std::array<std::optional<Point2>, kLandmarkCount> pts_{};
};

AgreementReport build_report(std::span<const int> pred, std::span<const int> gt) {
    if (pred.size() != gt.size()) {
        throw Error(Errc::LengthMismatch, "label lists differ in length (" + std::to_string(pred.size()) + " vs " +
                                              std::to_string(gt.size()) + ")");
    }
    AgreementReport r;
    r.n = pred.size();
    r.confusion.assign(3, std::vector<std::size_t>(3, 0));
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] < 0 || pred[i] > 2 || gt[i] < 0 || gt[i] > 2) {
            throw Error(Errc::ValidationError, "class ordinal out of range");
        }
        ++r.confusion[static_cast<std::size_t>(gt[i])][static_cast<std::size_t>(pred[i])];
        const int gap = std::abs(pred[i] - gt[i]);
        if (gap > 1) {
            r.adjacent_only = false;
            ++r.extreme_reversals;
        }
    }
    if (r.n > 0) {
        try {
            r.kappa = stats::cohens_kappa(r.confusion);
        } catch (const Error& e) {
            if (e.code() != Errc::DegenerateMarginals) throw;
        }
    }
    return r;
}

template <typename E>
std::vector<int> ordinals(std::span<const E> labels) {
    std::vector<int> out;
    out.reserve(labels.size());
    for (auto l : labels) out.push_back(ordinal(l));
    return out;
}

}  // namespace

double angle_at(Point2 vertex, Point2 a, Point2 b) {
    if (a == vertex || b == vertex) throw Error(Errc::DegenerateVertex, "angle vertex coincides with a ray endpoint");
    return vector_angle(a - vertex, b - vertex);
}

std::string_view to_string(Measurement m) noexcept {
    switch (m) {
        case Measurement::ANB: return "ANB";
        case Measurement::SNB: return "SNB";
        case Measurement::FMA: return "FMA";
        case Measurement::IMPA: return "IMPA";
        case Measurement::GoGnSN: return "GoGnSN";
    }
    return "?";
}

std::optional<double> MeasurementSet::get(Measurement m) const {
    switch (m) {
        case Measurement::ANB: return anb;
        case Measurement::SNB: return snb;
        case Measurement::FMA: return fma;
        case Measurement::IMPA: return impa;
        case Measurement::GoGnSN: return gogn_sn;
    }
    return std::nullopt;
}

MeasurementSet measure(std::span<const Landmark> landmarks, const MeasureOptions& options) {
    if (options.facing != 1 && options.facing != -1) throw Error(Errc::ValidationError, "facing must be +1 or -1");
    using L = LandmarkName;
    const Lookup lk(landmarks);
    MeasurementSet m;
    std::string missing;

    auto fail = [&](Measurement which) { m.unavailable[std::string(to_string(which))] = missing; };

    // Rays of zero length make a measurement unavailable rather than aborting
    // the whole set.
    auto guarded = [&](Measurement which, auto&& fn) -> std::optional<double> {
        try {
            return fn();
        } catch (const Error& e) {
            if (e.code() != Errc::DegenerateVertex) throw;
            m.unavailable[std::string(to_string(which))] = "degenerate";
            return std::nullopt;
        }
    };

    if (std::array<Point2, 3> p; lk.get(std::array{L::Sella, L::Nasion, L::B_point}, p, missing)) {
        m.snb = guarded(Measurement::SNB, [&] { return angle_at(p[1], p[0], p[2]); });
    } else {
        fail(Measurement::SNB);
    }

    if (std::array<Point2, 3> p; lk.get(std::array{L::A_point, L::Nasion, L::B_point}, p, missing)) {
        m.anb = guarded(Measurement::ANB, [&] {
            const Point2 na = p[0] - p[1];
            const Point2 nb = p[2] - p[1];
            const double mag = angle_at(p[1], p[0], p[2]);
            // y grows downward, so A anterior of N->B gives cross(nb, na) < 0
            // for a profile facing +x.
            const double side = cross(nb, na) * static_cast<double>(-options.facing);
            return side >= 0.0 ? mag : -mag;
        });
    } else {
        fail(Measurement::ANB);
    }

    if (std::array<Point2, 4> p; lk.get(std::array{L::Porion, L::Orbitale, L::Gonion, L::Menton}, p, missing)) {
        m.fma = guarded(Measurement::FMA, [&] {
            const Point2 fh = p[1] - p[0];
            const Point2 mp = p[3] - p[2];
            if (norm(fh) == 0.0 || norm(mp) == 0.0) throw Error(Errc::DegenerateVertex, "zero-length line");
            return line_angle(fh, mp);
        });
    } else {
        fail(Measurement::FMA);
    }

    if (std::array<Point2, 4> p; lk.get(std::array{L::L1_tip, L::L1_root, L::Gonion, L::Menton}, p, missing)) {
        m.impa = guarded(Measurement::IMPA, [&] {
            const Point2 axis = p[0] - p[1];
            const Point2 back = p[2] - p[3];
            if (norm(axis) == 0.0 || norm(back) == 0.0) throw Error(Errc::DegenerateVertex, "zero-length line");
            const double a = vector_angle(axis, back);
            return options.impa_supplement ? 180.0 - a : a;
        });
    } else {
        fail(Measurement::IMPA);
    }

    if (std::array<Point2, 4> p; lk.get(std::array{L::Gonion, L::Gnathion, L::Sella, L::Nasion}, p, missing)) {
        m.gogn_sn = guarded(Measurement::GoGnSN, [&] {
            const Point2 mp = p[1] - p[0];
            const Point2 sn = p[3] - p[2];
            if (norm(mp) == 0.0 || norm(sn) == 0.0) throw Error(Errc::DegenerateVertex, "zero-length line");
            return line_angle(mp, sn);
        });
    } else {
        fail(Measurement::GoGnSN);
    }
    return m;
}

ThresholdScheme ThresholdScheme::steiner() { return {"steiner", 0.0, 4.0, 29.0, 36.0, 2.0}; }
ThresholdScheme ThresholdScheme::ricketts() { return {"ricketts", 2.0, 5.0, 29.0, 36.0, 2.0}; }
ThresholdScheme ThresholdScheme::convention_1_4() { return {"convention_1_4", 1.0, 4.0, 29.0, 36.0, 2.0}; }

ThresholdScheme ThresholdScheme::by_name(std::string_view name) {
    if (name == "steiner") return steiner();
    if (name == "ricketts") return ricketts();
    if (name == "convention_1_4") return convention_1_4();
    throw Error(Errc::ValidationError, "unknown threshold scheme '" + std::string(name) + "'");
}

void validate(const ThresholdScheme& s) {
    if (!(s.sagittal_lo < s.sagittal_hi)) throw Error(Errc::ValidationError, "sagittal cutoffs must satisfy lo < hi");
    if (!(s.vertical_lo < s.vertical_hi)) throw Error(Errc::ValidationError, "vertical cutoffs must satisfy lo < hi");
    if (!(s.boundary_band >= 0.0)) throw Error(Errc::ValidationError, "boundary band must be non-negative");
}

std::string_view to_string(SagittalClass c) noexcept {
    switch (c) {
        case SagittalClass::I: return "I";
        case SagittalClass::II: return "II";
        case SagittalClass::III: return "III";
    }
    return "?";
}

std::string_view to_string(VerticalClass c) noexcept {
    switch (c) {
        case VerticalClass::Hypodivergent: return "hypodivergent";
        case VerticalClass::Normodivergent: return "normodivergent";
        case VerticalClass::Hyperdivergent: return "hyperdivergent";
    }
    return "?";
}

int ordinal(SagittalClass c) noexcept {
    switch (c) {
        case SagittalClass::III: return 0;
        case SagittalClass::I: return 1;
        case SagittalClass::II: return 2;
    }
    return 1;
}

int ordinal(VerticalClass c) noexcept { return static_cast<int>(c); }

SagittalResult classify_sagittal(double anb, const ThresholdScheme& s) {
    if (!std::isfinite(anb)) throw Error(Errc::UnavailableMeasurement, "ANB is not finite");
    SagittalResult r;
    if (anb < s.sagittal_lo) {
        r.label = SagittalClass::III;
    } else if (anb > s.sagittal_hi) {
        r.label = SagittalClass::II;
    } else {
        r.label = SagittalClass::I;
    }
    r.near_lo = std::abs(anb - s.sagittal_lo) <= s.boundary_band;
    r.near_hi = std::abs(anb - s.sagittal_hi) <= s.boundary_band;
    return r;
}

VerticalResult classify_vertical(double g, const ThresholdScheme& s) {
    if (!std::isfinite(g)) throw Error(Errc::UnavailableMeasurement, "GoGn-SN is not finite");
    VerticalResult r;
    if (g < s.vertical_lo) {
        r.label = VerticalClass::Hypodivergent;
    } else if (g > s.vertical_hi) {
        r.label = VerticalClass::Hyperdivergent;
    } else {
        r.label = VerticalClass::Normodivergent;
    }
    r.near_lo = std::abs(g - s.vertical_lo) <= s.boundary_band;
    r.near_hi = std::abs(g - s.vertical_hi) <= s.boundary_band;
    return r;
}

Classification classify(const MeasurementSet& m, const ThresholdScheme& scheme) {
    validate(scheme);
    if (!m.anb) throw Error(Errc::UnavailableMeasurement, "ANB unavailable for sagittal classification");
    if (!m.gogn_sn) throw Error(Errc::UnavailableMeasurement, "GoGn-SN unavailable for vertical classification");
    return {classify_sagittal(*m.anb, scheme), classify_vertical(*m.gogn_sn, scheme)};
}

AgreementReport agreement_report(std::span<const int> pred, std::span<const int> gt) { return build_report(pred, gt); }

AgreementReport agreement_report(std::span<const SagittalClass> pred, std::span<const SagittalClass> gt) {
    const auto p = ordinals(pred);
    const auto g = ordinals(gt);
    return build_report(p, g);
}

AgreementReport agreement_report(std::span<const VerticalClass> pred, std::span<const VerticalClass> gt) {
    const auto p = ordinals(pred);
    const auto g = ordinals(gt);
    return build_report(p, g);
}

}  // namespace ceph::clinical
