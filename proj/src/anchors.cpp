#include "ceph/anchors.hpp"

#include <string>

namespace ceph {

std::string_view to_string(AnchorRuleKind kind) noexcept {
    switch (kind) {
        case AnchorRuleKind::Endpoint: return "endpoint";
        case AnchorRuleKind::MaxChordDeviation: return "max_chord_deviation";
        case AnchorRuleKind::MaxCurvature: return "max_curvature";
    }
    return "endpoint";
}

void validate(const AnchorRule& rule) {
    if (rule.kind == AnchorRuleKind::Endpoint) return;
    if (!(rule.f_min >= 0.0 && rule.f_min < rule.f_max && rule.f_max <= 1.0)) {
        throw Error(Errc::ValidationError,
                    "anchor rule for " + std::string(to_string(rule.target)) + " has an invalid arc window");
    }
}

const std::vector<AnchorRule>& default_rule_catalog() {
    static const std::vector<AnchorRule> catalog = {
        {LandmarkName::Sella, ContourClass::CranialBase, AnchorRuleKind::MaxChordDeviation, 0.20, 0.60},
        {LandmarkName::Nasion, ContourClass::CranialBase, AnchorRuleKind::Endpoint, 0.0, 1.0},
        {LandmarkName::ANS, ContourClass::PalatalPlane, AnchorRuleKind::Endpoint, 0.0, 1.0},
        {LandmarkName::Menton, ContourClass::Symphysis, AnchorRuleKind::Endpoint, 0.0, 1.0},
        {LandmarkName::Pogonion, ContourClass::Symphysis, AnchorRuleKind::MaxChordDeviation, 0.10, 0.65},
        {LandmarkName::Gonion, ContourClass::MandibularBorder, AnchorRuleKind::MaxCurvature, 0.15, 0.50},
        {LandmarkName::Pronasale, ContourClass::SoftTissue, AnchorRuleKind::Endpoint, 0.0, 1.0},
    };
    return catalog;
}

AnchorResult extract_anchor(const Contour& contour, const AnchorRule& rule, const ToleranceTable& tol,
                            double spacing) {
    const auto target = std::string(to_string(rule.target));
    if (contour.contour_class != rule.contour_class) {
        throw Error(Errc::ValidationError,
                    "rule for " + target + " expects a " + std::string(to_string(rule.contour_class)) + " contour",
                    target);
    }
    validate(rule);
    validate(contour);

    const auto kept = simplify_indices(contour, epsilon_px(tol, contour.contour_class, spacing));
    Contour simple{{}, contour.contour_class, contour.closed};
    simple.vertices.reserve(kept.size());
    for (auto i : kept) simple.vertices.push_back(contour.vertices[i]);

    auto make = [&](std::size_t i) {
        AnchorResult r;
        r.simplified_index = i;
        r.source_index = kept[i];
        r.landmark = {rule.target, simple.vertices[i].x, simple.vertices[i].y, true};
        return r;
    };

    const std::size_t n = simple.size();
    if (rule.kind == AnchorRuleKind::Endpoint) return make(n - 1);

    const auto s = cumulative_arc_length(simple);
    const double total = arc_length(simple);

    // Interior vertices only: endpoints have no chord deviation and no
    // curvature neighbourhood on an open chain.
    std::optional<std::size_t> best;
    double best_value = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double f = s[i] / total;
        if (f < rule.f_min || f > rule.f_max) continue;
        const double value = rule.kind == AnchorRuleKind::MaxChordDeviation ? chord_deviation(simple, i)
                                                                            : discrete_curvature(simple, i);
        if (!best || value > best_value) {
            best = i;
            best_value = value;
        }
    }
    if (!best) {
        throw Error(Errc::EmptyWindow, "no simplified vertex of the " + std::string(to_string(contour.contour_class)) +
                                           " contour falls in the arc window for " + target,
                    target);
    }
    return make(*best);
}

AnchorExtraction extract_all(const ContourSet& contours, const std::vector<AnchorRule>& catalog,
                             const ToleranceTable& tol, double spacing) {
    AnchorExtraction out;
    out.anchors.reserve(catalog.size());
    for (const auto& rule : catalog) {
        AnchorResult missing;
        missing.landmark = {rule.target, 0.0, 0.0, false};
        auto it = contours.find(rule.contour_class);
        if (it == contours.end()) {
            out.anchors.push_back(missing);
            continue;
        }
        try {
            out.anchors.push_back(extract_anchor(it->second, rule, tol, spacing));
        } catch (const Error& e) {
            out.failures.push_back({rule.target, e.code(), e.what()});
            out.anchors.push_back(missing);
        }
    }
    return out;
}

}  // namespace ceph
