#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ceph/error.hpp"
#include "ceph/geometry.hpp"
#include "ceph/model.hpp"

namespace ceph {

enum class AnchorRuleKind : std::uint8_t { Endpoint, MaxChordDeviation, MaxCurvature };

std::string_view to_string(AnchorRuleKind kind) noexcept;

struct AnchorRule {
    LandmarkName target{};
    ContourClass contour_class{};
    AnchorRuleKind kind = AnchorRuleKind::Endpoint;
    // Arc-length fraction window; ignored by the endpoint rule.
    double f_min = 0.0;
    double f_max = 1.0;
};

void validate(const AnchorRule& rule);

// Seven anchor rules. Pronasale is the endpoint of a supplied nasal
// soft-tissue sub-contour.
const std::vector<AnchorRule>& default_rule_catalog();

struct AnchorResult {
    Landmark landmark;
    std::size_t simplified_index = 0;  // index into the simplified contour
    std::size_t source_index = 0;      // index into the input contour
};

// Simplifies with the class tolerance, then applies the rule on the
// simplified chain. Ties go to the smallest index.
AnchorResult extract_anchor(const Contour& contour, const AnchorRule& rule, const ToleranceTable& tol,
                            double spacing_mm_per_px);

using ContourSet = std::map<ContourClass, Contour>;

struct AnchorFailure {
    LandmarkName target{};
    Errc code{};
    std::string message;
};

struct AnchorExtraction {
    // One entry per catalog rule, in catalog order. Failed or uncovered
    // rules yield a non-visible landmark.
    std::vector<AnchorResult> anchors;
    std::vector<AnchorFailure> failures;
};

AnchorExtraction extract_all(const ContourSet& contours, const std::vector<AnchorRule>& catalog,
                             const ToleranceTable& tol, double spacing_mm_per_px);

}  // namespace ceph
