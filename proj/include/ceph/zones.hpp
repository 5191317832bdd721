#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ceph/heatmaps.hpp"
#include "ceph/model.hpp"

namespace ceph {

enum class ZoneId : std::uint8_t { CranialBase, Midface, Mandible, Posterior, SoftTissue };

inline constexpr std::size_t kZoneCount = 5;

std::string_view to_string(ZoneId zone) noexcept;
ZoneId parse_zone_id(std::string_view raw);

// Zone that scores a landmark (fixed anatomical assignment, never positional).
ZoneId zone_of(LandmarkName name) noexcept;

struct ZoneBox {
    double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;  // normalised, closed
};

struct ZoneSpec {
    ZoneId zone{};
    ZoneBox box;
    std::vector<LandmarkName> landmarks;
};

void validate(const ZoneSpec& spec);

// Members per the anatomical assignment with full-image boxes.
std::vector<ZoneSpec> default_zone_specs();

bool contains(const ZoneSpec& zone, const Landmark& landmark, const ImageRecord& record);

// Tight box over every visible member position, grown by `margin` per side
// and clipped to [0, 1]. Throws EmptyZone for a zone with no visible member.
std::vector<ZoneSpec> calibrate(const Manifest& manifest, double margin = 0.02);

struct ContainmentViolation {
    std::string image_id;
    LandmarkName landmark{};
    ZoneId zone{};
    double nx = 0.0, ny = 0.0;
};

struct ContainmentReport {
    std::size_t checked = 0;
    std::size_t contained = 0;
    std::vector<ContainmentViolation> violations;

    double rate() const noexcept { return checked ? static_cast<double>(contained) / checked : 1.0; }
};

ContainmentReport check_containment(const Manifest& manifest, const std::vector<ZoneSpec>& zones);

// A pixel is inside when its normalised centre ((x + 0.5) / W, (y + 0.5) / H)
// lies in the box.
ZoneMask rasterize(const ZoneSpec& zone, std::size_t height, std::size_t width);

const ZoneSpec& find_zone(const std::vector<ZoneSpec>& zones, ZoneId id);

std::vector<ZoneSpec> load_zones(const std::filesystem::path& path, const AliasTable& aliases = AliasTable::builtin());
std::string serialize_zones(const std::vector<ZoneSpec>& zones);

}  // namespace ceph
