#include "ceph/zones.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ceph/error.hpp"
#include "ceph/io.hpp"
#include "json.hpp"

namespace ceph {

namespace {

constexpr std::array<std::string_view, kZoneCount> kZoneNames = {
    "cranial_base", "midface", "mandible", "posterior", "soft_tissue",
};

bool in_box(const ZoneBox& b, double nx, double ny) noexcept {
    return nx >= b.x0 && nx <= b.x1 && ny >= b.y0 && ny <= b.y1;
}

}  // namespace

std::string_view to_string(ZoneId zone) noexcept { return kZoneNames[static_cast<std::size_t>(zone)]; }

ZoneId parse_zone_id(std::string_view raw) {
    for (std::size_t i = 0; i < kZoneNames.size(); ++i) {
        if (kZoneNames[i] == raw) return static_cast<ZoneId>(i);
    }
    throw Error(Errc::ValidationError, "unknown zone '" + std::string(raw) + "'");
}

ZoneId zone_of(LandmarkName name) noexcept {
    using L = LandmarkName;
    switch (name) {
        case L::Sella:
        case L::Nasion:
        case L::Basion:
            return ZoneId::CranialBase;
        case L::ANS:
        case L::U1_tip:
        case L::A_point:
        case L::U1_root:
        case L::Orbitale:
        case L::PNS:
            return ZoneId::Midface;
        case L::Gnathion:
        case L::Menton:
        case L::Pogonion:
        case L::L1_tip:
        case L::L1_root:
        case L::Gonion:
        case L::B_point:
        case L::Pm:
            return ZoneId::Mandible;
        case L::Articulare:
        case L::Condylion:
        case L::Porion:
            return ZoneId::Posterior;
        case L::Subnasale:
        case L::LowerLip:
        case L::Pronasale:
        case L::UpperLip:
        case L::SoftPogonion:
            return ZoneId::SoftTissue;
    }
    return ZoneId::SoftTissue;
}

void validate(const ZoneSpec& spec) {
    const auto& b = spec.box;
    const auto name = std::string(to_string(spec.zone));
    if (!(b.x0 >= 0.0 && b.x0 < b.x1 && b.x1 <= 1.0 && b.y0 >= 0.0 && b.y0 < b.y1 && b.y1 <= 1.0)) {
        throw Error(Errc::ValidationError, "zone " + name + " has an invalid box", name);
    }
    for (auto lm : spec.landmarks) {
        if (zone_of(lm) != spec.zone) {
            throw Error(Errc::ValidationError,
                        std::string(to_string(lm)) + " does not belong to zone " + name, name);
        }
    }
}

std::vector<ZoneSpec> default_zone_specs() {
    std::vector<ZoneSpec> specs(kZoneCount);
    for (std::size_t z = 0; z < kZoneCount; ++z) specs[z].zone = static_cast<ZoneId>(z);
    for (auto name : all_landmarks()) specs[static_cast<std::size_t>(zone_of(name))].landmarks.push_back(name);
    return specs;
}

bool contains(const ZoneSpec& zone, const Landmark& landmark, const ImageRecord& record) {
    return in_box(zone.box, landmark.x / record.width, landmark.y / record.height);
}

std::vector<ZoneSpec> calibrate(const Manifest& manifest, double margin) {
    if (!(margin >= 0.0)) throw Error(Errc::ValidationError, "zone margin must be >= 0");
    auto specs = default_zone_specs();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::array<ZoneBox, kZoneCount> tight;
    tight.fill({inf, inf, -inf, -inf});
    for (const auto& rec : manifest.records) {
        for (const auto& lm : rec.landmarks) {
            if (!lm.visible) continue;
            auto& b = tight[static_cast<std::size_t>(zone_of(lm.name))];
            const double nx = lm.x / rec.width, ny = lm.y / rec.height;
            b.x0 = std::min(b.x0, nx);
            b.y0 = std::min(b.y0, ny);
            b.x1 = std::max(b.x1, nx);
            b.y1 = std::max(b.y1, ny);
        }
    }
    for (std::size_t z = 0; z < kZoneCount; ++z) {
        const auto& t = tight[z];
        if (t.x0 == inf) {
            const auto name = std::string(to_string(static_cast<ZoneId>(z)));
            throw Error(Errc::EmptyZone, "zone " + name + " has no visible member landmark", name);
        }
        auto& b = specs[z].box;
        b.x0 = std::max(0.0, t.x0 - margin);
        b.y0 = std::max(0.0, t.y0 - margin);
        b.x1 = std::min(1.0, t.x1 + margin);
        b.y1 = std::min(1.0, t.y1 + margin);
        // A zero margin on a single point would leave an empty box.
        if (!(b.x0 < b.x1)) b.x1 = std::nextafter(b.x0, 2.0);
        if (!(b.y0 < b.y1)) b.y1 = std::nextafter(b.y0, 2.0);
    }
    return specs;
}

const ZoneSpec& find_zone(const std::vector<ZoneSpec>& zones, ZoneId id) {
    auto it = std::find_if(zones.begin(), zones.end(), [&](const ZoneSpec& z) { return z.zone == id; });
    if (it == zones.end()) {
        throw Error(Errc::ValidationError, "zone " + std::string(to_string(id)) + " is not defined",
                    std::string(to_string(id)));
    }
    return *it;
}

ContainmentReport check_containment(const Manifest& manifest, const std::vector<ZoneSpec>& zones) {
    ContainmentReport report;
    for (const auto& rec : manifest.records) {
        for (const auto& lm : rec.landmarks) {
            if (!lm.visible) continue;
            const auto id = zone_of(lm.name);
            const auto& spec = find_zone(zones, id);
            ++report.checked;
            if (contains(spec, lm, rec)) {
                ++report.contained;
            } else {
                report.violations.push_back({rec.id, lm.name, id, lm.x / rec.width, lm.y / rec.height});
            }
        }
    }
    return report;
}

ZoneMask rasterize(const ZoneSpec& zone, std::size_t height, std::size_t width) {
    ZoneMask m{height, width, std::vector<std::uint8_t>(height * width, 0), std::string(to_string(zone.zone))};
    for (std::size_t y = 0; y < height; ++y) {
        const double ny = (static_cast<double>(y) + 0.5) / static_cast<double>(height);
        if (ny < zone.box.y0 || ny > zone.box.y1) continue;
        for (std::size_t x = 0; x < width; ++x) {
            const double nx = (static_cast<double>(x) + 0.5) / static_cast<double>(width);
            if (nx >= zone.box.x0 && nx <= zone.box.x1) m.mask[y * width + x] = 1;
        }
    }
    return m;
}

std::vector<ZoneSpec> load_zones(const std::filesystem::path& path, const AliasTable& aliases) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(io::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ParseError, std::string("malformed zones file: ") + e.what(), path.string());
    }
    if (!doc.is_array()) throw Error(Errc::ParseError, "zones file must be a JSON array", path.string());
    std::vector<ZoneSpec> zones;
    for (const auto& zj : doc) {
        ZoneSpec z;
        try {
            z.zone = parse_zone_id(zj.at("zone").get<std::string>());
            const auto box = zj.at("box").get<std::vector<double>>();
            if (box.size() != 4) throw Error(Errc::ParseError, "zone box needs 4 numbers", path.string());
            z.box = {box[0], box[1], box[2], box[3]};
            for (const auto& n : zj.value("landmarks", std::vector<std::string>{})) z.landmarks.push_back(aliases.resolve(n));
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::ParseError, std::string("bad zone entry: ") + e.what(), path.string());
        }
        validate(z);
        zones.push_back(std::move(z));
    }
    return zones;
}

std::string serialize_zones(const std::vector<ZoneSpec>& zones) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& z : zones) {
        std::vector<std::string> names;
        for (auto lm : z.landmarks) names.emplace_back(to_string(lm));
        arr.push_back({{"zone", std::string(to_string(z.zone))},
                       {"box", {z.box.x0, z.box.y0, z.box.x1, z.box.y1}},
                       {"landmarks", names}});
    }
    return arr.dump(2) + "\n";
}

}  // namespace ceph
