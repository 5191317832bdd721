#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ceph {

// Canonical 25-landmark set. Enumerator order is the channel order used by
// every prior stack and tensor file.
enum class LandmarkName : std::uint8_t {
    Gnathion,
    ANS,
    Subnasale,
    Sella,
    Menton,
    Pogonion,
    L1_tip,
    LowerLip,
    Pronasale,
    UpperLip,
    U1_tip,
    L1_root,
    SoftPogonion,
    A_point,
    U1_root,
    Articulare,
    Gonion,
    B_point,
    Nasion,
    Orbitale,
    Condylion,
    Pm,
    Porion,
    Basion,
    PNS,
};

inline constexpr std::size_t kLandmarkCount = 25;

std::string_view to_string(LandmarkName name) noexcept;
constexpr std::size_t index_of(LandmarkName name) noexcept { return static_cast<std::size_t>(name); }
LandmarkName landmark_at(std::size_t index);
const std::array<LandmarkName, kLandmarkCount>& all_landmarks() noexcept;

// Alias -> canonical name. Lookup is exact first, then on a normalized key
// (lower case, with spaces, '-', '_' and '.' removed).
class AliasTable {
public:
    static const AliasTable& builtin();

    // Adds `alias -> canonical`; rejects an alias that already resolves to a
    // different canonical name.
    void add(std::string_view alias, LandmarkName canonical);
    // JSON object {"alias": "CanonicalOrAlias", ...}.
    void extend_from_file(const std::filesystem::path& path);

    LandmarkName resolve(std::string_view raw) const;
    std::optional<LandmarkName> try_resolve(std::string_view raw) const;
    std::size_t size() const noexcept { return exact_.size(); }
    const std::map<std::string, LandmarkName, std::less<>>& entries() const noexcept { return exact_; }

private:
    std::map<std::string, LandmarkName, std::less<>> exact_;
    std::map<std::string, LandmarkName, std::less<>> normalized_;
};

LandmarkName resolve_name(std::string_view raw);

struct Landmark {
    LandmarkName name{};
    double x = 0.0;
    double y = 0.0;
    bool visible = true;

    bool operator==(const Landmark&) const = default;
};

enum class Split : std::uint8_t { Train, Val, Test };
std::string_view to_string(Split split) noexcept;
Split parse_split(std::string_view raw);

struct ImageRecord {
    std::string id;
    int width = 0;
    int height = 0;
    double pixel_spacing = 0.0;  // mm per pixel, isotropic
    Split split = Split::Train;
    std::string source;
    std::vector<Landmark> landmarks;
    // Contour classes whose file order runs opposite to the rule traversal.
    std::vector<std::string> reverse_contours;

    const Landmark* find(LandmarkName name) const noexcept;
    const Landmark* find_visible(LandmarkName name) const noexcept;

    bool operator==(const ImageRecord&) const = default;
};

struct Manifest {
    std::int64_t seed = 0;
    std::vector<ImageRecord> records;

    const ImageRecord* find(std::string_view id) const noexcept;
    std::vector<const ImageRecord*> split(Split which) const;

    bool operator==(const Manifest&) const = default;
};

// Throws ValidationError naming the record id.
void validate(const ImageRecord& record);
void validate(const Manifest& manifest);

Manifest load_manifest(const std::filesystem::path& path, const AliasTable& aliases = AliasTable::builtin());
Manifest parse_manifest(std::string_view text, const AliasTable& aliases = AliasTable::builtin());
std::string serialize_manifest(const Manifest& manifest);

// Per-image landmark sets as used for predictions. Accepts either a full
// manifest or `{"records": [{"id", "landmarks": [...]}]}`; width, height and
// spacing are optional in that form.
using LandmarkSets = std::map<std::string, std::vector<Landmark>, std::less<>>;
LandmarkSets load_landmark_sets(const std::filesystem::path& path, const AliasTable& aliases = AliasTable::builtin());
std::string serialize_landmark_sets(const LandmarkSets& sets);

// ISBI-style plain text: one "x,y" per line in the order of `names`.
// Lines beyond names.size() are ignored.
ImageRecord import_isbi(const std::filesystem::path& annotation, std::span<const LandmarkName> names,
                        int width, int height, double pixel_spacing, std::string source);
std::vector<LandmarkName> load_name_list(const std::filesystem::path& path,
                                         const AliasTable& aliases = AliasTable::builtin());

double to_mm(double distance_px, double spacing_mm_per_px);

}  // namespace ceph
