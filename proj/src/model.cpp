#include "ceph/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "ceph/error.hpp"
#include "ceph/io.hpp"
#include "json.hpp"

namespace ceph {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kLandmarkCount> kCanonicalNames = {
    "Gnathion", "ANS",      "Subnasale",  "Sella",     "Menton",    "Pogonion", "L1_tip",
    "LowerLip", "Pronasale", "UpperLip",  "U1_tip",    "L1_root",   "SoftPogonion",
    "A_point",  "U1_root",  "Articulare", "Gonion",    "B_point",   "Nasion",   "Orbitale",
    "Condylion", "Pm",      "Porion",     "Basion",    "PNS",
};

struct AliasSeed {
    std::string_view alias;
    LandmarkName name;
};

// Abbreviations seen across ISBI 2015, CEPHA29 and common tracing software.
constexpr AliasSeed kBuiltinAliases[] = {
    {"U1", LandmarkName::U1_tip},        {"UIT", LandmarkName::U1_tip},
    {"Upper incisal incision", LandmarkName::U1_tip},
    {"Upper incisor tip", LandmarkName::U1_tip},
    {"L1", LandmarkName::L1_tip},        {"LIT", LandmarkName::L1_tip},
    {"Lower incisal incision", LandmarkName::L1_tip},
    {"Lower incisor tip", LandmarkName::L1_tip},
    {"U1 root", LandmarkName::U1_root},  {"UIA", LandmarkName::U1_root},
    {"Upper incisor root", LandmarkName::U1_root},
    {"L1 root", LandmarkName::L1_root},  {"LIA", LandmarkName::L1_root},
    {"Lower incisor root", LandmarkName::L1_root},
    {"Cd", LandmarkName::Condylion},     {"Co", LandmarkName::Condylion},
    {"Condylion", LandmarkName::Condylion},
    {"Go", LandmarkName::Gonion},        {"Me", LandmarkName::Menton},
    {"Gn", LandmarkName::Gnathion},      {"Pog", LandmarkName::Pogonion},
    {"A", LandmarkName::A_point},        {"Point A", LandmarkName::A_point},
    {"Subspinale", LandmarkName::A_point},
    {"B", LandmarkName::B_point},        {"Point B", LandmarkName::B_point},
    {"Supramentale", LandmarkName::B_point},
    {"S", LandmarkName::Sella},          {"N", LandmarkName::Nasion},
    {"Or", LandmarkName::Orbitale},      {"Po", LandmarkName::Porion},
    {"Ar", LandmarkName::Articulare},    {"Ba", LandmarkName::Basion},
    {"Anterior nasal spine", LandmarkName::ANS},
    {"Posterior nasal spine", LandmarkName::PNS},
    {"Sn", LandmarkName::Subnasale},     {"Prn", LandmarkName::Pronasale},
    {"Pn", LandmarkName::Pronasale},     {"Nose tip", LandmarkName::Pronasale},
    {"UL", LandmarkName::UpperLip},      {"Ls", LandmarkName::UpperLip},
    {"Labrale superius", LandmarkName::UpperLip},
    {"Upper lip", LandmarkName::UpperLip},
    {"LL", LandmarkName::LowerLip},      {"Li", LandmarkName::LowerLip},
    {"Labrale inferius", LandmarkName::LowerLip},
    {"Lower lip", LandmarkName::LowerLip},
    {"Pog'", LandmarkName::SoftPogonion},
    {"Soft Pog", LandmarkName::SoftPogonion},
    {"Soft tissue pogonion", LandmarkName::SoftPogonion},
    {"Protuberance menti", LandmarkName::Pm},
};

std::string normalize_key(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        if (c == ' ' || c == '-' || c == '_' || c == '.') continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

std::string trim(std::string_view s) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && is_space(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && is_space(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return std::string(s);
}

json parse_json(std::string_view text, const std::string& context) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::ParseError, std::string("malformed JSON: ") + e.what(), context);
    }
}

template <typename T>
T require(const json& obj, const char* key, const std::string& context) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw Error(Errc::ParseError, std::string("missing field '") + key + "'", context);
    }
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw Error(Errc::ParseError, std::string("field '") + key + "' has the wrong type", context);
    }
}

Landmark parse_landmark(const json& j, const AliasTable& aliases, const std::string& record_id) {
    if (!j.is_object()) throw Error(Errc::ParseError, "landmark entry is not an object", record_id);
    Landmark lm;
    auto raw = require<std::string>(j, "name", record_id);
    auto resolved = aliases.try_resolve(raw);
    if (!resolved) {
        throw Error(Errc::UnknownLandmarkName, "unknown landmark name '" + raw + "' in record " + record_id,
                    record_id);
    }
    lm.name = *resolved;
    lm.visible = j.value("visible", true);
    auto coord = [&](const char* key) -> double {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) {
            if (lm.visible) throw Error(Errc::ParseError, std::string("visible landmark lacks '") + key + "'", record_id);
            return 0.0;
        }
        if (!it->is_number()) throw Error(Errc::ParseError, std::string("'") + key + "' is not a number", record_id);
        return it->get<double>();
    };
    lm.x = coord("x");
    lm.y = coord("y");
    return lm;
}

std::vector<Landmark> parse_landmarks(const json& rec, const AliasTable& aliases, const std::string& id) {
    std::vector<Landmark> out;
    auto it = rec.find("landmarks");
    if (it == rec.end()) return out;
    if (!it->is_array()) throw Error(Errc::ParseError, "'landmarks' is not an array", id);
    out.reserve(it->size());
    for (const auto& lj : *it) out.push_back(parse_landmark(lj, aliases, id));
    return out;
}

json landmarks_to_json(const std::vector<Landmark>& landmarks) {
    json arr = json::array();
    for (const auto& lm : landmarks) {
        arr.push_back({{"name", std::string(to_string(lm.name))}, {"x", lm.x}, {"y", lm.y}, {"visible", lm.visible}});
    }
    return arr;
}

void check_unique_names(const std::vector<Landmark>& landmarks, const std::string& id) {
    std::array<bool, kLandmarkCount> seen{};
    for (const auto& lm : landmarks) {
        auto& flag = seen[index_of(lm.name)];
        if (flag) {
            throw Error(Errc::ValidationError,
                        "record " + id + ": duplicate landmark " + std::string(to_string(lm.name)), id);
        }
        flag = true;
    }
}

}  // namespace

std::string_view to_string(LandmarkName name) noexcept { return kCanonicalNames[index_of(name)]; }

LandmarkName landmark_at(std::size_t index) {
    if (index >= kLandmarkCount) throw std::out_of_range("landmark index out of range");
    return static_cast<LandmarkName>(index);
}

const std::array<LandmarkName, kLandmarkCount>& all_landmarks() noexcept {
    static const auto names = [] {
        std::array<LandmarkName, kLandmarkCount> out{};
        for (std::size_t i = 0; i < kLandmarkCount; ++i) out[i] = static_cast<LandmarkName>(i);
        return out;
    }();
    return names;
}

const AliasTable& AliasTable::builtin() {
    static const AliasTable table = [] {
        AliasTable t;
        for (auto name : all_landmarks()) t.add(to_string(name), name);
        for (const auto& seed : kBuiltinAliases) t.add(seed.alias, seed.name);
        return t;
    }();
    return table;
}

void AliasTable::add(std::string_view alias, LandmarkName canonical) {
    auto key = trim(alias);
    if (key.empty()) throw Error(Errc::ValidationError, "empty alias");
    auto norm = normalize_key(key);
    if (auto it = exact_.find(key); it != exact_.end() && it->second != canonical) {
        throw Error(Errc::ValidationError, "alias '" + key + "' already maps to " + std::string(to_string(it->second)), key);
    }
    if (auto it = normalized_.find(norm); it != normalized_.end() && it->second != canonical) {
        throw Error(Errc::ValidationError,
                    "alias '" + key + "' collides with an alias of " + std::string(to_string(it->second)), key);
    }
    exact_.insert_or_assign(key, canonical);
    normalized_.insert_or_assign(norm, canonical);
}

void AliasTable::extend_from_file(const std::filesystem::path& path) {
    auto doc = parse_json(io::read_file(path), path.string());
    if (!doc.is_object()) throw Error(Errc::ParseError, "alias file must be a JSON object", path.string());
    for (const auto& [alias, target] : doc.items()) {
        if (!target.is_string()) throw Error(Errc::ParseError, "alias target must be a string", path.string());
        add(alias, resolve(target.get<std::string>()));
    }
}

std::optional<LandmarkName> AliasTable::try_resolve(std::string_view raw) const {
    auto key = trim(raw);
    if (key.empty()) return std::nullopt;
    if (auto it = exact_.find(key); it != exact_.end()) return it->second;
    if (auto it = normalized_.find(normalize_key(key)); it != normalized_.end()) return it->second;
    return std::nullopt;
}

LandmarkName AliasTable::resolve(std::string_view raw) const {
    if (auto name = try_resolve(raw)) return *name;
    throw Error(Errc::UnknownLandmarkName, "unknown landmark name '" + std::string(raw) + "'", std::string(raw));
}

LandmarkName resolve_name(std::string_view raw) { return AliasTable::builtin().resolve(raw); }

std::string_view to_string(Split split) noexcept {
    switch (split) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "train";
}

Split parse_split(std::string_view raw) {
    if (raw == "train") return Split::Train;
    if (raw == "val") return Split::Val;
    if (raw == "test") return Split::Test;
    throw Error(Errc::ValidationError, "unknown split '" + std::string(raw) + "'");
}

const Landmark* ImageRecord::find(LandmarkName name) const noexcept {
    auto it = std::find_if(landmarks.begin(), landmarks.end(), [&](const Landmark& lm) { return lm.name == name; });
    return it == landmarks.end() ? nullptr : &*it;
}

const Landmark* ImageRecord::find_visible(LandmarkName name) const noexcept {
    const auto* lm = find(name);
    return lm && lm->visible ? lm : nullptr;
}

const ImageRecord* Manifest::find(std::string_view id) const noexcept {
    auto it = std::find_if(records.begin(), records.end(), [&](const ImageRecord& r) { return r.id == id; });
    return it == records.end() ? nullptr : &*it;
}

std::vector<const ImageRecord*> Manifest::split(Split which) const {
    std::vector<const ImageRecord*> out;
    for (const auto& r : records) {
        if (r.split == which) out.push_back(&r);
    }
    return out;
}

void validate(const ImageRecord& record) {
    const auto& id = record.id;
    if (id.empty()) throw Error(Errc::ValidationError, "record with empty id");
    if (!(record.pixel_spacing > 0.0) || !std::isfinite(record.pixel_spacing)) {
        throw Error(Errc::ValidationError, "record " + id + ": pixel_spacing must be > 0", id);
    }
    if (record.width <= 0 || record.height <= 0) {
        throw Error(Errc::ValidationError, "record " + id + ": width and height must be positive", id);
    }
    for (const auto& lm : record.landmarks) {
        if (!lm.visible) continue;
        if (!std::isfinite(lm.x) || !std::isfinite(lm.y) || lm.x < 0.0 || lm.y < 0.0) {
            throw Error(Errc::ValidationError,
                        "record " + id + ": visible landmark " + std::string(to_string(lm.name)) +
                            " has invalid coordinates",
                        id);
        }
    }
    check_unique_names(record.landmarks, id);
}

void validate(const Manifest& manifest) {
    std::set<std::string_view> ids;
    for (const auto& r : manifest.records) {
        validate(r);
        if (!ids.insert(r.id).second) throw Error(Errc::ValidationError, "duplicate record id " + r.id, r.id);
    }
}

Manifest parse_manifest(std::string_view text, const AliasTable& aliases) {
    auto doc = parse_json(text, "manifest");
    if (!doc.is_object()) throw Error(Errc::ParseError, "manifest must be a JSON object");
    Manifest m;
    m.seed = require<std::int64_t>(doc, "seed", "manifest");
    auto recs = doc.find("records");
    if (recs == doc.end() || !recs->is_array()) throw Error(Errc::ParseError, "manifest lacks a 'records' array");
    m.records.reserve(recs->size());
    for (const auto& rj : *recs) {
        if (!rj.is_object()) throw Error(Errc::ParseError, "record is not an object");
        ImageRecord r;
        r.id = require<std::string>(rj, "id", "record");
        r.width = require<int>(rj, "width", r.id);
        r.height = require<int>(rj, "height", r.id);
        r.pixel_spacing = require<double>(rj, "pixel_spacing", r.id);
        try {
            r.split = parse_split(require<std::string>(rj, "split", r.id));
        } catch (const Error& e) {
            throw Error(Errc::ValidationError, "record " + r.id + ": " + e.what(), r.id);
        }
        r.source = rj.value("source", std::string{});
        r.landmarks = parse_landmarks(rj, aliases, r.id);
        if (auto it = rj.find("reverse_contours"); it != rj.end()) {
            r.reverse_contours = it->get<std::vector<std::string>>();
        }
        m.records.push_back(std::move(r));
    }
    validate(m);
    return m;
}

Manifest load_manifest(const std::filesystem::path& path, const AliasTable& aliases) {
    auto text = io::read_file(path);
    try {
        return parse_manifest(text, aliases);
    } catch (const Error& e) {
        if (!e.context().empty()) throw;
        throw Error(e.code(), e.what(), path.string());
    }
}

std::string serialize_manifest(const Manifest& manifest) {
    json doc;
    doc["seed"] = manifest.seed;
    json recs = json::array();
    for (const auto& r : manifest.records) {
        json rj = {{"id", r.id},
                   {"width", r.width},
                   {"height", r.height},
                   {"pixel_spacing", r.pixel_spacing},
                   {"split", std::string(to_string(r.split))},
                   {"source", r.source},
                   {"landmarks", landmarks_to_json(r.landmarks)}};
        if (!r.reverse_contours.empty()) rj["reverse_contours"] = r.reverse_contours;
        recs.push_back(std::move(rj));
    }
    doc["records"] = std::move(recs);
    return doc.dump(2) + "\n";
}

LandmarkSets load_landmark_sets(const std::filesystem::path& path, const AliasTable& aliases) {
    auto doc = parse_json(io::read_file(path), path.string());
    auto recs = doc.is_object() ? doc.find("records") : doc.end();
    if (recs == doc.end() || !recs->is_array()) {
        throw Error(Errc::ParseError, "landmark file lacks a 'records' array", path.string());
    }
    LandmarkSets out;
    for (const auto& rj : *recs) {
        auto id = require<std::string>(rj, "id", path.string());
        auto lms = parse_landmarks(rj, aliases, id);
        check_unique_names(lms, id);
        if (!out.emplace(id, std::move(lms)).second) {
            throw Error(Errc::ValidationError, "duplicate record id " + id, id);
        }
    }
    return out;
}

std::string serialize_landmark_sets(const LandmarkSets& sets) {
    json recs = json::array();
    for (const auto& [id, lms] : sets) recs.push_back({{"id", id}, {"landmarks", landmarks_to_json(lms)}});
    json doc;
    doc["records"] = std::move(recs);
    return doc.dump(2) + "\n";
}

std::vector<LandmarkName> load_name_list(const std::filesystem::path& path, const AliasTable& aliases) {
    std::istringstream in(io::read_file(path));
    std::vector<LandmarkName> names;
    std::string line;
    while (std::getline(in, line)) {
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        names.push_back(aliases.resolve(t));
    }
    return names;
}

ImageRecord import_isbi(const std::filesystem::path& annotation, std::span<const LandmarkName> names, int width,
                        int height, double pixel_spacing, std::string source) {
    std::istringstream in(io::read_file(annotation));
    ImageRecord r;
    r.id = annotation.stem().string();
    r.width = width;
    r.height = height;
    r.pixel_spacing = pixel_spacing;
    r.source = std::move(source);
    std::string line;
    std::size_t lineno = 0;
    while (r.landmarks.size() < names.size() && std::getline(in, line)) {
        ++lineno;
        auto t = trim(line);
        if (t.empty()) continue;
        auto comma = t.find(',');
        if (comma == std::string::npos) {
            throw Error(Errc::ParseError, annotation.string() + ":" + std::to_string(lineno) + ": expected 'x,y'",
                        annotation.string());
        }
        auto parse = [&](std::string s) {
            s = trim(s);
            double v = 0.0;
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc{} || p != s.data() + s.size()) {
                throw Error(Errc::ParseError, annotation.string() + ":" + std::to_string(lineno) + ": bad number",
                            annotation.string());
            }
            return v;
        };
        Landmark lm;
        lm.name = names[r.landmarks.size()];
        lm.x = parse(t.substr(0, comma));
        lm.y = parse(t.substr(comma + 1));
        r.landmarks.push_back(lm);
    }
    if (r.landmarks.size() < names.size()) {
        throw Error(Errc::ParseError,
                    annotation.string() + ": expected " + std::to_string(names.size()) + " coordinate lines",
                    annotation.string());
    }
    validate(r);
    return r;
}

double to_mm(double distance_px, double spacing_mm_per_px) {
    if (!(spacing_mm_per_px > 0.0)) throw Error(Errc::ValidationError, "pixel spacing must be > 0");
    return distance_px * spacing_mm_per_px;
}

}  // namespace ceph
