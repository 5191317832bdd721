#include "ceph/contour_io.hpp"

#include <algorithm>

#include "ceph/error.hpp"
#include "ceph/io.hpp"
#include "json.hpp"

namespace ceph {

using json = nlohmann::json;

namespace {

std::vector<Contour> contours_from_json(const json& arr, const std::string& context) {
    if (!arr.is_array()) throw Error(Errc::ParseError, "contour list must be a JSON array", context);
    std::vector<Contour> out;
    for (const auto& cj : arr) {
        Contour c;
        c.contour_class = parse_contour_class(cj.at("class").get<std::string>());
        c.closed = cj.value("closed", false);
        for (const auto& v : cj.at("vertices")) {
            if (!v.is_array() || v.size() != 2) throw Error(Errc::ParseError, "vertex must be [x, y]", context);
            c.vertices.push_back({v[0].get<double>(), v[1].get<double>()});
        }
        validate(c);
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace

std::vector<Contour> parse_contours(std::string_view text, const std::string& context) {
    try {
        return contours_from_json(json::parse(text), context);
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, std::string("contours: ") + e.what(), context);
    }
}

std::string serialize_contours(const std::vector<Contour>& contours) {
    json arr = json::array();
    for (const auto& c : contours) {
        json verts = json::array();
        for (const auto& p : c.vertices) verts.push_back({p.x, p.y});
        arr.push_back({{"class", std::string(to_string(c.contour_class))}, {"closed", c.closed}, {"vertices", verts}});
    }
    return arr.dump(2) + "\n";
}

ContourSets load_contour_sets(const std::filesystem::path& path) {
    ContourSets sets;
    if (std::filesystem::is_directory(path)) {
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(path)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) sets[f.stem().string()] = parse_contours(io::read_file(f), f.string());
        return sets;
    }
    const auto text = io::read_file(path);
    try {
        const auto j = json::parse(text);
        if (!j.is_object()) throw Error(Errc::ParseError, "contour file must map image id to contours", path.string());
        for (const auto& [id, arr] : j.items()) sets[id] = contours_from_json(arr, path.string() + ":" + id);
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, std::string("contours: ") + e.what(), path.string());
    }
    return sets;
}

ContourSet to_contour_set(const std::vector<Contour>& contours, const ImageRecord& record) {
    ContourSet set;
    for (auto c : contours) {
        const auto name = std::string(to_string(c.contour_class));
        if (std::find(record.reverse_contours.begin(), record.reverse_contours.end(), name) !=
            record.reverse_contours.end()) {
            std::reverse(c.vertices.begin(), c.vertices.end());
        }
        if (!set.emplace(c.contour_class, std::move(c)).second) {
            throw Error(Errc::ValidationError, "duplicate " + name + " contour", record.id);
        }
    }
    return set;
}

}  // namespace ceph
