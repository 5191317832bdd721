#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ceph/anchors.hpp"
#include "ceph/geometry.hpp"
#include "ceph/model.hpp"

namespace ceph {

// A JSON array of {"class", "closed", "vertices": [[x, y], ...]}.
std::vector<Contour> parse_contours(std::string_view text, const std::string& context = {});
std::string serialize_contours(const std::vector<Contour>& contours);

using ContourSets = std::map<std::string, std::vector<Contour>, std::less<>>;

// `path` is either a directory of <image id>.json files or a single JSON
// object keyed by image id.
ContourSets load_contour_sets(const std::filesystem::path& path);

// Keys the contours by class, reversing those flagged in the record.
// Two contours of one class for the same image are rejected.
ContourSet to_contour_set(const std::vector<Contour>& contours, const ImageRecord& record);

}  // namespace ceph
