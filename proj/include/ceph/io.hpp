#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace ceph::io {

// Throws IoError naming the path.
std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace ceph::io
