#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ceph::provenance {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

struct Manifest {
    std::string tool_version;
    std::map<std::string, std::string> inputs;   // label -> sha256
    std::map<std::string, std::string> outputs;  // path relative to bundle -> sha256
    std::map<std::string, std::string> config;   // flattened settings, including seeds
};

std::string serialize(const Manifest& m);
Manifest parse(std::string_view text);

struct VerifyResult {
    bool ok = true;
    std::vector<std::string> mismatched;
    std::vector<std::string> missing;
};

// Rehashes every listed output under `bundle`.
VerifyResult verify(const std::filesystem::path& bundle, const Manifest& m);

}  // namespace ceph::provenance
