#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

// Tensor interchange file:
//   8-byte magic "CGTENS01"
//   u32 little-endian header length
//   UTF-8 JSON header {"channel_names":[...],"dtype":"f32","shape":[C,H,W]}
//   row-major little-endian float32 payload
namespace ceph::cgt {

inline constexpr std::string_view kMagic = "CGTENS01";

struct Tensor {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::string> channel_names;
    std::vector<float> data;

    std::size_t plane() const noexcept { return height * width; }
    std::span<const float> channel(std::size_t c) const { return {data.data() + c * plane(), plane()}; }
    std::span<float> channel(std::size_t c) { return {data.data() + c * plane(), plane()}; }
};

std::string encode(const Tensor& tensor);
Tensor decode(std::string_view bytes, const std::string& context = {});

void write(const std::filesystem::path& path, const Tensor& tensor);
Tensor read(const std::filesystem::path& path);

}  // namespace ceph::cgt
