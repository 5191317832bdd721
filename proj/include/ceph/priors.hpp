#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "ceph/cgt.hpp"
#include "ceph/geometry.hpp"
#include "ceph/model.hpp"

namespace ceph {

enum class SigmaTier : std::uint8_t { High, Medium, Low };

std::string_view to_string(SigmaTier tier) noexcept;
SigmaTier parse_sigma_tier(std::string_view raw);

struct SigmaRange {
    double lo;
    double hi;
};

// Prior-breadth ranges in pixels: high 5-7, medium 8-13, low 18-22.
SigmaRange sigma_range(SigmaTier tier) noexcept;

class SigmaTable {
public:
    struct Entry {
        SigmaTier tier = SigmaTier::Medium;
        double sigma = 10.5;
    };

    // High: Sella, Nasion, Menton, ANS, Pronasale. Low: Porion, PNS, B_point,
    // Basion, Condylion. Everything else medium. ANS 7, Gonion 12, B_point 20
    // and PNS 22 px; remaining landmarks take their tier midpoint.
    SigmaTable();

    const Entry& at(LandmarkName name) const noexcept { return entries_[index_of(name)]; }
    double sigma(LandmarkName name) const noexcept { return at(name).sigma; }
    // Throws ValidationError when sigma lies outside the tier range.
    void set(LandmarkName name, SigmaTier tier, double sigma);
    // JSON object {"Sella": {"tier": "high", "sigma": 6}, ...}; names go
    // through the alias table.
    void override_from_file(const std::filesystem::path& path, const AliasTable& aliases = AliasTable::builtin());

private:
    std::array<Entry, kLandmarkCount> entries_{};
};

// map[y * width + x] = exp(-((x - cx)^2 + (y - cy)^2) / (2 sigma^2)) at
// integer pixel centres; the centre may lie outside the grid.
std::vector<double> gaussian_map(Point2 center, double sigma, std::size_t height, std::size_t width);
void gaussian_map_into(Point2 center, double sigma, std::size_t height, std::size_t width, std::span<double> out);

inline constexpr std::size_t kDefaultPriorResolution = 256;

struct PriorStack {
    std::size_t height = kDefaultPriorResolution;
    std::size_t width = kDefaultPriorResolution;
    std::vector<double> data;  // kLandmarkCount * height * width, canonical channel order

    PriorStack() = default;
    PriorStack(std::size_t h, std::size_t w) : height(h), width(w), data(kLandmarkCount * h * w, 0.0) {}

    std::size_t plane() const noexcept { return height * width; }
    std::span<const double> channel(LandmarkName name) const { return {data.data() + index_of(name) * plane(), plane()}; }
    std::span<double> channel(LandmarkName name) { return {data.data() + index_of(name) * plane(), plane()}; }

    bool operator==(const PriorStack&) const = default;
};

// Landmarks must already be in stack pixel coordinates. Non-visible
// landmarks leave their channel at zero.
PriorStack build_stack(std::span<const Landmark> landmarks, const SigmaTable& sigmas, std::size_t height,
                       std::size_t width);

struct PopulationStats {
    // Mean (x / width, y / height) over training images where visible.
    std::array<std::optional<Point2>, kLandmarkCount> mean_normalized{};
    std::array<std::size_t, kLandmarkCount> samples{};
    std::vector<LandmarkName> missing;  // landmarks never visible
};

PopulationStats population_stats(const Manifest& manifest);

enum class PriorVariant : std::uint8_t { GtDerived, Zero, PopulationMean, Random };

std::string_view to_string(PriorVariant variant) noexcept;
PriorVariant parse_prior_variant(std::string_view raw);  // gt|zero|popmean|random, or the long names

struct PriorCondition {
    PriorVariant variant = PriorVariant::GtDerived;
    std::optional<std::uint64_t> seed;          // required for Random
    const PopulationStats* population = nullptr;  // required for PopulationMean
};

// Image coordinates are rescaled to the stack grid by (width / record.width,
// height / record.height).
PriorStack make_condition_stack(const PriorCondition& condition, const ImageRecord& record, const SigmaTable& sigmas,
                                std::size_t height = kDefaultPriorResolution,
                                std::size_t width = kDefaultPriorResolution);

std::vector<Landmark> rescale_to_grid(std::span<const Landmark> landmarks, const ImageRecord& record,
                                      std::size_t height, std::size_t width);

cgt::Tensor to_tensor(const PriorStack& stack);

}  // namespace ceph
