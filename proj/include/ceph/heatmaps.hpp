#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ceph/geometry.hpp"
#include "ceph/model.hpp"

namespace ceph {

struct Heatmap {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> grid;  // row-major, non-negative
    LandmarkName landmark{};
    double scale = 1.0;  // heatmap pixels per image pixel

    double at(std::size_t x, std::size_t y) const noexcept { return grid[y * width + x]; }
};

Heatmap make_heatmap(std::vector<double> grid, std::size_t height, std::size_t width, LandmarkName landmark,
                     double scale = 1.0);

struct DecodeOptions {
    double log_floor = 1e-10;
    bool presmooth = false;
    double presmooth_sigma = 1.0;
};

struct DecodeResult {
    Point2 position;  // heatmap pixels
    double peak = 0.0;
    std::size_t peak_x = 0;
    std::size_t peak_y = 0;
    bool refined = false;  // false when the integer peak was kept
};

// Integer argmax, then one Newton step on the log-map using central
// differences. The offset is clamped to [-1, 1] per axis; border peaks and
// non-negative-definite Hessians keep the integer peak.
DecodeResult decode(const Heatmap& map, const DecodeOptions& options = {});

// Pixelwise mean; throws ShapeMismatch on differing shapes or landmarks.
Heatmap ensemble_average(std::span<const Heatmap> maps);

struct EffectiveSigmaOptions {
    double window_radius = 24.0;  // 3 x the Low-tier threshold
    double noise_floor = 0.05;    // fraction of the peak value
};

// Per-axis spread: sqrt(sum(w r^2) / (2 sum(w))) around the decoded peak.
double effective_sigma(const Heatmap& map, const EffectiveSigmaOptions& options = {});

enum class ConfidenceTier : std::uint8_t { High, Medium, Low };

std::string_view to_string(ConfidenceTier tier) noexcept;

struct ConfidenceThresholds {
    double medium = 4.0;  // sigma_hat >= medium -> Medium
    double low = 8.0;     // sigma_hat >= low -> Low
};

ConfidenceTier classify_confidence(double sigma_hat, const ConfidenceThresholds& thresholds = {});

struct ZoneMask {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::uint8_t> mask;
    std::string zone;
};

struct MapMetrics {
    double peak_to_gt_px = 0.0;
    double entropy_bits = 0.0;
    double in_roi_ratio = 0.0;
    double off_zone_ratio = 0.0;
};

// `gt` is in activation-map pixels.
MapMetrics map_metrics(const Heatmap& activation, Point2 gt, const ZoneMask& zone);

// Shannon entropy (bits) of the map normalised to unit mass.
double map_entropy_bits(std::span<const double> values);

}  // namespace ceph
