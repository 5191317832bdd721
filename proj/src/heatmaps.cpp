#include "ceph/heatmaps.hpp"

#include <algorithm>
#include <cmath>

#include "ceph/error.hpp"
#include "ceph/simd.hpp"

namespace ceph {

namespace {

std::vector<double> smooth(const Heatmap& map, double sigma) {
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> kernel(2 * radius + 1);
    double total = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        total += kernel[i + radius];
    }
    for (auto& k : kernel) k /= total;

    const auto h = static_cast<int>(map.height);
    const auto w = static_cast<int>(map.width);
    std::vector<double> tmp(map.grid.size(), 0.0), out(map.grid.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int xx = x + k;
                if (xx >= 0 && xx < w) acc += kernel[k + radius] * map.grid[y * w + xx];
            }
            tmp[y * w + x] = acc;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k) {
                const int yy = y + k;
                if (yy >= 0 && yy < h) acc += kernel[k + radius] * tmp[yy * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    return out;
}

void require_decodable(const Heatmap& map) {
    if (map.grid.size() != map.height * map.width || map.grid.empty()) {
        throw Error(Errc::ShapeMismatch, "heatmap grid does not match its shape", std::string(to_string(map.landmark)));
    }
}

}  // namespace

Heatmap make_heatmap(std::vector<double> grid, std::size_t height, std::size_t width, LandmarkName landmark,
                     double scale) {
    Heatmap h{height, width, std::move(grid), landmark, scale};
    require_decodable(h);
    return h;
}

DecodeResult decode(const Heatmap& map, const DecodeOptions& options) {
    require_decodable(map);
    const std::vector<double> smoothed = options.presmooth ? smooth(map, options.presmooth_sigma) : std::vector<double>{};
    const std::span<const double> grid = options.presmooth ? std::span<const double>(smoothed) : std::span<const double>(map.grid);

    const auto& k = simd::active();
    const std::size_t at = k.argmax(grid);
    const double peak = grid[at];
    if (!(peak > 0.0)) {
        throw Error(Errc::AllZeroMap, "heatmap has no positive value", std::string(to_string(map.landmark)));
    }
    DecodeResult r;
    r.peak = peak;
    r.peak_x = at % map.width;
    r.peak_y = at / map.width;
    r.position = {static_cast<double>(r.peak_x), static_cast<double>(r.peak_y)};
    if (r.peak_x == 0 || r.peak_y == 0 || r.peak_x + 1 >= map.width || r.peak_y + 1 >= map.height) return r;

    const std::size_t w = map.width;
    auto L = [&](std::size_t x, std::size_t y) { return std::log(std::max(grid[y * w + x], options.log_floor)); };
    const std::size_t x = r.peak_x, y = r.peak_y;
    const double c = L(x, y);
    const double dx = 0.5 * (L(x + 1, y) - L(x - 1, y));
    const double dy = 0.5 * (L(x, y + 1) - L(x, y - 1));
    const double dxx = L(x + 1, y) - 2.0 * c + L(x - 1, y);
    const double dyy = L(x, y + 1) - 2.0 * c + L(x, y - 1);
    const double dxy = 0.25 * (L(x + 1, y + 1) - L(x + 1, y - 1) - L(x - 1, y + 1) + L(x - 1, y - 1));
    const double det = dxx * dyy - dxy * dxy;
    if (!(dxx < 0.0) || !(det > 0.0) || !std::isfinite(det)) return r;

    // offset = -H^{-1} g
    double ox = -(dyy * dx - dxy * dy) / det;
    double oy = -(dxx * dy - dxy * dx) / det;
    ox = std::clamp(ox, -1.0, 1.0);
    oy = std::clamp(oy, -1.0, 1.0);
    r.position = {r.position.x + ox, r.position.y + oy};
    r.refined = true;
    return r;
}

Heatmap ensemble_average(std::span<const Heatmap> maps) {
    if (maps.empty()) throw Error(Errc::ShapeMismatch, "ensemble needs at least one heatmap");
    const auto& first = maps.front();
    require_decodable(first);
    Heatmap out{first.height, first.width, first.grid, first.landmark, first.scale};
    const auto& k = simd::active();
    for (std::size_t i = 1; i < maps.size(); ++i) {
        const auto& m = maps[i];
        if (m.height != first.height || m.width != first.width || m.grid.size() != first.grid.size() ||
            m.landmark != first.landmark) {
            throw Error(Errc::ShapeMismatch, "ensemble members differ in shape or landmark",
                        std::string(to_string(m.landmark)));
        }
        k.accumulate(out.grid, m.grid);
    }
    if (maps.size() > 1) k.scale(out.grid, 1.0 / static_cast<double>(maps.size()));
    return out;
}

double effective_sigma(const Heatmap& map, const EffectiveSigmaOptions& options) {
    const auto peak = decode(map);
    const double floor = options.noise_floor * peak.peak;
    const double radius = options.window_radius;
    const auto lo = [](double c, double r) { return static_cast<std::ptrdiff_t>(std::max(0.0, std::ceil(c - r))); };
    const auto x0 = lo(peak.position.x, radius);
    const auto y0 = lo(peak.position.y, radius);
    const auto x1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(map.width) - 1,
                                             static_cast<std::ptrdiff_t>(std::floor(peak.position.x + radius)));
    const auto y1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(map.height) - 1,
                                             static_cast<std::ptrdiff_t>(std::floor(peak.position.y + radius)));
    double mass = 0.0, moment = 0.0;
    for (auto y = y0; y <= y1; ++y) {
        for (auto x = x0; x <= x1; ++x) {
            const double v = map.grid[static_cast<std::size_t>(y) * map.width + static_cast<std::size_t>(x)];
            if (v < floor) continue;
            const double ddx = static_cast<double>(x) - peak.position.x;
            const double ddy = static_cast<double>(y) - peak.position.y;
            mass += v;
            moment += v * (ddx * ddx + ddy * ddy);
        }
    }
    return std::sqrt(moment / (2.0 * mass));
}

std::string_view to_string(ConfidenceTier tier) noexcept {
    switch (tier) {
        case ConfidenceTier::High: return "High";
        case ConfidenceTier::Medium: return "Medium";
        case ConfidenceTier::Low: return "Low";
    }
    return "Low";
}

ConfidenceTier classify_confidence(double sigma_hat, const ConfidenceThresholds& t) {
    if (!(t.medium < t.low)) throw Error(Errc::ValidationError, "confidence thresholds must be strictly increasing");
    if (!(sigma_hat >= 0.0)) throw Error(Errc::ValidationError, "effective sigma must be >= 0");
    if (sigma_hat < t.medium) return ConfidenceTier::High;
    if (sigma_hat < t.low) return ConfidenceTier::Medium;
    return ConfidenceTier::Low;
}

double map_entropy_bits(std::span<const double> values) {
    const double total = simd::active().sum(values);
    if (!(total > 0.0)) throw Error(Errc::AllZeroMap, "activation map has no mass");
    double h = 0.0;
    for (double v : values) {
        if (v <= 0.0) continue;
        const double p = v / total;
        h -= p * std::log2(p);
    }
    return h;
}

MapMetrics map_metrics(const Heatmap& activation, Point2 gt, const ZoneMask& zone) {
    require_decodable(activation);
    if (zone.height != activation.height || zone.width != activation.width || zone.mask.size() != activation.grid.size()) {
        throw Error(Errc::ShapeMismatch, "zone mask does not match the activation map", zone.zone);
    }
    for (double v : activation.grid) {
        if (v < 0.0) throw Error(Errc::ValidationError, "activation map has negative values");
    }
    const auto& k = simd::active();
    const double total = k.sum(activation.grid);
    if (!(total > 0.0)) throw Error(Errc::AllZeroMap, "activation map has no mass", std::string(to_string(activation.landmark)));

    MapMetrics m;
    const std::size_t at = k.argmax(activation.grid);
    const Point2 peak{static_cast<double>(at % activation.width), static_cast<double>(at / activation.width)};
    m.peak_to_gt_px = distance(peak, gt);
    m.entropy_bits = map_entropy_bits(activation.grid);
    m.in_roi_ratio = k.masked_sum(activation.grid, zone.mask) / total;
    m.off_zone_ratio = 1.0 - m.in_roi_ratio;
    return m;
}

}  // namespace ceph
