#include "ceph/sei.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "ceph/error.hpp"

namespace ceph {

namespace {

std::size_t cell_of(double v, std::size_t grid) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::ValidationError, "SEI points must lie in [0,1]^2");
    return std::min(static_cast<std::size_t>(v * static_cast<double>(grid)), grid - 1);
}

}  // namespace

GridEntropy grid_entropy(std::span<const Point2> points, std::size_t grid) {
    if (points.empty()) throw Error(Errc::EmptyPointSet, "grid entropy of an empty point set");
    if (grid == 0) throw Error(Errc::ValidationError, "grid size must be >= 1");
    std::vector<std::size_t> counts(grid * grid, 0);
    for (const auto& p : points) ++counts[cell_of(p.y, grid) * grid + cell_of(p.x, grid)];
    const auto n = static_cast<double>(points.size());
    double h = 0.0;
    for (auto c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    const double h_max = std::log2(static_cast<double>(grid * grid));
    return {h, h_max > 0.0 ? h / h_max : 0.0};
}

double pairwise_distance(std::span<const Point2> points) {
    const std::size_t n = points.size();
    if (n < 2) throw Error(Errc::TooFewPoints, "pairwise distance needs at least two points");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) total += distance(points[i], points[j]);
    }
    const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    return total / (pairs * std::sqrt(2.0));
}

std::size_t zone_count(std::span<const Point2> points, double radius) {
    const std::size_t n = points.size();
    if (n == 0) throw Error(Errc::EmptyPointSet, "zone count of an empty point set");
    // Cluster-to-cluster complete-linkage distances, updated with the
    // Lance-Williams rule d(k, i+j) = max(d(k, i), d(k, j)).
    std::vector<double> d(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) d[i * n + j] = d[j * n + i] = distance(points[i], points[j]);
    }
    std::vector<bool> alive(n, true);
    std::size_t clusters = n;
    while (clusters > 1) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!alive[i]) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (alive[j] && d[i * n + j] < best) {
                    best = d[i * n + j];
                    bi = i;
                    bj = j;
                }
            }
        }
        if (best > radius) break;
        alive[bj] = false;
        for (std::size_t k = 0; k < n; ++k) {
            if (!alive[k] || k == bi) continue;
            d[bi * n + k] = d[k * n + bi] = std::max(d[bi * n + k], d[bj * n + k]);
        }
        --clusters;
    }
    return clusters;
}

double sei_composite(double h_norm, double d_pair, double z, double z_max) {
    if (!(z_max > 0.0)) throw Error(Errc::ValidationError, "z_max must be > 0");
    return h_norm * d_pair * std::min(z / z_max, 1.0);
}

SeiReport sei(std::span<const Point2> points, const SeiParams& params) {
    if (points.size() < 2) throw Error(Errc::TooFewPoints, "SEI needs at least two points");
    SeiReport r;
    r.params = params;
    r.n_landmarks = points.size();
    const auto g = grid_entropy(points, params.grid);
    r.h_grid = g.bits;
    r.h_norm = g.normalized;
    r.d_pair = pairwise_distance(points);
    r.z = zone_count(points, params.cluster_radius);
    r.z_ratio = std::min(static_cast<double>(r.z) / params.z_max, 1.0);
    r.sei = r.h_norm * r.d_pair * r.z_ratio;
    return r;
}

double disk_coverage(std::span<const Point2> points, double radius, std::size_t resolution) {
    if (resolution == 0) throw Error(Errc::ValidationError, "coverage resolution must be >= 1");
    const double r2 = radius * radius;
    std::size_t covered = 0;
    for (std::size_t y = 0; y < resolution; ++y) {
        const double cy = (static_cast<double>(y) + 0.5) / static_cast<double>(resolution);
        for (std::size_t x = 0; x < resolution; ++x) {
            const double cx = (static_cast<double>(x) + 0.5) / static_cast<double>(resolution);
            const bool hit = std::any_of(points.begin(), points.end(), [&](const Point2& p) {
                const double dx = p.x - cx, dy = p.y - cy;
                return dx * dx + dy * dy <= r2;
            });
            covered += hit ? 1 : 0;
        }
    }
    return static_cast<double>(covered) / static_cast<double>(resolution * resolution);
}

std::vector<Point2> mean_normalized_positions(const Manifest& manifest) {
    std::array<double, kLandmarkCount> sx{}, sy{};
    std::array<std::size_t, kLandmarkCount> n{};
    for (const auto& rec : manifest.records) {
        for (const auto& lm : rec.landmarks) {
            if (!lm.visible) continue;
            const auto k = index_of(lm.name);
            sx[k] += lm.x / rec.width;
            sy[k] += lm.y / rec.height;
            ++n[k];
        }
    }
    std::vector<Point2> out;
    for (std::size_t k = 0; k < kLandmarkCount; ++k) {
        if (n[k] == 0) continue;
        out.push_back({std::clamp(sx[k] / n[k], 0.0, 1.0), std::clamp(sy[k] / n[k], 0.0, 1.0)});
    }
    return out;
}

std::vector<Point2> normalized_positions(const ImageRecord& record) {
    std::vector<Point2> out;
    for (const auto& lm : record.landmarks) {
        if (!lm.visible) continue;
        out.push_back({std::clamp(lm.x / record.width, 0.0, 1.0), std::clamp(lm.y / record.height, 0.0, 1.0)});
    }
    return out;
}

}  // namespace ceph
