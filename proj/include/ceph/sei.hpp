#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ceph/geometry.hpp"
#include "ceph/model.hpp"

namespace ceph {

struct SeiParams {
    std::size_t grid = 8;
    double cluster_radius = 0.15;
    double z_max = 10.0;
};

struct GridEntropy {
    double bits = 0.0;
    double normalized = 0.0;
};

// Points in [0,1]^2 binned on an N x N grid; coordinate 1.0 falls in the last
// cell. Throws EmptyPointSet.
GridEntropy grid_entropy(std::span<const Point2> points, std::size_t grid);

// Mean pairwise distance over unordered pairs divided by sqrt(2).
double pairwise_distance(std::span<const Point2> points);

// Complete-linkage agglomeration that keeps merging while the merged
// cluster's diameter stays <= radius; returns the cluster count.
std::size_t zone_count(std::span<const Point2> points, double radius);

struct SeiReport {
    std::size_t n_landmarks = 0;
    double h_grid = 0.0;
    double h_norm = 0.0;
    double d_pair = 0.0;
    std::size_t z = 0;
    double z_ratio = 0.0;
    double sei = 0.0;
    SeiParams params;
};

double sei_composite(double h_norm, double d_pair, double z, double z_max);
SeiReport sei(std::span<const Point2> points, const SeiParams& params = {});

// Fraction of the unit square covered by the union of disks of `radius`
// (normalised units) around the points, on a resolution x resolution raster.
// Not comparable to coverage figures computed under other dilation choices.
double disk_coverage(std::span<const Point2> points, double radius, std::size_t resolution = 256);

// Per-landmark mean normalised position over all records (visible only).
std::vector<Point2> mean_normalized_positions(const Manifest& manifest);
std::vector<Point2> normalized_positions(const ImageRecord& record);

}  // namespace ceph
