#include <cmath>
#include <algorithm>
#include <map>
#include <random>

#include "ceph/error.hpp"
#include "ceph/sei.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace ceph;

namespace {

std::vector<Point2> random_points(std::size_t n, std::uint32_t seed) {
    const auto xs = oracle::random_vector(n, seed);
    const auto ys = oracle::random_vector(n, seed + 1);
    std::vector<Point2> p;
    for (std::size_t i = 0; i < n; ++i) p.push_back({xs[i], ys[i]});
    return p;
}

// Naive agglomeration: repeatedly merge the pair of clusters whose union has
// the smallest diameter, while that diameter is <= r.
std::size_t brute_clusters(const std::vector<Point2>& pts, double r) {
    std::vector<std::vector<std::size_t>> cl;
    for (std::size_t i = 0; i < pts.size(); ++i) cl.push_back({i});
    while (cl.size() > 1) {
        double best = INFINITY;
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < cl.size(); ++i) {
            for (std::size_t j = i + 1; j < cl.size(); ++j) {
                double diam = 0.0;
                for (auto a : cl[i]) {
                    for (auto b : cl[j]) {
                        diam = std::max(diam, oracle::dist({pts[a].x, pts[a].y}, {pts[b].x, pts[b].y}));
                    }
                }
                if (diam < best) {
                    best = diam;
                    bi = i;
                    bj = j;
                }
            }
        }
        if (best > r) break;
        cl[bi].insert(cl[bi].end(), cl[bj].begin(), cl[bj].end());
        cl.erase(cl.begin() + static_cast<std::ptrdiff_t>(bj));
    }
    return cl.size();
}

}  // namespace

TEST_CASE("grid entropy") {
    std::vector<Point2> same(10, Point2{0.3, 0.3});
    const auto z = grid_entropy(same, 8);
    CHECK(z.bits == 0.0);
    CHECK(z.normalized == 0.0);

    std::vector<Point2> grid;
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) grid.push_back({(i + 0.5) / 8, (j + 0.5) / 8});
    }
    const auto g = grid_entropy(grid, 8);
    CHECK(g.bits == 6.0);
    CHECK(g.normalized == 1.0);

    CHECK_THROWS_AS(grid_entropy(std::vector<Point2>{}, 8), Error);

    // Coordinate 1.0 belongs to the last cell.
    const auto edge = grid_entropy(std::vector<Point2>{{1.0, 1.0}, {0.99, 0.99}}, 8);
    CHECK(edge.bits == 0.0);
}

TEST_CASE("grid entropy matches a histogram oracle") {
    const auto pts = random_points(37, 3);
    std::map<int, int> counts;
    for (const auto& p : pts) counts[std::min(7, static_cast<int>(p.x * 8)) * 8 + std::min(7, static_cast<int>(p.y * 8))]++;
    double h = 0.0;
    for (const auto& [cell, c] : counts) {
        const double q = c / 37.0;
        h -= q * std::log2(q);
    }
    const auto g = grid_entropy(pts, 8);
    CHECK(std::abs(g.bits - h) < 1e-12);
    CHECK(std::abs(g.normalized - h / 6.0) < 1e-12);
}

TEST_CASE("pairwise distance") {
    CHECK(pairwise_distance(std::vector<Point2>{{0.2, 0.2}, {0.2, 0.2}}) == 0.0);
    CHECK(pairwise_distance(std::vector<Point2>{{0, 0}, {1, 1}}) == 1.0);
    CHECK_THROWS_AS(pairwise_distance(std::vector<Point2>{{0, 0}}), Error);
    const auto pts = random_points(25, 9);
    double s = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            s += oracle::dist({pts[i].x, pts[i].y}, {pts[j].x, pts[j].y});
            ++n;
        }
    }
    CHECK(std::abs(pairwise_distance(pts) - s / n / std::sqrt(2.0)) < 1e-12);
}

TEST_CASE("zone count") {
    CHECK(zone_count(std::vector<Point2>{{0.5, 0.5}}, 0.15) == 1);
    CHECK(zone_count(std::vector<Point2>{{0.0, 0.0}, {0.5, 0.0}}, 0.15) == 2);
    const double h = 0.1 * std::sqrt(3.0) / 2.0;
    CHECK(zone_count(std::vector<Point2>{{0.5, 0.5}, {0.6, 0.5}, {0.55, 0.5 + h}}, 0.15) == 1);
    // Diameter exactly at the radius still merges.
    CHECK(zone_count(std::vector<Point2>{{0.0, 0.0}, {0.25, 0.0}}, 0.25) == 1);
    CHECK(zone_count(std::vector<Point2>{{0.0, 0.0}, {0.25, 0.0}}, 0.2499) == 2);
}

TEST_CASE("zone count agrees with brute-force agglomeration and is monotone in r") {
    for (std::uint32_t seed = 1; seed <= 30; ++seed) {
        const auto pts = random_points(12 + seed % 15, seed * 13);
        std::size_t prev = pts.size();
        for (double r : {0.05, 0.1, 0.15, 0.25, 0.4}) {
            const auto z = zone_count(pts, r);
            CHECK(z == brute_clusters(pts, r));
            CHECK(z <= prev);
            prev = z;
        }
    }
}

TEST_CASE("composite from reference component triples") {
    CHECK(std::abs(sei_composite(0.751, 0.304, 18, 10) - 0.2283) < 5e-5);
    CHECK(std::abs(sei_composite(0.607, 0.197, 9, 10) - 0.1076) < 5e-5);
    CHECK(std::abs(sei_composite(0.540, 0.201, 7, 10) - 0.0760) < 5e-5);
    CHECK(std::abs(sei_composite(0.320, 0.152, 4, 10) - 0.0195) < 5e-5);
}

TEST_CASE("sei report is consistent and permutation-invariant") {
    auto pts = random_points(25, 77);
    const auto r = sei(pts);
    CHECK(r.n_landmarks == 25);
    CHECK(r.sei == r.h_norm * r.d_pair * r.z_ratio);
    CHECK(r.z_ratio == std::min(1.0, r.z / 10.0));
    CHECK(r.h_norm >= 0.0);
    CHECK(r.h_norm <= 1.0);
    std::reverse(pts.begin(), pts.end());
    std::swap(pts[3], pts[17]);
    const auto q = sei(pts);
    CHECK(q.h_grid == r.h_grid);
    CHECK(q.z == r.z);
    CHECK(q.d_pair == doctest::Approx(r.d_pair).epsilon(1e-12));
}

TEST_CASE("disk coverage") {
    CHECK(disk_coverage(std::vector<Point2>{{0.5, 0.5}}, 2.0, 64) == 1.0);
    const double c = disk_coverage(std::vector<Point2>{{0.5, 0.5}}, 0.1, 512);
    CHECK(c == doctest::Approx(3.14159265 * 0.01).epsilon(0.02));
}
