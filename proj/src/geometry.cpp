#include "ceph/geometry.hpp"

#include <algorithm>
#include <string>
#include <utility>

#include "ceph/error.hpp"

namespace ceph {

namespace {

constexpr std::array<std::string_view, kContourClassCount> kClassNames = {
    "symphysis", "incisor_axis", "mandibular_border", "palatal_plane", "cranial_base", "cranial_vault", "soft_tissue",
};

// Douglas-Peucker over vertices[first..last] of `pts` (indices into `order`),
// appending kept interior indices to `keep`.
void douglas_peucker(std::span<const Point2> pts, std::span<const std::size_t> order, double eps,
                     std::vector<std::size_t>& keep) {
    std::vector<std::pair<std::size_t, std::size_t>> stack;
    stack.emplace_back(0, order.size() - 1);
    while (!stack.empty()) {
        auto [lo, hi] = stack.back();
        stack.pop_back();
        if (hi <= lo + 1) continue;
        const Point2 a = pts[order[lo]];
        const Point2 b = pts[order[hi]];
        double best = -1.0;
        std::size_t best_at = lo;
        for (std::size_t k = lo + 1; k < hi; ++k) {
            double d = segment_distance(pts[order[k]], a, b);
            if (d > best) {
                best = d;
                best_at = k;
            }
        }
        if (best > eps) {
            keep.push_back(best_at);
            stack.emplace_back(best_at, hi);
            stack.emplace_back(lo, best_at);
        }
    }
}

}  // namespace

std::string_view to_string(ContourClass cls) noexcept { return kClassNames[static_cast<std::size_t>(cls)]; }

ContourClass parse_contour_class(std::string_view raw) {
    for (std::size_t i = 0; i < kClassNames.size(); ++i) {
        if (kClassNames[i] == raw) return static_cast<ContourClass>(i);
    }
    throw Error(Errc::ValidationError, "unknown contour class '" + std::string(raw) + "'", std::string(raw));
}

void validate(const Contour& contour) {
    const auto& v = contour.vertices;
    if (v.size() < 2) throw Error(Errc::ValidationError, "contour needs at least 2 vertices");
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i].x) || !std::isfinite(v[i].y)) {
            throw Error(Errc::ValidationError, "contour vertex " + std::to_string(i) + " is not finite");
        }
        if (i > 0 && v[i] == v[i - 1]) {
            throw Error(Errc::ValidationError, "contour vertices " + std::to_string(i - 1) + " and " +
                                                   std::to_string(i) + " coincide");
        }
    }
    if (contour.closed && v.front() == v.back()) {
        throw Error(Errc::ValidationError, "closed contour repeats its first vertex");
    }
}

ToleranceTable::ToleranceTable() {
    eps_.fill(1.0);
    set(ContourClass::Symphysis, 0.5);
    set(ContourClass::IncisorAxis, 0.5);
    set(ContourClass::MandibularBorder, 1.0);
    set(ContourClass::PalatalPlane, 1.0);
    set(ContourClass::CranialVault, 2.0);
}

void ToleranceTable::set(ContourClass cls, double eps_mm) {
    if (!(eps_mm > 0.0) || !std::isfinite(eps_mm)) {
        throw Error(Errc::ValidationError, "tolerance for " + std::string(to_string(cls)) + " must be > 0");
    }
    eps_[static_cast<std::size_t>(cls)] = eps_mm;
}

std::vector<double> cumulative_arc_length(const Contour& contour) {
    const auto& v = contour.vertices;
    std::vector<double> s(v.size(), 0.0);
    for (std::size_t i = 1; i < v.size(); ++i) s[i] = s[i - 1] + distance(v[i - 1], v[i]);
    return s;
}

double arc_length(const Contour& contour) {
    const auto& v = contour.vertices;
    if (v.empty()) return 0.0;
    double total = cumulative_arc_length(contour).back();
    if (contour.closed && v.size() > 1) total += distance(v.back(), v.front());
    return total;
}

double segment_distance(Point2 p, Point2 a, Point2 b) noexcept {
    const Point2 ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0) return distance(p, a);
    const double t = dot(p - a, ab) / len2;
    if (t <= 0.0) return distance(p, a);
    if (t >= 1.0) return distance(p, b);
    return std::abs(cross(ab, p - a)) / std::sqrt(len2);
}

std::vector<std::size_t> simplify_indices(const Contour& contour, double eps) {
    const auto& v = contour.vertices;
    const std::size_t n = v.size();
    if (n <= 2) {
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        return all;
    }

    std::vector<std::size_t> keep;
    if (!contour.closed) {
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        keep = {0, n - 1};
        std::vector<std::size_t> picked;
        douglas_peucker(v, order, eps, picked);
        for (auto k : picked) keep.push_back(order[k]);
    } else {
        // Split at the vertex farthest from vertex 0, then treat both halves
        // (the second one closing back onto vertex 0) as open chains.
        std::size_t split = 1;
        double far = -1.0;
        for (std::size_t i = 1; i < n; ++i) {
            double d = distance(v[i], v[0]);
            if (d > far) {
                far = d;
                split = i;
            }
        }
        keep = {0, split};
        std::vector<std::size_t> first(split + 1);
        for (std::size_t i = 0; i <= split; ++i) first[i] = i;
        std::vector<std::size_t> second;
        for (std::size_t i = split; i < n; ++i) second.push_back(i);
        second.push_back(0);
        std::vector<std::size_t> picked;
        douglas_peucker(v, first, eps, picked);
        for (auto k : picked) keep.push_back(first[k]);
        picked.clear();
        douglas_peucker(v, second, eps, picked);
        for (auto k : picked) keep.push_back(second[k]);
    }
    std::sort(keep.begin(), keep.end());
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
    return keep;
}

Contour simplify(const Contour& contour, double eps) {
    Contour out{{}, contour.contour_class, contour.closed};
    for (auto i : simplify_indices(contour, eps)) out.vertices.push_back(contour.vertices[i]);
    return out;
}

double epsilon_px(const ToleranceTable& tol, ContourClass cls, double spacing) {
    if (!(spacing > 0.0)) throw Error(Errc::ValidationError, "pixel spacing must be > 0");
    return tol.epsilon_mm(cls) / spacing;
}

Contour simplify(const Contour& contour, const ToleranceTable& tol, double spacing) {
    return simplify(contour, epsilon_px(tol, contour.contour_class, spacing));
}

double chord_deviation(const Contour& contour, std::size_t i) {
    const auto& v = contour.vertices;
    if (v.size() < 3 || i == 0 || i + 1 >= v.size()) {
        throw std::out_of_range("chord_deviation needs an interior vertex of a contour with >= 3 vertices");
    }
    const Point2 a = v.front();
    const Point2 b = v.back();
    const Point2 d = b - a;
    const double len = norm(d);
    if (len == 0.0) throw Error(Errc::DegenerateChord, "chord endpoints coincide");
    return std::abs(cross(d, v[i] - a)) / len;
}

double discrete_curvature(Point2 prev, Point2 mid, Point2 next) {
    const double ab = distance(prev, mid);
    const double bc = distance(mid, next);
    const double ca = distance(next, prev);
    if (ab == 0.0 || bc == 0.0 || ca == 0.0) throw Error(Errc::DegenerateTriple, "curvature triple has coincident vertices");
    const double twice_area = std::abs(cross(mid - prev, next - prev));
    return 2.0 * twice_area / (ab * bc * ca);
}

double discrete_curvature(const Contour& contour, std::size_t i) {
    const auto& v = contour.vertices;
    const std::size_t n = v.size();
    if (contour.closed && n >= 3 && i < n) {
        return discrete_curvature(v[(i + n - 1) % n], v[i], v[(i + 1) % n]);
    }
    if (n < 3 || i == 0 || i + 1 >= n) {
        throw std::out_of_range("discrete_curvature needs an interior vertex");
    }
    return discrete_curvature(v[i - 1], v[i], v[i + 1]);
}

}  // namespace ceph
