#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace ceph {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend Point2 operator+(Point2 a, Point2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
    friend Point2 operator-(Point2 a, Point2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator*(double s, Point2 p) noexcept { return {s * p.x, s * p.y}; }
    bool operator==(const Point2&) const = default;
};

inline double dot(Point2 a, Point2 b) noexcept { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) noexcept { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) noexcept { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) noexcept { return norm(a - b); }

enum class ContourClass : std::uint8_t {
    Symphysis,
    IncisorAxis,
    MandibularBorder,
    PalatalPlane,
    CranialBase,
    CranialVault,
    SoftTissue,
};

inline constexpr std::size_t kContourClassCount = 7;

std::string_view to_string(ContourClass cls) noexcept;
ContourClass parse_contour_class(std::string_view raw);

// Ordered polyline in image pixels. Closed contours carry an implicit edge
// from the last vertex back to the first; the first vertex is not repeated.
struct Contour {
    std::vector<Point2> vertices;
    ContourClass contour_class = ContourClass::SoftTissue;
    bool closed = false;

    std::size_t size() const noexcept { return vertices.size(); }
    bool operator==(const Contour&) const = default;
};

// Throws ValidationError: fewer than 2 vertices, non-finite coordinates or
// repeated consecutive vertices (including last/first when closed).
void validate(const Contour& contour);

// Simplification tolerances in millimetres per contour class.
class ToleranceTable {
public:
    ToleranceTable();  // clinical defaults; unlisted classes get 1.0 mm

    double epsilon_mm(ContourClass cls) const noexcept { return eps_[static_cast<std::size_t>(cls)]; }
    void set(ContourClass cls, double eps_mm);

private:
    std::array<double, kContourClassCount> eps_{};
};

double arc_length(const Contour& contour);
// s_i for every vertex, s_0 = 0. For closed contours the closing edge is not
// part of any s_i but is included in arc_length().
std::vector<double> cumulative_arc_length(const Contour& contour);

// Distance from p to segment [a, b]; reduces to |p - a| when a == b.
double segment_distance(Point2 p, Point2 a, Point2 b) noexcept;

// Douglas-Peucker on the open chain with a pixel tolerance. Returns indices
// into contour.vertices (ascending, endpoints included).
std::vector<std::size_t> simplify_indices(const Contour& contour, double epsilon_px);
Contour simplify(const Contour& contour, double epsilon_px);
Contour simplify(const Contour& contour, const ToleranceTable& tol, double spacing_mm_per_px);
double epsilon_px(const ToleranceTable& tol, ContourClass cls, double spacing_mm_per_px);

// Perpendicular distance from vertex i to the line through the first and
// last vertices.
double chord_deviation(const Contour& contour, std::size_t i);

// Menger curvature of (prev, mid, next): 4 * area / (|a| |b| |c|).
double discrete_curvature(Point2 prev, Point2 mid, Point2 next);
double discrete_curvature(const Contour& contour, std::size_t i);

}  // namespace ceph
