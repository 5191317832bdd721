#include <cmath>
#include <numbers>
#include <random>

#include "ceph/error.hpp"
#include "ceph/geometry.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace ceph;

namespace {

Contour open(std::vector<Point2> v, ContourClass c = ContourClass::SoftTissue) { return {std::move(v), c, false}; }

Contour random_walk(std::mt19937& g, std::size_t n, bool closed = false) {
    std::normal_distribution<double> step(0.0, 3.0);
    Contour c;
    c.closed = closed;
    Point2 p{100, 100};
    double heading = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        heading += step(g) * 0.15;
        p = p + Point2{4.0 * std::cos(heading), 4.0 * std::sin(heading)} + Point2{0.3 * step(g), 0.3 * step(g)};
        c.vertices.push_back(p);
    }
    return c;
}

Point2 rigid(Point2 p, double th, Point2 t) {
    return {std::cos(th) * p.x - std::sin(th) * p.y + t.x, std::sin(th) * p.x + std::cos(th) * p.y + t.y};
}

// Max deviation of every input vertex from the simplified chain spanning it.
double chain_deviation(const Contour& c, const std::vector<std::size_t>& keep) {
    double worst = 0.0;
    for (std::size_t k = 0; k + 1 < keep.size(); ++k) {
        const auto a = c.vertices[keep[k]], b = c.vertices[keep[k + 1]];
        for (std::size_t i = keep[k] + 1; i < keep[k + 1]; ++i) {
            const auto p = c.vertices[i];
            worst = std::max(worst, oracle::seg_dist({p.x, p.y}, {a.x, a.y}, {b.x, b.y}));
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("arc length") {
    CHECK(arc_length(open({{0, 0}, {3, 4}})) == doctest::Approx(5.0));
    CHECK(arc_length(open({{0, 0}, {1, 0}, {1, 1}, {0, 1}})) == doctest::Approx(3.0));
    CHECK(arc_length(Contour{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}, ContourClass::CranialVault, true}) ==
          doctest::Approx(4.0));

    std::mt19937 g(11);
    const auto c = random_walk(g, 100);
    double s = 0.0;
    for (std::size_t i = 1; i < c.size(); ++i) {
        s += oracle::dist({c.vertices[i - 1].x, c.vertices[i - 1].y}, {c.vertices[i].x, c.vertices[i].y});
    }
    CHECK(arc_length(c) == doctest::Approx(s).epsilon(1e-12));
    const auto cum = cumulative_arc_length(c);
    CHECK(cum.front() == 0.0);
    CHECK(cum.back() == doctest::Approx(s).epsilon(1e-12));
}

TEST_CASE("contour validation") {
    CHECK_THROWS_AS(validate(open({{0, 0}})), Error);
    CHECK_THROWS_AS(validate(open({{0, 0}, {0, 0}, {1, 1}})), Error);
    CHECK_THROWS_AS(validate(open({{0, 0}, {NAN, 0}})), Error);
    CHECK_THROWS_AS(validate(Contour{{{0, 0}, {1, 0}, {0, 0}}, ContourClass::CranialVault, true}), Error);
    CHECK_NOTHROW(validate(open({{0, 0}, {1, 0}})));
}

TEST_CASE("tolerance table defaults and conversion") {
    ToleranceTable t;
    CHECK(t.epsilon_mm(ContourClass::Symphysis) == 0.5);
    CHECK(t.epsilon_mm(ContourClass::IncisorAxis) == 0.5);
    CHECK(t.epsilon_mm(ContourClass::MandibularBorder) == 1.0);
    CHECK(t.epsilon_mm(ContourClass::PalatalPlane) == 1.0);
    CHECK(t.epsilon_mm(ContourClass::CranialVault) == 2.0);
    CHECK(t.epsilon_mm(ContourClass::CranialBase) == 1.0);
    CHECK(t.epsilon_mm(ContourClass::SoftTissue) == 1.0);
    CHECK(epsilon_px(t, ContourClass::Symphysis, 0.1) == doctest::Approx(5.0));
    CHECK_THROWS_AS(t.set(ContourClass::Symphysis, 0.0), Error);
    CHECK_THROWS_AS(epsilon_px(t, ContourClass::Symphysis, 0.0), Error);
}

TEST_CASE("simplify: collinear points collapse to endpoints") {
    const auto c = open({{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}});
    for (double eps : {1e-6, 0.5, 10.0}) {
        const auto s = simplify(c, eps);
        REQUIRE(s.size() == 2);
        CHECK(s.vertices.front() == c.vertices.front());
        CHECK(s.vertices.back() == c.vertices.back());
    }
}

TEST_CASE("simplify: apex deviating more than epsilon is kept") {
    const auto c = open({{0, 0}, {5, 5}, {10, 10}, {15, 5}, {20, 0}});
    const auto s = simplify(c, 1.0);
    REQUIRE(s.size() == 3);
    CHECK(s.vertices[1] == Point2{10, 10});
}

TEST_CASE("simplify properties on random polylines") {
    std::mt19937 g(5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto c = random_walk(g, 20 + trial % 60);
        const double eps = 0.5 + (trial % 7);
        const auto keep = simplify_indices(c, eps);
        REQUIRE(keep.front() == 0);
        REQUIRE(keep.back() == c.size() - 1);
        CHECK(std::is_sorted(keep.begin(), keep.end()));
        CHECK(chain_deviation(c, keep) <= eps);
        const auto s = simplify(c, eps);
        CHECK(simplify(s, eps) == s);
        CHECK(arc_length(s) <= arc_length(c) + 1e-9);
        for (std::size_t k = 0; k < keep.size(); ++k) CHECK(s.vertices[k] == c.vertices[keep[k]]);
    }
}

TEST_CASE("simplify closed contours keeps the split vertex and bounds deviation") {
    Contour circle;
    circle.closed = true;
    circle.contour_class = ContourClass::CranialVault;
    for (int k = 0; k < 120; ++k) {
        const double t = 2 * std::numbers::pi * k / 120;
        circle.vertices.push_back({50 * std::cos(t), 50 * std::sin(t)});
    }
    const auto keep = simplify_indices(circle, 1.0);
    CHECK(keep.front() == 0);
    CHECK(std::find(keep.begin(), keep.end(), 60) != keep.end());
    auto wrapped = circle;
    wrapped.vertices.push_back(circle.vertices.front());
    auto keep_w = keep;
    keep_w.push_back(circle.size());
    CHECK(chain_deviation(wrapped, keep_w) <= 1.0);
    const auto s = simplify(circle, 1.0);
    CHECK(s.closed);
    CHECK(simplify(s, 1.0) == s);
}

TEST_CASE("simplify with tolerance table converts mm to px") {
    // Apex 4 px off the chord: 0.5 mm is 5 px at 0.1 mm/px and 2.5 px at 0.2 mm/px.
    const auto c = open({{0, 0}, {50, 4}, {100, 0}}, ContourClass::Symphysis);
    ToleranceTable t;
    CHECK(simplify(c, t, 0.1).size() == 2);
    CHECK(simplify(c, t, 0.2).size() == 3);
}

TEST_CASE("chord deviation") {
    CHECK(chord_deviation(open({{0, 0}, {5, 7}, {10, 0}}), 1) == doctest::Approx(7.0));
    CHECK(chord_deviation(open({{0, 0}, {5, 0}, {10, 0}}), 1) == 0.0);
    Contour semi;
    for (int k = 0; k < 64; ++k) {
        const double t = std::numbers::pi * k / 63;
        semi.vertices.push_back({30 * std::cos(t), 30 * std::sin(t)});
    }
    // Vertices 31 and 32 straddle the top; interpolate the analytic value.
    const double expected = 30 * std::sin(std::numbers::pi * 31 / 63);
    CHECK(chord_deviation(semi, 31) == doctest::Approx(expected).epsilon(1e-9));
    CHECK(std::abs(chord_deviation(semi, 31) - 30.0) < 0.02);

    Contour even;
    for (int k = 0; k < 65; ++k) {
        const double t = std::numbers::pi * k / 64;
        even.vertices.push_back({30 * std::cos(t), 30 * std::sin(t)});
    }
    CHECK(std::abs(chord_deviation(even, 32) - 30.0) < 1e-6);

    CHECK_THROWS_AS(chord_deviation(open({{0, 0}, {5, 5}, {1, 1}, {0, 0}}), 1), Error);
    try {
        chord_deviation(open({{0, 0}, {5, 5}, {1, 1}, {0, 0}}), 1);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::DegenerateChord);
    }
}

TEST_CASE("chord deviation matches the line-distance oracle") {
    std::mt19937 g(3);
    const auto c = random_walk(g, 40);
    const oracle::P a{c.vertices.front().x, c.vertices.front().y}, b{c.vertices.back().x, c.vertices.back().y};
    for (std::size_t i = 1; i + 1 < c.size(); ++i) {
        CHECK(chord_deviation(c, i) ==
              doctest::Approx(oracle::line_dist({c.vertices[i].x, c.vertices[i].y}, a, b)).epsilon(1e-10));
    }
}

TEST_CASE("discrete curvature") {
    CHECK(discrete_curvature(Point2{0, 0}, Point2{1, 1}, Point2{2, 2}) == 0.0);
    const auto on_circle = [](double t) { return Point2{3 + 10 * std::cos(t), -2 + 10 * std::sin(t)}; };
    CHECK(std::abs(discrete_curvature(on_circle(0.1), on_circle(0.9), on_circle(2.5)) - 0.1) < 1e-9);
    CHECK_THROWS_AS(discrete_curvature(Point2{0, 0}, Point2{0, 0}, Point2{1, 2}), Error);

    std::mt19937 g(9);
    std::uniform_real_distribution<double> u(-50, 50);
    for (int i = 0; i < 200; ++i) {
        const Point2 a{u(g), u(g)}, b{u(g), u(g)}, c{u(g), u(g)};
        const double k = discrete_curvature(a, b, c);
        CHECK(k == doctest::Approx(oracle::circum_curvature({a.x, a.y}, {b.x, b.y}, {c.x, c.y})).epsilon(1e-6));
        const double th = u(g);
        const Point2 t{u(g), u(g)};
        CHECK(discrete_curvature(rigid(a, th, t), rigid(b, th, t), rigid(c, th, t)) ==
              doctest::Approx(k).epsilon(1e-9));
        CHECK(discrete_curvature(2.5 * a, 2.5 * b, 2.5 * c) == doctest::Approx(k / 2.5).epsilon(1e-9));
    }
}

TEST_CASE("chord deviation is rigid-invariant") {
    std::mt19937 g(21);
    const auto c = random_walk(g, 30);
    Contour t = c;
    for (auto& p : t.vertices) p = rigid(p, 1.234, {17, -40});
    for (std::size_t i = 1; i + 1 < c.size(); ++i) {
        CHECK(chord_deviation(t, i) == doctest::Approx(chord_deviation(c, i)).epsilon(1e-9));
    }
}
