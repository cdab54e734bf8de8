#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fplan/frenet.hpp"
#include "oracles.hpp"

using namespace fplan;

TEST_CASE("straight segment arc length and tangent") {
    const CenterLine cl = build_centerline({{0, 0}, {10, 0}});
    CHECK(cl.total_length() == doctest::Approx(10.0));
    CHECK(tangent_at(cl, 0.0).x() == doctest::Approx(1.0));
    CHECK(tangent_at(cl, 9.9).y() == doctest::Approx(0.0));
}

TEST_CASE("polyline length is the sum of segment lengths") {
    const CenterLine cl = build_centerline({{0, 0}, {10, 0}, {10, 10}});
    CHECK(cl.total_length() == doctest::Approx(20.0));
}

TEST_CASE("quarter circle arc length within 0.1%") {
    std::vector<Eigen::Vector2d> pts;
    const double R = 10.0;
    for (int i = 0; i < 100; ++i) {
        const double a = (M_PI / 2.0) * i / 99.0;
        pts.emplace_back(R * std::cos(a), R * std::sin(a));
    }
    const CenterLine cl = build_centerline(pts);
    const double analytic = 0.5 * M_PI * R;
    CHECK(std::abs(cl.total_length() - analytic) / analytic < 1e-3);
}

TEST_CASE("degenerate center-lines are rejected") {
    CHECK_THROWS_AS(build_centerline({{1, 1}}), DegenerateCenterLine);
    CHECK_THROWS_AS(build_centerline({{1, 1}, {1, 1}}), DegenerateCenterLine);
}

TEST_CASE("to_frenet on a straight line") {
    const CenterLine cl = build_centerline({{0, 0}, {10, 0}});
    const auto [s, d] = to_frenet(cl, {5.0, 2.0});
    CHECK(s == doctest::Approx(5.0));
    CHECK(d == doctest::Approx(2.0));

    const auto [s2, d2] = to_frenet(cl, {3.0, 0.0});
    CHECK(s2 == doctest::Approx(3.0));
    CHECK(d2 == doctest::Approx(0.0));
}

TEST_CASE("sign convention: left of travel is positive") {
    const CenterLine up = build_centerline({{0, 0}, {0, 10}});
    const auto [s, d] = to_frenet(up, {-1.0, 5.0});  // left of +y travel is -x
    CHECK(d == doctest::Approx(1.0));
    const auto [s2, d2] = to_frenet(up, {1.0, 5.0});
    CHECK(d2 == doctest::Approx(-1.0));
}

TEST_CASE("corridor violations throw") {
    const CenterLine cl = build_centerline({{0, 0}, {10, 0}});
    CHECK_THROWS_AS(to_frenet(cl, {5.0, 25.0}), OutOfCorridor);
    CHECK_NOTHROW(to_frenet(cl, {5.0, 25.0}, 30.0));
}

TEST_CASE("to_global basics") {
    const CenterLine cl = build_centerline({{0, 0}, {10, 0}});
    CHECK(to_global(cl, 0.0, 0.0).isApprox(Eigen::Vector2d(0, 0)));
    CHECK(to_global(cl, 5.0, -1.0).isApprox(Eigen::Vector2d(5, -1)));
    CHECK_THROWS_AS(to_global(cl, 11.0, 0.0), OutOfRange);
    CHECK_THROWS_AS(to_global(cl, -0.5, 0.0), OutOfRange);
}

TEST_CASE("round trip to_frenet(to_global) on straight and curved lines") {
    std::vector<Eigen::Vector2d> arc;
    for (int i = 0; i < 200; ++i) {
        const double a = 0.9 * i / 199.0;  // gentle arc, radius 50
        arc.emplace_back(50.0 * std::sin(a), 50.0 * (1.0 - std::cos(a)));
    }
    const CenterLine straight = build_centerline({{0, 0}, {100, 0}});
    const CenterLine curved = build_centerline(arc);

    auto g = oracle::rng(7);
    for (const CenterLine* cl : {&straight, &curved}) {
        const bool is_straight = cl == &straight;
        const double total = cl->total_length();
        for (int trial = 0; trial < 200; ++trial) {
            const double s = oracle::uniform(g, 0.05 * total, 0.95 * total);
            const double d = oracle::uniform(g, -3.0, 3.0);
            const Eigen::Vector2d xy = to_global(*cl, s, d);
            const auto [s2, d2] = to_frenet(*cl, xy);
            const Eigen::Vector2d xy2 = to_global(*cl, s2, d2);
            // The geometric round trip is tight everywhere. The (s, d) pair
            // is exact on straight lines; on a sampled arc the winning
            // segment can switch near vertices, shifting s by up to
            // |d| * (segment angle step).
            CHECK((xy - xy2).norm() < 1e-9);
            if (is_straight) {
                CHECK(std::abs(s2 - s) < 1e-9);
                CHECK(std::abs(d2 - d) < 1e-9);
            } else {
                CHECK(std::abs(s2 - s) < 0.02);
                CHECK(std::abs(d2 - d) < 1e-3);
            }
        }
        // On the center-line itself the pair is exact for both shapes.
        for (int trial = 0; trial < 50; ++trial) {
            const double s = oracle::uniform(g, 0.05 * total, 0.95 * total);
            const auto [s2, d2] = to_frenet(*cl, to_global(*cl, s, 0.0));
            CHECK(std::abs(s2 - s) < 1e-9);
            CHECK(std::abs(d2) < 1e-9);
        }
    }
}
