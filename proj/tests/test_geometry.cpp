#include <doctest.h>

#include <cmath>
#include <numbers>

#include "tvc/geometry.hpp"
#include "tvc/rng.hpp"

using namespace tvc;
using namespace tvc::geometry;

TEST_CASE("intersection_area basic cases") {
    const Rect a{0, 0, 100, 100};
    CHECK(intersection_area(a, {50, 50, 150, 150}) == doctest::Approx(2500.0));
    CHECK(intersection_area(a, {200, 200, 300, 300}) == 0.0);
    CHECK(intersection_area(a, {25, 25, 75, 75}) == doctest::Approx(2500.0));  // containment
    CHECK(intersection_area(a, a) == doctest::Approx(a.area()));
}

TEST_CASE("intersection_area is symmetric") {
    Rng rng(99);
    for (int i = 0; i < 200; ++i) {
        const Rect a{rng.uniform(0, 500), rng.uniform(0, 500), rng.uniform(500, 1000),
                     rng.uniform(500, 1000)};
        const Rect b{rng.uniform(0, 500), rng.uniform(0, 500), rng.uniform(500, 1000),
                     rng.uniform(500, 1000)};
        CHECK(intersection_area(a, b) == doctest::Approx(intersection_area(b, a)));
    }
}

TEST_CASE("arrangement of one community in the field") {
    const Rect field{0, 0, 1000, 1000};
    const auto arr = build_arrangement({{300, 300, 400, 400}}, field);
    REQUIRE(arr.cells.size() == 2);
    double in_area = 0.0, out_area = 0.0;
    for (const auto& cell : arr.cells)
        (cell.inside(0) ? in_area : out_area) += cell.area;
    CHECK(in_area == doctest::Approx(1e4));
    CHECK(out_area == doctest::Approx(99e4));
}

TEST_CASE("arrangement of two overlapping squares has four cells") {
    const Rect field{0, 0, 1000, 1000};
    const auto arr = build_arrangement({{0, 0, 100, 100}, {50, 50, 150, 150}}, field);
    CHECK(arr.cells.size() == 4);
    double total = 0.0;
    for (const auto& cell : arr.cells) total += cell.area;
    CHECK(total == doctest::Approx(1e6));
}

TEST_CASE("arrangement area conservation and marginals for random rects") {
    Rng rng(7);
    const Rect field{0, 0, 1000, 1000};
    for (int round = 0; round < 20; ++round) {
        std::vector<Rect> rects;
        const int count = 1 + static_cast<int>(rng.below(8));
        for (int i = 0; i < count; ++i) {
            const double w = rng.uniform(10, 400);
            const double h = rng.uniform(10, 400);
            const double x = rng.uniform(0, 1000 - w);
            const double y = rng.uniform(0, 1000 - h);
            rects.push_back({x, y, x + w, y + h});
        }
        const auto arr = build_arrangement(rects, field);
        double total = 0.0;
        for (const auto& cell : arr.cells) total += cell.area;
        CHECK(std::abs(total - 1e6) / 1e6 < 1e-6);
        for (std::size_t r = 0; r < rects.size(); ++r)
            CHECK(arr.marginal_area(r) ==
                  doctest::Approx(intersection_area(rects[r], field)).epsilon(1e-9));
        // membership vectors pairwise distinct
        for (std::size_t i = 0; i < arr.cells.size(); ++i)
            for (std::size_t j = i + 1; j < arr.cells.size(); ++j)
                CHECK(arr.cells[i].membership != arr.cells[j].membership);
    }
}

TEST_CASE("arrangement rejects too many rects") {
    const Rect field{0, 0, 1000, 1000};
    std::vector<Rect> rects(21, Rect{0, 0, 10, 10});
    CHECK_THROWS_AS(build_arrangement(rects, field), Error);
}

TEST_CASE("nested community marginals for a tiered layout") {
    // 200-edge community with a 50-edge community nested inside
    const Rect field{0, 0, 1000, 1000};
    const auto arr =
        build_arrangement({{300, 300, 500, 500}, {375, 375, 425, 425}}, field);
    CHECK(arr.marginal_area(0) / 1e6 == doctest::Approx(0.04));
    CHECK(arr.marginal_area(1) / 1e6 == doctest::Approx(0.0025));
}

TEST_CASE("torus_advance wraps and composes") {
    const Rect bounds{0, 0, 100, 100};
    auto p = torus_advance({50, 50}, 0.0, 10.0, 1.0, bounds);
    CHECK(p.x == doctest::Approx(60.0));
    CHECK(p.y == doctest::Approx(50.0));

    p = torus_advance({95, 50}, 0.0, 10.0, 1.0, bounds);
    CHECK(p.x == doctest::Approx(5.0));

    p = torus_advance({50, 50}, 1.234, 7.0, 0.0, bounds);
    CHECK(p.x == doctest::Approx(50.0));
    CHECK(p.y == doctest::Approx(50.0));

    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const Vec2 start{rng.uniform(0, 100), rng.uniform(0, 100)};
        const double heading = rng.heading();
        const double speed = rng.uniform(1, 20);
        const double d1 = rng.uniform(0, 30);
        const double d2 = rng.uniform(0, 30);
        const Vec2 two_steps =
            torus_advance(torus_advance(start, heading, speed, d1, bounds), heading, speed, d2,
                          bounds);
        const Vec2 one_step = torus_advance(start, heading, speed, d1 + d2, bounds);
        CHECK(std::abs(two_steps.x - one_step.x) < 1e-9);
        CHECK(std::abs(two_steps.y - one_step.y) < 1e-9);
    }
}

TEST_CASE("relative speed factor: equal speeds give 4/pi") {
    const auto kc = relative_speed_factor(10.0, 10.0, 1000000);
    const double expected = 4.0 / std::numbers::pi;
    CHECK(std::abs(kc.v_hat - expected) < 3.0 * kc.std_error);
}

TEST_CASE("relative speed factor for the standard speed range") {
    const auto kc = relative_speed_factor(5.0, 15.0, 1000000);
    CHECK(kc.v_hat > 1.27);
    CHECK(kc.v_hat < 1.35);
    // frozen baseline: quadrature of E|v1 - v2 e^{i theta}| / v_bar gives 1.33261
    CHECK(kc.v_hat == doctest::Approx(1.33261).epsilon(0.004));
}
