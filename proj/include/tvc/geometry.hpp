#pragma once

#include <cstdint>
#include <vector>

#include "tvc/error.hpp"

namespace tvc::geometry {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

// Axis-aligned rectangle, lower-left (x0, y0) to upper-right (x1, y1).
struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }

    bool contains(Vec2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
    bool contains(const Rect& r) const {
        return r.x0 >= x0 && r.x1 <= x1 && r.y0 >= y0 && r.y1 <= y1;
    }
};

// Exact overlap area of two rectangles; 0 when disjoint, symmetric.
double intersection_area(const Rect& a, const Rect& b);

// One atomic region of the field: all points in it share the same
// inside/outside relationship with every rectangle of the arrangement.
// Bit i of `membership` is set iff the region lies inside rectangle i.
struct ScenarioCell {
    double area = 0.0;
    std::uint32_t membership = 0;

    bool inside(std::size_t rect_index) const {
        return (membership >> rect_index) & 1u;
    }
};

struct Arrangement {
    std::vector<Rect> rects;
    std::vector<ScenarioCell> cells;
    double field_area = 0.0;

    // Total area of cells whose bit `rect_index` is set. Equals the area of
    // rects[rect_index] clipped to the field.
    double marginal_area(std::size_t rect_index) const;
};

inline constexpr std::size_t kMaxArrangementRects = 20;

// Coordinate-compresses the rectangle edges over the field and merges grid
// cells with identical membership vectors. Areas are exact for axis-aligned
// input. Throws TOO_MANY_RECTS above kMaxArrangementRects.
Arrangement build_arrangement(const std::vector<Rect>& rects, const Rect& field);

// Straight-line displacement of `speed * dt` along `heading`, wrapped
// modulo the bounds rectangle on each axis independently.
Vec2 torus_advance(Vec2 pos, double heading, double speed, double dt, const Rect& bounds);

struct KinematicConstants {
    double v_bar = 0.0;    // mean scalar speed
    double v_hat = 1.0;    // E[relative speed] / v_bar
    double std_error = 0.0;
};

// Monte Carlo estimate of the relative-speed multiplier for two independent
// nodes with speeds ~ U[v_min, v_max] and uniform headings. For equal fixed
// speeds the exact value is 4/pi.
KinematicConstants relative_speed_factor(double v_min, double v_max, std::size_t samples,
                                         std::uint64_t seed = 0x76C1);

}  // namespace tvc::geometry
