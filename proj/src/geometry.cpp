#include "tvc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "tvc/rng.hpp"

namespace tvc::geometry {

double intersection_area(const Rect& a, const Rect& b) {
    const double w = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
    const double h = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
    if (w <= 0.0 || h <= 0.0) return 0.0;
    return w * h;
}

double Arrangement::marginal_area(std::size_t rect_index) const {
    double total = 0.0;
    for (const auto& cell : cells)
        if (cell.inside(rect_index)) total += cell.area;
    return total;
}

Arrangement build_arrangement(const std::vector<Rect>& rects, const Rect& field) {
    if (rects.size() > kMaxArrangementRects)
        throw Error(ErrorCode::TOO_MANY_RECTS,
                    "arrangement limited to " + std::to_string(kMaxArrangementRects) +
                        " rectangles, got " + std::to_string(rects.size()));

    std::vector<double> xs{field.x0, field.x1};
    std::vector<double> ys{field.y0, field.y1};
    for (const auto& r : rects) {
        xs.push_back(std::clamp(r.x0, field.x0, field.x1));
        xs.push_back(std::clamp(r.x1, field.x0, field.x1));
        ys.push_back(std::clamp(r.y0, field.y0, field.y1));
        ys.push_back(std::clamp(r.y1, field.y0, field.y1));
    }
    auto dedupe = [](std::vector<double>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    dedupe(xs);
    dedupe(ys);

    // Merge grid cells with identical membership; areas stay exact because
    // every rectangle edge is a grid line.
    std::unordered_map<std::uint32_t, double> merged;
    for (std::size_t ix = 0; ix + 1 < xs.size(); ++ix) {
        const double cx = 0.5 * (xs[ix] + xs[ix + 1]);
        const double w = xs[ix + 1] - xs[ix];
        if (w <= 0.0) continue;
        for (std::size_t iy = 0; iy + 1 < ys.size(); ++iy) {
            const double cy = 0.5 * (ys[iy] + ys[iy + 1]);
            const double h = ys[iy + 1] - ys[iy];
            if (h <= 0.0) continue;
            std::uint32_t mask = 0;
            const Vec2 center{cx, cy};
            for (std::size_t r = 0; r < rects.size(); ++r)
                if (rects[r].contains(center)) mask |= (1u << r);
            merged[mask] += w * h;
        }
    }

    Arrangement out;
    out.rects = rects;
    out.field_area = field.area();
    out.cells.reserve(merged.size());
    for (const auto& [mask, area] : merged) out.cells.push_back({area, mask});
    std::sort(out.cells.begin(), out.cells.end(),
              [](const ScenarioCell& a, const ScenarioCell& b) {
                  return a.membership < b.membership;
              });
    return out;
}

Vec2 torus_advance(Vec2 pos, double heading, double speed, double dt, const Rect& bounds) {
    const double w = bounds.width();
    const double h = bounds.height();
    double x = pos.x - bounds.x0 + speed * dt * std::cos(heading);
    double y = pos.y - bounds.y0 + speed * dt * std::sin(heading);
    x = std::fmod(x, w);
    if (x < 0.0) x += w;
    y = std::fmod(y, h);
    if (y < 0.0) y += h;
    return {bounds.x0 + x, bounds.y0 + y};
}

KinematicConstants relative_speed_factor(double v_min, double v_max, std::size_t samples,
                                         std::uint64_t seed) {
    Rng rng(seed);
    const double v_bar = 0.5 * (v_min + v_max);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double v1 = rng.uniform(v_min, v_max);
        const double v2 = rng.uniform(v_min, v_max);
        const double theta = rng.heading();
        // |v1 - v2 e^{i theta}|
        const double rel = std::sqrt(v1 * v1 + v2 * v2 - 2.0 * v1 * v2 * std::cos(theta));
        sum += rel;
        sum_sq += rel * rel;
    }
    const double n = static_cast<double>(samples);
    const double mean = sum / n;
    const double var = std::max(0.0, sum_sq / n - mean * mean);
    KinematicConstants out;
    out.v_bar = v_bar;
    out.v_hat = mean / v_bar;
    out.std_error = std::sqrt(var / n) / v_bar;
    return out;
}

}  // namespace tvc::geometry
