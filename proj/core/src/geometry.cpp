// SPDX-License-Identifier: Apache-2.0
//
// mbrec - multi-bounce channel simulation and scatterer localization

#include "mbrec/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace mbrec {

namespace {

constexpr double kSegEps = 1e-12;

// Signed double area of triangle (a, b, c).
double orient(Point2 a, Point2 b, Point2 c) { return cross(b - a, c - a); }

bool on_segment(Point2 a, Point2 b, Point2 p) {
    if (std::abs(orient(a, b, p)) > kSegEps * (1.0 + distance(a, b))) return false;
    return p.x >= std::min(a.x, b.x) - kSegEps && p.x <= std::max(a.x, b.x) + kSegEps &&
           p.y >= std::min(a.y, b.y) - kSegEps && p.y <= std::max(a.y, b.y) + kSegEps;
}

// Inclusive segment-segment intersection (touching counts).
bool segments_intersect(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
    const double d1 = orient(q1, q2, p1);
    const double d2 = orient(q1, q2, p2);
    const double d3 = orient(p1, p2, q1);
    const double d4 = orient(p1, p2, q2);
    if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
        ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
        return true;
    return on_segment(q1, q2, p1) || on_segment(q1, q2, p2) ||
           on_segment(p1, p2, q1) || on_segment(p1, p2, q2);
}

// Point inside or on boundary of a convex polygon (any winding).
bool point_in_convex(const std::vector<Point2>& poly, Point2 p) {
    const std::size_t n = poly.size();
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = orient(poly[i], poly[(i + 1) % n], p);
        if (d > kSegEps) has_pos = true;
        if (d < -kSegEps) has_neg = true;
    }
    return !(has_pos && has_neg);
}

// Intersection of the segment (p1, p2) with the line through wall.a/wall.b.
// Returns the wall-line parameter u and segment parameter t.
std::optional<std::pair<double, double>> segment_line_params(Point2 p1, Point2 p2,
                                                             const Wall& wall) {
    const Point2 d = p2 - p1;
    const Point2 w = wall.b - wall.a;
    const double denom = cross(d, w);
    if (std::abs(denom) < 1e-15 * (norm(d) * norm(w) + 1.0)) return std::nullopt;
    const Point2 r = wall.a - p1;
    const double t = cross(r, w) / denom;
    const double u = cross(r, d) / denom;
    return std::make_pair(u, t);
}

}  // namespace

double Obstacle::area() const {
    double a = 0.0;
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) a += cross(vertices[i], vertices[(i + 1) % n]);
    return 0.5 * std::abs(a);
}

void Obstacle::validate() const {
    if (vertices.size() < 3) throw invalid_geometry("obstacle needs at least 3 vertices");
    if (area() <= 0.0) throw invalid_geometry("obstacle polygon is degenerate");
    // Convexity: all cross products of consecutive edges share a sign.
    const std::size_t n = vertices.size();
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 e1 = vertices[(i + 1) % n] - vertices[i];
        const Point2 e2 = vertices[(i + 2) % n] - vertices[(i + 1) % n];
        const double c = cross(e1, e2);
        if (c > kSegEps) has_pos = true;
        if (c < -kSegEps) has_neg = true;
    }
    if (has_pos && has_neg) throw invalid_geometry("obstacle polygon is not convex");
}

void Scene::validate() const {
    auto inside = [&](Point2 p, const char* what) {
        if (p.x < -kSegEps || p.x > room_width + kSegEps || p.y < -kSegEps ||
            p.y > room_height + kSegEps)
            throw invalid_geometry(std::string(what) + " lies outside room bounds");
    };
    if (room_width <= 0.0 || room_height <= 0.0)
        throw invalid_geometry("room bounds must be positive");
    for (const auto& w : walls) {
        if (distance(w.a, w.b) < kSegEps)
            throw invalid_geometry("wall '" + w.label + "' is degenerate");
        inside(w.a, "wall endpoint");
        inside(w.b, "wall endpoint");
    }
    for (const auto* arr : {&tx, &rx}) {
        if (arr->element_count < 1) throw invalid_geometry("element_count must be >= 1");
        if (arr->element_count > 1 && arr->element_spacing <= 0.0)
            throw invalid_geometry("element_spacing must be positive");
        if (std::abs(norm(arr->orientation) - 1.0) > 1e-9)
            throw invalid_geometry("array orientation must be a unit vector");
        inside(arr->element(0), "array element");
        inside(arr->element(arr->element_count - 1), "array element");
    }
    if (obstacle) obstacle->validate();
}

Point2 mirror_point(Point2 p, const Wall& wall) {
    const Point2 d = wall.b - wall.a;
    const double len2 = dot(d, d);
    if (len2 < kSegEps * kSegEps) throw invalid_geometry("degenerate wall");
    const Point2 r = p - wall.a;
    const double t = dot(r, d) / len2;
    const Point2 foot = wall.a + t * d;
    return foot + (foot - p);
}

std::optional<Point2> trace_one_bounce(Point2 tx_el, Point2 rx_el, const Wall& wall) {
    const Point2 w = wall.b - wall.a;
    const double side_tx = cross(w, tx_el - wall.a);
    const double side_rx = cross(w, rx_el - wall.a);
    if (side_tx * side_rx < 0.0) return std::nullopt;  // opposite sides
    const Point2 image = mirror_point(tx_el, wall);
    const auto params = segment_line_params(image, rx_el, wall);
    if (!params) {
        // Image-to-rx segment parallel to the wall happens only when both
        // endpoints are on the wall line.
        if (std::abs(side_tx) < kSegEps && std::abs(side_rx) < kSegEps) return std::nullopt;
        return std::nullopt;
    }
    const auto [u, t] = *params;
    if (u < -kSegEps || u > 1.0 + kSegEps) return std::nullopt;
    if (t < -kSegEps || t > 1.0 + kSegEps) return std::nullopt;
    return wall.point_at(std::clamp(u, 0.0, 1.0));
}

std::optional<std::pair<Point2, Point2>> trace_two_bounce(Point2 tx_el, Point2 rx_el,
                                                          const Wall& wall1,
                                                          const Wall& wall2) {
    const Point2 image1 = mirror_point(tx_el, wall1);
    const Point2 image2 = mirror_point(image1, wall2);
    const auto p2 = segment_line_params(image2, rx_el, wall2);
    if (!p2) return std::nullopt;
    const auto [u2, t2] = *p2;
    if (u2 < -kSegEps || u2 > 1.0 + kSegEps || t2 < -kSegEps || t2 > 1.0 + kSegEps)
        return std::nullopt;
    const Point2 s2 = wall2.point_at(std::clamp(u2, 0.0, 1.0));
    const auto p1 = segment_line_params(image1, s2, wall1);
    if (!p1) return std::nullopt;
    const auto [u1, t1] = *p1;
    if (u1 < -kSegEps || u1 > 1.0 + kSegEps || t1 < -kSegEps || t1 > 1.0 + kSegEps)
        return std::nullopt;
    const Point2 s1 = wall1.point_at(std::clamp(u1, 0.0, 1.0));
    // The incoming leg must actually reach wall1 before wall2.
    if (distance(tx_el, s1) < kSegEps) return std::nullopt;
    return std::make_pair(s1, s2);
}

double path_length(Point2 tx_el, std::span<const Point2> scatterers, Point2 rx_el) {
    double d = 0.0;
    Point2 prev = tx_el;
    for (const auto& s : scatterers) {
        d += distance(prev, s);
        prev = s;
    }
    d += distance(prev, rx_el);
    return d;
}

bool segment_blocked(Point2 a, Point2 b, const Obstacle& obstacle) {
    const auto& poly = obstacle.vertices;
    if (point_in_convex(poly, a) || point_in_convex(poly, b)) return true;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i)
        if (segments_intersect(a, b, poly[i], poly[(i + 1) % n])) return true;
    return false;
}

std::vector<std::uint8_t> path_blockage_mask(
    const Scene& scene,
    const std::vector<std::optional<std::vector<Point2>>>& per_channel_scatterers) {
    const int M = scene.tx.element_count;
    const int N = scene.rx.element_count;
    if (per_channel_scatterers.size() != static_cast<std::size_t>(M) * N)
        throw invalid_geometry("per-channel scatterer list does not match array dims");
    std::vector<std::uint8_t> mask(per_channel_scatterers.size(), 1);
    for (int m = 0; m < M; ++m) {
        for (int n = 0; n < N; ++n) {
            const std::size_t c = static_cast<std::size_t>(m) * N + n;
            const auto& pts = per_channel_scatterers[c];
            if (!pts) {
                mask[c] = 0;
                continue;
            }
            if (!scene.obstacle) continue;
            Point2 prev = scene.tx.element(m);
            bool blocked = false;
            for (const auto& s : *pts) {
                if (segment_blocked(prev, s, *scene.obstacle)) {
                    blocked = true;
                    break;
                }
                prev = s;
            }
            if (!blocked && segment_blocked(prev, scene.rx.element(n), *scene.obstacle))
                blocked = true;
            if (blocked) mask[c] = 0;
        }
    }
    return mask;
}

}  // namespace mbrec
