// SPDX-License-Identifier: Apache-2.0
//
// mbrec - multi-bounce channel simulation and scatterer localization

#ifndef mbrec_geometry_H
#define mbrec_geometry_H

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mbrec {

struct invalid_geometry : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

// Straight wall segment with a human-readable label ("left", "upper", ...).
struct Wall {
    Point2 a;
    Point2 b;
    std::string label;

    double length() const { return distance(a, b); }
    Point2 point_at(double t) const { return a + t * (b - a); }
};

// Closed convex polygon, vertices in order (either winding).
struct Obstacle {
    std::vector<Point2> vertices;

    double area() const;
    void validate() const;  // throws invalid_geometry if degenerate
};

// Uniform linear array. Element i (0-based) sits at
// reference + i * spacing * orientation, so element 0 is the reference.
struct ArrayGeometry {
    Point2 reference;
    int element_count = 1;
    double element_spacing = 0.0;  // meters
    Point2 orientation{1.0, 0.0};  // unit vector

    Point2 element(int i) const {
        return reference + (static_cast<double>(i) * element_spacing) * orientation;
    }
};

struct Scene {
    std::vector<Wall> walls;
    std::optional<Obstacle> obstacle;
    ArrayGeometry tx;
    ArrayGeometry rx;
    double room_width = 0.0;
    double room_height = 0.0;

    // Throws invalid_geometry when arrays or wall endpoints fall outside
    // room bounds, walls are degenerate, or the obstacle is not convex.
    void validate() const;
};

// Reflection of p across the infinite line through the wall endpoints.
Point2 mirror_point(Point2 p, const Wall& wall);

// Specular reflection point of tx -> wall -> rx, if it lies within the
// wall segment and tx, rx are on the same side of the wall line.
std::optional<Point2> trace_one_bounce(Point2 tx_el, Point2 rx_el, const Wall& wall);

// Ordered pair of specular points for tx -> wall1 -> wall2 -> rx found by
// the double image method. Empty when either point misses its segment.
std::optional<std::pair<Point2, Point2>> trace_two_bounce(Point2 tx_el, Point2 rx_el,
                                                          const Wall& wall1, const Wall& wall2);

// Sum of Euclidean segment lengths tx -> s1 -> ... -> sK -> rx (K may be 0).
double path_length(Point2 tx_el, std::span<const Point2> scatterers, Point2 rx_el);

// True iff segment (a,b) touches the obstacle's interior or boundary.
// Boundary grazing counts as blocked.
bool segment_blocked(Point2 a, Point2 b, const Obstacle& obstacle);

// Per-channel visibility mask for one path. per_channel_scatterers is
// indexed c = m * N + n (m-major); an empty optional marks a channel where
// specular tracing failed, which also yields mask 0. Without an obstacle
// every traced channel is unblocked.
std::vector<std::uint8_t> path_blockage_mask(
    const Scene& scene,
    const std::vector<std::optional<std::vector<Point2>>>& per_channel_scatterers);

}  // namespace mbrec

#endif
