#pragma once

// 2D primitives for broken-ray tomography: points, segments, the square
// observation domain, the axis-aligned square obstacle, and the predicates
// (blocking, boundary membership, mirror reflection, proper intersection)
// that ray generation and abstract-ray partitioning are built on.
//
// All predicates take explicit tolerances in length-units (angle checks in
// radians). Everything here is a pure function on immutable values.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace brt {

/// Default positional tolerance, length-units.
inline constexpr double kDefaultTol = 1e-9;

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Point2 operator+(Point2 r) const { return {x + r.x, y + r.y}; }
    constexpr Point2 operator-(Point2 r) const { return {x - r.x, y - r.y}; }
    constexpr Point2 operator*(double s) const { return {x * s, y * s}; }
    constexpr double dot(Point2 r) const { return x * r.x + y * r.y; }
    constexpr double cross(Point2 r) const { return x * r.y - y * r.x; }
    double norm() const { return std::sqrt(x * x + y * y); }
    constexpr bool operator==(const Point2&) const = default;
};

inline double distance(Point2 a, Point2 b) { return (a - b).norm(); }

/// Lexicographic order (x, then y); used to canonicalize segment orientation.
constexpr bool lex_less(Point2 a, Point2 b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
}

struct Segment {
    Point2 a;
    Point2 b;

    double length() const { return distance(a, b); }
    Point2 direction() const { return b - a; }  // not normalized
    Point2 at(double t) const { return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)}; }
    Segment reversed() const { return {b, a}; }
};

/// Endpoints in lexicographic order, so orientation-independent predicates
/// can evaluate both orientations through the exact same arithmetic.
inline Segment canonical(const Segment& s) {
    return lex_less(s.b, s.a) ? Segment{s.b, s.a} : s;
}

/// Closed axis-aligned box. Both the observation square and the obstacle
/// reduce to this.
struct Box {
    double xmin = 0.0;
    double ymin = 0.0;
    double xmax = 0.0;
    double ymax = 0.0;

    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }

    bool contains(Point2 p) const {
        return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
    }

    /// min distance to the four edge lines; positive strictly inside,
    /// zero on the boundary, negative outside (not the Euclidean distance there).
    double interior_depth(Point2 p) const {
        return std::min(std::min(p.x - xmin, xmax - p.x),
                        std::min(p.y - ymin, ymax - p.y));
    }

    /// Euclidean distance from p to the box boundary (both sides).
    double distance_to_boundary(Point2 p) const {
        const double dx = std::max({xmin - p.x, 0.0, p.x - xmax});
        const double dy = std::max({ymin - p.y, 0.0, p.y - ymax});
        if (dx > 0.0 || dy > 0.0) return std::sqrt(dx * dx + dy * dy);
        return interior_depth(p);
    }
};

/// The square observation region Ω₀; its boundary carries all transmitters
/// and receivers. Coincides with the computation grid's bounding square.
struct DomainSpec {
    double side = 0.0;
    Point2 origin{};  // lower-left corner

    Box box() const { return {origin.x, origin.y, origin.x + side, origin.y + side}; }
    Point2 center() const { return {origin.x + 0.5 * side, origin.y + 0.5 * side}; }

    void validate() const {
        if (!(side > 0.0) || !std::isfinite(side))
            throw std::invalid_argument("DomainSpec: side must be positive and finite");
    }
};

/// Axis-aligned square obstacle Ω₁, strictly inside the observation region.
struct Obstacle {
    Point2 center{};
    double side = 0.0;

    Box box() const {
        const double h = 0.5 * side;
        return {center.x - h, center.y - h, center.x + h, center.y + h};
    }

    void validate(const DomainSpec& dom) const {
        if (!(side > 0.0) || !std::isfinite(side))
            throw std::invalid_argument("Obstacle: side must be positive and finite");
        const Box inner = box();
        const Box outer = dom.box();
        const double margin = std::min(
            std::min(inner.xmin - outer.xmin, outer.xmax - inner.xmax),
            std::min(inner.ymin - outer.ymin, outer.ymax - inner.ymax));
        if (!(margin > 0.0))
            throw std::invalid_argument("Obstacle: must lie strictly inside the domain");
    }
};

/// Parametric clip of a + t(b−a), t ∈ [0,1], against a closed box
/// (Liang–Barsky). Returns the contact interval, or nullopt when disjoint.
inline std::optional<std::pair<double, double>> clip_to_box(const Segment& s, const Box& box) {
    double t0 = 0.0, t1 = 1.0;
    const double d[2] = {s.b.x - s.a.x, s.b.y - s.a.y};
    const double p[2] = {s.a.x, s.a.y};
    const double lo[2] = {box.xmin, box.ymin};
    const double hi[2] = {box.xmax, box.ymax};
    for (int ax = 0; ax < 2; ++ax) {
        if (d[ax] == 0.0) {
            if (p[ax] < lo[ax] || p[ax] > hi[ax]) return std::nullopt;
            continue;
        }
        double ta = (lo[ax] - p[ax]) / d[ax];
        double tb = (hi[ax] - p[ax]) / d[ax];
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return std::nullopt;
    }
    return std::make_pair(t0, t1);
}

/// True iff the open segment intersects the obstacle's interior, or touches
/// its boundary anywhere other than at one of the segment's own endpoints.
/// A ray leg may therefore terminate at a reflection point on ∂Ω₁ without
/// counting as blocked.
inline bool segment_blocked_by_obstacle(const Segment& seg, const Obstacle& obs,
                                        double tol = kDefaultTol) {
    if (seg.a == seg.b)
        throw std::invalid_argument("segment_blocked_by_obstacle: degenerate segment");
    const Segment s = canonical(seg);  // result independent of orientation
    const Box box = obs.box();
    const auto clip = clip_to_box(s, box);
    if (!clip) return false;
    const auto [t0, t1] = *clip;
    if (box.interior_depth(s.at(0.5 * (t0 + t1))) > tol) return true;
    // Grazing contact. Allowed only when confined to a single segment endpoint.
    const double len = s.length();
    const double contact_len = (t1 - t0) * len;
    const double ctol = 2.0 * tol + 1e-12 * len;
    if (contact_len > 2.0 * ctol) return true;  // touches away from a point contact
    const Point2 c = s.at(0.5 * (t0 + t1));
    return !(distance(c, s.a) <= ctol || distance(c, s.b) <= ctol);
}

/// True iff p lies within tol of the observation boundary ∂Ω₀.
inline bool on_observation_boundary(Point2 p, const DomainSpec& dom, double tol = kDefaultTol) {
    return dom.box().distance_to_boundary(p) <= tol;
}

/// Point at arc position s ∈ [0, perimeter), counter-clockwise from the
/// lower-left corner: bottom, right, top, left.
inline Point2 point_at_perimeter(const Box& b, double s) {
    const double side = b.width();
    if (s < side) return {b.xmin + s, b.ymin};
    s -= side;
    if (s < side) return {b.xmax, b.ymin + s};
    s -= side;
    if (s < side) return {b.xmax - s, b.ymax};
    s -= side;
    return {b.xmin, b.ymax - s};
}

namespace detail {

inline bool perimeter_sample_hits_corner(double offset, double spacing, std::size_t count,
                                         double side, double eps) {
    for (std::size_t k = 0; k < count; ++k) {
        const double s = offset + static_cast<double>(k) * spacing;
        const double m = std::fmod(s, side);
        if (m <= eps || side - m <= eps) return true;
    }
    return false;
}

}  // namespace detail

/// Uniform arc-length sampling of ∂Ω₁. Returns ⌊perimeter/spacing⌋ points.
/// With exclude_vertices the sample offset is nudged (deterministically)
/// until no point coincides with a corner.
inline std::vector<Point2> obstacle_boundary_points(const Obstacle& obs, double spacing,
                                                    bool exclude_vertices) {
    if (!(spacing > 0.0) || spacing >= obs.side)
        throw std::invalid_argument("obstacle_boundary_points: require 0 < spacing < side");
    const Box box = obs.box();
    const double perimeter = 4.0 * obs.side;
    const auto count = static_cast<std::size_t>(std::floor(perimeter / spacing));
    double offset = 0.0;
    if (exclude_vertices) {
        offset = 0.5 * spacing;
        const double eps = 1e-9 * obs.side;
        // golden-ratio probing; terminates because corner hits are finite
        constexpr double kGolden = 0.6180339887498949;
        for (int attempt = 0;
             attempt < 64 && detail::perimeter_sample_hits_corner(offset, spacing, count,
                                                                  obs.side, eps);
             ++attempt) {
            offset = std::fmod(offset + kGolden * spacing, spacing);
        }
    }
    std::vector<Point2> points;
    points.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double s = std::fmod(offset + static_cast<double>(k) * spacing, perimeter);
        points.push_back(point_at_perimeter(box, s));
    }
    return points;
}

/// Orientation of the box edge containing p: true → horizontal tangent,
/// false → vertical. nullopt at a corner (tangent undefined).
/// Throws if p is not on the box boundary at all.
inline std::optional<bool> boundary_tangent_horizontal(const Box& box, Point2 p,
                                                       double tol = kDefaultTol) {
    if (box.distance_to_boundary(p) > tol)
        throw std::invalid_argument("boundary_tangent_horizontal: point not on boundary");
    const bool near_vertical = std::min(std::abs(p.x - box.xmin), std::abs(p.x - box.xmax)) <= tol;
    const bool near_horizontal = std::min(std::abs(p.y - box.ymin), std::abs(p.y - box.ymax)) <= tol;
    if (near_vertical && near_horizontal) return std::nullopt;  // corner
    return near_horizontal;
}

/// Angle between the mirror image of dir_in (across an axis-aligned tangent)
/// and dir_out, in [0, π]. Zero means exactly mirror-like.
inline double reflection_angle_error(Point2 dir_in, Point2 dir_out, bool horizontal_tangent) {
    const Point2 ref = horizontal_tangent ? Point2{dir_in.x, -dir_in.y}
                                          : Point2{-dir_in.x, dir_in.y};
    return std::atan2(std::abs(ref.cross(dir_out)), ref.dot(dir_out));
}

/// True iff the angle of incidence equals the angle of reflection (within
/// angle_tol) with respect to the obstacle edge containing p. The incoming
/// segment must end at p and the outgoing segment start there; p must not
/// be an obstacle corner.
inline bool mirror_reflection_check(const Segment& incoming, const Segment& outgoing, Point2 p,
                                    const Obstacle& obs, double angle_tol,
                                    double tol = kDefaultTol) {
    if (distance(incoming.b, p) > tol || distance(outgoing.a, p) > tol)
        throw std::invalid_argument("mirror_reflection_check: segments must meet at p");
    const auto horizontal = boundary_tangent_horizontal(obs.box(), p, tol);
    if (!horizontal)
        throw std::invalid_argument("mirror_reflection_check: undefined tangent at corner");
    return reflection_angle_error(incoming.direction(), outgoing.direction(), *horizontal) <=
           angle_tol;
}

namespace detail {

inline int orientation_sign(Point2 u, Point2 v, Point2 w) {
    const Point2 e = v - u;
    const Point2 f = w - u;
    const double val = e.cross(f);
    const double eps = 1e-12 * (std::abs(e.x * f.y) + std::abs(e.y * f.x));
    if (std::abs(val) <= eps) return 0;
    return val > 0.0 ? 1 : -1;
}

inline bool point_on_segment(Point2 p, const Segment& s) {
    if (orientation_sign(s.a, s.b, p) != 0) return false;
    const Point2 d = s.direction();
    const double t = (p - s.a).dot(d);
    const double len2 = d.dot(d);
    const double eps = 1e-12 * len2;
    return t >= -eps && t <= len2 + eps;
}

inline bool is_endpoint_of(Point2 p, const Segment& s, double eps) {
    return distance(p, s.a) <= eps || distance(p, s.b) <= eps;
}

}  // namespace detail

/// True iff s1 and s2 share a point that is not a common endpoint of the two
/// segments. Transversal crossings, T-contacts against a segment interior,
/// and collinear overlap of positive length all count; meeting only at a
/// shared endpoint does not.
inline bool segments_properly_intersect(const Segment& s1, const Segment& s2) {
    const int o1 = detail::orientation_sign(s1.a, s1.b, s2.a);
    const int o2 = detail::orientation_sign(s1.a, s1.b, s2.b);
    const int o3 = detail::orientation_sign(s2.a, s2.b, s1.a);
    const int o4 = detail::orientation_sign(s2.a, s2.b, s1.b);

    if (o1 * o2 < 0 && o3 * o4 < 0) return true;  // crossing interior to both

    const double eps = 1e-9 * std::max(s1.length(), s2.length());

    if (o1 == 0 && o2 == 0 && o3 == 0 && o4 == 0) {
        // Collinear: positive-length overlap shares non-endpoint points.
        const Point2 d = s1.direction();
        const double len2 = d.dot(d);
        double ta = 0.0, tb = 1.0;
        double tc = (s2.a - s1.a).dot(d) / len2;
        double td = (s2.b - s1.a).dot(d) / len2;
        if (tc > td) std::swap(tc, td);
        const double lo = std::max(ta, tc), hi = std::min(tb, td);
        if ((hi - lo) * std::sqrt(len2) > eps) return true;
    }

    // Endpoint-contact cases: a contact that is not an endpoint of *both*
    // segments is a proper intersection.
    const Point2 candidates[4] = {s2.a, s2.b, s1.a, s1.b};
    const Segment* owners[4] = {&s1, &s1, &s2, &s2};
    for (int i = 0; i < 4; ++i) {
        if (!detail::point_on_segment(candidates[i], *owners[i])) continue;
        const bool shared = detail::is_endpoint_of(candidates[i], s1, eps) &&
                            detail::is_endpoint_of(candidates[i], s2, eps);
        if (!shared) return true;
    }
    return false;
}

}  // namespace brt
