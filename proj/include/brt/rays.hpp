#pragma once

// Broken/unbroken rays between boundary transceivers, reflection models,
// seeded ray-set construction, abstract rays (sets of pairwise
// non-intersecting rays solved as one equation), the greedy partitioner
// that builds them, and the coverage bitmap over a reference ray set.

#include "brt/geometry.hpp"

#include <bit>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace brt {

/// Default angular tolerance for specular acceptance, radians.
inline constexpr double kDefaultAngleTol = 0.02;

enum class RayKind : std::uint8_t { unbroken, broken };

/// A ray travels transmitter → receiver, reflecting once at h for broken rays.
/// Unbroken rays keep h zeroed so exact tuple equality is well defined.
struct Ray {
    RayKind kind = RayKind::unbroken;
    Point2 t{};
    Point2 h{};
    Point2 r{};

    static Ray unbroken(Point2 t, Point2 r) { return {RayKind::unbroken, t, {}, r}; }
    static Ray broken(Point2 t, Point2 h, Point2 r) { return {RayKind::broken, t, h, r}; }

    int leg_count() const { return kind == RayKind::broken ? 2 : 1; }

    Segment leg(int i) const {
        if (kind == RayKind::unbroken) return {t, r};
        return i == 0 ? Segment{t, h} : Segment{h, r};
    }

    double path_length() const {
        double sum = 0.0;
        for (int i = 0; i < leg_count(); ++i) sum += leg(i).length();
        return sum;
    }

    bool operator==(const Ray&) const = default;
};

namespace detail {

inline std::uint64_t canon_bits(double v) {
    return std::bit_cast<std::uint64_t>(v + 0.0);  // folds -0 into +0
}

inline std::size_t hash_mix(std::size_t seed, std::uint64_t v) {
    // splitmix-style combiner
    v += 0x9e3779b97f4a7c15ull + seed;
    v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ull;
    v = (v ^ (v >> 27)) * 0x94d049bb133111ebull;
    return static_cast<std::size_t>(v ^ (v >> 31));
}

}  // namespace detail

struct RayHash {
    std::size_t operator()(const Ray& r) const {
        std::size_t h = detail::hash_mix(0, static_cast<std::uint64_t>(r.kind));
        for (double v : {r.t.x, r.t.y, r.h.x, r.h.y, r.r.x, r.r.y})
            h = detail::hash_mix(h, detail::canon_bits(v));
        return h;
    }
};

struct PointHash {
    std::size_t operator()(Point2 p) const {
        return detail::hash_mix(detail::hash_mix(0, detail::canon_bits(p.x)),
                                detail::canon_bits(p.y));
    }
};

/// Receivers and transmitters on ∂Ω₀ plus candidate reflection points on ∂Ω₁.
struct TransceiverLayout {
    std::vector<Point2> receivers;
    std::vector<Point2> transmitters;
    std::vector<Point2> obstacle_points;

    void validate(const DomainSpec& dom, const Obstacle& obs, double tol = kDefaultTol) const {
        for (const auto& p : receivers)
            if (!on_observation_boundary(p, dom, tol))
                throw std::invalid_argument("TransceiverLayout: receiver off the boundary");
        for (const auto& p : transmitters)
            if (!on_observation_boundary(p, dom, tol))
                throw std::invalid_argument("TransceiverLayout: transmitter off the boundary");
        for (const auto& p : obstacle_points)
            if (obs.box().distance_to_boundary(p) > tol)
                throw std::invalid_argument("TransceiverLayout: reflection point off the obstacle");
    }
};

/// Ordered, duplicate-free list of rays with the seed that shaped it.
struct RaySet {
    std::vector<Ray> rays;
    std::uint64_t seed = 0;
};

enum class ReflectionModel : std::uint8_t { lambertian, specular };

enum class RayRejection : std::uint8_t { blocked, not_specular };

/// Outcome of a single generation draw.
struct RayDraw {
    std::optional<Ray> ray;
    RayRejection rejection = RayRejection::blocked;

    explicit operator bool() const { return ray.has_value(); }
};

/// Geometric validity of an unbroken candidate: positive length and an
/// unobstructed sight line.
inline bool unbroken_ray_ok(Point2 t, Point2 r, const Obstacle& obs, double tol = kDefaultTol) {
    if (t == r) return false;
    return !segment_blocked_by_obstacle({t, r}, obs, tol);
}

/// Geometric validity of a broken candidate: both legs touch ∂Ω₁ only at h
/// and the legs do not overlap collinearly.
inline bool broken_ray_ok(Point2 t, Point2 h, Point2 r, const Obstacle& obs,
                          double tol = kDefaultTol) {
    if (t == h || h == r) return false;
    const Segment in{t, h}, out{h, r};
    if (segment_blocked_by_obstacle(in, obs, tol)) return false;
    if (segment_blocked_by_obstacle(out, obs, tol)) return false;
    return !segments_properly_intersect(in, out);
}

/// Mirror condition at h for a broken candidate; corners never qualify.
inline bool broken_ray_specular_ok(Point2 t, Point2 h, Point2 r, const Obstacle& obs,
                                   double angle_tol, double tol = kDefaultTol) {
    const auto horizontal = boundary_tangent_horizontal(obs.box(), h, tol);
    if (!horizontal) return false;
    return reflection_angle_error(Point2{h - t}, Point2{r - h}, *horizontal) <= angle_tol;
}

/// One uniform draw of (r, t, h) from R×T×H. Accepts iff both legs are
/// unobstructed; specular mode additionally requires the mirror condition
/// at h. Lambertian mode imposes no angle constraint.
inline RayDraw generate_broken_ray(std::mt19937_64& rng, const TransceiverLayout& layout,
                                   const DomainSpec& dom, const Obstacle& obs,
                                   ReflectionModel model, double angle_tol = kDefaultAngleTol,
                                   double tol = kDefaultTol) {
    (void)dom;
    if (layout.receivers.empty() || layout.transmitters.empty() || layout.obstacle_points.empty())
        throw std::invalid_argument("generate_broken_ray: layout must be nonempty");
    const Point2 r = layout.receivers[rng() % layout.receivers.size()];
    const Point2 t = layout.transmitters[rng() % layout.transmitters.size()];
    const Point2 h = layout.obstacle_points[rng() % layout.obstacle_points.size()];
    if (!broken_ray_ok(t, h, r, obs, tol)) return {std::nullopt, RayRejection::blocked};
    if (model == ReflectionModel::specular && !broken_ray_specular_ok(t, h, r, obs, angle_tol, tol))
        return {std::nullopt, RayRejection::not_specular};
    return {Ray::broken(t, h, r), RayRejection::blocked};
}

/// One uniform draw of (r, t). Accepts iff the chord has positive length and
/// does not meet the obstacle.
inline RayDraw generate_unbroken_ray(std::mt19937_64& rng, const TransceiverLayout& layout,
                                     const DomainSpec& dom, const Obstacle& obs,
                                     double tol = kDefaultTol) {
    (void)dom;
    if (layout.receivers.empty() || layout.transmitters.empty())
        throw std::invalid_argument("generate_unbroken_ray: layout must be nonempty");
    const Point2 r = layout.receivers[rng() % layout.receivers.size()];
    const Point2 t = layout.transmitters[rng() % layout.transmitters.size()];
    if (!unbroken_ray_ok(t, r, obs, tol)) return {std::nullopt, RayRejection::blocked};
    return {Ray::unbroken(t, r), RayRejection::blocked};
}

/// A built ray set plus the request it was built against, so callers can see
/// the shortfall when the layout cannot supply enough distinct rays.
struct BuildRayResult {
    RaySet set;
    std::size_t broken_requested = 0;
    std::size_t unbroken_requested = 0;
    std::size_t broken_generated = 0;
    std::size_t unbroken_generated = 0;

    std::size_t broken_shortfall() const { return broken_requested - broken_generated; }
    std::size_t unbroken_shortfall() const { return unbroken_requested - unbroken_generated; }
};

namespace detail {

inline void fisher_yates(std::vector<Ray>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[rng() % i]);
}

}  // namespace detail

/// Builds n_b distinct broken and n_u distinct unbroken rays (or all that
/// exist, if fewer). Rejection sampling is capped at 50× the requested count,
/// after which the remaining candidates are taken by exhaustive enumeration
/// over T×H×R (resp. T×R). The final order is a seed-determined shuffle.
inline BuildRayResult build_ray_set(const TransceiverLayout& layout, const DomainSpec& dom,
                                    const Obstacle& obs, std::size_t n_b, std::size_t n_u,
                                    ReflectionModel model, std::uint64_t seed,
                                    double angle_tol = kDefaultAngleTol,
                                    double tol = kDefaultTol) {
    std::mt19937_64 rng(seed);
    std::vector<Ray> rays;
    rays.reserve(n_b + n_u);
    std::unordered_set<Ray, RayHash> seen;
    seen.reserve(2 * (n_b + n_u) + 16);

    std::size_t broken = 0;
    if (n_b > 0 && !layout.obstacle_points.empty() && !layout.receivers.empty() &&
        !layout.transmitters.empty()) {
        for (std::size_t attempt = 0; broken < n_b && attempt < 50 * n_b; ++attempt) {
            auto draw = generate_broken_ray(rng, layout, dom, obs, model, angle_tol, tol);
            if (draw && seen.insert(*draw.ray).second) {
                rays.push_back(*draw.ray);
                ++broken;
            }
        }
        if (broken < n_b) {
            for (const auto& t : layout.transmitters) {
                for (const auto& h : layout.obstacle_points) {
                    for (const auto& r : layout.receivers) {
                        if (broken == n_b) break;
                        if (!broken_ray_ok(t, h, r, obs, tol)) continue;
                        if (model == ReflectionModel::specular &&
                            !broken_ray_specular_ok(t, h, r, obs, angle_tol, tol))
                            continue;
                        const Ray ray = Ray::broken(t, h, r);
                        if (seen.insert(ray).second) {
                            rays.push_back(ray);
                            ++broken;
                        }
                    }
                }
            }
        }
    }

    std::size_t unbroken = 0;
    if (n_u > 0 && !layout.receivers.empty() && !layout.transmitters.empty()) {
        for (std::size_t attempt = 0; unbroken < n_u && attempt < 50 * n_u; ++attempt) {
            auto draw = generate_unbroken_ray(rng, layout, dom, obs, tol);
            if (draw && seen.insert(*draw.ray).second) {
                rays.push_back(*draw.ray);
                ++unbroken;
            }
        }
        if (unbroken < n_u) {
            for (const auto& t : layout.transmitters) {
                for (const auto& r : layout.receivers) {
                    if (unbroken == n_u) break;
                    if (!unbroken_ray_ok(t, r, obs, tol)) continue;
                    const Ray ray = Ray::unbroken(t, r);
                    if (seen.insert(ray).second) {
                        rays.push_back(ray);
                        ++unbroken;
                    }
                }
            }
        }
    }

    detail::fisher_yates(rays, rng);
    return {RaySet{std::move(rays), seed}, n_b, n_u, broken, unbroken};
}

enum class AbstractMode : std::uint8_t { off, chained, free };

/// Elements are indices into the source RaySet, in chain order for chained
/// mode. The constituent segments are pairwise non-intersecting except at
/// shared endpoints.
struct AbstractRay {
    std::vector<std::uint32_t> elements;
};

struct AbstractRaySet {
    std::vector<AbstractRay> rays;
    AbstractMode mode = AbstractMode::free;
};

struct PartitionOptions {
    bool specular_chaining = false;
    double angle_tol = kDefaultAngleTol;
    /// free mode: maximum rays per abstract ray (0 = unbounded)
    std::size_t free_group_cap = 4;
    /// free mode: how many of the most recently opened groups a ray may try
    std::size_t free_scan_window = 64;
    double tol = kDefaultTol;
    /// Optional cell-footprint provider for free mode. When set, rays join a
    /// group only if their footprints share no cell (checked geometrically as
    /// well), so reduced rows combine exactly: no cell is hit twice.
    std::function<std::vector<std::uint32_t>(const Ray&)> footprint{};
    std::size_t footprint_cells = 0;  // exclusive upper bound on footprint ids
};

namespace detail {

inline bool ray_intersects_group(const Ray& candidate, const std::vector<std::uint32_t>& group,
                                 const std::vector<Ray>& rays) {
    for (std::uint32_t idx : group) {
        const Ray& member = rays[idx];
        for (int i = 0; i < candidate.leg_count(); ++i)
            for (int j = 0; j < member.leg_count(); ++j)
                if (segments_properly_intersect(candidate.leg(i), member.leg(j))) return true;
    }
    return false;
}

/// The leg incident to a ray's boundary endpoint v, as a segment ending at v.
inline std::optional<Segment> incident_leg_into(const Ray& ray, Point2 v) {
    if (ray.t == v) return ray.leg(0).reversed();
    if (ray.r == v) return ray.leg(ray.leg_count() - 1);
    return std::nullopt;
}

inline AbstractRaySet partition_chained(const RaySet& source, const DomainSpec& dom,
                                        const PartitionOptions& opt) {
    const auto& rays = source.rays;
    std::unordered_map<Point2, std::vector<std::uint32_t>, PointHash> at_vertex;
    for (std::uint32_t i = 0; i < rays.size(); ++i) {
        at_vertex[rays[i].t].push_back(i);
        at_vertex[rays[i].r].push_back(i);
    }

    const Box dom_box = dom.box();
    std::vector<bool> used(rays.size(), false);

    auto chain_ok_at = [&](const Ray& tail, const Ray& next, Point2 v) {
        if (!opt.specular_chaining) return true;
        const auto horizontal = boundary_tangent_horizontal(dom_box, v, opt.tol);
        if (!horizontal) return false;  // no tangent at a domain corner
        const auto in_leg = incident_leg_into(tail, v);
        const auto out_leg = incident_leg_into(next, v);
        if (!in_leg || !out_leg) return false;
        return reflection_angle_error(in_leg->direction(), out_leg->reversed().direction(),
                                      *horizontal) <= opt.angle_tol;
    };

    AbstractRaySet result;
    result.mode = AbstractMode::chained;
    for (std::uint32_t start = 0; start < rays.size(); ++start) {
        if (used[start]) continue;
        used[start] = true;
        std::deque<std::uint32_t> chain{start};
        Point2 front_v = rays[start].t;
        Point2 back_v = rays[start].r;

        bool extended = true;
        while (extended) {
            extended = false;
            for (int end = 0; end < 2 && !extended; ++end) {
                const Point2 v = end == 0 ? back_v : front_v;
                const Ray& tail = rays[end == 0 ? chain.back() : chain.front()];
                auto it = at_vertex.find(v);
                if (it == at_vertex.end()) continue;
                for (std::uint32_t cand : it->second) {
                    if (used[cand]) continue;
                    const Ray& next = rays[cand];
                    if (next.t != v && next.r != v) continue;
                    const Point2 other = next.t == v ? next.r : next.t;
                    if (!chain_ok_at(tail, next, v)) continue;
                    bool crosses = false;
                    for (std::uint32_t idx : chain) {
                        const Ray& member = rays[idx];
                        for (int i = 0; i < next.leg_count() && !crosses; ++i)
                            for (int j = 0; j < member.leg_count() && !crosses; ++j)
                                crosses = segments_properly_intersect(next.leg(i), member.leg(j));
                        if (crosses) break;
                    }
                    if (crosses) continue;
                    used[cand] = true;
                    if (end == 0) {
                        chain.push_back(cand);
                        back_v = other;
                    } else {
                        chain.push_front(cand);
                        front_v = other;
                    }
                    extended = true;
                    break;
                }
            }
        }
        AbstractRay ar;
        ar.elements.assign(chain.begin(), chain.end());
        result.rays.push_back(std::move(ar));
    }
    return result;
}

inline AbstractRaySet partition_free(const RaySet& source, const PartitionOptions& opt) {
    const auto& rays = source.rays;
    AbstractRaySet result;
    result.mode = AbstractMode::free;
    std::deque<std::size_t> open;  // indices into result.rays, oldest first

    const bool by_footprint = static_cast<bool>(opt.footprint);
    const std::size_t words = by_footprint ? (opt.footprint_cells + 63) / 64 : 0;
    std::vector<std::vector<std::uint64_t>> group_cells;  // per group, when by_footprint
    std::vector<std::uint64_t> candidate(words);

    for (std::uint32_t i = 0; i < rays.size(); ++i) {
        std::vector<std::uint32_t> cells;
        if (by_footprint) {
            cells = opt.footprint(rays[i]);
            std::fill(candidate.begin(), candidate.end(), 0);
            for (std::uint32_t c : cells) {
                if (c >= opt.footprint_cells)
                    throw std::invalid_argument("partition_abstract_rays: footprint id out of range");
                candidate[c / 64] |= 1ull << (c % 64);
            }
        }
        bool placed = false;
        for (auto it = open.begin(); it != open.end() && !placed; ++it) {
            auto& group = result.rays[*it].elements;
            if (opt.free_group_cap != 0 && group.size() >= opt.free_group_cap) continue;
            if (by_footprint) {
                auto& taken = group_cells[*it];
                bool overlap = false;
                for (std::size_t wdx = 0; wdx < words && !overlap; ++wdx)
                    overlap = (taken[wdx] & candidate[wdx]) != 0;
                if (overlap) continue;
                // disjoint footprints can still cross exactly at a grid
                // corner, so confirm geometrically before joining
                if (ray_intersects_group(rays[i], group, rays)) continue;
                for (std::size_t wdx = 0; wdx < words; ++wdx) taken[wdx] |= candidate[wdx];
            } else if (ray_intersects_group(rays[i], group, rays)) {
                continue;
            }
            group.push_back(i);
            placed = true;
        }
        if (!placed) {
            result.rays.push_back(AbstractRay{{i}});
            if (by_footprint) group_cells.push_back(candidate);
            open.push_back(result.rays.size() - 1);
            if (opt.free_scan_window != 0 && open.size() > opt.free_scan_window)
                open.pop_front();
        }
    }
    return result;
}

}  // namespace detail

/// Partitions the ray set into abstract rays. Chained mode grows each
/// abstract ray at either end through shared boundary vertices (with a
/// mirror check at the shared vertex when specular_chaining is set); free
/// mode greedily groups pairwise non-intersecting rays with no adjacency
/// requirement. Every input ray lands in exactly one abstract ray.
inline AbstractRaySet partition_abstract_rays(const RaySet& source, AbstractMode mode,
                                              const DomainSpec& dom,
                                              const PartitionOptions& opt = {}) {
    if (source.rays.empty())
        throw std::invalid_argument("partition_abstract_rays: empty ray set");
    if (source.rays.size() > 0xffffffffull)
        throw std::invalid_argument("partition_abstract_rays: ray set too large");
    switch (mode) {
        case AbstractMode::chained:
            return detail::partition_chained(source, dom, opt);
        case AbstractMode::free:
            return detail::partition_free(source, opt);
        default:
            throw std::invalid_argument("partition_abstract_rays: mode must be chained or free");
    }
}

/// Travel time of each abstract ray: the sum of its elements' travel times.
inline std::vector<double> abstract_travel_times(const AbstractRaySet& abstract,
                                                 std::span<const double> times) {
    std::vector<double> out;
    out.reserve(abstract.rays.size());
    for (const auto& ar : abstract.rays) {
        double sum = 0.0;
        for (std::uint32_t idx : ar.elements) {
            if (idx >= times.size())
                throw std::invalid_argument("abstract_travel_times: element index out of range");
            sum += times[idx];
        }
        out.push_back(sum);
    }
    return out;
}

struct CoverageReport {
    bool complete = false;
    std::vector<std::size_t> missing;  // ascending indices into the reference set
};

/// Marks a bit for every ray of `reference` that appears as an element of
/// some abstract ray (O(1) hash lookups keyed on exact endpoint tuples) and
/// reports the uncovered remainder.
inline CoverageReport coverage_bitmap_check(const AbstractRaySet& abstract,
                                            const RaySet& abstract_source,
                                            const RaySet& reference) {
    std::unordered_map<Ray, std::size_t, RayHash> index_of;
    index_of.reserve(2 * reference.rays.size() + 16);
    for (std::size_t i = 0; i < reference.rays.size(); ++i)
        index_of.emplace(reference.rays[i], i);

    std::vector<bool> bitmap(reference.rays.size(), false);
    for (const auto& ar : abstract.rays) {
        for (std::uint32_t idx : ar.elements) {
            if (idx >= abstract_source.rays.size())
                throw std::invalid_argument("coverage_bitmap_check: element index out of range");
            auto it = index_of.find(abstract_source.rays[idx]);
            if (it != index_of.end()) bitmap[it->second] = true;
        }
    }

    CoverageReport report;
    for (std::size_t i = 0; i < bitmap.size(); ++i)
        if (!bitmap[i]) report.missing.push_back(i);
    report.complete = report.missing.empty();
    return report;
}

struct RayUniverse {
    std::size_t unbroken_max = 0;
    std::size_t broken_max = 0;  // Lambertian triples
};

/// Exhaustive count of distinct valid (t, r) pairs and Lambertian (t, h, r)
/// triples for the given layout.
inline RayUniverse count_max_rays(const TransceiverLayout& layout, const Obstacle& obs,
                                  double tol = kDefaultTol) {
    RayUniverse u;
    for (const auto& t : layout.transmitters)
        for (const auto& r : layout.receivers)
            if (unbroken_ray_ok(t, r, obs, tol)) ++u.unbroken_max;
    for (const auto& t : layout.transmitters)
        for (const auto& h : layout.obstacle_points)
            for (const auto& r : layout.receivers)
                if (broken_ray_ok(t, h, r, obs, tol)) ++u.broken_max;
    return u;
}

}  // namespace brt
