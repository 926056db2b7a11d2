#pragma once

// Scalar test fields f(x,y) ≥ 0 over the bounding square, the near-constant
// speed model c(x) = c₀ + ε(x), and travel-time integration along ray legs.
//
// The reconstructed quantity throughout the toolkit is f = 1/c directly, so
// synthetic travel times are line integrals of the test field itself.

#include "brt/geometry.hpp"
#include "brt/rays.hpp"

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace brt {

/// Default field slope K, field-units per length-unit.
inline constexpr double kDefaultFieldSlope = 0.001;
/// Default quadrature density, nodes per length-unit.
inline constexpr int kDefaultQuadraturePointsPerUnit = 4;
/// Number of registered analytic test functions (ids 0..12).
inline constexpr int kNumTestFunctions = 13;

/// Registered analytic test fields over a square of side S with origin
/// (ox, oy) and center c = (cx, cy); r = |p − c|, K is the slope parameter.
///
///   f0   K·r                                       cone
///   f1   K·r²/S                                    paraboloid
///   f2   K·S·exp(−r²/(2(S/8)²))                    Gaussian bump
///   f3   K·(x−ox)                                  ramp in x
///   f4   K·(y−oy)                                  ramp in y
///   f5   K·|p − (c + (S/8, S/8))|                  shifted cone
///   f6   (K·S/4)·(1 + sin(2πx/S)·cos(2πy/S))       sinusoidal modulation
///   f7   K·(|x−cx| + |y−cy|)                       diamond cone
///   f8   K·sqrt((x−cx)²/4 + (y−cy)²)               elliptic cone
///   f9   (K·S/8)·(1 + cos(2πr/S))                  radial cosine bump
///   f10  (K·S/2)·exp(−(|x−cx|+|y−cy|)/(S/4))       exponential ridge
///   f11  K·max(0, S/4 − |p − (c + (S/4, 0))|)       offset compact cone
///   f12  (K·S/16)·(2 + sin(4πx/S) + cos(4πy/S))    separable waves
///
/// All are finite and nonnegative on the square, as required for fields
/// interpreted as 1/c with c > 0.
class ScalarField {
  public:
    static ScalarField test_function(int id, const DomainSpec& dom,
                                     double slope = kDefaultFieldSlope) {
        return test_function(id, dom, slope, dom.center());
    }

    static ScalarField test_function(int id, const DomainSpec& dom, double slope,
                                     Point2 center) {
        if (id < 0 || id >= kNumTestFunctions)
            throw std::invalid_argument("ScalarField: unknown test function id " +
                                        std::to_string(id));
        ScalarField f;
        f.kind_ = Kind::analytic;
        f.id_ = id;
        f.slope_ = slope;
        f.center_ = center;
        f.origin_ = dom.origin;
        f.side_ = dom.side;
        return f;
    }

    /// Piecewise-constant field over a grid of n×n cells of size cell_size;
    /// values in row-major order, one per cell.
    static ScalarField grid_backed(int n, double cell_size, Point2 origin,
                                   std::vector<double> values) {
        if (n < 1 || !(cell_size > 0.0))
            throw std::invalid_argument("ScalarField: invalid grid shape");
        if (values.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n))
            throw std::invalid_argument("ScalarField: grid values must have n*n entries");
        ScalarField f;
        f.kind_ = Kind::grid;
        f.grid_n_ = n;
        f.cell_size_ = cell_size;
        f.origin_ = origin;
        f.values_ = std::move(values);
        return f;
    }

    double operator()(Point2 p) const {
        if (kind_ == Kind::grid) {
            auto clamp_idx = [this](double v) {
                auto i = static_cast<long>(std::floor(v));
                if (i < 0) i = 0;
                if (i >= grid_n_) i = grid_n_ - 1;
                return i;
            };
            const long ix = clamp_idx((p.x - origin_.x) / cell_size_);
            const long iy = clamp_idx((p.y - origin_.y) / cell_size_);
            return values_[static_cast<std::size_t>(iy) * grid_n_ + ix];
        }
        const double s = side_;
        const double k = slope_;
        const double dx = p.x - center_.x;
        const double dy = p.y - center_.y;
        const double r = std::sqrt(dx * dx + dy * dy);
        switch (id_) {
            case 0: return k * r;
            case 1: return k * r * r / s;
            case 2: {
                const double sigma = s / 8.0;
                return k * s * std::exp(-r * r / (2.0 * sigma * sigma));
            }
            case 3: return k * (p.x - origin_.x);
            case 4: return k * (p.y - origin_.y);
            case 5: {
                const double ex = dx - s / 8.0;
                const double ey = dy - s / 8.0;
                return k * std::sqrt(ex * ex + ey * ey);
            }
            case 6:
                return (k * s / 4.0) *
                       (1.0 + std::sin(2.0 * M_PI * p.x / s) * std::cos(2.0 * M_PI * p.y / s));
            case 7: return k * (std::abs(dx) + std::abs(dy));
            case 8: return k * std::sqrt(dx * dx / 4.0 + dy * dy);
            case 9: return (k * s / 8.0) * (1.0 + std::cos(2.0 * M_PI * r / s));
            case 10: return (k * s / 2.0) * std::exp(-(std::abs(dx) + std::abs(dy)) / (s / 4.0));
            case 11: {
                const double ex = dx - s / 4.0;
                return k * std::max(0.0, s / 4.0 - std::sqrt(ex * ex + dy * dy));
            }
            case 12:
                return (k * s / 16.0) *
                       (2.0 + std::sin(4.0 * M_PI * p.x / s) + std::cos(4.0 * M_PI * p.y / s));
            default: throw std::invalid_argument("ScalarField: unknown test function id");
        }
    }

    bool analytic() const { return kind_ == Kind::analytic; }
    int function_id() const { return id_; }
    double slope() const { return slope_; }
    Point2 center() const { return center_; }

  private:
    enum class Kind : std::uint8_t { analytic, grid };

    Kind kind_ = Kind::analytic;
    int id_ = 0;
    double slope_ = kDefaultFieldSlope;
    Point2 center_{};
    Point2 origin_{};
    double side_ = 0.0;
    long grid_n_ = 0;
    double cell_size_ = 0.0;
    std::vector<double> values_;
};

/// Speed of sound close to a known constant. Only documentation and sanity
/// checks use it; the linear system works with f = 1/c directly.
struct SpeedModel {
    double c0 = 1.0;
    ScalarField epsilon;

    double speed(Point2 p) const { return c0 + epsilon(p); }
    double slowness(Point2 p) const { return 1.0 / speed(p); }

    /// Sampled positivity of c over the bounding square.
    bool positive_on(const DomainSpec& dom, int samples_per_side = 64) const {
        for (int i = 0; i <= samples_per_side; ++i) {
            for (int j = 0; j <= samples_per_side; ++j) {
                const Point2 p{dom.origin.x + dom.side * i / samples_per_side,
                               dom.origin.y + dom.side * j / samples_per_side};
                if (!(speed(p) > 0.0)) return false;
            }
        }
        return true;
    }
};

/// Composite-trapezoid line integral of the field along one segment, with at
/// least points_per_unit nodes per length-unit. The segment is integrated in
/// canonical orientation, so reversing it cannot change the result.
inline double integrate_field_along(const Segment& seg, const ScalarField& field,
                                    int points_per_unit = kDefaultQuadraturePointsPerUnit) {
    if (seg.a == seg.b)
        throw std::invalid_argument("integrate_field_along: degenerate segment");
    if (points_per_unit < 1)
        throw std::invalid_argument("integrate_field_along: need at least one node per unit");
    const Segment s = canonical(seg);
    const double len = s.length();
    const auto n = static_cast<long>(std::ceil(len * points_per_unit));
    const double h = len / static_cast<double>(n);
    double sum = 0.5 * (field(s.a) + field(s.b));
    for (long i = 1; i < n; ++i)
        sum += field(s.at(static_cast<double>(i) / static_cast<double>(n)));
    return sum * h;
}

/// Travel time of a ray: the sum of the line integrals over its legs.
inline double travel_time(const Ray& ray, const ScalarField& field,
                          int points_per_unit = kDefaultQuadraturePointsPerUnit) {
    double sum = 0.0;
    for (int i = 0; i < ray.leg_count(); ++i)
        sum += integrate_field_along(ray.leg(i), field, points_per_unit);
    return sum;
}

/// Elementwise travel times, order preserving. Per-ray failures are reported
/// with the ray index attached.
inline std::vector<double> travel_times(std::span<const Ray> rays, const ScalarField& field,
                                        int points_per_unit = kDefaultQuadraturePointsPerUnit) {
    std::vector<double> out;
    out.reserve(rays.size());
    for (std::size_t i = 0; i < rays.size(); ++i) {
        try {
            out.push_back(travel_time(rays[i], field, points_per_unit));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("ray " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

inline std::vector<double> travel_times(const RaySet& set, const ScalarField& field,
                                        int points_per_unit = kDefaultQuadraturePointsPerUnit) {
    return travel_times(std::span<const Ray>(set.rays), field, points_per_unit);
}

}  // namespace brt
