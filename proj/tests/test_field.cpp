#include <catch2/catch.hpp>

#include "brt/field.hpp"

#include <cmath>
#include <random>

using namespace brt;

namespace {

const DomainSpec kDom{512.0, {0.0, 0.0}};

ScalarField constant_field(double value) {
    return ScalarField::grid_backed(1, kDom.side, kDom.origin, {value});
}

}  // namespace

TEST_CASE("cone field evaluates to slope times distance", "[field]") {
    const auto f0 = ScalarField::test_function(0, kDom);
    const Point2 c = kDom.center();
    CHECK(f0(c) == 0.0);
    CHECK(f0({c.x + 3.0, c.y + 4.0}) == Approx(0.005).epsilon(1e-12));  // 3-4-5
}

TEST_CASE("shifted cone matches its registered closed form", "[field]") {
    const auto f5 = ScalarField::test_function(5, kDom);
    const Point2 probe{400.0, 100.0};
    // independent evaluation of the documented closed form
    const double ex = probe.x - (256.0 + 512.0 / 8.0);
    const double ey = probe.y - (256.0 + 512.0 / 8.0);
    const double expected = 0.001 * std::sqrt(ex * ex + ey * ey);
    CHECK(f5(probe) == Approx(expected).epsilon(1e-14));
}

TEST_CASE("unknown test function id is rejected", "[field]") {
    CHECK_THROWS_AS(ScalarField::test_function(13, kDom), std::invalid_argument);
    CHECK_THROWS_AS(ScalarField::test_function(-1, kDom), std::invalid_argument);
}

TEST_CASE("all registered fields are finite and nonnegative on the square", "[field]") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> coord(0.0, 512.0);
    for (int id = 0; id < kNumTestFunctions; ++id) {
        const auto f = ScalarField::test_function(id, kDom);
        for (int i = 0; i < 500; ++i) {
            const double v = f({coord(rng), coord(rng)});
            REQUIRE(std::isfinite(v));
            REQUIRE(v >= 0.0);
        }
    }
}

TEST_CASE("grid-backed field picks the containing cell", "[field]") {
    auto f = ScalarField::grid_backed(2, 4.0, {0.0, 0.0}, {1.0, 2.0, 3.0, 4.0});
    CHECK(f({1.0, 1.0}) == 1.0);
    CHECK(f({5.0, 1.0}) == 2.0);
    CHECK(f({1.0, 5.0}) == 3.0);
    CHECK(f({7.9, 7.9}) == 4.0);
}

TEST_CASE("speed model positivity check", "[field]") {
    const SpeedModel ok{1.0, ScalarField::test_function(0, kDom)};
    CHECK(ok.positive_on(kDom));
    CHECK(ok.speed(kDom.center()) == Approx(1.0));
    CHECK(ok.slowness(kDom.center()) == Approx(1.0));
}

// ---------------------------------------------------------------------------
// travel_time
// ---------------------------------------------------------------------------

TEST_CASE("constant field integrates to value times length", "[field]") {
    const auto f = constant_field(0.002);
    const Ray ray = Ray::unbroken({10.0, 20.0}, {110.0, 20.0});  // length 100
    CHECK(travel_time(ray, f) == Approx(0.2).epsilon(1e-13));
}

TEST_CASE("radial leg under the cone field matches the antiderivative", "[field]") {
    // f0 is linear along any radial leg, so the trapezoid rule is exact:
    // ∫0..R K r dr = K R² / 2
    const auto f0 = ScalarField::test_function(0, kDom);
    const Point2 c = kDom.center();
    const Ray ray = Ray::unbroken(c, {c.x + 200.0, c.y});
    CHECK(travel_time(ray, f0) == Approx(20.0).epsilon(1e-9));
}

TEST_CASE("broken ray with radial legs matches a 10x finer oracle", "[field]") {
    const auto f0 = ScalarField::test_function(0, kDom);
    const Point2 c = kDom.center();
    const Ray ray = Ray::broken({c.x - 150.0, c.y}, c, {c.x, c.y + 90.0});
    const double coarse = travel_time(ray, f0, 4);
    const double fine = travel_time(ray, f0, 40);
    CHECK(coarse == Approx(fine).epsilon(1e-9));
    CHECK(coarse == Approx(0.001 * (150.0 * 150.0 + 90.0 * 90.0) / 2.0).epsilon(1e-9));
}

TEST_CASE("broken-ray additivity is exact", "[field]") {
    const auto f2 = ScalarField::test_function(2, kDom);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> coord(10.0, 500.0);
    for (int i = 0; i < 50; ++i) {
        const Point2 t{coord(rng), coord(rng)};
        const Point2 h{coord(rng), coord(rng)};
        const Point2 r{coord(rng), coord(rng)};
        if (t == h || h == r) continue;
        const Ray broken = Ray::broken(t, h, r);
        const double legs = integrate_field_along({t, h}, f2) + integrate_field_along({h, r}, f2);
        CHECK(travel_time(broken, f2) == legs);  // bitwise
    }
}

TEST_CASE("travel time is invariant under ray reversal", "[field]") {
    const auto f9 = ScalarField::test_function(9, kDom);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> coord(5.0, 505.0);
    for (int i = 0; i < 30; ++i) {
        const Point2 t{coord(rng), coord(rng)};
        const Point2 h{coord(rng), coord(rng)};
        const Point2 r{coord(rng), coord(rng)};
        if (t == h || h == r) continue;
        const Ray fwd = Ray::broken(t, h, r);
        const Ray rev = Ray::broken(r, h, t);
        CHECK(travel_time(fwd, f9) == travel_time(rev, f9));  // bitwise
    }
}

TEST_CASE("travel time is positive for positive fields", "[field]") {
    const auto f = constant_field(0.25);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> coord(0.0, 512.0);
    for (int i = 0; i < 100; ++i) {
        const Point2 a{coord(rng), coord(rng)};
        const Point2 b{coord(rng), coord(rng)};
        if (a == b) continue;
        CHECK(travel_time(Ray::unbroken(a, b), f) > 0.0);
    }
}

TEST_CASE("quadrature converges at second order on the cone field", "[field]") {
    const auto f0 = ScalarField::test_function(0, kDom);
    // a chord that misses the center, so the integrand is genuinely curved
    const Ray ray = Ray::unbroken({0.0, 100.0}, {512.0, 400.0});
    const double ref = travel_time(ray, f0, 512);
    const double e1 = std::abs(travel_time(ray, f0, 4) - ref);
    const double e2 = std::abs(travel_time(ray, f0, 8) - ref);
    REQUIRE(e1 > 0.0);
    // halving h divides the error by ~4; allow slack for the outer nodes
    CHECK(e2 < 0.4 * e1);
}

// ---------------------------------------------------------------------------
// travel_times
// ---------------------------------------------------------------------------

TEST_CASE("travel times of an empty set are empty", "[field]") {
    const auto f = constant_field(1.0);
    CHECK(travel_times(std::span<const Ray>{}, f).empty());
}

TEST_CASE("identical rays get identical times", "[field]") {
    const auto f5 = ScalarField::test_function(5, kDom);
    const std::vector<Ray> rays(2, Ray::unbroken({0.0, 10.0}, {512.0, 300.0}));
    const auto times = travel_times(std::span<const Ray>(rays), f5);
    REQUIRE(times.size() == 2);
    CHECK(times[0] == times[1]);
}

TEST_CASE("travel times match elementwise recomputation", "[field]") {
    const auto f2 = ScalarField::test_function(2, kDom);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> coord(1.0, 511.0);
    std::vector<Ray> rays;
    while (rays.size() < 100) {
        const Point2 a{coord(rng), coord(rng)};
        const Point2 b{coord(rng), coord(rng)};
        if (a == b) continue;
        rays.push_back(Ray::unbroken(a, b));
    }
    const auto times = travel_times(std::span<const Ray>(rays), f2);
    REQUIRE(times.size() == rays.size());
    for (std::size_t i = 0; i < rays.size(); ++i)
        CHECK(times[i] == travel_time(rays[i], f2));
}
