#include <catch2/catch_amalgamated.hpp>

#include "walsh/potential.hpp"

#include "fixtures.hpp"

using namespace walsh;

TEST_CASE("potential of a point-mass ray") {
    RayPotential c(RadialMeasure::point_mass(1.3), 2.0);  // scaled law: point mass at m = 2
    CHECK(c.m() == 2.0);
    for (double r : {0.0, 0.7, 2.0, 3.5, 10.0}) CHECK(c.value(r) == Catch::Approx(std::max(r, 2.0)).margin(1e-14));
    for (double s : {0.0, 0.5, 1.0, 1.9}) {
        CHECK(c.zeta(s) == Catch::Approx(2.0));
        CHECK(c.phi(s) == Catch::Approx(1.0 - s / 2.0));
    }
    CHECK_THROWS_AS(c.zeta(2.0), std::domain_error);
    CHECK_THROWS_AS(c.zeta(-0.1), std::domain_error);
}

TEST_CASE("potential of the two-atom ray") {
    auto t = fixtures::m1();
    RayPotential c(t.ray(0).radial, 2.0);  // scale is the identity here
    CHECK(c.value(0.0) == Catch::Approx(2.0));          // equals m
    CHECK(c.value(0.5) == Catch::Approx(2.0));
    CHECK(c.value(2.0) == Catch::Approx(2.5));           // (r+3)/2 between the atoms
    CHECK(c.value(3.0) == Catch::Approx(3.0));
    CHECK(c.value(7.0) == Catch::Approx(7.0));           // c(r) = r past the support
    for (double r : {0.1, 1.5, 2.9, 4.0}) CHECK(c.value(r) >= r);

    // right derivative equals the scaled CDF (slopes of the linear pieces)
    CHECK((c.value(0.9) - c.value(0.2)) / 0.7 == Catch::Approx(0.0).margin(1e-14));
    CHECK((c.value(2.9) - c.value(1.1)) / 1.8 == Catch::Approx(0.5).margin(1e-14));
    CHECK((c.value(9.0) - c.value(3.1)) / 5.9 == Catch::Approx(1.0).margin(1e-14));

    auto [z1, f1] = tangent(c, 1.0);
    CHECK(z1 == Catch::Approx(3.0));
    CHECK(f1 == Catch::Approx(2.0 / 3.0));
    auto [z15, f15] = tangent(c, 1.5);
    CHECK(z15 == Catch::Approx(3.0));  // both kinks achieve the minimum; ties go up
    CHECK(f15 == Catch::Approx(0.5));
    auto [z17, f17] = tangent(c, 1.7);
    CHECK(z17 == Catch::Approx(1.0));
    CHECK(f17 == Catch::Approx(2.0 - 1.7));
    CHECK(c.zeta(0.0) == Catch::Approx(3.0));  // tables use the finite limit at s = 0
}

TEST_CASE("tangency inside a density piece is closed form") {
    auto t = fixtures::flat_ray();  // uniform on [0,2], m = 1
    RayPotential c(t.ray(0).radial, 1.0);
    // c(r) = 1 + r^2/4 below 2, hence zeta(s) = 2 sqrt(1-s), phi = sqrt(1-s)
    for (double r : {0.3, 1.0, 1.9}) CHECK(c.value(r) == Catch::Approx(1.0 + r * r / 4.0).margin(1e-14));
    for (double s : {0.05, 0.4, 0.9, 0.99}) {
        CHECK(c.zeta(s) == Catch::Approx(2.0 * std::sqrt(1.0 - s)).margin(1e-12));
        CHECK(c.phi(s) == Catch::Approx(std::sqrt(1.0 - s)).margin(1e-12));
    }
    // oracle: tangency minimizes (c(r) - s)/r over a fine radius grid
    const double s = 0.37;
    double best = std::numeric_limits<double>::infinity(), best_r = 0.0;
    for (int i = 1; i <= 400000; ++i) {
        const double r = 2.5 * i / 400000.0;
        const double slope = (c.value(r) - s) / r;
        if (slope < best) {
            best = slope;
            best_r = r;
        }
    }
    CHECK(c.zeta(s) == Catch::Approx(best_r).margin(1e-4));
    CHECK(c.phi(s) == Catch::Approx(best).margin(1e-8));
}

TEST_CASE("origin atoms pin the tangent at the lowest support point") {
    auto t = fixtures::half_origin();  // {0: 1/2, 2: 1/2}, m = 1
    RayPotential c(t.ray(0).radial, 1.0);
    // scaled law keeps the shape: atom of 1/2 at 0 and at 2
    CHECK(c.value(0.0) == Catch::Approx(1.0));
    CHECK(c.value(1.0) == Catch::Approx(1.5));  // slope 1/2 from the origin atom
    for (double s : {0.2, 0.7, 0.98}) {
        CHECK(c.zeta(s) == Catch::Approx(2.0));
        CHECK(c.phi(s) == Catch::Approx((2.0 - s) / 2.0));
    }
    // phi approaches the origin mass as s -> m
    CHECK(c.phi(0.999999) == Catch::Approx(0.5).margin(1e-5));
}

TEST_CASE("phi satisfies its integral identity", "[property]") {
    auto targets = {fixtures::m1().ray(0).radial, fixtures::mixed().ray(0).radial, fixtures::mixed().ray(1).radial};
    for (const auto& radial : targets) {
        RayPotential c(radial, 1.7);
        const double m = c.m();
        for (double frac : {0.3, 0.6, 0.9}) {
            const double s = frac * m;
            // midpoint-rule oracle for 1 - int_0^s du / zeta(u); zeta jumps at
            // branch ends, so the oracle error is O(h) there
            const int n = 200000;
            double acc = 0.0;
            for (int i = 0; i < n; ++i) acc += (s / n) / c.zeta(s * (i + 0.5) / n);
            CHECK(c.phi(s) == Catch::Approx(1.0 - acc).margin(5e-5));
        }
    }
}

TEST_CASE("potential rejects degenerate rays") {
    CHECK_THROWS_AS(RayPotential(RadialMeasure({{0.0, 1.0}}, {}), 1.0), std::domain_error);
}
