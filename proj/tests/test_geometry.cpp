#include "sewersim/geometry.hpp"
#include "sewersim/rng.hpp"
#include "support/oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace sewersim;

TEST_CASE("full pipe area and hydraulic radius") {
    CHECK(area_of_depth(1.0, 1.0) == Catch::Approx(kPi / 4.0).epsilon(1e-12));
    CHECK(hyd_radius_of_depth(1.0, 1.0) == Catch::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("half pipe area") {
    CHECK(area_of_depth(1.0, 0.5) == Catch::Approx(kPi / 8.0).epsilon(1e-12));
    // Half-full hydraulic radius equals the full-pipe value.
    CHECK(hyd_radius_of_depth(1.0, 0.5) == Catch::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("quarter-depth area against quadrature oracle") {
    double expected = oracles::segment_area_quadrature(1.0, 0.25);
    CHECK(expected == Catch::Approx(0.1535).margin(5e-4));  // frozen oracle value
    CHECK(area_of_depth(1.0, 0.25) == Catch::Approx(expected).epsilon(1e-6));
}

TEST_CASE("depth bounds are enforced") {
    CHECK_THROWS_AS(area_of_depth(1.0, -0.1), std::out_of_range);
    CHECK_THROWS_AS(area_of_depth(1.0, 1.1), std::out_of_range);
    CHECK_THROWS_AS(hyd_radius_of_depth(1.0, -0.01), std::out_of_range);
}

TEST_CASE("area is continuous and monotone in depth") {
    SectionGeometry sec(0.8);
    SplitMix64 rng(17);
    double prev = 0.0;
    for (int i = 0; i <= 200; ++i) {
        double y = 0.8 * i / 200.0;
        double a = sec.area(y);
        CHECK(a >= prev);
        prev = a;
    }
    CHECK(sec.area(0.0) == 0.0);
    CHECK(sec.area(0.8) == Catch::Approx(sec.full_area()).epsilon(1e-12));
    // random continuity probes
    for (int i = 0; i < 100; ++i) {
        double y = rng.uniform(1e-6, 0.8 - 1e-6);
        CHECK(std::abs(sec.area(y + 1e-7) - sec.area(y)) < 1e-5);
    }
}

TEST_CASE("depth_of_area inverts area") {
    SectionGeometry sec(1.4);
    for (double frac : {0.05, 0.3, 0.5, 0.77, 0.99}) {
        double a = frac * sec.full_area();
        double y = sec.depth_of_area(a);
        CHECK(sec.area(y) == Catch::Approx(a).epsilon(1e-9));
    }
}

TEST_CASE("manning full flow against hand oracle") {
    double expected = oracles::manning_full_flow_by_hand(1.0, 0.013, 0.01);
    CHECK(expected == Catch::Approx(2.399).margin(2e-3));  // frozen reference
    CHECK(manning_full_flow(1.0, 0.013, 0.01) == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("doubling n halves full flow") {
    double q1 = manning_full_flow(0.6, 0.012, 0.008);
    double q2 = manning_full_flow(0.6, 0.024, 0.008);
    CHECK(q2 == Catch::Approx(0.5 * q1).epsilon(1e-12));
}

TEST_CASE("full flow requires positive slope") {
    CHECK_THROWS(manning_full_flow(1.0, 0.013, 0.0));
    CHECK_THROWS(manning_full_flow(1.0, 0.013, -0.01));
}

TEST_CASE("normal depth reproduces known half-capacity point") {
    // At half depth a circular section carries exactly half the full flow.
    double q_full = manning_full_flow(1.0, 0.013, 0.01);
    double y = normal_depth(1.0, 0.013, 0.01, 0.5 * q_full);
    CHECK(y == Catch::Approx(0.5).margin(1e-4));
}

TEST_CASE("critical depth satisfies the Froude condition") {
    double d = 1.0, q = 1.2;
    double yc = critical_depth(d, q);
    SectionGeometry sec(d);
    double a = sec.area(yc);
    double t = sec.top_width(yc);
    CHECK(q * q * t / (9.81 * a * a * a) == Catch::Approx(1.0).margin(1e-6));
}
