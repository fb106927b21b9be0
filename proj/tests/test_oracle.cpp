#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <stdexcept>

#include "helpers.hpp"

using namespace ladder;

TEST_CASE("rabi_populations covers the rotation circle") {
    SECTION("fixed angles") {
        const auto at0 = rabi_populations(0.0);
        REQUIRE(at0.lower == 1.0);
        REQUIRE(at0.upper == 0.0);

        const auto quarter = rabi_populations(M_PI / 4.0);
        REQUIRE(std::abs(quarter.lower - 0.5) < 1e-15);
        REQUIRE(std::abs(quarter.upper - 0.5) < 1e-15);

        const auto half = rabi_populations(M_PI / 2.0);
        REQUIRE(half.lower < 1e-30);  // cos(pi/2)^2 up to rounding of pi
        REQUIRE(std::abs(half.upper - 1.0) < 1e-15);

        const auto full = rabi_populations(M_PI);
        REQUIRE(std::abs(full.lower - 1.0) < 1e-15);
    }

    SECTION("populations sum to one") {
        for (int k = 0; k <= 40; ++k) {
            const auto p = rabi_populations(0.17 * k);
            REQUIRE(std::abs(p.lower + p.upper - 1.0) < 3e-16);
            REQUIRE(p.lower >= 0.0);
            REQUIRE(p.upper >= 0.0);
        }
    }

    SECTION("rejects non-finite angles") {
        REQUIRE_THROWS_AS(rabi_populations(std::nan("")), std::invalid_argument);
        REQUIRE_THROWS_AS(rabi_populations(INFINITY), std::invalid_argument);
    }
}

TEST_CASE("cascade_populations matches hand-written Bateman formulas") {
    SECTION("two levels") {
        // p2(t) = e^{-G t}, p1 = 1 - p2
        const auto p = cascade_populations({0.2}, 3.0, 2);
        REQUIRE(std::abs(p[1] - std::exp(-0.6)) < 1e-14);
        REQUIRE(std::abs(p[0] - (1.0 - std::exp(-0.6))) < 1e-14);
    }

    SECTION("three levels, distinct rates") {
        // G2 = 0.2, G3 = 0.5, start at 3, t = 2
        const double g2 = 0.2, g3 = 0.5, t = 2.0;
        const auto p = cascade_populations({g2, g3}, t, 3);

        const double p3 = std::exp(-g3 * t);
        const double p2 = g3 / (g2 - g3) * (std::exp(-g3 * t) - std::exp(-g2 * t));
        const double p1 =
            1.0 - (g3 * std::exp(-g2 * t) - g2 * std::exp(-g3 * t)) / (g3 - g2);
        REQUIRE(std::abs(p[2] - p3) < 1e-14);
        REQUIRE(std::abs(p[1] - p2) < 1e-14);
        REQUIRE(std::abs(p[0] - p1) < 1e-14);
        REQUIRE(std::abs(p[0] + p[1] + p[2] - 1.0) < 1e-14);
    }

    SECTION("three levels, equal rates take the confluent limit") {
        // p2 = G t e^{-G t}, p1 = 1 - (1 + G t) e^{-G t}
        const double g = 0.3, t = 4.0;
        const auto p = cascade_populations({g, g}, t, 3);
        REQUIRE(std::abs(p[2] - std::exp(-g * t)) < 1e-14);
        REQUIRE(std::abs(p[1] - g * t * std::exp(-g * t)) < 1e-14);
        REQUIRE(std::abs(p[0] - (1.0 - (1.0 + g * t) * std::exp(-g * t))) < 1e-14);
    }

    SECTION("nearly equal rates stay close to the confluent limit") {
        const double g = 0.3, t = 4.0;
        const auto exact = cascade_populations({g, g}, t, 3);
        const auto near = cascade_populations({g, g + 5e-13}, t, 3);
        for (int k = 0; k < 3; ++k) REQUIRE(std::abs(exact[k] - near[k]) < 1e-9);
    }

    SECTION("stable intermediate level traps population") {
        // level 2 stable (rate 0): p2 = 1 - e^{-G3 t}, ground never fills
        const auto p = cascade_populations({0.0, 0.5}, 2.0, 3);
        REQUIRE(std::abs(p[2] - std::exp(-1.0)) < 1e-14);
        REQUIRE(std::abs(p[1] - (1.0 - std::exp(-1.0))) < 1e-14);
        REQUIRE(std::abs(p[0]) < 1e-14);
    }

    SECTION("four-level chain conserves probability and decays monotonically") {
        const std::vector<double> rates{1.0 / 26.2, 1.0 / 83.0, 1.0 / 112.0};
        double prev_top = 1.0;
        for (double t : {0.0, 1.0, 5.0, 20.0, 50.0, 120.0, 400.0}) {
            const auto p = cascade_populations(rates, t, 4);
            double sum = 0.0;
            for (double x : p) {
                REQUIRE(x >= -1e-14);
                sum += x;
            }
            REQUIRE(std::abs(sum - 1.0) < 1e-12);
            REQUIRE(p[3] <= prev_top + 1e-14);
            prev_top = p[3];
        }
        // everything ends in the ground state
        const auto late = cascade_populations(rates, 5000.0, 4);
        REQUIRE(late[0] > 1.0 - 1e-9);
    }

    SECTION("start level 1 never moves") {
        const auto p = cascade_populations({0.2, 0.5}, 7.0, 1);
        REQUIRE(p[0] == 1.0);
        REQUIRE(p[1] == 0.0);
        REQUIRE(p[2] == 0.0);
    }

    SECTION("t = 0 is a delta at the start level") {
        const auto p = cascade_populations({0.2, 0.5}, 0.0, 3);
        REQUIRE(std::abs(p[2] - 1.0) < 1e-15);
        REQUIRE(std::abs(p[1]) < 1e-15);
        REQUIRE(std::abs(p[0]) < 1e-15);
    }

    SECTION("input validation") {
        REQUIRE_THROWS_AS(cascade_populations({}, 1.0, 1), std::invalid_argument);
        REQUIRE_THROWS_AS(cascade_populations({0.2}, -1.0, 2), std::invalid_argument);
        REQUIRE_THROWS_AS(cascade_populations({0.2}, std::nan(""), 2), std::invalid_argument);
        REQUIRE_THROWS_AS(cascade_populations({0.2}, 1.0, 0), std::invalid_argument);
        REQUIRE_THROWS_AS(cascade_populations({0.2}, 1.0, 3), std::invalid_argument);
        REQUIRE_THROWS_AS(cascade_populations({-0.2}, 1.0, 2), std::invalid_argument);
    }
}
