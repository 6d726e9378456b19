#include "entroflow/bounds.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace entroflow;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("super_bound examples", "[bounds]") {
    const BoundParams bp{0.5, 1.5, 1.0};
    CHECK(super_bound(0.0, bp) == 0.5);
    for (double tau : {0.0, 0.3, 5.0}) CHECK(super_bound(tau, {0.0, 1.5, 1.0}) == 0.0);
    // -1/2 ln(1 - (1 - e^{-1}) e^{-0.6}) to 30 digits is 0.213024085278...
    CHECK_THAT(super_bound(0.1, bp), WithinAbs(0.2130240852783431, 1e-15));
    CHECK_THROWS_AS(super_bound(-0.1, bp), Error);
    CHECK_THROWS_AS(super_bound(0.1, {-1.0, 1.5, 1.0}), Error);
    CHECK_THROWS_AS(super_bound(0.1, {0.5, 2.0, 1.0}), Error);
}

TEST_CASE("exp_reference examples", "[bounds]") {
    const BoundParams bp{0.5, 1.5, 1.0};
    CHECK(exp_reference(0.0, bp) == 0.5);
    CHECK_THAT(exp_reference(0.1, bp), WithinAbs(0.5 * std::exp(-0.6), 1e-16));
    CHECK_THAT(exp_reference(0.1, bp), WithinAbs(0.2744058, 1e-7));
}

TEST_CASE("super_bound_original examples", "[bounds]") {
    const BoundParams bp{0.3, 1.25, 2.0};
    CHECK(super_bound_original(2.0, bp) == 0.3);
    double prev = 0.3;
    for (double th = 2.5; th < 1e6; th *= 3.0) {
        const double v = super_bound_original(th, bp);
        CHECK(v < prev);
        CHECK(v >= 0.0);
        prev = v;
        const double tau = bp.theta0 / (4.0 * bp.p) * std::log(th / bp.theta0);
        CHECK_THAT(v, WithinAbs(super_bound(tau, bp), 1e-14));
    }
    CHECK(prev < 1e-5);
    CHECK_THROWS_AS(super_bound_original(1.0, bp), Error);
}

TEST_CASE("super bound never exceeds the exponential reference", "[bounds][property]") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> r0d(1e-6, 3.0), pd(1.0, 1.5), td(0.1, 5.0);
    for (int trial = 0; trial < 20; ++trial) {
        const BoundParams bp{r0d(rng), pd(rng), td(rng)};
        for (int k = 0; k < 1000; ++k) {
            const double tau = 2.0 * bp.theta0 * k / 999.0;
            const double s = super_bound(tau, bp), e = exp_reference(tau, bp);
            CHECK(e - s >= -1e-12);
            CHECK(s >= 0.0);
        }
    }
}
