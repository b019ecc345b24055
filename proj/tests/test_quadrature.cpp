#include <catch2/catch_amalgamated.hpp>

#include "irlang/quadrature.hpp"

using namespace irlang;

TEST_CASE("double well Gibbs average has the closed-form value", "[quadrature]") {
    DoubleWell dw;
    const auto f = [](const Vec2& z) { return z.x() + z.y() * z.y(); };
    const GibbsResult r = gibbs_average(dw, 0.1, f, GridSpec{});
    CHECK(r.mass_ok);
    CHECK(r.converged);
    CHECK(r.last_rel_change < 1e-6);
    CHECK(r.value == Catch::Approx(0.05).margin(1e-4));
}

TEST_CASE("rbs3 Gibbs average", "[quadrature]") {
    Rbs3 p;
    const auto f = [](const Vec2& z) {
        return (z.x() - 1.0) * (z.x() - 1.0) + z.y() * z.y();
    };
    // [-3,3]^2 leaves ~1e-10 of the peak weight on the boundary at this
    // temperature, so the wider box is the right domain here
    const GibbsResult r = gibbs_average(p, 0.2, f, GridSpec{Box2{-4, 4, -4, 4}, 801, 801});
    CHECK(r.mass_ok);
    CHECK(r.converged);
    CHECK(r.value == Catch::Approx(2.1986).margin(5e-3));
    // frozen from an independent high-resolution quadrature
    CHECK(r.value == Catch::Approx(2.198676).margin(5e-5));
}

TEST_CASE("normalization: constant observable integrates to itself", "[quadrature]") {
    Rbs3 p;
    const GibbsResult r = gibbs_average(p, 0.2, [](const Vec2&) { return 1.0; },
                                        GridSpec{Box2{-4, 4, -4, 4}, 801, 801});
    CHECK(r.value == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("odd observables vanish by symmetry", "[quadrature]") {
    DoubleWell dw;
    const GibbsResult r = gibbs_average(dw, 0.1, [](const Vec2& z) { return z.x(); }, GridSpec{});
    CHECK(std::abs(r.value) < 1e-10);
}

TEST_CASE("mass containment failure is reported", "[quadrature]") {
    DoubleWell dw;
    GridSpec tiny;
    tiny.box = Box2{-1.2, 1.2, -1.2, 1.2};  // weight at the box edge is not negligible
    const GibbsResult r = gibbs_average(dw, 0.1, [](const Vec2&) { return 1.0; }, tiny);
    CHECK_FALSE(r.mass_ok);
    CHECK(r.boundary_ratio > 1e-12);
}
