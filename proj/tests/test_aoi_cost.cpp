#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "aoimech/aoi_cost.hpp"
#include "support/oracles.hpp"

using aoimech::AoiCostModel;

TEST_CASE("power penalty evaluation") {
    CHECK(AoiCostModel::power(1.0).penalty(3.0) == 3.0);
    CHECK(AoiCostModel::power(2.0).penalty(0.0) == 0.0);
    CHECK(AoiCostModel::power(0.5).penalty(4.0) == Catch::Approx(2.0));
    CHECK_THROWS_AS(AoiCostModel::power(1.0).penalty(-1.0), aoimech::config_error);
}

TEST_CASE("power cumulative penalty") {
    CHECK(AoiCostModel::power(1.0).cumulative(2.0) == Catch::Approx(2.0)); // x^2/2
    CHECK(AoiCostModel::power(1.0).cumulative(0.0) == 0.0);
    CHECK(AoiCostModel::power(2.0).cumulative(3.0) == Catch::Approx(9.0)); // x^3/3
    CHECK_THROWS_AS(AoiCostModel::power(1.0).cumulative(-0.5), aoimech::config_error);
}

TEST_CASE("power closed forms agree with quadrature of g") {
    for (double alpha : {0.5, 1.0, 2.0, 3.5}) {
        auto m = AoiCostModel::power(alpha);
        for (double x : {0.3, 1.0, 4.7}) {
            double ref = oracle::romberg([&](double t) { return m.penalty(t); }, 0.0, x);
            CHECK(m.cumulative(x) == Catch::Approx(ref).epsilon(1e-8));
        }
    }
}

TEST_CASE("marginal reduction values") {
    auto lin = AoiCostModel::power(1.0);
    CHECK(lin.marginal_reduction(2.0) == Catch::Approx(2.0)); // x^2/2
    CHECK(lin.marginal_reduction(0.0) == 0.0);
    CHECK(AoiCostModel::power(2.0).marginal_reduction(3.0) == Catch::Approx(18.0)); // (2/3)*27
}

TEST_CASE("marginal reduction is strictly increasing") {
    auto tab = AoiCostModel::tabulated({{0.0, 0.1}, {1.0, 0.5}, {3.0, 2.0}, {10.0, 9.0}});
    for (const auto& m : {AoiCostModel::power(0.7), AoiCostModel::power(2.0), tab}) {
        double prev = 0.0;
        for (int i = 1; i <= 200; ++i) {
            double x = 1e-3 * std::pow(1e6, i / 200.0); // log-spaced up to 1e3
            double cur = m.marginal_reduction(x);
            CHECK(cur > prev);
            prev = cur;
        }
    }
}

TEST_CASE("invert marginal reduction closed forms and round trip") {
    auto lin = AoiCostModel::power(1.0);
    CHECK(lin.invert_marginal_reduction(2.0) == Catch::Approx(2.0));
    CHECK(lin.invert_marginal_reduction(0.0) == 0.0);
    CHECK(lin.invert_marginal_reduction(25.0) == Catch::Approx(std::sqrt(50.0)));

    // closed form vs an independent bisection on M
    double ref = oracle::bisect([&](double x) { return lin.marginal_reduction(x); }, 25.0, 0.0, 100.0);
    CHECK(lin.invert_marginal_reduction(25.0) == Catch::Approx(ref).epsilon(1e-10));

    auto tab = AoiCostModel::tabulated({{0.0, 0.0}, {1.0, 1.5}, {2.0, 4.0}, {5.0, 11.0}});
    for (const auto& m : {AoiCostModel::power(0.5), AoiCostModel::power(1.0),
                          AoiCostModel::power(2.0), tab}) {
        for (int i = 0; i <= 60; ++i) {
            double x = 1e-3 * std::pow(1e6, i / 60.0);
            double back = m.invert_marginal_reduction(m.marginal_reduction(x));
            CHECK(back == Catch::Approx(x).epsilon(1e-8));
        }
    }
}

TEST_CASE("invert rejects unreachable targets") {
    CHECK_THROWS_AS(AoiCostModel::power(1.0).invert_marginal_reduction(-1.0),
                    aoimech::numerical_error);
}

TEST_CASE("tabulated model matches its own quadrature") {
    auto tab = AoiCostModel::tabulated({{0.0, 0.2}, {0.5, 0.9}, {2.0, 3.0}, {4.0, 8.0}});
    for (double x : {0.25, 1.0, 3.1, 6.0}) { // 6.0 exercises extrapolation
        double ref = oracle::romberg([&](double t) { return tab.penalty(t); }, 0.0, x);
        CHECK(tab.cumulative(x) == Catch::Approx(ref).epsilon(1e-9));
    }
}

TEST_CASE("tabulated validation") {
    CHECK_THROWS_AS(AoiCostModel::tabulated({{1.0, 1.0}, {2.0, 2.0}}), aoimech::config_error);
    CHECK_THROWS_AS(AoiCostModel::tabulated({{0.0, 1.0}, {2.0, 0.5}}), aoimech::config_error);
    CHECK_THROWS_AS(AoiCostModel::tabulated({{0.0, 1.0}}), aoimech::config_error);
}
