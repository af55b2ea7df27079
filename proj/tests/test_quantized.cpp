#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "aoimech/mech_quantized.hpp"
#include "aoimech/mech_single.hpp"
#include "support/oracles.hpp"

using namespace aoimech;

namespace {
QuantizedMechanism make_single(double delta_q, double f_max = 1e9) {
    SourceProfile p({{CostDistribution::uniform(5.0, 30.0), f_max}});
    return {p, AoiCostModel::power(1.0), delta_q};
}
} // namespace

TEST_CASE("midpoint quantizer") {
    CHECK(quantize_report(1.0, 4.3, 0.0, 30.0) == Catch::Approx(4.5));
    CHECK(quantize_report(1.0, 4.5, 0.0, 30.0) == Catch::Approx(4.5));
    // raw formula gives 30.5 which is outside the support
    CHECK(quantize_report(1.0, 30.0, 0.0, 30.0) == Catch::Approx(29.5));
    CHECK_THROWS_AS(quantize_report(0.0, 1.0, 0.0, 30.0), config_error);
    CHECK_THROWS_AS(quantize_report(-1.0, 1.0, 0.0, 30.0), config_error);
}

TEST_CASE("cell layout") {
    auto q = make_single(1.0);
    CHECK(q.cells(0).size() == 25); // ceil((30-5)/1)
    CHECK(q.cells(0).front().lo == Catch::Approx(5.0));
    CHECK(q.cells(0).front().mid == Catch::Approx(5.5));
    CHECK(q.cells(0).back().hi == Catch::Approx(30.0));
    CHECK(q.cells(0).back().mid == Catch::Approx(29.5));

    // partial last cell: width 25 not a multiple of 8
    auto q8 = make_single(8.0);
    REQUIRE(q8.cells(0).size() == 4);
    CHECK(q8.cells(0).front().lo == Catch::Approx(5.0));
    CHECK(q8.cells(0).front().hi == Catch::Approx(8.0));
    CHECK(q8.cells(0).front().mid == Catch::Approx(5.0)); // raw 4.0 clamped up
    CHECK(q8.cells(0).back().lo == Catch::Approx(24.0));
    CHECK(q8.cells(0).back().hi == Catch::Approx(30.0));
    CHECK(q8.cells(0).back().mid == Catch::Approx(28.0));

    CHECK_THROWS_AS(make_single(1e-9), config_error); // > 1e7 cells
}

TEST_CASE("rates refine to the exact mechanism") {
    SingleSourceMechanism exact(CostDistribution::uniform(5.0, 30.0), AoiCostModel::power(1.0));
    auto q = make_single(1e-3);
    for (double c : {6.1, 14.88, 23.456, 29.01})
        CHECK(q.rate(0, {c}) == Catch::Approx(exact.rate(c)).epsilon(2e-4));
}

TEST_CASE("rates are piecewise constant and non-increasing") {
    auto q = make_single(1.0);
    CHECK(q.rate(0, {10.1}) == Catch::Approx(q.rate(0, {10.9})).epsilon(1e-14));
    double prev = kInf;
    for (int i = 0; i <= 500; ++i) {
        double c = 5.0 + 25.0 * i / 500.0;
        double f = q.rate(0, {c});
        CHECK(f <= prev + 1e-14);
        prev = f;
    }
}

TEST_CASE("payment is the exact integral of the quantized rate") {
    auto q = make_single(1.0);
    SingleSourceMechanism exact(CostDistribution::uniform(5.0, 30.0), AoiCostModel::power(1.0));

    // direct evaluation at c = 10: own term plus full cells above
    double h = q.payment_rate(0, {10.0});
    double expect = 10.0 * exact.rate(10.5);
    for (int k = 10; k < 30; ++k) expect += 1.0 * exact.rate(k + 0.5);
    CHECK(h == Catch::Approx(expect).epsilon(1e-12));

    // cross-check against a fine-grid quadrature of the piecewise rate
    auto f_q = [&](double z) { return q.rate(0, {z}); };
    double ref = 10.0 * f_q(10.0) + oracle::trapz(f_q, 10.0, 30.0, 200000);
    CHECK(h == Catch::Approx(ref).margin(2e-5));

    // top report pays cost times rate
    CHECK(q.payment_rate(0, {30.0}) == Catch::Approx(30.0 * q.rate(0, {30.0})).epsilon(1e-12));
}

TEST_CASE("quantized mechanism is exactly incentive compatible") {
    auto q = make_single(1.0);
    double worst = -kInf;
    for (int i = 0; i <= 100; ++i) {
        double c = 5.0 + 25.0 * i / 100.0;
        double truthful = q.payment_rate(0, {c}) - c * q.rate(0, {c});
        CHECK(truthful >= -1e-12); // IR
        for (int j = 0; j <= 250; ++j) {
            double r = 5.0 + 25.0 * j / 250.0;
            double dev = q.payment_rate(0, {r}) - c * q.rate(0, {r});
            worst = std::max(worst, dev - truthful);
        }
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("multi-source quantized rates and payments") {
    SourceProfile p({{CostDistribution::uniform(5.0, 30.0), 0.08},
                     {CostDistribution::trunc_exp(1.0, 30.0), 0.10}});
    QuantizedMechanism q(p, AoiCostModel::power(1.0), 1.0);

    SECTION("per-coordinate monotone rates") {
        std::vector<double> costs{9.0, 2.0};
        double prev = kInf;
        for (int i = 0; i <= 100; ++i) {
            costs[0] = 5.0 + 25.0 * i / 100.0;
            double f = q.rate(0, costs);
            CHECK(f <= prev + 1e-14);
            prev = f;
        }
    }

    SECTION("other coordinates enter payments in quantized form") {
        // any report of source 1 within one cell leaves source 0's payment
        // unchanged, because only Q(c_1) enters
        double h_a = q.payment_rate(0, {9.0, 2.1});
        double h_b = q.payment_rate(0, {9.0, 2.9});
        CHECK(h_a == Catch::Approx(h_b).epsilon(1e-14));
    }

    SECTION("interim IC with the rival's report fixed") {
        std::vector<double> costs{0.0, 2.0};
        double worst = -kInf;
        for (int i = 0; i <= 50; ++i) {
            double c = 5.0 + 25.0 * i / 50.0;
            double truthful = q.payment_rate(0, {c, 2.0}) - c * q.rate(0, {c, 2.0});
            for (int j = 0; j <= 120; ++j) {
                double r = 5.0 + 25.0 * j / 120.0;
                double dev = q.payment_rate(0, {r, 2.0}) - c * q.rate(0, {r, 2.0});
                worst = std::max(worst, dev - truthful);
            }
        }
        CHECK(worst <= 1e-9);
    }
}

TEST_CASE("loss bound") {
    SourceProfile one({{CostDistribution::uniform(5.0, 30.0), 0.2}});
    CHECK(quantization_loss_bound(one, 1.0) == Catch::Approx(0.4)); // 2 * 0.2 * 1
    CHECK(quantization_loss_bound(one, 0.0) == 0.0);
    SourceProfile two({{CostDistribution::uniform(5.0, 30.0), 0.2},
                       {CostDistribution::uniform(0.0, 10.0), 0.3}});
    CHECK(quantization_loss_bound(two, 0.5) == Catch::Approx(0.5)); // (2*.2+2*.3)*.5
}
