#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "aoimech/mech_multi.hpp"
#include "aoimech/mech_single.hpp"
#include "support/oracles.hpp"

using namespace aoimech;

TEST_CASE("aggregate cost curve value and subgradient") {
    AggregateCostCurve curve({1.0, 3.0}, {2.0, 2.0});

    SECTION("greedy fill") {
        CHECK(curve.value(3.0) == Catch::Approx(5.0)); // 2*1 + 1*3
        CHECK(curve.value(0.0) == 0.0);
        CHECK(curve.value(2.0) == Catch::Approx(2.0)); // kink case
        CHECK_THROWS_AS(curve.value(4.5), config_error);
    }

    SECTION("subgradient inside a segment and at the kink") {
        auto s3 = curve.subgradient(3.0);
        CHECK(s3.lo == Catch::Approx(3.0));
        CHECK(s3.hi == Catch::Approx(3.0));
        auto s2 = curve.subgradient(2.0);
        CHECK(s2.lo == Catch::Approx(1.0));
        CHECK(s2.hi == Catch::Approx(3.0));
        auto s0 = curve.subgradient(0.0);
        CHECK(s0.hi == Catch::Approx(1.0));
        CHECK(s0.lo == -kInf);
        auto s4 = curve.subgradient(4.0);
        CHECK(s4.lo == Catch::Approx(3.0));
        CHECK(s4.hi == kInf);
    }
}

TEST_CASE("greedy value equals the brute-force linear program") {
    std::mt19937_64 rng(20240613);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        std::size_t n = 1 + static_cast<std::size_t>(rng() % 4);
        std::vector<double> virt(n), caps(n);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            virt[i] = 0.2 + 20.0 * u(rng);
            caps[i] = (rng() % 5 == 0) ? 0.0 : 0.05 + 2.0 * u(rng);
            total += caps[i];
        }
        double F = total * u(rng);
        AggregateCostCurve curve(virt, caps);
        CHECK(curve.value(F) == Catch::Approx(oracle::lp_min_cost(virt, caps, F)).margin(1e-12));
    }
}

TEST_CASE("aggregate rate") {
    auto aoi = AoiCostModel::power(1.0);

    SECTION("single source reduces to the scalar solve") {
        SourceProfile p({{CostDistribution::uniform(5.0, 30.0), 1e9}});
        CHECK(aggregate_rate(p, {15.0}, aoi) == Catch::Approx(1.0 / std::sqrt(50.0)).epsilon(1e-10));
    }

    SECTION("cap binds and the kink's subgradient interval captures M") {
        // virt (2, 100), caps (0.1, 1e6): interior solve of M(1/F)=2 lands
        // past the first cap; at the kink M(10) = 50 sits in [2, 100]
        AggregateCostCurve curve({2.0, 100.0}, {0.1, 1e6});
        CHECK(curve.solve_rate(aoi) == Catch::Approx(0.1));
    }

    SECTION("grid-search oracle over random instances") {
        std::mt19937_64 rng(77);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int trial = 0; trial < 25; ++trial) {
            std::size_t n = 1 + static_cast<std::size_t>(rng() % 3);
            std::vector<double> virt(n), caps(n);
            for (std::size_t i = 0; i < n; ++i) {
                virt[i] = 0.5 + 30.0 * u(rng);
                caps[i] = 0.02 + 0.5 * u(rng);
            }
            AggregateCostCurve curve(virt, caps);
            double f_solved = curve.solve_rate(aoi);
            double obj_solved =
                aoi.cumulative(1.0 / f_solved) * f_solved + curve.value(f_solved);
            double best = kInf;
            for (int k = 1; k <= 200000; ++k) {
                double F = curve.max_rate() * k / 200000.0;
                best = std::min(best, aoi.cumulative(1.0 / F) * F + curve.value(F));
            }
            CHECK(obj_solved <= best + 1e-7 * (1.0 + std::abs(best)));
        }
    }

    SECTION("prohibitive virtual costs push the rate toward no-trade") {
        AggregateCostCurve curve({1e12, 1e13}, {5.0, 5.0});
        double f = curve.solve_rate(aoi);
        CHECK(f > 0.0);
        CHECK(f < 1e-5);
    }
}

TEST_CASE("waterfill allocation") {
    AggregateCostCurve curve({1.0, 3.0}, {2.0, 2.0});
    auto f = curve.waterfill(3.0);
    CHECK(f[0] == Catch::Approx(2.0));
    CHECK(f[1] == Catch::Approx(1.0));

    SourceProfile p({{CostDistribution::uniform(0.0, 10.0), 2.0},
                     {CostDistribution::uniform(0.0, 10.0), 2.0}});
    auto a0 = allocate(p, {1.0, 4.0}, 0.0);
    CHECK(a0.no_trade());
    CHECK(a0.rates == std::vector<double>{0.0, 0.0});

    auto a15 = allocate(p, {1.0, 4.0}, 1.5);
    CHECK(a15.rates[0] == Catch::Approx(1.5));
    CHECK(a15.rates[1] == 0.0);
    CHECK(a15.schedule_probs[0] == Catch::Approx(1.0));
    CHECK(a15.schedule_probs[1] == 0.0);
    CHECK(a15.interarrival == Catch::Approx(1.0 / 1.5));
}

TEST_CASE("scheduling probabilities form a simplex when trading") {
    SourceProfile p({{CostDistribution::uniform(5.0, 30.0), 0.08},
                     {CostDistribution::uniform(5.0, 30.0), 0.10},
                     {CostDistribution::trunc_exp(0.5, 25.0), 0.05}});
    MultiSourceMechanism m(p, AoiCostModel::power(1.0));
    auto a = m.allocation({7.5, 12.0, 3.0});
    REQUIRE_FALSE(a.no_trade());
    double sum = 0.0;
    for (double pi : a.schedule_probs) sum += pi;
    CHECK(sum == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(a.aggregate == Catch::Approx(a.rates[0] + a.rates[1] + a.rates[2]).epsilon(1e-12));
}

TEST_CASE("per-coordinate rate monotonicity") {
    SourceProfile p({{CostDistribution::uniform(5.0, 30.0), 0.08},
                     {CostDistribution::trunc_exp(1.0, 30.0), 0.10},
                     {CostDistribution::uniform(2.0, 20.0), 0.12}});
    MultiSourceMechanism m(p, AoiCostModel::power(1.0));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 8; ++rep) {
        std::vector<double> costs{5.0 + 25.0 * u(rng), 30.0 * u(rng), 2.0 + 18.0 * u(rng)};
        for (std::size_t i = 0; i < p.size(); ++i) {
            double lo = p.source(i).dist.c_low(), hi = p.source(i).dist.c_high();
            double prev = kInf;
            for (int k = 0; k <= 60; ++k) {
                costs[i] = lo + (hi - lo) * k / 60.0;
                double f = m.rate(i, costs);
                CHECK(f <= prev + 1e-10);
                prev = f;
            }
            costs[i] = lo + (hi - lo) * u(rng);
        }
    }
}

TEST_CASE("cheapest sources are exhausted before pricier ones run") {
    SourceProfile p({{CostDistribution::uniform(0.0, 20.0), 0.06},
                     {CostDistribution::uniform(0.0, 20.0), 0.09},
                     {CostDistribution::uniform(0.0, 20.0), 0.07},
                     {CostDistribution::uniform(0.0, 20.0), 0.05}});
    MultiSourceMechanism m(p, AoiCostModel::power(1.0));
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 20.0);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> costs{u(rng), u(rng), u(rng), u(rng)};
        auto virt = p.ironed_virtuals(costs);
        auto a = m.allocation(costs);
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (a.rates[i] <= 1e-12) continue;
            for (std::size_t j = 0; j < p.size(); ++j)
                if (virt[j] < virt[i] - 1e-9)
                    CHECK(a.rates[j] == Catch::Approx(p.source(j).f_max).epsilon(1e-9));
        }
    }
}

TEST_CASE("payments") {
    SECTION("single source matches the scalar mechanism") {
        SourceProfile p({{CostDistribution::uniform(5.0, 30.0), 1e9}});
        MultiSourceMechanism m(p, AoiCostModel::power(1.0));
        SingleSourceMechanism s(CostDistribution::uniform(5.0, 30.0), AoiCostModel::power(1.0));
        for (double c : {5.0, 11.0, 19.5, 30.0})
            CHECK(m.payment_rate(0, {c}) == Catch::Approx(s.payment_rate(c)).epsilon(1e-8));
    }

    SECTION("top cost earns exactly its cost rate; unscheduled earn nothing") {
        SourceProfile p({{CostDistribution::uniform(5.0, 30.0), 0.08},
                         {CostDistribution::uniform(5.0, 30.0), 0.10}});
        MultiSourceMechanism m(p, AoiCostModel::power(1.0));
        std::vector<double> costs{30.0, 12.0};
        CHECK(m.payment_rate(0, costs) ==
              Catch::Approx(30.0 * m.rate(0, costs)).margin(1e-10));

        // a source that is never scheduled at any report: make it far too
        // expensive while a cheap rival has plenty of cap
        SourceProfile p2({{CostDistribution::uniform(0.0, 1.0), 10.0},
                          {CostDistribution::uniform(50.0, 60.0), 10.0}});
        MultiSourceMechanism m2(p2, AoiCostModel::power(1.0));
        std::vector<double> costs2{0.5, 55.0};
        CHECK(m2.rate(1, costs2) == 0.0);
        CHECK(m2.payment_rate(1, costs2) == Catch::Approx(0.0).margin(1e-12));
    }

    SECTION("payment integral against a trapezoid oracle") {
        SourceProfile p({{CostDistribution::uniform(5.0, 30.0), 0.08},
                         {CostDistribution::trunc_exp(1.0, 30.0), 0.10}});
        MultiSourceMechanism m(p, AoiCostModel::power(1.0));
        std::vector<double> costs{9.0, 2.0};
        double h = m.payment_rate(0, costs);
        auto f_dev = [&](double z) {
            std::vector<double> c = costs;
            c[0] = z;
            return m.rate(0, c);
        };
        double ref = costs[0] * m.rate(0, costs) + oracle::trapz(f_dev, 9.0, 30.0, 40000);
        CHECK(h == Catch::Approx(ref).margin(2e-6));
    }
}

TEST_CASE("optimal allocation beats random monotone feasible rules") {
    SourceProfile p({{CostDistribution::uniform(0.0, 20.0), 0.3},
                     {CostDistribution::trunc_exp(0.5, 20.0), 0.4}});
    MultiSourceMechanism m(p, AoiCostModel::power(1.0));
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    // pointwise: the solved allocation minimizes G(1/F)F + sum f_i * phi_i
    // at every cost profile, so it wins under any prior
    for (int rule = 0; rule < 25; ++rule) {
        double lo0 = 0.02 + 0.1 * u(rng), r0 = u(rng), p0 = 0.5 + 2.0 * u(rng);
        double lo1 = 0.02 + 0.1 * u(rng), r1 = u(rng), p1 = 0.5 + 2.0 * u(rng);
        for (int draw = 0; draw < 40; ++draw) {
            std::vector<double> costs{20.0 * u(rng), p.source(1).dist.quantile(u(rng))};
            auto virt = p.ironed_virtuals(costs);
            auto a = m.allocation(costs);
            double j_opt = m.aoi().cumulative(1.0 / a.aggregate) * a.aggregate +
                           a.rates[0] * virt[0] + a.rates[1] * virt[1];
            double f0 = lo0 + r0 * (0.3 - lo0) * std::pow(1.0 - p.source(0).dist.cdf(costs[0]), p0);
            double f1 = lo1 + r1 * (0.4 - lo1) * std::pow(1.0 - p.source(1).dist.cdf(costs[1]), p1);
            double F = f0 + f1;
            double j_rule = m.aoi().cumulative(1.0 / F) * F + f0 * virt[0] + f1 * virt[1];
            CHECK(j_opt <= j_rule + 1e-9 * (1.0 + std::abs(j_rule)));
        }
    }
}
