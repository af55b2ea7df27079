#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "aoimech/eval.hpp"
#include "support/oracles.hpp"

using namespace aoimech;

namespace {
SourceProfile uniform_profile(double f_max = 1e9) {
    return SourceProfile({{CostDistribution::uniform(5.0, 30.0), f_max}});
}
const AoiCostModel kLinear = AoiCostModel::power(1.0);
} // namespace

TEST_CASE("single-source expected cost, payment form vs virtual-cost form") {
    for (auto kind : {MechanismKind::Optimal, MechanismKind::Quantized, MechanismKind::Benchmark,
                      MechanismKind::CompleteInfo}) {
        auto rep = expected_cost(kind, uniform_profile(), kLinear);
        INFO(rep.mechanism_id);
        CHECK(rep.estimator == Estimator::Quadrature);
        CHECK(rep.consistent);
        CHECK(std::abs(rep.j_payment_form - rep.j_virtual_form) <= 1e-8);
    }
}

TEST_CASE("single-source expected cost values") {
    // frozen from the closed forms (verified against quadrature below)
    auto opt = expected_cost(MechanismKind::Optimal, uniform_profile(), kLinear);
    CHECK(opt.j == Catch::Approx(7.480446375903).epsilon(1e-10));
    auto comp = expected_cost(MechanismKind::CompleteInfo, uniform_profile(), kLinear);
    CHECK(comp.j == Catch::Approx(5.775136332576).epsilon(1e-10));
    auto bench = expected_cost(MechanismKind::Benchmark, uniform_profile(), kLinear);
    CHECK(bench.j == Catch::Approx(std::sqrt(60.0)).epsilon(1e-10));

    // the quadrature oracle for the optimal value
    double ref = oracle::romberg(
        [](double c) {
            double phi = 2.0 * c - 5.0;
            return std::sqrt(2.0 * phi) / 25.0;
        },
        5.0, 30.0);
    CHECK(opt.j == Catch::Approx(ref).epsilon(1e-9));
}

TEST_CASE("a nearly free source costs nearly nothing when uncapped") {
    SourceProfile cheap({{CostDistribution::uniform(0.0, 1e-6), 1e9}});
    auto rep = expected_cost(MechanismKind::CompleteInfo, cheap, kLinear);
    CHECK(rep.j < 1e-2);
    SourceProfile capped({{CostDistribution::uniform(0.0, 1e-6), 100.0}});
    auto capped_rep = expected_cost(MechanismKind::CompleteInfo, capped, kLinear);
    CHECK(rep.j < capped_rep.j);
}

TEST_CASE("closed forms for the uniform setting") {
    auto t = closed_forms_uniform(1.0, 5.0, 30.0);
    CHECK(t.j_benchmark == Catch::Approx(std::sqrt(60.0)).epsilon(1e-12));
    CHECK(t.j_complete == Catch::Approx(5.775136332576).epsilon(1e-10));
    CHECK(t.j_optimal == Catch::Approx(7.480446375903).epsilon(1e-10));
    CHECK(t.j_complete == Catch::Approx(t.j_complete_cross).epsilon(1e-9));
    CHECK(t.j_optimal == Catch::Approx(t.j_optimal_cross).epsilon(1e-9));

    for (double a : {0.5, 1.0, 2.0})
        for (double ch : {10.0, 30.0, 50.0}) {
            auto u = closed_forms_uniform(a, 5.0, ch);
            CHECK(u.j_complete == Catch::Approx(u.j_complete_cross).epsilon(1e-9));
            CHECK(u.j_optimal == Catch::Approx(u.j_optimal_cross).epsilon(1e-9));
            CHECK(u.j_benchmark / u.j_complete <= u.benchmark_ratio_bound + 1e-12);
            CHECK(u.j_optimal / u.j_complete <= u.optimal_ratio_bound + 1e-12);
            CHECK(u.j_complete <= u.j_optimal + 1e-12);
            CHECK(u.j_optimal <= u.j_benchmark + 1e-12);
        }
}

TEST_CASE("closed forms for the truncated exponential setting") {
    auto t = closed_forms_trunc_exp(1.0, 30.0);
    // frozen from an independent high-precision evaluation
    CHECK(t.j_complete == Catch::Approx(1.2533141373).epsilon(1e-7));
    CHECK(t.j_optimal == Catch::Approx(2.6023020732).epsilon(1e-7));
    CHECK(t.j_complete == Catch::Approx(t.j_complete_cross).epsilon(1e-6));
    CHECK(t.j_optimal == Catch::Approx(t.j_optimal_cross).epsilon(1e-7));
    double ratio = t.j_optimal / t.j_complete;
    CHECK(ratio > 1.8);
    CHECK(ratio < 2.2);

    // the benchmark's cost grows with the support while the optimal converges
    auto t10 = closed_forms_trunc_exp(1.0, 10.0);
    auto t100 = closed_forms_trunc_exp(1.0, 100.0);
    CHECK(t100.j_benchmark / t100.j_optimal > t10.j_benchmark / t10.j_optimal);
}

TEST_CASE("multi-source expected cost is consistent across forms") {
    SourceProfile p({{CostDistribution::trunc_exp(2.0, 20.0), 1e9},
                     {CostDistribution::trunc_exp(0.5, 20.0), 1e9}});
    EvalOptions opt;
    opt.mc_samples = 4096;
    opt.delta_q = 0.5;
    opt.payment_subsample = 128;
    for (auto kind : {MechanismKind::Optimal, MechanismKind::Quantized, MechanismKind::Benchmark,
                      MechanismKind::CompleteInfo}) {
        auto rep = expected_cost(kind, p, kLinear, opt);
        INFO(rep.mechanism_id);
        CHECK(rep.estimator == Estimator::MonteCarlo);
        CHECK(rep.std_error > 0.0);
        CHECK(rep.consistent);
    }
    // same seed, same estimate
    auto a = expected_cost(MechanismKind::Optimal, p, kLinear, opt);
    auto b = expected_cost(MechanismKind::Optimal, p, kLinear, opt);
    CHECK(a.j == b.j);
}

TEST_CASE("quantization loss rows respect the theoretical cap") {
    SweepOptions so;
    auto rows = run_sweep("quantloss", so);
    REQUIRE(rows.size() == 9);
    for (const auto& row : rows) {
        double delta = 25.0 / row.param_value;
        double bound = 2.0 * 0.4 * delta; // L_phi * f_max * delta
        double loss = row.j_quantized - row.j_optimal;
        INFO("intervals " << row.param_value);
        CHECK(loss >= -1e-9);
        CHECK(loss <= bound + 1e-9);
        CHECK(row.j_complete <= row.j_optimal + 1e-9);
        CHECK(row.j_optimal <= row.j_benchmark + 1e-9);
    }
    // finer grids lose less
    CHECK(rows.back().j_quantized - rows.back().j_optimal <
          rows.front().j_quantized - rows.front().j_optimal);
}

TEST_CASE("single-source sweeps are monotone where theory says so") {
    auto fig5 = run_sweep("fig5");
    double prev = 0.0;
    for (const auto& row : fig5) {
        CHECK(row.j_optimal >= prev - 1e-9); // J* non-decreasing in c_high
        CHECK(row.j_complete <= row.j_optimal + 1e-9);
        CHECK(row.j_optimal <= row.j_quantized + 1e-9);
        CHECK(row.j_optimal <= row.j_benchmark + 1e-9);
        prev = row.j_optimal;
    }
    auto fig6 = run_sweep("fig6");
    prev = 0.0;
    for (const auto& row : fig6) {
        CHECK(row.j_optimal >= prev - 1e-9); // J* non-decreasing in alpha
        prev = row.j_optimal;
    }
}

TEST_CASE("multi-source sweeps carry usable standard errors") {
    SweepOptions so;
    so.mc_samples = 8192; // light budget for the unit suite
    auto fig8 = run_sweep("fig8", so);
    REQUIRE(fig8.size() == 4);
    for (const auto& row : fig8) {
        CHECK(row.std_error > 0.0);
        CHECK(row.j_complete <= row.j_optimal + 3.0 * row.std_error);
        CHECK(row.j_optimal <= row.j_quantized + 3.0 * row.std_error);
        CHECK(row.j_optimal <= row.j_benchmark + 3.0 * row.std_error);
    }
    // heterogeneity widens the benchmark gap
    CHECK(fig8.back().j_benchmark - fig8.back().j_optimal >
          fig8.front().j_benchmark - fig8.front().j_optimal);
}

TEST_CASE("unknown experiment is rejected") {
    CHECK_THROWS_AS(run_sweep("fig9"), config_error);
}
