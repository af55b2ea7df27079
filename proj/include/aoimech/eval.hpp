#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aoimech/baselines.hpp"
#include "aoimech/mech_quantized.hpp"
#include "aoimech/mech_single.hpp"
#include "aoimech/parallel.hpp"

namespace aoimech {

enum class MechanismKind { Optimal, Quantized, Benchmark, CompleteInfo };

inline const char* mechanism_name(MechanismKind k) {
    switch (k) {
    case MechanismKind::Optimal: return "optimal";
    case MechanismKind::Quantized: return "quantized";
    case MechanismKind::Benchmark: return "benchmark";
    case MechanismKind::CompleteInfo: return "complete";
    }
    return "?";
}

enum class Estimator { Quadrature, MonteCarlo };

// Expected destination cost rate J, with the dual-route consistency check:
// for truthful mechanisms the expected payment equals the expected rate
// weighted by the virtual cost, so the payment form and the virtual-cost
// form of J must agree up to the estimator's accuracy.
struct EvaluationReport {
    std::string mechanism_id;
    double j = 0.0;
    Estimator estimator = Estimator::Quadrature;
    std::size_t nodes = 0; // quadrature nodes or MC samples
    double std_error = 0.0;
    double j_payment_form = 0.0;
    double j_virtual_form = 0.0;
    double cross_check_gap = 0.0;
    bool consistent = true;
    std::map<std::string, double> params;
};

struct EvalOptions {
    double delta_q = 1.0;
    std::uint64_t seed = 1;
    std::size_t mc_samples = std::size_t{1} << 16;
    int quad_nodes = 200;
    std::size_t payment_subsample = 256; // per-sample payment cross-check budget
};

namespace detail {
// pointwise destination value at virtual price v: min over f in [0, cap] of
// G(1/f) f + f v
inline double pointwise_value(const AoiCostModel& aoi, double v, double cap) {
    double x = aoi.invert_marginal_reduction(std::max(v, 0.0));
    if (x <= 0.0) {
        // zero virtual price: the rate runs at the cap, and uncapped the
        // age cost vanishes in the limit
        if (!std::isfinite(cap)) return 0.0;
        if (cap <= 0.0) return kInf;
        return aoi.cumulative(1.0 / cap) * cap + cap * std::max(v, 0.0);
    }
    double f = std::clamp(1.0 / x, 0.0, cap);
    if (f <= 0.0) return kInf;
    return aoi.cumulative(1.0 / f) * f + f * v;
}
} // namespace detail

inline EvaluationReport expected_cost(MechanismKind kind, const SourceProfile& profile,
                                      const AoiCostModel& aoi, const EvalOptions& opt = {}) {
    EvaluationReport rep;
    rep.mechanism_id = mechanism_name(kind);

    if (profile.size() == 1) {
        // ---- single source: Gauss-Legendre over the prior ----
        rep.estimator = Estimator::Quadrature;
        const auto& dist = profile.source(0).dist;
        double lo = dist.c_low(), hi = dist.c_high();

        // integration pieces: quantization cells are integrand kinks
        std::vector<std::pair<double, double>> pieces;
        SingleSourceMechanism optimal(dist, aoi, profile.source(0).f_max);
        std::optional<QuantizedMechanism> quant;
        if (kind == MechanismKind::Quantized) {
            quant.emplace(profile, aoi, opt.delta_q);
            for (const auto& cell : quant->cells(0)) pieces.emplace_back(cell.lo, cell.hi);
        } else {
            pieces.emplace_back(lo, hi);
        }

        auto rate_of = [&](double c) {
            switch (kind) {
            case MechanismKind::Optimal: return optimal.rate(c);
            case MechanismKind::Quantized: return quant->rate(0, {c});
            case MechanismKind::Benchmark:
                return benchmark_mechanism(profile, {c}, aoi).alloc.rates[0];
            case MechanismKind::CompleteInfo:
                return complete_info_pricing(profile, {c}, aoi).alloc.rates[0];
            }
            return 0.0;
        };
        auto payment_of = [&](double c) {
            switch (kind) {
            case MechanismKind::Optimal: return optimal.payment_rate(c);
            case MechanismKind::Quantized: return quant->payment_rate(0, {c});
            case MechanismKind::Benchmark:
                return benchmark_mechanism(profile, {c}, aoi).payment_rates[0];
            case MechanismKind::CompleteInfo:
                return complete_info_pricing(profile, {c}, aoi).payment_rates[0];
            }
            return 0.0;
        };
        // the complete-information scheme pays the cost itself, not the
        // virtual cost; its two routes coincide by construction
        auto rent_of = [&](double c) {
            return kind == MechanismKind::CompleteInfo ? c : dist.virtual_cost(c);
        };

        double j_pay = 0.0, j_virt = 0.0;
        std::size_t nodes = 0;
        for (auto [a, b] : pieces) {
            j_pay += integrate_gauss(
                [&](double c) {
                    double f = rate_of(c);
                    double age = f > 0.0 ? aoi.cumulative(1.0 / f) * f : kInf;
                    return (age + payment_of(c)) * dist.pdf(c);
                },
                a, b, opt.quad_nodes);
            j_virt += integrate_gauss(
                [&](double c) {
                    double f = rate_of(c);
                    double age = f > 0.0 ? aoi.cumulative(1.0 / f) * f : kInf;
                    return (age + f * rent_of(c)) * dist.pdf(c);
                },
                a, b, opt.quad_nodes);
            nodes += 2 * static_cast<std::size_t>(opt.quad_nodes);
        }
        rep.nodes = nodes;
        rep.j_payment_form = j_pay;
        rep.j_virtual_form = j_virt;
        rep.j = j_virt;
        rep.cross_check_gap = std::abs(j_pay - j_virt);
        rep.consistent = rep.cross_check_gap <= 1e-6;
        return rep;
    }

    // ---- multiple sources: quasi-Monte Carlo over the product prior ----
    rep.estimator = Estimator::MonteCarlo;
    const std::size_t I = profile.size();
    HaltonSampler sampler(static_cast<int>(I), opt.seed);
    MultiSourceMechanism optimal(profile, aoi);
    std::optional<QuantizedMechanism> quant;
    if (kind == MechanismKind::Quantized) quant.emplace(profile, aoi, opt.delta_q);

    auto sample_costs = [&](std::size_t s) {
        std::vector<double> c(I);
        for (std::size_t i = 0; i < I; ++i)
            c[i] = profile.source(i).dist.quantile(sampler.coordinate(s, static_cast<int>(i)));
        return c;
    };
    auto alloc_of = [&](const std::vector<double>& c) {
        switch (kind) {
        case MechanismKind::Optimal: return optimal.allocation(c);
        case MechanismKind::Quantized: return quant->allocation(c);
        case MechanismKind::Benchmark: return benchmark_mechanism(profile, c, aoi).alloc;
        case MechanismKind::CompleteInfo: return complete_info_pricing(profile, c, aoi).alloc;
        }
        return MultiAllocation{};
    };

    const std::size_t n = opt.mc_samples;
    std::vector<double> virt_samples(n);
    for (std::size_t s = 0; s < n; ++s) {
        auto c = sample_costs(s);
        auto a = alloc_of(c);
        double v = a.no_trade() ? 0.0 : aoi.cumulative(a.interarrival) * a.aggregate;
        for (std::size_t i = 0; i < I; ++i) {
            double rent = kind == MechanismKind::CompleteInfo
                              ? c[i]
                              : profile.source(i).dist.virtual_cost(c[i]);
            v += a.rates[i] * rent;
        }
        virt_samples[s] = v;
    }
    auto stat = mean_std_error(virt_samples);
    rep.nodes = n;
    rep.j = rep.j_virtual_form = stat.mean;
    rep.std_error = stat.std_error;

    // payment-form cross-check on a paired subsample (true payments need a
    // report-integral per sample)
    std::size_t m = std::min(opt.payment_subsample, n);
    std::vector<double> diff(m);
    for (std::size_t s = 0; s < m; ++s) {
        auto c = sample_costs(s);
        double pay = 0.0, age = 0.0;
        switch (kind) {
        case MechanismKind::Optimal: {
            auto a = optimal.allocation(c);
            age = a.no_trade() ? 0.0 : aoi.cumulative(a.interarrival) * a.aggregate;
            for (std::size_t i = 0; i < I; ++i) pay += optimal.payment_rate(i, c);
            break;
        }
        case MechanismKind::Quantized: {
            auto a = quant->allocation(c);
            age = a.no_trade() ? 0.0 : aoi.cumulative(a.interarrival) * a.aggregate;
            for (std::size_t i = 0; i < I; ++i) pay += quant->payment_rate(i, c);
            break;
        }
        case MechanismKind::Benchmark: {
            auto out = benchmark_mechanism(profile, c, aoi);
            age = out.alloc.no_trade() ? 0.0
                                       : aoi.cumulative(out.alloc.interarrival) * out.alloc.aggregate;
            for (double h : out.payment_rates) pay += h;
            break;
        }
        case MechanismKind::CompleteInfo: {
            auto out = complete_info_pricing(profile, c, aoi);
            age = out.alloc.no_trade() ? 0.0
                                       : aoi.cumulative(out.alloc.interarrival) * out.alloc.aggregate;
            for (double h : out.payment_rates) pay += h;
            break;
        }
        }
        diff[s] = (age + pay) - virt_samples[s];
    }
    auto dstat = mean_std_error(diff);
    rep.j_payment_form = stat.mean + dstat.mean;
    rep.cross_check_gap = std::abs(dstat.mean);
    rep.consistent = rep.cross_check_gap <= 3.0 * dstat.std_error + 1e-9;
    return rep;
}

// ---------------------------------------------------------------------------
// Closed forms for the two analyzed settings (power age cost, f_max large).
// ---------------------------------------------------------------------------
struct ClosedFormTable {
    std::string setting;
    double alpha = 1.0;
    double c_low = 0.0;
    double c_high = 1.0;
    double j_benchmark = 0.0;
    double j_complete = 0.0;
    double j_complete_cross = 0.0; // independent route
    double j_optimal = 0.0;
    double j_optimal_cross = 0.0;
    double benchmark_ratio_bound = 0.0; // J_B/J_C <= 1 + a/(1+a)
    double optimal_ratio_bound = 0.0;   // J*/J_C <= 2^{a/(1+a)}
};

namespace detail {
// upper incomplete gamma by quadrature, Gamma(s, x) = int_x^inf t^{s-1} e^-t
inline double upper_incomplete_gamma(double s, double x) {
    double cut = std::max(x, 1.0) + 80.0;
    return integrate_adaptive([s](double t) { return std::pow(t, s - 1.0) * std::exp(-t); },
                              std::max(x, 1e-300), cut, 1e-12);
}
} // namespace detail

inline ClosedFormTable closed_forms_uniform(double alpha, double c_low, double c_high) {
    if (!(alpha > 0.0) || !(c_high > c_low) || c_low < 0.0)
        throw config_error("closed_forms_uniform: bad parameters");
    ClosedFormTable t;
    t.setting = "uniform";
    t.alpha = alpha;
    t.c_low = c_low;
    t.c_high = c_high;
    double a = alpha, W = c_high - c_low;
    double ex = a / (1.0 + a);
    double p = (1.0 + 2.0 * a) / (1.0 + a);
    t.j_benchmark = std::pow(c_high * (1.0 + 1.0 / a), ex);
    t.j_complete = (std::pow(c_high, p) - std::pow(c_low, p)) / W * ((1.0 + a) / (1.0 + 2.0 * a)) *
                   std::pow(1.0 + 1.0 / a, ex);
    t.j_optimal = std::pow(2.0 * (1.0 + 1.0 / a), ex) * ((1.0 + a) / (1.0 + 2.0 * a)) *
                  (std::pow(c_high - 0.5 * c_low, p) - std::pow(0.5 * c_low, p)) / W;
    auto aoi = AoiCostModel::power(a);
    t.j_complete_cross = integrate_adaptive(
        [&](double c) { return detail::pointwise_value(aoi, c, kInf) / W; }, c_low, c_high, 1e-11);
    t.j_optimal_cross = integrate_adaptive(
        [&](double c) { return detail::pointwise_value(aoi, 2.0 * c - c_low, kInf) / W; }, c_low,
        c_high, 1e-11);
    t.benchmark_ratio_bound = 1.0 + a / (1.0 + a);
    t.optimal_ratio_bound = std::pow(2.0, ex);
    return t;
}

// Exponential prior with unit rate truncated to [0, c_high].
inline ClosedFormTable closed_forms_trunc_exp(double alpha, double c_high) {
    if (!(alpha > 0.0) || !(c_high > 0.0))
        throw config_error("closed_forms_trunc_exp: bad parameters");
    ClosedFormTable t;
    t.setting = "trunc_exp";
    t.alpha = alpha;
    t.c_low = 0.0;
    t.c_high = c_high;
    double a = alpha;
    double ex = a / (1.0 + a);
    double z = -std::expm1(-c_high);
    t.j_benchmark = std::pow(c_high * (1.0 + 1.0 / a), ex);
    auto aoi = AoiCostModel::power(a);
    auto pdf = [&](double c) { return std::exp(-c) / z; };
    t.j_complete = integrate_adaptive(
        [&](double c) { return detail::pointwise_value(aoi, c, kInf) * pdf(c); }, 0.0, c_high,
        1e-11);
    // incomplete-gamma route: s = (2a+1)/(1+a)
    double s = (2.0 * a + 1.0) / (1.0 + a);
    t.j_complete_cross =
        std::pow(1.0 + 1.0 / a, ex) / z *
        (detail::upper_incomplete_gamma(s, 0.0) - detail::upper_incomplete_gamma(s, c_high));
    auto phi = [](double c) { return c + std::expm1(c); };
    t.j_optimal = integrate_adaptive(
        [&](double c) { return detail::pointwise_value(aoi, phi(c), kInf) * pdf(c); }, 0.0, c_high,
        1e-11);
    // independent route: substitute c = u^2, which removes the sqrt-type
    // kink of the integrand at the bottom of the support
    t.j_optimal_cross = integrate_gauss(
        [&](double u) {
            double c = u * u;
            return detail::pointwise_value(aoi, phi(c), kInf) * pdf(c) * 2.0 * u;
        },
        0.0, std::sqrt(c_high), 400);
    t.benchmark_ratio_bound = 1.0 + a / (1.0 + a);
    t.optimal_ratio_bound = std::pow(2.0, ex);
    return t;
}

// ---------------------------------------------------------------------------
// Parameter sweeps. Each row is an independent job with its own derived
// seed; rows run in parallel and are emitted in order.
// ---------------------------------------------------------------------------
struct SweepRow {
    std::string experiment;
    std::uint64_t seed = 0;
    std::string param_name;
    double param_value = 0.0;
    double j_complete = 0.0;
    double j_optimal = 0.0;
    double j_quantized = 0.0;
    double j_benchmark = 0.0;
    double std_error = 0.0; // largest MC standard error across the columns
    bool se_ok = true;      // std error within 0.5% of each J
};

struct SweepOptions {
    std::uint64_t master_seed = 7;
    std::size_t mc_samples = std::size_t{1} << 16;
};

namespace detail {
inline SweepRow eval_single_row(const std::string& experiment, const std::string& param,
                                double value, const SourceProfile& profile,
                                const AoiCostModel& aoi, double delta_q, std::uint64_t seed) {
    SweepRow row;
    row.experiment = experiment;
    row.seed = seed;
    row.param_name = param;
    row.param_value = value;
    EvalOptions opt;
    opt.delta_q = delta_q;
    opt.seed = seed;
    row.j_complete = expected_cost(MechanismKind::CompleteInfo, profile, aoi, opt).j;
    row.j_optimal = expected_cost(MechanismKind::Optimal, profile, aoi, opt).j;
    row.j_quantized = expected_cost(MechanismKind::Quantized, profile, aoi, opt).j;
    row.j_benchmark = expected_cost(MechanismKind::Benchmark, profile, aoi, opt).j;
    return row;
}

inline SweepRow eval_multi_row(const std::string& experiment, const std::string& param,
                               double value, const SourceProfile& profile, const AoiCostModel& aoi,
                               double delta_q, std::uint64_t seed, std::size_t mc_samples) {
    SweepRow row;
    row.experiment = experiment;
    row.seed = seed;
    row.param_name = param;
    row.param_value = value;
    EvalOptions opt;
    opt.delta_q = delta_q;
    opt.seed = seed;
    opt.mc_samples = mc_samples;
    opt.payment_subsample = 0; // J columns only; no per-sample payments here
    auto jc = expected_cost(MechanismKind::CompleteInfo, profile, aoi, opt);
    auto jo = expected_cost(MechanismKind::Optimal, profile, aoi, opt);
    auto jq = expected_cost(MechanismKind::Quantized, profile, aoi, opt);
    auto jb = expected_cost(MechanismKind::Benchmark, profile, aoi, opt);
    row.j_complete = jc.j;
    row.j_optimal = jo.j;
    row.j_quantized = jq.j;
    row.j_benchmark = jb.j;
    for (const auto* r : {&jc, &jo, &jq, &jb}) {
        row.std_error = std::max(row.std_error, r->std_error);
        if (r->std_error > 0.005 * r->j) row.se_ok = false;
    }
    return row;
}

inline SourceProfile trunc_exp_profile(std::size_t I, double mean_first, double mean_rest,
                                       double c_high) {
    std::vector<SourceSpec> specs;
    specs.push_back({CostDistribution::trunc_exp(1.0 / mean_first, c_high), 1e9});
    for (std::size_t i = 1; i < I; ++i)
        specs.push_back({CostDistribution::trunc_exp(1.0 / mean_rest, c_high), 1e9});
    return SourceProfile(std::move(specs));
}
} // namespace detail

// Canned experiments:
//   quantloss - single uniform source, loss vs number of quantization cells
//   fig5      - single uniform source, sweep of the cost upper bound
//   fig6      - single uniform source, sweep of the age exponent
//   fig7      - truncated-exponential sources, sweep of the source count
//   fig8      - truncated-exponential sources, sweep of the rivals' mean cost
// The mu parameter of fig7/fig8 is the rivals' MEAN sampling cost (the
// truncated-exponential rate is 1/mu): growing mu makes the rivals pricier
// than source 1 and widens the benchmark's gap.
inline std::vector<SweepRow> run_sweep(const std::string& name, const SweepOptions& opt = {}) {
    std::vector<SweepRow> rows;
    auto linear = AoiCostModel::power(1.0);

    if (name == "quantloss") {
        const std::vector<double> intervals{2, 3, 4, 5, 8, 10, 15, 20, 25};
        SourceProfile profile({{CostDistribution::uniform(5.0, 30.0), 0.4}});
        rows.resize(intervals.size());
        parallel_for(intervals.size(), [&](std::size_t r) {
            double dq = 25.0 / intervals[r];
            rows[r] = detail::eval_single_row(name, "intervals", intervals[r], profile, linear, dq,
                                              derive_seed(opt.master_seed, r));
        });
    } else if (name == "fig5") {
        const std::vector<double> c_highs{10, 15, 20, 30, 40, 50, 75, 100};
        rows.resize(c_highs.size());
        parallel_for(c_highs.size(), [&](std::size_t r) {
            SourceProfile profile({{CostDistribution::uniform(5.0, c_highs[r]), 1e9}});
            rows[r] = detail::eval_single_row(name, "c_high", c_highs[r], profile, linear, 1.0,
                                              derive_seed(opt.master_seed, r));
        });
    } else if (name == "fig6") {
        const std::vector<double> alphas{0.5, 0.75, 1.0, 1.5, 2.0, 3.0};
        SourceProfile profile({{CostDistribution::uniform(5.0, 30.0), 1e9}});
        rows.resize(alphas.size());
        parallel_for(alphas.size(), [&](std::size_t r) {
            rows[r] = detail::eval_single_row(name, "alpha", alphas[r], profile,
                                              AoiCostModel::power(alphas[r]), 1.0,
                                              derive_seed(opt.master_seed, r));
        });
    } else if (name == "fig7") {
        const std::vector<double> counts{2, 3, 4, 5, 6, 7, 8};
        rows.resize(counts.size());
        parallel_for(counts.size(), [&](std::size_t r) {
            auto profile =
                detail::trunc_exp_profile(static_cast<std::size_t>(counts[r]), 0.5, 2.0, 20.0);
            rows[r] = detail::eval_multi_row(name, "sources", counts[r], profile, linear, 0.5,
                                             derive_seed(opt.master_seed, r), opt.mc_samples);
        });
    } else if (name == "fig8") {
        const std::vector<double> mus{0.5, 1.0, 2.0, 4.0};
        rows.resize(mus.size());
        parallel_for(mus.size(), [&](std::size_t r) {
            auto profile = detail::trunc_exp_profile(4, 0.5, mus[r], 20.0);
            rows[r] = detail::eval_multi_row(name, "mu", mus[r], profile, linear, 0.5,
                                             derive_seed(opt.master_seed, r), opt.mc_samples);
        });
    } else {
        throw config_error("run_sweep: unknown experiment '" + name + "'");
    }
    return rows;
}

} // namespace aoimech
