#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "aoimech/baselines.hpp"
#include "aoimech/mech_quantized.hpp"
#include "aoimech/mech_single.hpp"

namespace aoimech {

// ---------------------------------------------------------------------------
// Deviation search. A mechanism is reduced to its interim view for one
// source: expected rate and expected payment as functions of the report,
// tabulated on a report grid. For multi-source mechanisms the expectation
// over rivals' costs uses one common low-discrepancy sample set for every
// report, so payoff comparisons across deviations are paired.
// ---------------------------------------------------------------------------
struct InterimRule {
    std::string id;
    std::vector<double> reports;
    std::vector<double> rate;    // expected rate per report
    std::vector<double> payment; // expected payment rate per report
    // per-sample values, laid out [report_index * n_samples + s]; empty for
    // mechanisms evaluated exactly
    std::size_t n_samples = 0;
    std::vector<double> rate_samples;
    std::vector<double> payment_samples;
};

struct DeviationRow {
    double true_cost = 0.0;
    double truthful_payoff = 0.0;
    double best_report = 0.0;
    double best_payoff = 0.0;
    double gain_std_error = 0.0;
};

struct DeviationReport {
    std::string mechanism_id;
    std::vector<DeviationRow> rows;
    double tolerance = 1e-6;
    double max_gain = 0.0;        // over rows: best_payoff - truthful_payoff
    double max_gain_std_error = 0.0;
    double best_deviation = 0.0;  // report achieving max_gain
    double min_truthful_payoff = 0.0;
    double payoff_at_top = 0.0;
    bool ic_ok = false;
    bool ir_ok = false;
};

namespace detail {
inline std::vector<double> uniform_grid(double lo, double hi, int n) {
    std::vector<double> g(n + 1);
    for (int i = 0; i <= n; ++i) g[i] = lo + (hi - lo) * i / n;
    g.back() = hi;
    return g;
}
} // namespace detail

// True costs are taken as every other report grid point, giving the default
// 200 x 400 search when the rule carries a 400-interval grid.
inline DeviationReport deviation_search(const InterimRule& rule, double tolerance = 1e-6) {
    DeviationReport rep;
    rep.mechanism_id = rule.id;
    rep.tolerance = tolerance;
    const std::size_t n = rule.reports.size();
    const std::size_t S = rule.n_samples;
    rep.max_gain = -kInf;
    rep.min_truthful_payoff = kInf;

    std::vector<double> gain_s(S);
    for (std::size_t t = 0; t < n; t += 2) {
        double c = rule.reports[t];
        DeviationRow row;
        row.true_cost = c;
        row.truthful_payoff = rule.payment[t] - c * rule.rate[t];
        row.best_payoff = -kInf;
        std::size_t best_k = t;
        for (std::size_t k = 0; k < n; ++k) {
            double p = rule.payment[k] - c * rule.rate[k];
            if (p > row.best_payoff) {
                row.best_payoff = p;
                best_k = k;
            }
        }
        row.best_report = rule.reports[best_k];
        if (S > 0) {
            for (std::size_t s = 0; s < S; ++s) {
                double dev = rule.payment_samples[best_k * S + s] -
                             c * rule.rate_samples[best_k * S + s];
                double tru = rule.payment_samples[t * S + s] - c * rule.rate_samples[t * S + s];
                gain_s[s] = dev - tru;
            }
            row.gain_std_error = mean_std_error(gain_s).std_error;
        }
        double gain = row.best_payoff - row.truthful_payoff;
        if (gain > rep.max_gain) {
            rep.max_gain = gain;
            rep.max_gain_std_error = row.gain_std_error;
            rep.best_deviation = row.best_report;
        }
        rep.min_truthful_payoff = std::min(rep.min_truthful_payoff, row.truthful_payoff);
        rep.rows.push_back(row);
    }
    rep.payoff_at_top = rep.rows.back().truthful_payoff;
    rep.ic_ok = rep.max_gain <= tolerance + 3.0 * rep.max_gain_std_error;
    double ir_slack = tolerance + 3.0 * rep.rows.back().gain_std_error;
    rep.ir_ok = rep.min_truthful_payoff >= -ir_slack && std::abs(rep.payoff_at_top) <= ir_slack;
    return rep;
}

inline DeviationReport verify_ic(const InterimRule& rule, double tolerance = 1e-6) {
    return deviation_search(rule, tolerance);
}

inline DeviationReport verify_ir(const InterimRule& rule, double tolerance = 1e-6) {
    return deviation_search(rule, tolerance);
}

// --- interim rule builders --------------------------------------------------

inline InterimRule interim_single(const SingleSourceMechanism& m, int n_reports = 400) {
    InterimRule r;
    r.id = "optimal-single";
    r.reports = detail::uniform_grid(m.dist().c_low(), m.dist().c_high(), n_reports);
    for (double rep : r.reports) {
        r.rate.push_back(m.rate(rep));
        r.payment.push_back(m.payment_rate(rep));
    }
    return r;
}

inline InterimRule interim_naive(const NaiveMechanism& m, int n_reports = 400) {
    InterimRule r;
    r.id = "naive";
    r.reports = detail::uniform_grid(m.c_low, m.c_high, n_reports);
    for (double rep : r.reports) {
        r.rate.push_back(m.rate(rep));
        r.payment.push_back(m.payment_rate(rep));
    }
    return r;
}

inline InterimRule interim_quantized_single(const QuantizedMechanism& m, int n_reports = 400) {
    InterimRule r;
    r.id = "quantized-single";
    const auto& d = m.profile().source(0).dist;
    r.reports = detail::uniform_grid(d.c_low(), d.c_high(), n_reports);
    for (double rep : r.reports) {
        r.rate.push_back(m.rate(0, {rep}));
        r.payment.push_back(m.payment_rate(0, {rep}));
    }
    return r;
}

namespace detail {
// Draw the rivals' cost profiles once (low-discrepancy, seeded); every report
// is evaluated on the same draws.
inline std::vector<std::vector<double>> rival_draws(const SourceProfile& profile, std::size_t i,
                                                    std::size_t n_samples, std::uint64_t seed) {
    const std::size_t I = profile.size();
    HaltonSampler sampler(static_cast<int>(I - 1), seed);
    std::vector<std::vector<double>> draws(n_samples, std::vector<double>(I, 0.0));
    for (std::size_t s = 0; s < n_samples; ++s) {
        int d = 0;
        for (std::size_t j = 0; j < I; ++j) {
            if (j == i) continue;
            draws[s][j] = profile.source(j).dist.quantile(sampler.coordinate(s, d++));
        }
    }
    return draws;
}
} // namespace detail

// Interim view of the optimal multi-source mechanism for source i. Rates are
// averaged per report; the expected payment uses the truthful form
// c f + tail, with the tail integral of the mean rate built per segment by
// Simpson so that the search is not polluted by quadrature bias.
inline InterimRule interim_optimal_multi(const MultiSourceMechanism& m, std::size_t i,
                                         int n_reports = 400, std::size_t n_samples = 4096,
                                         std::uint64_t seed = 1) {
    const auto& profile = m.profile();
    InterimRule r;
    r.id = "optimal-multi";
    const auto& dist = profile.source(i).dist;
    r.reports = detail::uniform_grid(dist.c_low(), dist.c_high(), n_reports);
    const std::size_t n = r.reports.size();
    r.n_samples = n_samples;
    r.rate_samples.assign(n * n_samples, 0.0);
    auto draws = detail::rival_draws(profile, i, n_samples, seed);

    r.rate.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double sum = 0.0;
        for (std::size_t s = 0; s < n_samples; ++s) {
            draws[s][i] = r.reports[k];
            double f = m.allocation(draws[s]).rates[i];
            r.rate_samples[k * n_samples + s] = f;
            sum += f;
        }
        r.rate[k] = sum / static_cast<double>(n_samples);
    }

    auto mean_rate_at = [&](double z) {
        double sum = 0.0;
        for (std::size_t s = 0; s < n_samples; ++s) {
            draws[s][i] = z;
            sum += m.allocation(draws[s]).rates[i];
        }
        return sum / static_cast<double>(n_samples);
    };

    // tail integrals of the mean rate, accumulated from the top
    std::vector<double> tail(n, 0.0);
    for (std::size_t k = n - 1; k-- > 0;) {
        double a = r.reports[k], b = r.reports[k + 1];
        double mid = mean_rate_at(0.5 * (a + b));
        tail[k] = tail[k + 1] + (b - a) / 6.0 * (r.rate[k] + 4.0 * mid + r.rate[k + 1]);
    }
    r.payment.resize(n);
    for (std::size_t k = 0; k < n; ++k) r.payment[k] = r.reports[k] * r.rate[k] + tail[k];

    // per-sample payments (trapezoid tails over the grid) feed only the
    // standard-error estimates
    r.payment_samples.assign(n * n_samples, 0.0);
    std::vector<double> tail_s(n_samples, 0.0);
    for (std::size_t k = n - 1; k-- > 0;) {
        double w = r.reports[k + 1] - r.reports[k];
        for (std::size_t s = 0; s < n_samples; ++s) {
            tail_s[s] += 0.5 * w *
                         (r.rate_samples[k * n_samples + s] +
                          r.rate_samples[(k + 1) * n_samples + s]);
            r.payment_samples[k * n_samples + s] =
                r.reports[k] * r.rate_samples[k * n_samples + s] + tail_s[s];
        }
    }
    for (std::size_t s = 0; s < n_samples; ++s)
        r.payment_samples[(n - 1) * n_samples + s] =
            r.reports[n - 1] * r.rate_samples[(n - 1) * n_samples + s];
    return r;
}

inline InterimRule interim_benchmark(const SourceProfile& profile, const AoiCostModel& aoi,
                                     std::size_t i, int n_reports = 400,
                                     std::size_t n_samples = 4096, std::uint64_t seed = 1) {
    InterimRule r;
    r.id = "benchmark";
    const auto& dist = profile.source(i).dist;
    r.reports = detail::uniform_grid(dist.c_low(), dist.c_high(), n_reports);
    const std::size_t n = r.reports.size();
    r.n_samples = n_samples;
    r.rate_samples.assign(n * n_samples, 0.0);
    r.payment_samples.assign(n * n_samples, 0.0);
    auto draws = detail::rival_draws(profile, i, n_samples, seed);
    r.rate.assign(n, 0.0);
    r.payment.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t s = 0; s < n_samples; ++s) {
            draws[s][i] = r.reports[k];
            auto out = benchmark_mechanism(profile, draws[s], aoi);
            r.rate_samples[k * n_samples + s] = out.alloc.rates[i];
            r.payment_samples[k * n_samples + s] = out.payment_rates[i];
            r.rate[k] += out.alloc.rates[i];
            r.payment[k] += out.payment_rates[i];
        }
        r.rate[k] /= static_cast<double>(n_samples);
        r.payment[k] /= static_cast<double>(n_samples);
    }
    return r;
}

// Quantized multi-source interim view. Within a quantization cell both the
// rate and the payment are constant in the report, so each sample needs one
// allocation per cell, not per report point.
inline InterimRule interim_quantized_multi(const QuantizedMechanism& m, std::size_t i,
                                           int n_reports = 400, std::size_t n_samples = 4096,
                                           std::uint64_t seed = 1) {
    const auto& profile = m.profile();
    InterimRule r;
    r.id = "quantized-multi";
    const auto& dist = profile.source(i).dist;
    r.reports = detail::uniform_grid(dist.c_low(), dist.c_high(), n_reports);
    const std::size_t n = r.reports.size();
    const auto& cells = m.cells(i);
    const std::size_t nc = cells.size();
    r.n_samples = n_samples;
    r.rate_samples.assign(n * n_samples, 0.0);
    r.payment_samples.assign(n * n_samples, 0.0);
    auto draws = detail::rival_draws(profile, i, n_samples, seed);

    std::vector<std::size_t> cell_of(n);
    for (std::size_t k = 0; k < n; ++k) cell_of[k] = m.cell_index(i, r.reports[k]);

    std::vector<double> f_cell(nc), h_cell(nc);
    r.rate.assign(n, 0.0);
    r.payment.assign(n, 0.0);
    for (std::size_t s = 0; s < n_samples; ++s) {
        auto q = draws[s];
        for (std::size_t j = 0; j < profile.size(); ++j)
            if (j != i) q[j] = m.quantize(j, q[j]);
        for (std::size_t cidx = 0; cidx < nc; ++cidx) f_cell[cidx] = m.rate_at_cell(i, cidx, q);
        double tail = 0.0;
        for (std::size_t cidx = nc; cidx-- > 0;) {
            // payment is constant on the cell: cell_hi*f + tail above
            h_cell[cidx] = cells[cidx].hi * f_cell[cidx] + tail;
            tail += (cells[cidx].hi - cells[cidx].lo) * f_cell[cidx];
        }
        for (std::size_t k = 0; k < n; ++k) {
            r.rate_samples[k * n_samples + s] = f_cell[cell_of[k]];
            r.payment_samples[k * n_samples + s] = h_cell[cell_of[k]];
        }
    }
    for (std::size_t k = 0; k < n; ++k) {
        double fr = 0.0, pr = 0.0;
        for (std::size_t s = 0; s < n_samples; ++s) {
            fr += r.rate_samples[k * n_samples + s];
            pr += r.payment_samples[k * n_samples + s];
        }
        r.rate[k] = fr / static_cast<double>(n_samples);
        r.payment[k] = pr / static_cast<double>(n_samples);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Discrete-event simulator for a fixed cost profile: equal-spaced updates at
// interarrival x, the updating source drawn i.i.d. from the scheduling
// probabilities each epoch. Cost accounting uses the exact G(x); the age
// sawtooth is additionally sampled 16 times per interarrival for trajectory
// output (capped to the first 4096 updates).
// ---------------------------------------------------------------------------
struct SimUpdate {
    double time = 0.0;
    double interarrival = 0.0;
    std::size_t source = 0;
    double payment = 0.0;
};

struct SimTrace {
    std::uint64_t seed = 0;
    std::size_t update_count = 0;
    std::vector<SimUpdate> updates;
    std::vector<std::pair<double, double>> age_samples; // (time, age)
    double destination_cost_rate = 0.0;
    std::vector<double> source_payoff_rates;
};

// p_i = h_i * x / pi_i (zero for never-scheduled sources)
inline std::vector<double> per_update_prices(const MultiAllocation& alloc,
                                             const std::vector<double>& payment_rates) {
    std::vector<double> p(payment_rates.size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i)
        if (alloc.schedule_probs[i] > 0.0)
            p[i] = payment_rates[i] * alloc.interarrival / alloc.schedule_probs[i];
    return p;
}

inline SimTrace simulate(const MultiAllocation& alloc, const std::vector<double>& prices,
                         const std::vector<double>& true_costs, const AoiCostModel& aoi,
                         std::size_t updates, std::uint64_t seed) {
    if (updates == 0) throw config_error("simulate: update count must be positive");
    if (alloc.no_trade()) throw config_error("simulate: aggregate rate must be positive");
    if (prices.size() != alloc.rates.size() || true_costs.size() != alloc.rates.size())
        throw config_error("simulate: size mismatch");

    SimTrace trace;
    trace.seed = seed;
    trace.update_count = updates;
    trace.updates.reserve(updates);
    const double x = alloc.interarrival;
    const double g_per_update = aoi.cumulative(x);

    std::mt19937_64 rng(seed);
    auto next_u = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

    std::vector<double> cum_pi(alloc.schedule_probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < cum_pi.size(); ++i) {
        acc += alloc.schedule_probs[i];
        cum_pi[i] = acc;
    }

    double paid_total = 0.0;
    std::vector<double> profit(true_costs.size(), 0.0);
    const std::size_t age_sample_cap = std::min<std::size_t>(updates, 4096);
    for (std::size_t k = 0; k < updates; ++k) {
        double u = next_u();
        std::size_t src = cum_pi.size() - 1;
        for (std::size_t i = 0; i < cum_pi.size(); ++i)
            if (u <= cum_pi[i]) {
                src = i;
                break;
            }
        SimUpdate up;
        up.time = static_cast<double>(k + 1) * x;
        up.interarrival = x;
        up.source = src;
        up.payment = prices[src];
        trace.updates.push_back(up);
        paid_total += up.payment;
        profit[src] += up.payment - true_costs[src];
        if (k < age_sample_cap)
            for (int j = 0; j < 16; ++j) {
                double age = x * j / 16.0;
                trace.age_samples.emplace_back(static_cast<double>(k) * x + age, age);
            }
    }
    double horizon = static_cast<double>(updates) * x;
    trace.destination_cost_rate =
        (static_cast<double>(updates) * g_per_update + paid_total) / horizon;
    trace.source_payoff_rates.resize(true_costs.size());
    for (std::size_t i = 0; i < true_costs.size(); ++i)
        trace.source_payoff_rates[i] = profit[i] / horizon;
    return trace;
}

// Long-run age cost rate of an arbitrary interarrival sequence,
// sum_k G(x_k) / sum_k x_k. Jensen's inequality makes the equal-spacing
// sequence with the same mean a lower bound.
inline double age_cost_rate(const AoiCostModel& aoi, const std::vector<double>& interarrivals) {
    double num = 0.0, den = 0.0;
    for (double x : interarrivals) {
        num += aoi.cumulative(x);
        den += x;
    }
    if (den <= 0.0) throw config_error("age_cost_rate: empty sequence");
    return num / den;
}

} // namespace aoimech
