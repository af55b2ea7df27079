#pragma once

#include <algorithm>
#include <vector>

#include "aoimech/mech_multi.hpp"

namespace aoimech {

enum class BaselineKind { Benchmark, CompleteInfo };

struct BaselineOutcome {
    MultiAllocation alloc;
    std::vector<double> payment_rates;
};

// Second-price-style benchmark: only the lowest reporter updates (ties go to
// the lowest index) and its subsidy per unit rate is the second-lowest
// report, so the outcome never depends on the winner's own report. The
// winner's rate minimizes f*G(1/f) + f*c2 over [0, f_max], i.e. M(1/f) = c2.
// With a single source the runner-up price is the support's upper end.
inline BaselineOutcome benchmark_mechanism(const SourceProfile& profile,
                                           const std::vector<double>& costs,
                                           const AoiCostModel& aoi) {
    profile.require_costs(costs);
    std::size_t winner = 0;
    for (std::size_t i = 1; i < costs.size(); ++i)
        if (costs[i] < costs[winner]) winner = i;

    double runner_up;
    if (costs.size() == 1) {
        runner_up = profile.source(0).dist.c_high();
    } else {
        runner_up = kInf;
        for (std::size_t i = 0; i < costs.size(); ++i)
            if (i != winner) runner_up = std::min(runner_up, costs[i]);
    }

    double x = aoi.invert_marginal_reduction(runner_up);
    double f = x > 0.0 ? 1.0 / x : profile.source(winner).f_max;
    f = std::clamp(f, 0.0, profile.source(winner).f_max);

    std::vector<double> rates(costs.size(), 0.0);
    rates[winner] = f;
    BaselineOutcome out;
    out.alloc = detail::make_allocation(std::move(rates));
    out.payment_rates.assign(costs.size(), 0.0);
    out.payment_rates[winner] = f * runner_up;
    return out;
}

// Clairvoyant lower bound: the destination sees the true costs, subsidizes
// them exactly, and allocates as the optimal mechanism would with virtual
// costs replaced by the costs themselves.
inline BaselineOutcome complete_info_pricing(const SourceProfile& profile,
                                             const std::vector<double>& costs,
                                             const AoiCostModel& aoi) {
    profile.require_costs(costs);
    AggregateCostCurve curve(costs, detail::profile_caps(profile));
    BaselineOutcome out;
    out.alloc = detail::make_allocation(curve.waterfill(curve.solve_rate(aoi)));
    out.payment_rates.resize(costs.size());
    for (std::size_t i = 0; i < costs.size(); ++i)
        out.payment_rates[i] = out.alloc.rates[i] * costs[i];
    return out;
}

// Destination cost rate of an outcome: age cost plus total payments per time.
inline double destination_cost_rate(const BaselineOutcome& out, const AoiCostModel& aoi) {
    if (out.alloc.no_trade()) return kInf;
    double pay = 0.0;
    for (double h : out.payment_rates) pay += h;
    return aoi.cumulative(out.alloc.interarrival) * out.alloc.aggregate + pay;
}

} // namespace aoimech
