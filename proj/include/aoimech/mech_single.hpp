#pragma once

#include <cmath>
#include <optional>
#include <utility>

#include "aoimech/aoi_cost.hpp"
#include "aoimech/cost_dist.hpp"
#include "aoimech/numerics.hpp"

namespace aoimech {

// Per-update price and interarrival time, the (p, x) view of a rate-form rule.
struct PriceQuote {
    double price = 0.0;
    double interarrival = 0.0;
};

// The cost-minimizing single-source mechanism: the update rate equates the
// marginal age-cost reduction with the (ironed) virtual cost, capped at
// f_max, and the payment rate is the unique one that makes truthful
// reporting optimal while leaving the top cost type with zero surplus:
//   h(c) = c f(c) + int_c^{c_high} f(z) dz.
class SingleSourceMechanism {
public:
    SingleSourceMechanism(CostDistribution dist, AoiCostModel aoi, double f_max = 1e9)
        : ironed_(std::move(dist)), aoi_(std::move(aoi)), f_max_(f_max) {
        if (!(f_max_ >= 0.0)) throw config_error("SingleSourceMechanism: f_max must be >= 0");
    }

    const CostDistribution& dist() const { return ironed_.base(); }
    const AoiCostModel& aoi() const { return aoi_; }
    const IronedVirtualCost& ironed() const { return ironed_; }
    double f_max() const { return f_max_; }

    // f*(c) = min(f_max, 1 / x) with M(x) = phi~(c)
    double rate(double c) const {
        double v = ironed_(c);
        if (v <= 0.0) return f_max_; // zero virtual cost: uncapped rate diverges
        double x = aoi_.invert_marginal_reduction(v);
        if (x <= 0.0) return f_max_;
        return std::min(f_max_, 1.0 / x);
    }

    // h*(c), by adaptive quadrature of the rate over the reports above c
    double payment_rate(double c) const {
        double tail = integrate_adaptive([this](double z) { return rate(z); }, c,
                                         dist().c_high(), 1e-9, 40);
        return c * rate(c) + tail;
    }

    // (p, x) = (h/f, 1/f); empty when the source is assigned no updates
    std::optional<PriceQuote> price_schedule(double c) const {
        double f = rate(c);
        if (f <= 0.0) return std::nullopt;
        return PriceQuote{payment_rate(c) / f, 1.0 / f};
    }

private:
    IronedVirtualCost ironed_;
    AoiCostModel aoi_;
    double f_max_;
};

// ---------------------------------------------------------------------------
// The trust-the-report strawman for a power age cost: price the reported
// cost and pick the interarrival that would be optimal if the report were
// honest. The unique best response is to report c_high, which the
// best_misreport grid search confirms.
// ---------------------------------------------------------------------------
struct NaiveMechanism {
    double alpha = 1.0;
    double c_low = 0.0;
    double c_high = 1.0;

    // x_N(report) = ((1 + 1/alpha) * report)^(1/(1+alpha))
    double interarrival(double reported) const {
        return std::pow((1.0 + 1.0 / alpha) * reported, 1.0 / (1.0 + alpha));
    }

    double price(double reported) const { return reported; }

    double rate(double reported) const { return 1.0 / interarrival(reported); }

    // per-update profit over the interarrival
    double payoff_rate(double reported, double true_cost) const {
        return (price(reported) - true_cost) / interarrival(reported);
    }

    double payment_rate(double reported) const { return price(reported) / interarrival(reported); }

    // grid argmax of the payoff; independent of the true cost in this family
    double best_misreport(double true_cost, int grid = 400) const {
        double best_r = c_low, best_v = -kInf;
        for (int i = 0; i <= grid; ++i) {
            double r = c_low + (c_high - c_low) * i / grid;
            double v = payoff_rate(r, true_cost);
            if (v > best_v) {
                best_v = v;
                best_r = r;
            }
        }
        return best_r;
    }

    // destination's cost rate when the source reports r
    double destination_cost_at(double r) const {
        double x = interarrival(r);
        double g_cum = std::pow(x, alpha + 1.0) / (alpha + 1.0);
        return (g_cum + price(r)) / x;
    }

    // equilibrium cost: the source reports c_high
    double destination_cost() const {
        return std::pow(c_high * (1.0 + 1.0 / alpha), alpha / (1.0 + alpha));
    }
};

inline NaiveMechanism naive_counterpart(const CostDistribution& dist, const AoiCostModel& aoi) {
    if (!aoi.is_power())
        throw config_error("naive_counterpart: defined for the power age cost only");
    return NaiveMechanism{aoi.alpha(), dist.c_low(), dist.c_high()};
}

} // namespace aoimech
