#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include "aoimech/aoi_cost.hpp"
#include "aoimech/cost_dist.hpp"
#include "aoimech/numerics.hpp"

namespace aoimech {

struct SourceSpec {
    CostDistribution dist;
    double f_max = 1e9;
};

// The set of sources the destination can draw updates from. Ironed virtual
// costs are built once per source at construction.
class SourceProfile {
public:
    explicit SourceProfile(std::vector<SourceSpec> sources) {
        if (sources.empty()) throw config_error("SourceProfile: need at least one source");
        for (auto& s : sources) {
            if (!(s.f_max >= 0.0) || !std::isfinite(s.f_max))
                throw config_error("SourceProfile: f_max must be finite and >= 0");
            ironed_.emplace_back(s.dist);
            specs_.push_back(std::move(s));
        }
    }

    std::size_t size() const { return specs_.size(); }
    const SourceSpec& source(std::size_t i) const { return specs_.at(i); }
    const IronedVirtualCost& ironed(std::size_t i) const { return ironed_.at(i); }

    std::vector<double> ironed_virtuals(const std::vector<double>& costs) const {
        require_costs(costs);
        std::vector<double> v(size());
        for (std::size_t i = 0; i < size(); ++i) v[i] = ironed_[i](costs[i]);
        return v;
    }

    void require_costs(const std::vector<double>& costs) const {
        if (costs.size() != size())
            throw config_error("SourceProfile: cost vector size mismatch");
        for (std::size_t i = 0; i < size(); ++i)
            if (costs[i] < specs_[i].dist.c_low() - 1e-12 ||
                costs[i] > specs_[i].dist.c_high() + 1e-12)
                throw config_error("SourceProfile: cost outside source support");
    }

private:
    std::vector<SourceSpec> specs_;
    std::vector<IronedVirtualCost> ironed_;
};

// Rates, aggregate, scheduling probabilities and interarrival of one outcome.
struct MultiAllocation {
    std::vector<double> rates;
    double aggregate = 0.0;
    std::vector<double> schedule_probs;
    double interarrival = kInf;

    bool no_trade() const { return aggregate <= 0.0; }
};

struct SubgradientInterval {
    double lo = -kInf;
    double hi = kInf;
};

// ---------------------------------------------------------------------------
// Minimal total (ironed) virtual cost of procuring an aggregate rate F from
// capped sources: a piecewise-linear convex function of F whose kinks sit at
// the cumulative caps in ascending virtual-cost order. Greedy fill solves
// the underlying linear program exactly; the subgradient is the active
// segment's virtual cost, widening to an interval at the kinks.
// ---------------------------------------------------------------------------
class AggregateCostCurve {
public:
    AggregateCostCurve(std::vector<double> virtual_costs, std::vector<double> rate_caps)
        : virt_(std::move(virtual_costs)), caps_(std::move(rate_caps)) {
        if (virt_.size() != caps_.size() || virt_.empty())
            throw config_error("AggregateCostCurve: mismatched inputs");
        order_.resize(virt_.size());
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::stable_sort(order_.begin(), order_.end(),
                         [this](std::size_t a, std::size_t b) { return virt_[a] < virt_[b]; });
        total_cap_ = 0.0;
        for (double c : caps_) total_cap_ += c;
    }

    double max_rate() const { return total_cap_; }

    double value(double F) const {
        if (F < 0.0 || F > total_cap_ * (1.0 + 1e-12) + 1e-300)
            throw config_error("AggregateCostCurve: requested rate infeasible");
        double remaining = std::min(F, total_cap_), total = 0.0;
        for (std::size_t k : order_) {
            if (remaining <= 0.0) break;
            double take = std::min(remaining, caps_[k]);
            total += take * virt_[k];
            remaining -= take;
        }
        return total;
    }

    SubgradientInterval subgradient(double F) const {
        if (F < 0.0 || F > total_cap_ * (1.0 + 1e-12) + 1e-300)
            throw config_error("AggregateCostCurve: requested rate infeasible");
        double tol = 1e-12 * std::max(1.0, total_cap_);
        SubgradientInterval out;
        if (F <= tol) {
            out.lo = -kInf;
            out.hi = first_virtual();
            return out;
        }
        double b = 0.0;
        for (std::size_t s = 0; s < order_.size(); ++s) {
            std::size_t k = order_[s];
            if (caps_[k] <= 0.0) continue;
            double b_next = b + caps_[k];
            if (F < b_next - tol) {
                out.lo = out.hi = virt_[k];
                return out;
            }
            if (F <= b_next + tol) { // at the kink
                out.lo = virt_[k];
                out.hi = next_virtual(s);
                return out;
            }
            b = b_next;
        }
        out.lo = last_virtual();
        out.hi = kInf;
        return out;
    }

    // The aggregate rate equating the marginal age-cost reduction M(1/F)
    // with a subgradient of this curve. M(1/F) is decreasing in F and the
    // subgradient is a non-decreasing step, so the crossing is unique: walk
    // the segments in ascending virtual-cost order, take the interior
    // solution if it lands inside the segment, otherwise stop at the kink
    // whose subgradient interval captures M.
    double solve_rate(const AoiCostModel& aoi) const {
        double b = 0.0;
        for (std::size_t s = 0; s < order_.size(); ++s) {
            std::size_t k = order_[s];
            if (caps_[k] <= 0.0) continue;
            double b_next = b + caps_[k];
            double v = std::max(virt_[k], 0.0);
            double x = aoi.invert_marginal_reduction(v);
            double f_interior = x > 0.0 ? 1.0 / x : kInf;
            if (f_interior <= b_next) return std::clamp(f_interior, b, b_next);
            double m_at_kink = aoi.marginal_reduction(1.0 / b_next);
            double v_next = next_virtual(s);
            if (m_at_kink <= v_next + 1e-12 * std::max(1.0, std::abs(m_at_kink))) return b_next;
            b = b_next;
        }
        return b;
    }

    // Thm-style residual fill of F across the sources, cheapest virtual cost
    // first; returned in the original source order.
    std::vector<double> waterfill(double F) const {
        std::vector<double> f(virt_.size(), 0.0);
        double remaining = std::clamp(F, 0.0, total_cap_);
        for (std::size_t k : order_) {
            double take = std::min(remaining, caps_[k]);
            f[k] = take;
            remaining -= take;
            if (remaining <= 0.0) break;
        }
        return f;
    }

private:
    double first_virtual() const {
        for (std::size_t k : order_)
            if (caps_[k] > 0.0) return virt_[k];
        return kInf;
    }
    double last_virtual() const {
        for (auto it = order_.rbegin(); it != order_.rend(); ++it)
            if (caps_[*it] > 0.0) return virt_[*it];
        return -kInf;
    }
    double next_virtual(std::size_t s) const {
        for (std::size_t t = s + 1; t < order_.size(); ++t)
            if (caps_[order_[t]] > 0.0) return virt_[order_[t]];
        return kInf;
    }

    std::vector<double> virt_;
    std::vector<double> caps_;
    std::vector<std::size_t> order_;
    double total_cap_ = 0.0;
};

namespace detail {
inline std::vector<double> profile_caps(const SourceProfile& p) {
    std::vector<double> caps(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) caps[i] = p.source(i).f_max;
    return caps;
}

inline MultiAllocation make_allocation(std::vector<double> rates) {
    MultiAllocation a;
    a.rates = std::move(rates);
    a.aggregate = std::accumulate(a.rates.begin(), a.rates.end(), 0.0);
    a.schedule_probs.assign(a.rates.size(), 0.0);
    if (a.aggregate > 0.0) {
        for (std::size_t i = 0; i < a.rates.size(); ++i)
            a.schedule_probs[i] = a.rates[i] / a.aggregate;
        a.interarrival = 1.0 / a.aggregate;
    }
    return a;
}
} // namespace detail

// Psi(c, F) and its subgradient interval at F.
inline std::pair<double, SubgradientInterval>
aggregate_virtual_cost(const SourceProfile& profile, const std::vector<double>& costs, double F) {
    AggregateCostCurve curve(profile.ironed_virtuals(costs), detail::profile_caps(profile));
    return {curve.value(F), curve.subgradient(F)};
}

inline double aggregate_rate(const SourceProfile& profile, const std::vector<double>& costs,
                             const AoiCostModel& aoi) {
    AggregateCostCurve curve(profile.ironed_virtuals(costs), detail::profile_caps(profile));
    return curve.solve_rate(aoi);
}

inline MultiAllocation allocate(const SourceProfile& profile, const std::vector<double>& costs,
                                double f_agg) {
    AggregateCostCurve curve(profile.ironed_virtuals(costs), detail::profile_caps(profile));
    return detail::make_allocation(curve.waterfill(f_agg));
}

// ---------------------------------------------------------------------------
// The multi-source optimal mechanism: aggregate rate by subgradient
// intersection, waterfilling across sources, and truthful payments
//   h_i(c) = c_i f_i(c) + int_{c_i}^{c_high_i} f_i(z, c_-i) dz,
// where the integrand re-solves the allocation at the deviated report.
// ---------------------------------------------------------------------------
class MultiSourceMechanism {
public:
    MultiSourceMechanism(SourceProfile profile, AoiCostModel aoi)
        : profile_(std::move(profile)), aoi_(std::move(aoi)) {}

    const SourceProfile& profile() const { return profile_; }
    const AoiCostModel& aoi() const { return aoi_; }

    MultiAllocation allocation(const std::vector<double>& costs) const {
        AggregateCostCurve curve(profile_.ironed_virtuals(costs), detail::profile_caps(profile_));
        return detail::make_allocation(curve.waterfill(curve.solve_rate(aoi_)));
    }

    double rate(std::size_t i, const std::vector<double>& costs) const {
        return allocation(costs).rates.at(i);
    }

    // h_i(c). The report integral is split at the points where source i's
    // ironed virtual cost crosses another source's value (the allocation
    // order changes there) and at i's own ironed-interval ends, then each
    // piece gets a 256-point Gauss-Legendre rule.
    double payment_rate(std::size_t i, const std::vector<double>& costs) const {
        profile_.require_costs(costs);
        const auto& dist = profile_.source(i).dist;
        double lo = costs.at(i), hi = dist.c_high();
        double own = costs[i] * rate(i, costs);
        if (hi <= lo) return own;

        std::vector<double> cuts{lo, hi};
        const auto& phi_i = profile_.ironed(i);
        double v_lo = phi_i(lo), v_hi = phi_i(hi);
        for (std::size_t j = 0; j < profile_.size(); ++j) {
            if (j == i) continue;
            double t = profile_.ironed(j)(costs[j]);
            if (t > v_lo && t < v_hi) {
                double z = bisect_increasing([&](double y) { return phi_i(y); }, t,
                                             {lo, hi, 1e-12, 200, 0});
                cuts.push_back(z);
            }
        }
        for (const auto& iv : phi_i.intervals()) {
            if (iv.lo > lo && iv.lo < hi) cuts.push_back(iv.lo);
            if (iv.hi > lo && iv.hi < hi) cuts.push_back(iv.hi);
        }
        std::sort(cuts.begin(), cuts.end());

        std::vector<double> c_dev = costs;
        double tail = 0.0;
        for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
            if (cuts[s + 1] - cuts[s] <= 1e-14) continue;
            tail += integrate_gauss(
                [&](double z) {
                    c_dev[i] = z;
                    return rate(i, c_dev);
                },
                cuts[s], cuts[s + 1], 256);
        }
        return own + tail;
    }

    std::vector<double> payment_rates(const std::vector<double>& costs) const {
        std::vector<double> h(profile_.size());
        for (std::size_t i = 0; i < profile_.size(); ++i) h[i] = payment_rate(i, costs);
        return h;
    }

private:
    SourceProfile profile_;
    AoiCostModel aoi_;
};

} // namespace aoimech
