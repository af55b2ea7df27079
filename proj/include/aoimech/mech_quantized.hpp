#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "aoimech/mech_multi.hpp"

namespace aoimech {

// Midpoint quantizer on the absolute grid of step delta_q, clamped into the
// support: reports in [k*d, (k+1)*d) map to d*(k+1/2). When the support's
// upper end is a grid multiple the raw midpoint would fall outside, so the
// report is mapped to the last cell intersecting the support instead, which
// keeps the quantizer monotone.
inline double quantize_report(double delta_q, double c, double c_low, double c_high) {
    if (!(delta_q > 0.0)) throw config_error("quantize_report: delta_q must be positive");
    if (c < c_low - 1e-12 || c > c_high + 1e-12)
        throw config_error("quantize_report: cost outside support");
    long k_last = static_cast<long>(std::ceil(c_high / delta_q)) - 1;
    long k = std::min(static_cast<long>(std::floor(c / delta_q)), k_last);
    double mid = delta_q * (static_cast<double>(k) + 0.5);
    return std::clamp(mid, c_low, c_high);
}

// Prop-2-style loss cap: sum_i L_phi,i * f_max,i * delta_q.
inline double quantization_loss_bound(const SourceProfile& profile, double delta_q) {
    if (delta_q < 0.0) throw config_error("quantization_loss_bound: delta_q must be >= 0");
    double bound = 0.0;
    for (std::size_t i = 0; i < profile.size(); ++i)
        bound += profile.source(i).dist.lipschitz_bound() * profile.source(i).f_max * delta_q;
    return bound;
}

// ---------------------------------------------------------------------------
// The quantized mechanism: rates are the exact optimal rates evaluated at the
// midpoint-quantized reports, so they are piecewise constant on quantization
// cells; payments keep the truthful form with the report integral collapsing
// to an exact finite sum over the cells above the report.
// ---------------------------------------------------------------------------
class QuantizedMechanism {
public:
    struct Cell {
        double lo = 0.0;
        double hi = 0.0;
        double mid = 0.0; // representative report (clamped raw midpoint)
    };

    QuantizedMechanism(SourceProfile profile, AoiCostModel aoi, double delta_q)
        : base_(std::move(profile), std::move(aoi)), delta_q_(delta_q) {
        if (!(delta_q_ > 0.0)) throw config_error("QuantizedMechanism: delta_q must be positive");
        const auto& prof = base_.profile();
        std::size_t total_cells = 0;
        cells_.resize(prof.size());
        for (std::size_t i = 0; i < prof.size(); ++i) {
            double lo = prof.source(i).dist.c_low(), hi = prof.source(i).dist.c_high();
            long k_first = static_cast<long>(std::floor(lo / delta_q_));
            long k_last = static_cast<long>(std::ceil(hi / delta_q_)) - 1;
            total_cells += static_cast<std::size_t>(k_last - k_first + 1);
            if (total_cells > 10'000'000)
                throw config_error("QuantizedMechanism: quantization grid exceeds 1e7 points");
            for (long k = k_first; k <= k_last; ++k) {
                Cell cell;
                cell.lo = std::max(lo, delta_q_ * static_cast<double>(k));
                cell.hi = std::min(hi, delta_q_ * static_cast<double>(k + 1));
                if (cell.hi <= cell.lo) continue;
                cell.mid = std::clamp(delta_q_ * (static_cast<double>(k) + 0.5), lo, hi);
                cells_[i].push_back(cell);
            }
        }
        // single-source rate table; multi-source rates depend on the whole
        // quantized profile and are computed per query
        if (prof.size() == 1) {
            single_table_.reserve(cells_[0].size());
            for (const auto& cell : cells_[0]) single_table_.push_back(base_.rate(0, {cell.mid}));
        }
    }

    double delta_q() const { return delta_q_; }
    const MultiSourceMechanism& base() const { return base_; }
    const SourceProfile& profile() const { return base_.profile(); }
    const std::vector<Cell>& cells(std::size_t i) const { return cells_.at(i); }

    double quantize(std::size_t i, double c) const {
        const auto& d = profile().source(i).dist;
        return quantize_report(delta_q_, c, d.c_low(), d.c_high());
    }

    std::vector<double> quantize_profile(const std::vector<double>& costs) const {
        profile().require_costs(costs);
        std::vector<double> q(costs.size());
        for (std::size_t i = 0; i < costs.size(); ++i) q[i] = quantize(i, costs[i]);
        return q;
    }

    // f^q: the exact allocation at the quantized profile
    MultiAllocation allocation(const std::vector<double>& costs) const {
        auto q = quantize_profile(costs);
        if (profile().size() == 1) {
            std::size_t k = cell_index(0, costs[0]);
            return detail::make_allocation({single_table_[k]});
        }
        return base_.allocation(q);
    }

    double rate(std::size_t i, const std::vector<double>& costs) const {
        return allocation(costs).rates.at(i);
    }

    // h^q_i(c) = c_i f^q_i(c) + sum over cells at or above c_i of
    // cell-width * f*_i(midpoint, Q(c_-i)); the sum is the exact integral of
    // the realized piecewise-constant rate.
    double payment_rate(std::size_t i, const std::vector<double>& costs) const {
        auto q = quantize_profile(costs);
        const auto& cs = cells_[i];
        std::size_t k = cell_index(i, costs[i]);
        double h = costs[i] * rate_at_cell(i, k, q);
        for (std::size_t j = k; j < cs.size(); ++j) {
            double lo = (j == k) ? costs[i] : cs[j].lo;
            double width = cs[j].hi - lo;
            if (width <= 0.0) continue;
            h += width * rate_at_cell(i, j, q);
        }
        return h;
    }

    std::vector<double> payment_rates(const std::vector<double>& costs) const {
        std::vector<double> h(profile().size());
        for (std::size_t i = 0; i < h.size(); ++i) h[i] = payment_rate(i, costs);
        return h;
    }

    double loss_bound() const { return quantization_loss_bound(profile(), delta_q_); }

    std::size_t cell_index(std::size_t i, double c) const {
        const auto& cs = cells_.at(i);
        auto it = std::upper_bound(cs.begin(), cs.end(), c,
                                   [](double v, const Cell& cell) { return v < cell.hi; });
        if (it == cs.end()) return cs.size() - 1;
        return static_cast<std::size_t>(it - cs.begin());
    }

    // f*_i with source i's report at the given cell's midpoint and the
    // others as passed (already quantized)
    double rate_at_cell(std::size_t i, std::size_t cell_idx, std::vector<double> quantized) const {
        if (profile().size() == 1) return single_table_[cell_idx];
        quantized[i] = cells_[i][cell_idx].mid;
        return base_.rate(i, quantized);
    }

private:
    MultiSourceMechanism base_;
    double delta_q_;
    std::vector<std::vector<Cell>> cells_;
    std::vector<double> single_table_;
};

} // namespace aoimech
