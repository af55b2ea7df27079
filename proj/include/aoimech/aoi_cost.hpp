#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "aoimech/errors.hpp"
#include "aoimech/numerics.hpp"

namespace aoimech {

// Destination-side age penalty g, its cumulative form G(x) = int_0^x g, and
// the marginal rate-benefit map M(x) = g(x)*x - G(x). g is non-negative and
// strictly increasing, so G is convex and M is strictly increasing with
// M(0+) = 0; every optimality condition in this library is an equation in M.
//
// Two kinds: Power (g(x) = x^alpha, closed forms throughout) and Tabulated
// (piecewise-linear g over an age grid starting at 0, trapezoid G, linear
// extrapolation past the last knot).
class AoiCostModel {
public:
    static AoiCostModel power(double alpha) {
        if (!(alpha > 0.0)) throw config_error("AoiCostModel::power: alpha must be positive");
        AoiCostModel m;
        m.alpha_ = alpha;
        return m;
    }

    static AoiCostModel tabulated(std::vector<std::pair<double, double>> points) {
        if (points.size() < 2) throw config_error("AoiCostModel::tabulated: need at least 2 points");
        if (points.front().first != 0.0)
            throw config_error("AoiCostModel::tabulated: age grid must start at 0");
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (points[i].second < 0.0)
                throw config_error("AoiCostModel::tabulated: penalties must be non-negative");
            if (i > 0) {
                if (points[i].first <= points[i - 1].first)
                    throw config_error("AoiCostModel::tabulated: ages must be strictly increasing");
                if (points[i].second <= points[i - 1].second)
                    throw config_error(
                        "AoiCostModel::tabulated: penalties must be strictly increasing");
            }
        }
        AoiCostModel m;
        m.ages_.reserve(points.size());
        m.pen_.reserve(points.size());
        for (auto& [age, pen] : points) {
            m.ages_.push_back(age);
            m.pen_.push_back(pen);
        }
        // cumulative integral of the piecewise-linear g at each knot
        m.cum_.assign(m.ages_.size(), 0.0);
        for (std::size_t i = 1; i < m.ages_.size(); ++i) {
            double w = m.ages_[i] - m.ages_[i - 1];
            m.cum_[i] = m.cum_[i - 1] + 0.5 * (m.pen_[i] + m.pen_[i - 1]) * w;
        }
        return m;
    }

    bool is_power() const { return ages_.empty(); }
    double alpha() const { return alpha_; }

    // g(age)
    double penalty(double age) const {
        if (age < 0.0) throw config_error("AoiCostModel: age must be non-negative");
        if (is_power()) return std::pow(age, alpha_);
        return interp_penalty(age);
    }

    // G(x) = int_0^x g
    double cumulative(double x) const {
        if (x < 0.0) throw config_error("AoiCostModel: interarrival must be non-negative");
        if (is_power()) return std::pow(x, alpha_ + 1.0) / (alpha_ + 1.0);
        std::size_t k = segment(x);
        if (k + 1 >= ages_.size() && x > ages_.back()) {
            // past the grid: g extends linearly with the last segment's slope
            double slope = last_slope();
            double dx = x - ages_.back();
            return cum_.back() + pen_.back() * dx + 0.5 * slope * dx * dx;
        }
        double dx = x - ages_[k];
        double slope = (pen_[k + 1] - pen_[k]) / (ages_[k + 1] - ages_[k]);
        return cum_[k] + pen_[k] * dx + 0.5 * slope * dx * dx;
    }

    // M(x) = g(x)*x - G(x); defined as 0 at x = 0 by continuity.
    double marginal_reduction(double x) const {
        if (x < 0.0) throw config_error("AoiCostModel: interarrival must be non-negative");
        if (x == 0.0) return 0.0;
        if (is_power()) return alpha_ / (alpha_ + 1.0) * std::pow(x, alpha_ + 1.0);
        return penalty(x) * x - cumulative(x);
    }

    // Unique x with M(x) = target. Closed form for the power kind; bracketed
    // bisection for the tabulated kind. target = 0 returns 0 (the limit).
    double invert_marginal_reduction(double target) const {
        if (target < 0.0) throw numerical_error("invert_marginal_reduction: negative target");
        if (target == 0.0) return 0.0;
        if (is_power()) return std::pow((1.0 + 1.0 / alpha_) * target, 1.0 / (1.0 + alpha_));
        return invert_marginal_reduction_bisect(target);
    }

    // Always-numeric inversion (the same bisection the tabulated kind uses);
    // kept public as the second route for agreement checks on closed forms.
    double invert_marginal_reduction_bisect(double target) const {
        if (target < 0.0) throw numerical_error("invert_marginal_reduction: negative target");
        if (target == 0.0) return 0.0;
        return bisect_increasing([this](double x) { return marginal_reduction(x); }, target);
    }

private:
    AoiCostModel() = default;

    double last_slope() const {
        std::size_t n = ages_.size();
        return (pen_[n - 1] - pen_[n - 2]) / (ages_[n - 1] - ages_[n - 2]);
    }

    double interp_penalty(double age) const {
        if (age >= ages_.back())
            return pen_.back() + last_slope() * (age - ages_.back());
        std::size_t k = segment(age);
        double t = (age - ages_[k]) / (ages_[k + 1] - ages_[k]);
        return pen_[k] + t * (pen_[k + 1] - pen_[k]);
    }

    std::size_t segment(double x) const {
        auto it = std::upper_bound(ages_.begin(), ages_.end(), x);
        std::size_t k = static_cast<std::size_t>(it - ages_.begin());
        if (k == 0) return 0;
        if (k >= ages_.size()) return ages_.size() - 2;
        return k - 1;
    }

    double alpha_ = 1.0;
    std::vector<double> ages_;
    std::vector<double> pen_;
    std::vector<double> cum_;
};

} // namespace aoimech
