#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "aoimech/errors.hpp"
#include "aoimech/numerics.hpp"

namespace aoimech {

// A source's private-cost prior on [c_low, c_high]: CDF gamma_cdf, PDF > 0 on
// the open support, Myerson virtual cost phi(c) = c + CDF/PDF, and the
// Lipschitz bound of phi used by the quantization-loss bound.
class CostDistribution {
public:
    enum class Kind { Uniform, TruncExp, Tabulated };

    static CostDistribution uniform(double c_low, double c_high) {
        check_support(c_low, c_high);
        CostDistribution d;
        d.kind_ = Kind::Uniform;
        d.c_low_ = c_low;
        d.c_high_ = c_high;
        return d;
    }

    // Exponential with rate mu truncated to [0, c_high].
    static CostDistribution trunc_exp(double mu, double c_high) {
        if (!(mu > 0.0)) throw config_error("CostDistribution::trunc_exp: mu must be positive");
        check_support(0.0, c_high);
        CostDistribution d;
        d.kind_ = Kind::TruncExp;
        d.c_low_ = 0.0;
        d.c_high_ = c_high;
        d.mu_ = mu;
        d.trunc_mass_ = -std::expm1(-mu * c_high); // 1 - e^{-mu*c_high}
        return d;
    }

    // Piecewise-linear CDF through (cost, cumulative) knots; the cumulative
    // column is normalized on load, so any non-decreasing weights work.
    static CostDistribution tabulated_cdf(std::vector<std::pair<double, double>> points) {
        if (points.size() < 2)
            throw config_error("CostDistribution::tabulated_cdf: need at least 2 points");
        for (std::size_t i = 1; i < points.size(); ++i) {
            if (points[i].first <= points[i - 1].first)
                throw config_error("CostDistribution::tabulated_cdf: costs must be strictly increasing");
            if (points[i].second < points[i - 1].second)
                throw config_error("CostDistribution::tabulated_cdf: CDF must be non-decreasing");
        }
        double q0 = points.front().second, q1 = points.back().second;
        if (!(q1 > q0))
            throw config_error("CostDistribution::tabulated_cdf: CDF carries no mass");
        CostDistribution d;
        d.kind_ = Kind::Tabulated;
        d.c_low_ = points.front().first;
        d.c_high_ = points.back().first;
        check_support(d.c_low_, d.c_high_);
        for (auto& [c, q] : points) {
            d.tab_c_.push_back(c);
            d.tab_q_.push_back((q - q0) / (q1 - q0));
        }
        return d;
    }

    Kind kind() const { return kind_; }
    double c_low() const { return c_low_; }
    double c_high() const { return c_high_; }
    double mu() const { return mu_; }

    double cdf(double c) const {
        if (c <= c_low_) return 0.0;
        if (c >= c_high_) return 1.0;
        switch (kind_) {
        case Kind::Uniform:
            return (c - c_low_) / (c_high_ - c_low_);
        case Kind::TruncExp:
            return -std::expm1(-mu_ * c) / trunc_mass_;
        case Kind::Tabulated: {
            std::size_t k = tab_segment(c);
            double t = (c - tab_c_[k]) / (tab_c_[k + 1] - tab_c_[k]);
            return tab_q_[k] + t * (tab_q_[k + 1] - tab_q_[k]);
        }
        }
        return 0.0;
    }

    double pdf(double c) const {
        check_in_support(c);
        switch (kind_) {
        case Kind::Uniform:
            return 1.0 / (c_high_ - c_low_);
        case Kind::TruncExp:
            return mu_ * std::exp(-mu_ * c) / trunc_mass_;
        case Kind::Tabulated: {
            std::size_t k = tab_segment(c);
            double g = (tab_q_[k + 1] - tab_q_[k]) / (tab_c_[k + 1] - tab_c_[k]);
            return std::max(g, kPdfFloor); // floor guards the phi division
        }
        }
        return 0.0;
    }

    double quantile(double q) const {
        if (q <= 0.0) return c_low_;
        if (q >= 1.0) return c_high_;
        switch (kind_) {
        case Kind::Uniform:
            return c_low_ + q * (c_high_ - c_low_);
        case Kind::TruncExp:
            return -std::log1p(-q * trunc_mass_) / mu_;
        case Kind::Tabulated: {
            auto it = std::upper_bound(tab_q_.begin(), tab_q_.end(), q);
            std::size_t k = static_cast<std::size_t>(it - tab_q_.begin());
            if (k == 0) k = 1;
            if (k >= tab_q_.size()) k = tab_q_.size() - 1;
            // skip zero-mass segments
            while (k + 1 < tab_q_.size() && tab_q_[k] == tab_q_[k - 1]) ++k;
            double dq = tab_q_[k] - tab_q_[k - 1];
            if (dq <= 0.0) return tab_c_[k];
            double t = (q - tab_q_[k - 1]) / dq;
            return tab_c_[k - 1] + t * (tab_c_[k] - tab_c_[k - 1]);
        }
        }
        return c_low_;
    }

    // phi(c) = c + CDF(c)/PDF(c)
    double virtual_cost(double c) const {
        check_in_support(c);
        switch (kind_) {
        case Kind::Uniform:
            return 2.0 * c - c_low_;
        case Kind::TruncExp:
            return c + std::expm1(mu_ * c) / mu_;
        case Kind::Tabulated:
            return c + cdf(c) / pdf(c);
        }
        return c;
    }

    // Phi(c) = int_{c_low}^{c} phi(t) pdf(t) dt. Closed form for Uniform,
    // adaptive quadrature otherwise.
    double cumulative_virtual_cost(double c) const {
        check_in_support(c);
        if (kind_ == Kind::Uniform)
            return (c * c - c_low_ * c) / (c_high_ - c_low_);
        return integrate_adaptive([this](double t) { return virtual_cost(t) * pdf(t); }, c_low_, c,
                                  1e-11);
    }

    // Sup of phi' over the support: Uniform -> 2; TruncExp -> 1 + e^{mu*c_high};
    // Tabulated -> finite-difference estimate (see lipschitz_is_estimate).
    double lipschitz_bound() const {
        switch (kind_) {
        case Kind::Uniform:
            return 2.0;
        case Kind::TruncExp:
            return 1.0 + std::exp(mu_ * c_high_);
        case Kind::Tabulated: {
            const int n = 4096;
            double sup = 0.0;
            double w = (c_high_ - c_low_) / n;
            for (int i = 0; i < n; ++i) {
                double a = c_low_ + i * w, b = a + w;
                sup = std::max(sup, (virtual_cost(std::min(b, c_high_)) - virtual_cost(a)) / w);
            }
            return sup;
        }
        }
        return 0.0;
    }

    // The tabulated kind has no closed-form derivative; its bound is a
    // finite-difference sup estimate.
    bool lipschitz_is_estimate() const { return kind_ == Kind::Tabulated; }

    // Quantiles of the distribution's own CDF knots (tabulated kind only);
    // the ironing grid is refined with these so the hull sees every kink.
    std::vector<double> knot_quantiles() const {
        std::vector<double> qs;
        if (kind_ == Kind::Tabulated)
            for (std::size_t i = 1; i + 1 < tab_q_.size(); ++i) qs.push_back(tab_q_[i]);
        return qs;
    }

private:
    static constexpr double kPdfFloor = 1e-12;

    static void check_support(double lo, double hi) {
        if (!(lo >= 0.0) || !(hi > lo) || !std::isfinite(hi))
            throw config_error("CostDistribution: need 0 <= c_low < c_high < inf");
    }

    void check_in_support(double c) const {
        if (c < c_low_ - 1e-12 || c > c_high_ + 1e-12)
            throw config_error("CostDistribution: cost outside support");
    }

    std::size_t tab_segment(double c) const {
        auto it = std::upper_bound(tab_c_.begin(), tab_c_.end(), c);
        std::size_t k = static_cast<std::size_t>(it - tab_c_.begin());
        if (k == 0) return 0;
        if (k >= tab_c_.size()) return tab_c_.size() - 2;
        return k - 1;
    }

    Kind kind_ = Kind::Uniform;
    double c_low_ = 0.0;
    double c_high_ = 1.0;
    double mu_ = 1.0;
    double trunc_mass_ = 1.0;
    std::vector<double> tab_c_;
    std::vector<double> tab_q_;
};

// ---------------------------------------------------------------------------
// Ironing. The cumulative virtual cost as a function of the quantile
// q = CDF(c) has slope phi(c(q)); the slope of its lower convex hull is the
// ironed virtual cost phi~. The hull is built on a quantile grid where the
// cumulative is evaluated exactly via integration by parts:
//   Phi(c) = int (t + CDF/pdf) pdf dt = c * CDF(c).
// Hull segments spanning more than one grid cell are the ironed intervals;
// on them phi~ is the segment slope, i.e. the CDF-weighted average of phi.
// ---------------------------------------------------------------------------
class IronedVirtualCost {
public:
    struct Interval {
        double lo = 0.0;
        double hi = 0.0;
        double value = 0.0; // constant phi~ on [lo, hi]
    };

    explicit IronedVirtualCost(CostDistribution dist, int grid = 4096) : dist_(std::move(dist)) {
        build(grid);
    }

    const CostDistribution& base() const { return dist_; }
    const std::vector<Interval>& intervals() const { return intervals_; }

    // phi~(c). Outside the ironed intervals this is phi(c), clamped between
    // the neighboring interval values: endpoint snapping can leave sub-cell
    // slivers of the true ironed region outside the reported intervals, and
    // the clamp keeps the evaluator non-decreasing across them.
    double operator()(double c) const {
        double lo_clamp = -kInf, hi_clamp = kInf;
        for (const auto& iv : intervals_) {
            if (c >= iv.lo && c <= iv.hi) return iv.value;
            if (iv.hi < c) lo_clamp = iv.value;
            if (iv.lo > c) {
                hi_clamp = iv.value;
                break;
            }
        }
        return std::clamp(dist_.virtual_cost(c), lo_clamp, hi_clamp);
    }

    // Hull of the cumulative virtual cost, evaluated at quantile q. Lies on
    // or below Phi, with equality at q = 0 and q = 1.
    double cumulative_envelope(double q) const {
        auto it = std::upper_bound(hull_q_.begin(), hull_q_.end(), q);
        std::size_t k = static_cast<std::size_t>(it - hull_q_.begin());
        if (k == 0) return hull_v_.front();
        if (k >= hull_q_.size()) return hull_v_.back();
        double t = (q - hull_q_[k - 1]) / (hull_q_[k] - hull_q_[k - 1]);
        return hull_v_[k - 1] + t * (hull_v_[k] - hull_v_[k - 1]);
    }

private:
    void build(int grid) {
        std::vector<double> qs;
        qs.reserve(grid + 8);
        for (int i = 0; i <= grid; ++i) qs.push_back(static_cast<double>(i) / grid);
        for (double kq : dist_.knot_quantiles()) qs.push_back(kq);
        std::sort(qs.begin(), qs.end());
        qs.erase(std::unique(qs.begin(), qs.end(),
                             [](double a, double b) { return std::abs(a - b) < 1e-15; }),
                 qs.end());

        std::vector<double> cs(qs.size()), phis(qs.size());
        for (std::size_t i = 0; i < qs.size(); ++i) {
            cs[i] = dist_.quantile(qs[i]);
            phis[i] = cs[i] * qs[i]; // Phi(c) = c * CDF(c)
        }

        // monotone-chain lower hull over (q, Phi); collinear points are kept
        // so that only genuinely straightened regions span multiple cells
        std::vector<std::size_t> hull;
        for (std::size_t i = 0; i < qs.size(); ++i) {
            while (hull.size() >= 2) {
                std::size_t a = hull[hull.size() - 2], b = hull[hull.size() - 1];
                double cross = (qs[b] - qs[a]) * (phis[i] - phis[a]) -
                               (phis[b] - phis[a]) * (qs[i] - qs[a]);
                double eps = 1e-13 * (std::abs(phis[a]) + std::abs(phis[b]) + std::abs(phis[i]) + 1.0) *
                             (qs[i] - qs[a]);
                if (cross < -eps)
                    hull.pop_back();
                else
                    break;
            }
            hull.push_back(i);
        }

        hull_q_.clear();
        hull_v_.clear();
        for (std::size_t idx : hull) {
            hull_q_.push_back(qs[idx]);
            hull_v_.push_back(phis[idx]);
        }

        double min_width = 1.0 / grid - 1e-12;
        for (std::size_t s = 0; s + 1 < hull.size(); ++s) {
            std::size_t a = hull[s], b = hull[s + 1];
            if (b - a <= 1) continue;                    // adjacent grid points: not ironed
            if (qs[b] - qs[a] < min_width) continue;     // sub-grid artifact: dropped
            Interval iv;
            iv.lo = cs[a];
            iv.hi = cs[b];
            iv.value = (phis[b] - phis[a]) / (qs[b] - qs[a]);
            intervals_.push_back(iv);
        }
    }

    CostDistribution dist_;
    std::vector<Interval> intervals_;
    std::vector<double> hull_q_;
    std::vector<double> hull_v_;
};

inline IronedVirtualCost iron(const CostDistribution& dist, int grid = 4096) {
    return IronedVirtualCost(dist, grid);
}

} // namespace aoimech
