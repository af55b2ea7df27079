#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <mutex>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "aoimech/errors.hpp"

namespace aoimech {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Root finding on monotone functions.
//
// Bisection with bracket doubling: `fn` must be strictly increasing. Starting
// from [lo0, hi0], the upper end is doubled until fn(hi) >= target, then the
// bracket is bisected to relative tolerance `rel_tol`.
// ---------------------------------------------------------------------------
struct BisectOptions {
    double lo = 1e-12;
    double hi = 1.0;
    double rel_tol = 1e-10;
    int max_iter = 200;
    int max_doublings = 200;
};

inline double bisect_increasing(const std::function<double(double)>& fn, double target,
                                const BisectOptions& opt = {}) {
    double lo = opt.lo;
    double hi = opt.hi;
    if (fn(lo) > target) {
        // Target sits below the initial bracket; shrink toward zero.
        int n = 0;
        while (fn(lo) > target) {
            hi = lo;
            lo *= 0.5;
            if (++n > opt.max_doublings || lo < std::numeric_limits<double>::min()) {
                std::ostringstream msg;
                msg << "bisect_increasing: target " << target
                    << " below function infimum (bracket shrunk to " << lo << ")";
                throw numerical_error(msg.str());
            }
        }
    } else {
        int n = 0;
        while (fn(hi) < target) {
            lo = hi;
            hi *= 2.0;
            if (++n > opt.max_doublings) {
                std::ostringstream msg;
                msg << "bisect_increasing: bracket exhausted at hi=" << hi
                    << " (target " << target << ")";
                throw numerical_error(msg.str());
            }
        }
    }
    for (int i = 0; i < opt.max_iter; ++i) {
        double mid = 0.5 * (lo + hi);
        if (fn(mid) < target)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= opt.rel_tol * std::abs(hi))
            break;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Adaptive Simpson quadrature, absolute tolerance, bounded recursion depth.
// ---------------------------------------------------------------------------
namespace detail {
inline double simpson_step(const std::function<double(double)>& f, double a, double fa, double b,
                           double fb, double m, double fm, double whole, double tol, int depth,
                           int max_depth) {
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth >= max_depth || std::abs(delta) <= 15.0 * tol)
        return left + right + delta / 15.0;
    return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth + 1, max_depth) +
           simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth + 1, max_depth);
}
} // namespace detail

inline double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                 double abs_tol = 1e-9, int max_depth = 40) {
    if (a == b) return 0.0;
    double fa = f(a), fb = f(b);
    double m = 0.5 * (a + b), fm = f(m);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_step(f, a, fa, b, fb, m, fm, whole, abs_tol, 0, max_depth);
}

// ---------------------------------------------------------------------------
// Gauss-Legendre nodes/weights on [-1, 1], cached per order.
// ---------------------------------------------------------------------------
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline const GaussRule& gauss_legendre(int n) {
    static std::unordered_map<int, GaussRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Tricomi initial guess, then Newton on P_n.
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double p0 = 0.0, p1 = 0.0;
        for (int it2 = 0; it2 < 100; ++it2) {
            p0 = 1.0;
            p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        p0 = 1.0;
        p1 = x;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double dp = n * (x * p1 - p0) / (x * x - 1.0);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    auto [pos, inserted] = cache.emplace(n, std::move(rule));
    return pos->second;
}

// n-point Gauss-Legendre integral of f over [a, b].
inline double integrate_gauss(const std::function<double(double)>& f, double a, double b, int n) {
    const GaussRule& rule = gauss_legendre(n);
    double mid = 0.5 * (a + b), hw = 0.5 * (b - a);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rule.weights[i] * f(mid + hw * rule.nodes[i]);
    return sum * hw;
}

// ---------------------------------------------------------------------------
// Seed mixing (splitmix64) for deriving per-row / per-worker seeds.
// ---------------------------------------------------------------------------
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master ^ splitmix64(index + 1));
}

// ---------------------------------------------------------------------------
// Low-discrepancy point set: Halton sequence with a seeded Cranley-Patterson
// rotation. Deterministic for a given (dim, seed); used for quasi-Monte Carlo
// expectations and common-random-number deviation searches.
// ---------------------------------------------------------------------------
class HaltonSampler {
public:
    HaltonSampler(int dim, std::uint64_t seed) : dim_(dim), shifts_(dim) {
        static const int primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29,
                                     31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
        if (dim < 1 || dim > 20) throw config_error("HaltonSampler: dimension must be in [1,20]");
        bases_.assign(primes, primes + dim);
        std::uint64_t s = seed;
        for (int d = 0; d < dim; ++d) {
            s = splitmix64(s);
            shifts_[d] = static_cast<double>(s >> 11) * 0x1.0p-53;
        }
    }

    // i-th point (0-based), component d in (0, 1).
    double coordinate(std::uint64_t i, int d) const {
        double r = radical_inverse(i + 1, bases_[d]) + shifts_[d];
        if (r >= 1.0) r -= 1.0;
        // keep strictly inside the open interval
        return std::min(std::max(r, 1e-15), 1.0 - 1e-15);
    }

    std::vector<double> point(std::uint64_t i) const {
        std::vector<double> p(dim_);
        for (int d = 0; d < dim_; ++d) p[d] = coordinate(i, d);
        return p;
    }

    int dim() const { return dim_; }

private:
    static double radical_inverse(std::uint64_t i, int base) {
        double inv = 1.0 / base, r = 0.0, f = inv;
        while (i > 0) {
            r += f * static_cast<double>(i % base);
            i /= base;
            f *= inv;
        }
        return r;
    }

    int dim_;
    std::vector<int> bases_;
    std::vector<double> shifts_;
};

// Mean and i.i.d.-equivalent standard error of a sample.
struct MeanStdErr {
    double mean = 0.0;
    double std_error = 0.0;
};

inline MeanStdErr mean_std_error(const std::vector<double>& xs) {
    MeanStdErr out;
    if (xs.empty()) return out;
    double s = 0.0;
    for (double x : xs) s += x;
    out.mean = s / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double v = 0.0;
        for (double x : xs) v += (x - out.mean) * (x - out.mean);
        v /= static_cast<double>(xs.size() - 1);
        out.std_error = std::sqrt(v / static_cast<double>(xs.size()));
    }
    return out;
}

// FNV-1a over bytes; used to stamp output files with a config hash.
inline std::uint64_t fnv1a_hash(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace aoimech
