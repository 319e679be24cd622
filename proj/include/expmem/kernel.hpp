#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "expmem/errors.hpp"

namespace expmem {

// Tempered power kernel
//
//   k(t) = t^{-alpha} exp(-delta t) / Gamma(1 - alpha),   0 < alpha < 1, delta >= 0,
//
// with Laplace transform K(s) = (s + delta)^{alpha - 1}.  For delta = 0 this is
// the kernel of the Caputo derivative of order alpha.
class AnalyticKernel {
public:
    AnalyticKernel(double alpha, double delta) : alpha_(alpha), delta_(delta) {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw InvariantError("AnalyticKernel: alpha must lie in (0,1), got " + std::to_string(alpha));
        if (!(delta >= 0.0))
            throw InvariantError("AnalyticKernel: delta must be >= 0, got " + std::to_string(delta));
        inv_gamma_ = 1.0 / std::tgamma(1.0 - alpha_);
    }

    double alpha() const { return alpha_; }
    double delta() const { return delta_; }

    // k(t); singular at t = 0.
    double operator()(double t) const {
        if (!(t > 0.0))
            throw std::domain_error("AnalyticKernel: kernel is singular at t <= 0");
        return inv_gamma_ * std::pow(t, -alpha_) * std::exp(-delta_ * t);
    }

    // K(s) = (s + delta)^{alpha - 1} for s >= 0, s + delta > 0.
    double laplace(double s) const {
        if (!(s >= 0.0 && s + delta_ > 0.0))
            throw std::domain_error("AnalyticKernel: Laplace transform needs s >= 0 and s + delta > 0");
        return std::pow(s + delta_, alpha_ - 1.0);
    }

private:
    double alpha_;
    double delta_;
    double inv_gamma_;
};

// One exponential term a * exp(-b t) of an exponential-sum kernel.
struct ExpTerm {
    double weight;  // a
    double rate;    // b
};

// Exponential-sum kernel
//
//   k(t) = gamma1 + gamma2 * delta(t) + sum_i a_i exp(-b_i t),
//
// with a_i > 0, b_i > 0, gamma1 >= 0, gamma2 >= 0.  The delta part is kept
// symbolically: pointwise evaluation and derivatives cover the regular part
// only, and the delta weight enters the evolution problem through an operator
// shift (see absorb_gamma in solver.hpp).
class ExpSumKernel {
public:
    ExpSumKernel() = default;  // zero kernel: m = 0, gamma1 = gamma2 = 0

    ExpSumKernel(double gamma1, double gamma2, std::vector<ExpTerm> terms)
        : gamma1_(gamma1), gamma2_(gamma2), terms_(std::move(terms)) {
        if (!(gamma1_ >= 0.0)) throw InvariantError("ExpSumKernel: gamma1 must be >= 0");
        if (!(gamma2_ >= 0.0)) throw InvariantError("ExpSumKernel: gamma2 must be >= 0");
        for (std::size_t i = 0; i < terms_.size(); ++i) {
            if (!(terms_[i].weight > 0.0))
                throw InvariantError("ExpSumKernel: weight a_" + std::to_string(i + 1) + " must be > 0, got " +
                                     std::to_string(terms_[i].weight));
            if (!(terms_[i].rate > 0.0))
                throw InvariantError("ExpSumKernel: rate b_" + std::to_string(i + 1) + " must be > 0, got " +
                                     std::to_string(terms_[i].rate));
        }
    }

    // Constructs without validating the sign constraints.  Test-only escape
    // hatch so the positivity diagnostics can be exercised on bad data.
    static ExpSumKernel unchecked(double gamma1, double gamma2, std::vector<ExpTerm> terms) {
        ExpSumKernel k;
        k.gamma1_ = gamma1;
        k.gamma2_ = gamma2;
        k.terms_ = std::move(terms);
        return k;
    }

    double gamma1() const { return gamma1_; }
    double gamma2() const { return gamma2_; }
    const std::vector<ExpTerm>& terms() const { return terms_; }
    std::size_t size() const { return terms_.size(); }

    // Regular part gamma1 + sum_i a_i exp(-b_i t); the delta part is not
    // evaluated pointwise.
    double operator()(double t) const {
        if (!(t >= 0.0)) throw std::domain_error("ExpSumKernel: t must be >= 0");
        double v = gamma1_;
        for (const ExpTerm& e : terms_) v += e.weight * std::exp(-e.rate * t);
        return v;
    }

    double derivative(double t) const {
        if (!(t >= 0.0)) throw std::domain_error("ExpSumKernel: t must be >= 0");
        double v = 0.0;
        for (const ExpTerm& e : terms_) v -= e.weight * e.rate * std::exp(-e.rate * t);
        return v;
    }

    double second_derivative(double t) const {
        if (!(t >= 0.0)) throw std::domain_error("ExpSumKernel: t must be >= 0");
        double v = 0.0;
        for (const ExpTerm& e : terms_) v += e.weight * e.rate * e.rate * std::exp(-e.rate * t);
        return v;
    }

    // gamma1/s + gamma2 + sum_i a_i / (b_i + s).
    double laplace(double s) const {
        if (gamma1_ > 0.0) {
            if (!(s > 0.0))
                throw std::domain_error("ExpSumKernel: Laplace transform needs s > 0 when gamma1 > 0");
        } else if (!(s >= 0.0)) {
            throw std::domain_error("ExpSumKernel: Laplace transform needs s >= 0");
        }
        double v = gamma2_;
        if (gamma1_ > 0.0) v += gamma1_ / s;
        for (const ExpTerm& e : terms_) v += e.weight / (e.rate + s);
        return v;
    }

    // The same terms with gamma1 = gamma2 = 0 (what remains after absorption).
    ExpSumKernel exponential_part() const { return ExpSumKernel(0.0, 0.0, terms_); }

    // sum_i a_i = regular-part value at t = 0 minus gamma1.
    double total_weight() const {
        double v = 0.0;
        for (const ExpTerm& e : terms_) v += e.weight;
        return v;
    }

    bool satisfies_sign_conditions() const {
        if (gamma1_ < 0.0 || gamma2_ < 0.0) return false;
        for (const ExpTerm& e : terms_)
            if (!(e.weight > 0.0 && e.rate > 0.0)) return false;
        return true;
    }

private:
    double gamma1_ = 0.0;
    double gamma2_ = 0.0;
    std::vector<ExpTerm> terms_;
};

// n points geometrically spaced on [lo, hi].
inline std::vector<double> log_spaced(double lo, double hi, int n) {
    if (!(lo > 0.0 && hi > lo && n >= 2))
        throw std::invalid_argument("log_spaced: need 0 < lo < hi and n >= 2");
    std::vector<double> pts(static_cast<std::size_t>(n));
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < n; ++i) pts[static_cast<std::size_t>(i)] = std::exp(llo + i * (lhi - llo) / (n - 1));
    pts.front() = lo;
    pts.back() = hi;
    return pts;
}

struct PositivityRow {
    double t;
    double value;      // k(t)
    double slope;      // k'(t)
    double curvature;  // k''(t)
};

// Pointwise sufficient conditions for a positive-type kernel:
// k >= 0, k' <= 0, k'' >= 0 on the sampled grid.
struct PositivityReport {
    bool nonnegative = true;
    bool nonincreasing = true;
    bool convex = true;
    std::vector<PositivityRow> rows;

    bool ok() const { return nonnegative && nonincreasing && convex; }
};

inline std::vector<double> default_positivity_grid() { return log_spaced(1e-4, 1e2, 200); }

inline PositivityReport check_positive_type(const ExpSumKernel& kern, std::span<const double> t_grid) {
    if (t_grid.empty()) throw std::invalid_argument("check_positive_type: empty grid");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] > 0.0)) throw std::invalid_argument("check_positive_type: grid points must be > 0");
        if (i > 0 && !(t_grid[i] > t_grid[i - 1]))
            throw std::invalid_argument("check_positive_type: grid must be strictly increasing");
    }
    PositivityReport rep;
    rep.rows.reserve(t_grid.size());
    for (double t : t_grid) {
        PositivityRow row{t, kern(t), kern.derivative(t), kern.second_derivative(t)};
        if (row.value < 0.0) rep.nonnegative = false;
        if (row.slope > 0.0) rep.nonincreasing = false;
        if (row.curvature < 0.0) rep.convex = false;
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace expmem
