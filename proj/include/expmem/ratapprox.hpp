#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "expmem/aaa.hpp"
#include "expmem/errors.hpp"
#include "expmem/kernel.hpp"

namespace expmem {

struct FitConfig {
    int m = 10;                 // number of exponential terms
    double s_max = 1000.0;      // approximation interval [0, s_max]
    int n_samples = 2000;       // sample count on the interval
    bool include_gamma2 = true; // fit a constant term gamma2 >= 0
    bool include_zero = true;   // sample s = 0 (target must be finite there)

    void validate() const {
        if (m < 1) throw InvariantError("FitConfig: m must be >= 1");
        if (!(s_max > 0.0)) throw InvariantError("FitConfig: s_max must be > 0");
        if (n_samples < 4 * m) throw InvariantError("FitConfig: need n_samples >= 4*m");
    }
};

struct FitReport {
    ExpSumKernel kernel;
    double eps_F_max = 0.0;  // max |K~(s) - K(s)| over the fit sample grid
    double eps_f_max_on_window = std::numeric_limits<double>::quiet_NaN();
    bool positivity_ok = false;
};

// Sample grid on [0, s_max]: log-clustered near zero plus the endpoint.
// attempt > 0 jitters the interior points (deterministically) — the retry
// path of the positivity repair.
inline std::vector<double> fit_sample_grid(const FitConfig& cfg, unsigned attempt = 0) {
    const int n_log = cfg.include_zero ? cfg.n_samples - 1 : cfg.n_samples;
    if (n_log < 2) throw InvariantError("fit_sample_grid: too few samples");
    const double lo = 1e-6 * cfg.s_max;
    std::vector<double> pts = log_spaced(lo, cfg.s_max, n_log);
    if (attempt > 0) {
        std::mt19937 rng(attempt * 7919u + 17u);
        std::uniform_real_distribution<double> jitter(-0.45, 0.45);
        const double step = std::log(cfg.s_max / lo) / (n_log - 1);
        for (int i = 1; i + 1 < n_log; ++i) pts[static_cast<std::size_t>(i)] *= std::exp(jitter(rng) * step);
        std::sort(pts.begin(), pts.end());
    }
    if (cfg.include_zero) pts.insert(pts.begin(), 0.0);
    return pts;
}

// Reporting grids behind the certification CSVs.
inline std::vector<double> default_s_grid(double s_max = 1000.0, bool include_zero = true) {
    std::vector<double> pts = log_spaced(1e-6 * s_max, s_max, 2000);
    if (include_zero) pts.insert(pts.begin(), 0.0);
    return pts;
}

inline std::vector<double> default_t_grid() { return log_spaced(1e-3, 1e2, 500); }

struct CertSeries {
    std::vector<double> x;       // s or t
    std::vector<double> target;  // K or k
    std::vector<double> fitted;  // K~ or k~
    std::vector<double> err;     // |fitted - target|
    double max_err = 0.0;
};

struct Certification {
    CertSeries laplace;  // eps_F data
    CertSeries time;     // eps_f data
};

template <typename LaplaceFn, typename TimeFn>
Certification certify_against(LaplaceFn&& laplace_true, TimeFn&& time_true, const ExpSumKernel& fit,
                              std::span<const double> s_grid, std::span<const double> t_grid) {
    if (s_grid.empty() || t_grid.empty()) throw std::invalid_argument("certify: grids must be nonempty");
    Certification cert;
    cert.laplace.x.reserve(s_grid.size());
    for (double s : s_grid) {
        const double kt = laplace_true(s);
        const double kf = fit.laplace(s);
        const double e = std::abs(kf - kt);
        cert.laplace.x.push_back(s);
        cert.laplace.target.push_back(kt);
        cert.laplace.fitted.push_back(kf);
        cert.laplace.err.push_back(e);
        cert.laplace.max_err = std::max(cert.laplace.max_err, e);
    }
    cert.time.x.reserve(t_grid.size());
    for (double t : t_grid) {
        if (!(t > 0.0)) throw std::invalid_argument("certify: t grid must be strictly positive");
        const double kt = time_true(t);
        const double kf = fit(t);
        const double e = std::abs(kf - kt);
        cert.time.x.push_back(t);
        cert.time.target.push_back(kt);
        cert.time.fitted.push_back(kf);
        cert.time.err.push_back(e);
        cert.time.max_err = std::max(cert.time.max_err, e);
    }
    return cert;
}

inline Certification certify(const AnalyticKernel& kern_true, const ExpSumKernel& kern_fit,
                             std::span<const double> s_grid, std::span<const double> t_grid) {
    return certify_against([&](double s) { return kern_true.laplace(s); },
                           [&](double t) { return kern_true(t); }, kern_fit, s_grid, t_grid);
}

// Self-certification of one exp-sum kernel against another (used to validate
// synthetic fits where the target itself is an exponential sum).
inline Certification certify(const ExpSumKernel& kern_true, const ExpSumKernel& kern_fit,
                             std::span<const double> s_grid, std::span<const double> t_grid) {
    return certify_against([&](double s) { return kern_true.laplace(s); },
                           [&](double t) { return kern_true(t); }, kern_fit, s_grid, t_grid);
}

namespace detail {

// Weights re-fit with gamma2 pinned to zero: keep the AAA poles, solve the
// linear least-squares problem for the a_i on the sample grid.
inline std::vector<ExpTerm> refit_weights(const std::vector<ExpTerm>& terms, std::span<const double> grid,
                                          std::span<const double> vals) {
    const Eigen::Index rows = static_cast<Eigen::Index>(grid.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(terms.size());
    Eigen::MatrixXd design(rows, cols);
    Eigen::VectorXd rhs(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        rhs[r] = vals[static_cast<std::size_t>(r)];
        for (Eigen::Index c = 0; c < cols; ++c)
            design(r, c) = 1.0 / (terms[static_cast<std::size_t>(c)].rate + grid[static_cast<std::size_t>(r)]);
    }
    Eigen::VectorXd a = design.colPivHouseholderQr().solve(rhs);
    std::vector<ExpTerm> out = terms;
    for (Eigen::Index c = 0; c < cols; ++c) out[static_cast<std::size_t>(c)].weight = a[c];
    return out;
}

}  // namespace detail

// Builds an m-term exponential-sum approximation of a Laplace-domain target
// K(s) on [0, s_max]: AAA rational fit, conversion to partial fractions, and
// sign repair by grid perturbation (3 retries) before giving up.
template <typename LaplaceFn>
FitReport fit_exp_sum_target(LaplaceFn&& target, const FitConfig& cfg) {
    cfg.validate();
    std::string last_error = "no attempt made";
    for (unsigned attempt = 0; attempt <= 3; ++attempt) {
        std::vector<double> grid = fit_sample_grid(cfg, attempt);
        std::vector<double> vals(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) vals[i] = target(grid[i]);
        double scale = 0.0;
        for (double v : vals) scale = std::max(scale, std::abs(v));

        try {
            BarycentricRational bary = aaa(grid, vals, cfg.m + 1);
            PartialFractions pf = poles_to_terms(bary);

            double gamma2 = pf.gamma2;
            std::vector<ExpTerm> terms = pf.terms;
            if (!cfg.include_gamma2) {
                gamma2 = 0.0;
                if (!terms.empty()) terms = detail::refit_weights(terms, grid, vals);
            }
            if (gamma2 < 0.0 && gamma2 >= -1e-13 * scale) gamma2 = 0.0;  // roundoff-level constant

            // AAA can converge before reaching m poles (e.g. a constant or an
            // exactly rational target); pad with negligible valid terms so the
            // contract "exactly m terms" holds.
            while (static_cast<int>(terms.size()) < cfg.m) terms.push_back(ExpTerm{1e-30, 1.0});

            ExpSumKernel kern(0.0, gamma2, std::move(terms));  // throws InvariantError on bad signs

            FitReport rep;
            rep.kernel = kern;
            for (std::size_t i = 0; i < grid.size(); ++i)
                rep.eps_F_max = std::max(rep.eps_F_max, std::abs(kern.laplace(grid[i]) - vals[i]));
            const std::vector<double> tpos = default_positivity_grid();
            rep.positivity_ok = check_positive_type(kern, tpos).ok();
            return rep;
        } catch (const InvariantError& e) {
            last_error = e.what();
        } catch (const ConversionFailure& e) {
            last_error = e.what();
        }
    }
    throw FitFailure("fit_exp_sum: sign repair failed after 4 attempts; last problem: " + last_error);
}

inline FitReport fit_exp_sum(const AnalyticKernel& kern, FitConfig cfg) {
    cfg.include_zero = cfg.include_zero && kern.delta() > 0.0;
    FitReport rep = fit_exp_sum_target([&](double s) { return kern.laplace(s); }, cfg);
    Certification cert = certify(kern, rep.kernel, default_s_grid(cfg.s_max, cfg.include_zero), default_t_grid());
    rep.eps_f_max_on_window = cert.time.max_err;
    return rep;
}

}  // namespace expmem
