#pragma once

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "expmem/errors.hpp"
#include "expmem/kernel.hpp"
#include "expmem/linop.hpp"
#include "expmem/solver.hpp"

namespace expmem {

// Block matrices of the coupled first-order system for (u, v_1, ..., v_m):
//
//   mass  = [ B + sum q_i C   -q_1 C  ...  -q_m C ]      q_i = a_i / b_i
//           [    -q_1 C        q_1 C              ]
//           [      ...                 ...        ]
//           [    -q_m C                     q_m C ]
//
//   stiffness = diag(A, a_1 C, ..., a_m C),
//
// so that mass * dv/dt + stiffness * v = (f, 0, ..., 0).  The mass block is
// symmetric positive definite whenever B is.
struct BlockSystem {
    Matrix mass;
    Matrix stiffness;
    Eigen::Index block_dim;  // dimension of one block (= problem dimension)
    std::size_t m;           // number of auxiliary blocks
};

inline BlockSystem build_block_system(const ProblemSpec& spec_in) {
    ProblemSpec spec = absorb_gamma(spec_in);
    const Eigen::Index d = spec.dimension();
    const std::size_t m = spec.kernel.size();
    const Eigen::Index total = d * static_cast<Eigen::Index>(m + 1);

    const Matrix bd = to_dense(*spec.B);
    const Matrix cd = to_dense(*spec.C);
    const Matrix ad = to_dense(*spec.A);

    BlockSystem sys;
    sys.block_dim = d;
    sys.m = m;
    sys.mass = Matrix::Zero(total, total);
    sys.stiffness = Matrix::Zero(total, total);

    sys.mass.topLeftCorner(d, d) = bd;
    sys.stiffness.topLeftCorner(d, d) = ad;
    const auto& terms = spec.kernel.terms();
    for (std::size_t i = 0; i < m; ++i) {
        const double q = terms[i].weight / terms[i].rate;
        const Eigen::Index off = d * static_cast<Eigen::Index>(i + 1);
        sys.mass.topLeftCorner(d, d) += q * cd;
        sys.mass.block(0, off, d, d) = -q * cd;
        sys.mass.block(off, 0, d, d) = -q * cd;
        sys.mass.block(off, off, d, d) = q * cd;
        sys.stiffness.block(off, off, d, d) = terms[i].weight * cd;
    }
    return sys;
}

// Integrates the coupled system with classical RK4 (mass factorized once) and
// returns the primary block at t_end.  Dense; guarded to small problems.
inline Vector dense_coupled_reference(const ProblemSpec& spec_in, double t_end, int fine_steps) {
    ProblemSpec spec = absorb_gamma(spec_in);
    if (!(t_end > 0.0)) throw std::invalid_argument("dense_coupled_reference: t_end must be > 0");
    if (fine_steps < 1) throw std::invalid_argument("dense_coupled_reference: fine_steps must be >= 1");
    const Eigen::Index d = spec.dimension();
    const std::size_t m = spec.kernel.size();
    const Eigen::Index total = d * static_cast<Eigen::Index>(m + 1);
    if (total > 2000) throw std::invalid_argument("dense_coupled_reference: coupled dimension exceeds guard (2000)");

    BlockSystem sys = build_block_system(spec);
    Eigen::LDLT<Matrix> mass_fac(sys.mass);
    if (mass_fac.info() != Eigen::Success)
        throw SingularMass("dense_coupled_reference: mass factorization failed");
    const Vector diag = mass_fac.vectorD();
    const double dmax = diag.cwiseAbs().maxCoeff();
    if (dmax == 0.0 || diag.cwiseAbs().minCoeff() <= 1e-12 * dmax)
        throw SingularMass("dense_coupled_reference: mass block is numerically singular");

    auto slope = [&](double t, const Vector& v) -> Vector {
        Vector rhs = -(sys.stiffness * v);
        if (spec.has_rhs()) rhs.head(d) += spec.rhs_at(t);
        return mass_fac.solve(rhs);
    };

    Vector v = Vector::Zero(total);
    v.head(d) = spec.u0;
    const double h = t_end / fine_steps;
    double t = 0.0;
    for (int n = 0; n < fine_steps; ++n) {
        const Vector k1 = slope(t, v);
        const Vector k2 = slope(t + 0.5 * h, v + (0.5 * h) * k1);
        const Vector k3 = slope(t + 0.5 * h, v + (0.5 * h) * k2);
        const Vector k4 = slope(t + h, v + h * k3);
        v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
    }
    return v.head(d);
}

// Convolution kernel for the direct nonlocal oracle: an evaluator for t > 0
// plus the strength of its power singularity at t = 0 (k ~ t^-exponent).
// An empty evaluator means k == 0.
struct SingularConvolutionKernel {
    std::function<double(double)> k;
    double singularity_exponent = 0.0;
};

inline SingularConvolutionKernel singular_kernel(const AnalyticKernel& kern) {
    return SingularConvolutionKernel{[kern](double t) { return kern(t); }, kern.alpha()};
}

// integral of k over [a, b]; the singular first interval is regularized by
// the substitution u = w^{1/(1-alpha)}, which makes the integrand bounded.
inline double integrate_kernel_interval(const SingularConvolutionKernel& kern, double a, double b) {
    if (!kern.k) return 0.0;
    if (!(b > a && a >= 0.0)) throw std::invalid_argument("integrate_kernel_interval: need 0 <= a < b");
    using quad = boost::math::quadrature::gauss_kronrod<double, 15>;
    double err = 0.0;
    double result = 0.0;
    const double alpha = kern.singularity_exponent;
    if (a == 0.0 && alpha > 0.0) {
        if (!(alpha < 1.0))
            throw QuadratureFailure("integrate_kernel_interval: singularity exponent must be < 1 for integrability");
        const double p = 1.0 - alpha;
        auto g = [&](double w) {
            if (w <= 0.0) return 0.0;
            const double u = std::pow(w, 1.0 / p);
            return kern.k(u) * std::pow(w, alpha / p) / p;
        };
        result = quad::integrate(g, 0.0, std::pow(b, p), 15, 1e-12, &err);
    } else {
        result = quad::integrate(kern.k, a, b, 15, 1e-12, &err);
    }
    if (!(std::isfinite(result)) || err > 1e-8 * (1.0 + std::abs(result)))
        throw QuadratureFailure("integrate_kernel_interval: quadrature failed on [" + std::to_string(a) + ", " +
                                std::to_string(b) + "] (error estimate " + std::to_string(err) + ")");
    return result;
}

struct NonlocalProblem {
    OpPtr B, C, A;
    SingularConvolutionKernel kernel;
    std::function<Vector(double)> rhs;  // empty means f == 0
    Vector u0;
};

struct NonlocalResult {
    std::vector<double> times;                     // all levels 0..n_steps
    std::vector<std::pair<int, Vector>> snapshots; // requested levels
    Vector final_state;
};

// Backward Euler on the original nonlocal equation with product-integration
// weights: the convolution with du/ds is approximated by
//   sum_k Omega_{n-k} C (y^{k+1} - y^k) / tau,   Omega_j = integral of k over
// [j tau, (j+1) tau].  Every step solves (B + Omega_0 C + tau A) y+ = rhs.
// O(n^2) work and full history storage; guarded to desk-scale problems.
inline NonlocalResult nonlocal_quadrature_reference(const NonlocalProblem& prob, double tau, int n_steps,
                                                    std::vector<int> snapshot_steps = {}, double cg_tol = 1e-12) {
    if (!prob.B || !prob.C || !prob.A) throw std::invalid_argument("nonlocal_quadrature_reference: operators unset");
    const Eigen::Index d = prob.u0.size();
    if (d > 512) throw std::invalid_argument("nonlocal_quadrature_reference: dimension exceeds guard (512)");
    if (n_steps < 1 || n_steps > 4000)
        throw std::invalid_argument("nonlocal_quadrature_reference: n_steps outside guard (1..4000)");
    if (!(tau > 0.0)) throw std::invalid_argument("nonlocal_quadrature_reference: tau must be > 0");

    // lag weights, computed once
    std::vector<double> omega(static_cast<std::size_t>(n_steps));
    for (int j = 0; j < n_steps; ++j)
        omega[static_cast<std::size_t>(j)] = integrate_kernel_interval(prob.kernel, j * tau, (j + 1) * tau);

    const double mu = omega[0] / tau;
    OpPtr lhs = composite(prob.B, prob.C, prob.A, mu, 1.0, tau);

    NonlocalResult res;
    res.times.push_back(0.0);
    Vector y = prob.u0;
    std::vector<Vector> c_increments;  // C (y^{k+1} - y^k)
    c_increments.reserve(static_cast<std::size_t>(n_steps));

    for (int want : snapshot_steps)
        if (want == 0) res.snapshots.emplace_back(0, y);

    for (int n = 0; n < n_steps; ++n) {
        const double t_next = (n + 1) * tau;
        Vector rhs = prob.B->apply(y) + omega[0] * prob.C->apply(y);
        for (int k = 0; k < n; ++k)
            rhs -= omega[static_cast<std::size_t>(n - k)] * c_increments[static_cast<std::size_t>(k)];
        if (prob.rhs) rhs += tau * prob.rhs(t_next);

        Vector ynew = solve_spd(*lhs, rhs, cg_tol);
        c_increments.push_back(prob.C->apply(ynew - y));
        y = std::move(ynew);
        res.times.push_back(t_next);
        for (int want : snapshot_steps)
            if (want == n + 1) res.snapshots.emplace_back(n + 1, y);
    }
    res.final_state = std::move(y);
    return res;
}

}  // namespace expmem
