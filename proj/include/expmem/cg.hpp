#pragma once

#include <string>

#include "expmem/errors.hpp"
#include "expmem/linop.hpp"

namespace expmem {

struct SolveReport {
    int iterations = 0;
    double relative_residual = 0.0;  // ||D x - rhs|| / ||rhs||, recomputed at exit
};

// Conjugate gradients for SPD operators.  Stops on the relative residual and
// re-verifies it with a fresh operator application before returning, so the
// reported residual is never stale recurrence data.
inline Vector solve_spd(const LinearOperator& d, const Vector& rhs, double tol = 1e-10, int max_iter = -1,
                        SolveReport* report = nullptr) {
    d.check_dimension(rhs, "solve_spd");
    if (!(tol > 0.0)) throw std::invalid_argument("solve_spd: tol must be > 0");
    const Eigen::Index n = rhs.size();
    if (max_iter < 0) max_iter = static_cast<int>(10 * n);

    const double rhs_norm = rhs.norm();
    if (rhs_norm == 0.0) {
        if (report) *report = {0, 0.0};
        return Vector::Zero(n);
    }

    Vector x = Vector::Zero(n);
    Vector r = rhs;  // residual of x = 0
    Vector p = r;
    double rr = r.squaredNorm();
    const double target = tol * rhs_norm;

    int it = 0;
    while (it < max_iter && std::sqrt(rr) > target) {
        Vector dp = d.apply(p);
        const double pdp = p.dot(dp);
        if (!(pdp > 0.0))
            throw NegativeQuadraticForm("solve_spd: (Dp,p) = " + std::to_string(pdp) +
                                        " <= 0, operator is not positive definite");
        const double alpha = rr / pdp;
        x += alpha * p;
        r -= alpha * dp;
        const double rr_new = r.squaredNorm();
        p = r + (rr_new / rr) * p;
        rr = rr_new;
        ++it;
    }

    const double true_residual = (d.apply(x) - rhs).norm();
    if (true_residual > target) {
        // Recurrence drift can stall just above tol; one restart from x fixes
        // the common case before declaring failure.
        r = rhs - d.apply(x);
        p = r;
        rr = r.squaredNorm();
        int extra = 0;
        while (extra < max_iter && std::sqrt(rr) > target) {
            Vector dp = d.apply(p);
            const double pdp = p.dot(dp);
            if (!(pdp > 0.0))
                throw NegativeQuadraticForm("solve_spd: (Dp,p) <= 0 during restart");
            const double alpha = rr / pdp;
            x += alpha * p;
            r -= alpha * dp;
            const double rr_new = r.squaredNorm();
            p = r + (rr_new / rr) * p;
            rr = rr_new;
            ++extra;
        }
        it += extra;
        const double final_residual = (d.apply(x) - rhs).norm();
        if (final_residual > target)
            throw NoConvergence("solve_spd: no convergence after " + std::to_string(it) +
                                    " iterations, relative residual " + std::to_string(final_residual / rhs_norm),
                                final_residual / rhs_norm);
        if (report) *report = {it, final_residual / rhs_norm};
        return x;
    }

    if (report) *report = {it, true_residual / rhs_norm};
    return x;
}

}  // namespace expmem
