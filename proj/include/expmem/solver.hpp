#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <iostream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "expmem/cg.hpp"
#include "expmem/errors.hpp"
#include "expmem/kernel.hpp"
#include "expmem/linop.hpp"

namespace expmem {

// Evolution problem with time-derivative memory,
//
//   B du/dt + integral_0^t k(t-s) C du/ds ds + A u = f(t),   u(0) = u0,
//
// with B, C, A self-adjoint positive definite on a common space and k an
// exponential-sum kernel.  space_weight is the inner-product weight (h1*h2
// for grid functions, 1 otherwise); it only affects reported norms/energies.
struct ProblemSpec {
    OpPtr B, C, A;
    ExpSumKernel kernel;
    std::function<Vector(double)> rhs;  // f(t); empty function means f == 0
    Vector u0;
    double space_weight = 1.0;

    Eigen::Index dimension() const { return u0.size(); }
    bool has_rhs() const { return static_cast<bool>(rhs); }

    Vector rhs_at(double t) const {
        if (!rhs) return Vector::Zero(u0.size());
        Vector f = rhs(t);
        if (f.size() != u0.size()) throw std::invalid_argument("ProblemSpec: rhs(t) has wrong dimension");
        return f;
    }

    void validate() const {
        if (!B || !C || !A) throw InvariantError("ProblemSpec: operators must all be set");
        if (u0.size() == 0) throw InvariantError("ProblemSpec: empty initial state");
        if (B->dimension() != u0.size() || C->dimension() != u0.size() || A->dimension() != u0.size())
            throw InvariantError("ProblemSpec: operator dimensions must equal u0 dimension");
        if (!(space_weight > 0.0)) throw InvariantError("ProblemSpec: space_weight must be > 0");
        if (!kernel.satisfies_sign_conditions())
            throw InvariantError("ProblemSpec: kernel violates the sign conditions");
    }
};

// Folds the kernel's constant and delta parts into the operators:
//   gamma2 * delta(t):  contributes gamma2 C du/dt          -> B' = B + gamma2 C
//   gamma1 (constant):  contributes gamma1 C (u(t) - u0)    -> A' = A + gamma1 C,
//                                                              f' = f + gamma1 C u0.
// The remaining kernel is the pure exponential part.
inline ProblemSpec absorb_gamma(const ProblemSpec& spec) {
    spec.validate();
    const double g1 = spec.kernel.gamma1();
    const double g2 = spec.kernel.gamma2();
    if (g1 == 0.0 && g2 == 0.0) {
        ProblemSpec out = spec;
        out.kernel = spec.kernel.exponential_part();
        return out;
    }
    ProblemSpec out = spec;
    out.kernel = spec.kernel.exponential_part();
    if (g2 > 0.0) out.B = std::make_shared<ShiftedOperator>(spec.B, spec.C, g2);
    if (g1 > 0.0) {
        out.A = std::make_shared<ShiftedOperator>(spec.A, spec.C, g1);
        Vector shift = g1 * spec.C->apply(spec.u0);
        if (spec.has_rhs()) {
            auto base = spec.rhs;
            out.rhs = [base, shift](double t) { return Vector(base(t) + shift); };
        } else {
            out.rhs = [shift](double) { return shift; };
        }
    }
    return out;
}

// mu = sum_i a_i / (1 + sigma b_i tau), the memory weight of the per-step
// operator.
inline double mu_coefficient(const ExpSumKernel& kernel, double sigma, double tau) {
    if (!(sigma > 0.0 && sigma <= 1.0)) throw InvariantError("mu_coefficient: sigma must be in (0,1]");
    if (!(tau > 0.0)) throw InvariantError("mu_coefficient: tau must be > 0");
    double mu = 0.0;
    for (const ExpTerm& e : kernel.terms()) mu += e.weight / (1.0 + sigma * e.rate * tau);
    return mu;
}

struct SchemeConfig {
    double sigma = 0.5;
    double tau = 0.0;
    int n_steps = 1;
    double cg_tol = 1e-10;
    int cg_max_iter = -1;  // -1: 10 * dimension

    void validate() const {
        if (!(sigma > 0.0 && sigma <= 1.0)) throw InvariantError("SchemeConfig: sigma must be in (0,1]");
        if (!(tau > 0.0)) throw InvariantError("SchemeConfig: tau must be > 0");
        if (n_steps < 1) throw InvariantError("SchemeConfig: n_steps must be >= 1");
        if (!(cg_tol > 0.0)) throw InvariantError("SchemeConfig: cg_tol must be > 0");
    }
};

struct SolverState {
    int n = 0;
    double time = 0.0;
    Vector y;
    std::vector<Vector> aux;  // one per kernel term, all zero at n = 0
};

struct EnergyTrace {
    std::vector<int> level;
    std::vector<double> time;
    std::vector<double> energy;  // E^n = ||y||_A^2 + sum a_i ||y_i||_C^2 (weighted)
    std::vector<double> bound;   // R^n = ||u0||_A^2 + (1/2) sum tau ||f^{k+sigma}||_{B^-1}^2
    bool violated = false;

    static constexpr double slack = 1e-10;
    static bool admissible(double e, double r) { return e <= r + slack * (1.0 + r); }
};

enum class MonitorMode { off, warn, fail };

// Two-level weighted scheme for the absorbed problem, with the per-step
// elimination of the auxiliary variables:
//   chi_i = s_i ((1 - (1-sigma) b_i tau) y_i - y),        s_i = 1/(1 + sigma b_i tau)
//   (B + sigma tau (mu C + A)) y+ = tau f^{n+sigma} + (B - (1-sigma) tau A) y
//                                   + sum_i (a_i/b_i) C (y - y_i + chi_i)
//   y_i+ = s_i y+ + chi_i.
class ThetaStepper {
public:
    ThetaStepper(const ProblemSpec& spec, const SchemeConfig& cfg) : spec_(absorb_gamma(spec)), cfg_(cfg) {
        cfg_.validate();
        const auto& terms = spec_.kernel.terms();
        m_ = terms.size();
        aux_scale_.resize(m_);
        aux_decay_.resize(m_);
        weight_over_rate_.resize(m_);
        mu_ = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            const double a = terms[i].weight, b = terms[i].rate;
            aux_scale_[i] = 1.0 / (1.0 + cfg_.sigma * b * cfg_.tau);
            aux_decay_[i] = 1.0 - (1.0 - cfg_.sigma) * b * cfg_.tau;
            weight_over_rate_[i] = a / b;
            mu_ += a * aux_scale_[i];
        }
        lhs_ = composite(spec_.B, spec_.C, spec_.A, mu_, cfg_.sigma, cfg_.tau);
    }

    const ProblemSpec& spec() const { return spec_; }
    const SchemeConfig& config() const { return cfg_; }
    double mu() const { return mu_; }

    SolverState initial_state() const {
        SolverState st;
        st.y = spec_.u0;
        st.aux.assign(m_, Vector::Zero(spec_.dimension()));
        return st;
    }

    // sigma-weighted source for the transition starting at time t.
    Vector f_sigma(double t) const {
        if (!spec_.has_rhs()) return Vector();
        return Vector(cfg_.sigma * spec_.rhs_at(t + cfg_.tau) + (1.0 - cfg_.sigma) * spec_.rhs_at(t));
    }

    void advance(SolverState& st) const {
        if (st.aux.size() != m_) throw InvariantError("ThetaStepper: state has wrong auxiliary count");
        const double tau = cfg_.tau, sigma = cfg_.sigma;

        std::vector<Vector> chi(m_);
        for (std::size_t i = 0; i < m_; ++i)
            chi[i] = aux_scale_[i] * (aux_decay_[i] * st.aux[i] - st.y);

        Vector rhs = spec_.B->apply(st.y);
        if (sigma < 1.0) rhs -= ((1.0 - sigma) * tau) * spec_.A->apply(st.y);
        for (std::size_t i = 0; i < m_; ++i)
            rhs += weight_over_rate_[i] * spec_.C->apply(st.y - st.aux[i] + chi[i]);
        if (spec_.has_rhs()) rhs += tau * f_sigma(st.time);

        Vector ynew = solve_spd(*lhs_, rhs, cfg_.cg_tol, cfg_.cg_max_iter);
        for (std::size_t i = 0; i < m_; ++i) st.aux[i] = aux_scale_[i] * ynew + chi[i];
        st.y = std::move(ynew);
        st.n += 1;
        st.time += tau;
    }

    // E^n for the absorbed system.
    double energy(const SolverState& st) const {
        double e = quadratic_form(*spec_.A, st.y, spec_.space_weight);
        const auto& terms = spec_.kernel.terms();
        for (std::size_t i = 0; i < m_; ++i)
            e += terms[i].weight * quadratic_form(*spec_.C, st.aux[i], spec_.space_weight);
        return e;
    }

    // Norms of the raw two-level equations evaluated at a transition; both
    // should sit at the linear-solve tolerance for an accepted step.
    struct Residuals {
        double primary;
        std::vector<double> aux;
    };

    Residuals residuals(const SolverState& before, const SolverState& after) const {
        const double tau = cfg_.tau, sigma = cfg_.sigma;
        const Vector dy = (after.y - before.y) / tau;
        Vector ysig = sigma * after.y + (1.0 - sigma) * before.y;

        Vector r = spec_.B->apply(dy) + spec_.A->apply(ysig);
        const auto& terms = spec_.kernel.terms();
        for (std::size_t i = 0; i < m_; ++i) {
            const Vector dyi = (after.aux[i] - before.aux[i]) / tau;
            r += weight_over_rate_[i] * spec_.C->apply(dy - dyi);
        }
        if (spec_.has_rhs()) r -= f_sigma(before.time);

        Residuals res;
        res.primary = r.norm();
        res.aux.resize(m_);
        for (std::size_t i = 0; i < m_; ++i) {
            const Vector dyi = (after.aux[i] - before.aux[i]) / tau;
            const Vector yisig = sigma * after.aux[i] + (1.0 - sigma) * before.aux[i];
            res.aux[i] = (dyi + terms[i].rate * yisig - dy).norm();
        }
        return res;
    }

private:
    ProblemSpec spec_;
    SchemeConfig cfg_;
    std::size_t m_ = 0;
    std::vector<double> aux_scale_;         // 1/(1 + sigma b_i tau)
    std::vector<double> aux_decay_;         // 1 - (1-sigma) b_i tau
    std::vector<double> weight_over_rate_;  // a_i / b_i
    double mu_ = 0.0;
    OpPtr lhs_;
};

// Single transition (absorbs gammas each call; use ThetaStepper directly for
// long runs).
inline SolverState step(const ProblemSpec& spec, const SchemeConfig& cfg, const SolverState& state) {
    ThetaStepper stepper(spec, cfg);
    SolverState next = state;
    stepper.advance(next);
    return next;
}

struct RunOptions {
    MonitorMode monitor = MonitorMode::fail;
    std::vector<int> snapshot_steps;  // levels at which the full field is kept
    Eigen::Index probe_index = -1;    // node recorded every level when >= 0
};

struct RunResult {
    SolverState state;  // final level
    EnergyTrace energy;
    std::vector<std::pair<int, Vector>> snapshots;
    std::vector<std::pair<double, double>> probe;  // (t, y[probe])
};

inline RunResult run(const ProblemSpec& spec, const SchemeConfig& cfg, const RunOptions& opt = {}) {
    ThetaStepper stepper(spec, cfg);
    const ProblemSpec& sp = stepper.spec();

    // Stability is guaranteed for sigma >= 0.5 only; below that the monitor
    // can observe but must not abort the run.
    MonitorMode mode = opt.monitor;
    if (cfg.sigma < 0.5 && mode == MonitorMode::fail) mode = MonitorMode::warn;

    RunResult res;
    SolverState st = stepper.initial_state();
    double bound = quadratic_form(*sp.A, sp.u0, sp.space_weight);
    bool warned = false;

    auto record = [&](const SolverState& s) {
        const double e = stepper.energy(s);
        res.energy.level.push_back(s.n);
        res.energy.time.push_back(s.time);
        res.energy.energy.push_back(e);
        res.energy.bound.push_back(bound);
        if (!EnergyTrace::admissible(e, bound)) {
            res.energy.violated = true;
            if (mode == MonitorMode::fail)
                throw StabilityViolation("energy bound violated at level " + std::to_string(s.n) + ": E = " +
                                         std::to_string(e) + " > R = " + std::to_string(bound));
            if (mode == MonitorMode::warn && !warned) {
                std::cerr << "warning: energy bound violated at level " << s.n << " (E = " << e << ", R = " << bound
                          << ")\n";
                warned = true;
            }
        }
        if (opt.probe_index >= 0) res.probe.emplace_back(s.time, s.y[opt.probe_index]);
        for (int want : opt.snapshot_steps)
            if (want == s.n) res.snapshots.emplace_back(s.n, s.y);
    };

    if (opt.probe_index >= 0 && opt.probe_index >= sp.dimension())
        throw std::invalid_argument("run: probe index out of range");

    record(st);
    for (int n = 0; n < cfg.n_steps; ++n) {
        if (sp.has_rhs()) {
            Vector fns = stepper.f_sigma(st.time);
            if (fns.size() > 0 && fns.norm() > 0.0) {
                Vector binv_f = solve_spd(*sp.B, fns, std::min(cfg.cg_tol, 1e-12));
                bound += 0.5 * cfg.tau * sp.space_weight * binv_f.dot(fns);
            }
        }
        stepper.advance(st);
        record(st);
    }
    res.state = std::move(st);
    return res;
}

}  // namespace expmem
