#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "expmem/errors.hpp"
#include "expmem/kernel.hpp"

namespace expmem {

// Rational function in barycentric form,
//   r(s) = sum_j w_j f_j / (s - z_j)  /  sum_j w_j / (s - z_j).
struct BarycentricRational {
    std::vector<double> nodes;    // support points z_j
    std::vector<double> values;   // f_j = r(z_j)
    std::vector<double> weights;  // w_j

    double operator()(double s) const {
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            const double d = s - nodes[j];
            if (d == 0.0) return values[j];
            const double q = weights[j] / d;
            num += q * values[j];
            den += q;
        }
        return num / den;
    }
};

// Greedy adaptive barycentric fit (the AAA algorithm) on real sample data.
// Adds support points until either max_support is reached or the maximum
// deviation drops below rel_tol * max|f|.
inline BarycentricRational aaa(std::span<const double> pts, std::span<const double> vals, int max_support,
                               double rel_tol = 5e-14) {
    const std::size_t n = pts.size();
    if (n != vals.size()) throw std::invalid_argument("aaa: point/value size mismatch");
    if (max_support < 1) throw std::invalid_argument("aaa: max_support must be >= 1");
    if (n < static_cast<std::size_t>(max_support) + 1)
        throw std::invalid_argument("aaa: need more samples than support points");

    Eigen::Map<const Eigen::VectorXd> z(pts.data(), static_cast<Eigen::Index>(n));
    Eigen::Map<const Eigen::VectorXd> f(vals.data(), static_cast<Eigen::Index>(n));
    const double fscale = f.cwiseAbs().maxCoeff();

    std::vector<Eigen::Index> support;
    std::vector<bool> in_support(n, false);
    Eigen::VectorXd r = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), f.mean());
    BarycentricRational best;

    for (int k = 0; k < max_support; ++k) {
        // next support point: worst remaining deviation
        Eigen::Index pick = -1;
        double worst = -1.0;
        for (Eigen::Index i = 0; i < z.size(); ++i) {
            if (in_support[static_cast<std::size_t>(i)]) continue;
            const double dev = std::abs(f[i] - r[i]);
            if (dev > worst) {
                worst = dev;
                pick = i;
            }
        }
        if (pick < 0) break;
        support.push_back(pick);
        in_support[static_cast<std::size_t>(pick)] = true;

        const Eigen::Index ns = static_cast<Eigen::Index>(support.size());
        const Eigen::Index nr = z.size() - ns;

        // Loewner matrix over the remaining samples
        Eigen::MatrixXd loewner(nr, ns);
        std::vector<Eigen::Index> rest;
        rest.reserve(static_cast<std::size_t>(nr));
        for (Eigen::Index i = 0; i < z.size(); ++i)
            if (!in_support[static_cast<std::size_t>(i)]) rest.push_back(i);
        for (Eigen::Index row = 0; row < nr; ++row)
            for (Eigen::Index col = 0; col < ns; ++col) {
                const Eigen::Index i = rest[static_cast<std::size_t>(row)];
                const Eigen::Index j = support[static_cast<std::size_t>(col)];
                loewner(row, col) = (f[i] - f[j]) / (z[i] - z[j]);
            }

        Eigen::JacobiSVD<Eigen::MatrixXd> svd(loewner, Eigen::ComputeThinV);
        Eigen::VectorXd w = svd.matrixV().col(ns - 1);

        best.nodes.resize(static_cast<std::size_t>(ns));
        best.values.resize(static_cast<std::size_t>(ns));
        best.weights.resize(static_cast<std::size_t>(ns));
        for (Eigen::Index j = 0; j < ns; ++j) {
            best.nodes[static_cast<std::size_t>(j)] = z[support[static_cast<std::size_t>(j)]];
            best.values[static_cast<std::size_t>(j)] = f[support[static_cast<std::size_t>(j)]];
            best.weights[static_cast<std::size_t>(j)] = w[j];
        }

        double err = 0.0;
        for (Eigen::Index row = 0; row < nr; ++row) {
            const Eigen::Index i = rest[static_cast<std::size_t>(row)];
            double num = 0.0, den = 0.0;
            for (Eigen::Index col = 0; col < ns; ++col) {
                const Eigen::Index j = support[static_cast<std::size_t>(col)];
                const double q = w[col] / (z[i] - z[j]);
                num += q * f[j];
                den += q;
            }
            r[i] = num / den;
            err = std::max(err, std::abs(f[i] - r[i]));
        }
        if (err <= rel_tol * fscale) break;
    }
    return best;
}

// Partial-fraction form gamma2 + sum_i a_i / (b_i + s) of a barycentric
// rational function; poles sit at -b_i.
struct PartialFractions {
    double gamma2 = 0.0;
    std::vector<ExpTerm> terms;  // weight = residue a_i, rate = b_i
};

// Poles via the generalized eigenvalue problem on the arrow pencil
//
//   [ 0  w^T ]        [ 0      ]
//   [ 1 diag(z)] v = lambda [   I    ] v ;
//
// two eigenvalues sit at infinity, the rest are the poles.  Residues follow
// from a_i = N(p_i) / D'(p_i) and gamma2 = r(inf) = sum w f / sum w.
inline PartialFractions poles_to_terms(std::span<const double> nodes, std::span<const double> weights,
                                       std::span<const double> values) {
    const std::size_t ns = nodes.size();
    if (ns != weights.size() || ns != values.size())
        throw std::invalid_argument("poles_to_terms: inconsistent barycentric data");
    if (ns == 0) throw std::invalid_argument("poles_to_terms: empty barycentric data");

    double wsum = 0.0, wfsum = 0.0;
    for (std::size_t j = 0; j < ns; ++j) {
        wsum += weights[j];
        wfsum += weights[j] * values[j];
    }
    if (wsum == 0.0) throw ConversionFailure("poles_to_terms: weights sum to zero, value at infinity undefined");

    PartialFractions pf;
    pf.gamma2 = wfsum / wsum;
    if (ns == 1) return pf;  // constant function, no poles

    const Eigen::Index nn = static_cast<Eigen::Index>(ns) + 1;
    Eigen::MatrixXd pa = Eigen::MatrixXd::Zero(nn, nn);
    Eigen::MatrixXd pb = Eigen::MatrixXd::Zero(nn, nn);
    for (Eigen::Index j = 1; j < nn; ++j) {
        pa(0, j) = weights[static_cast<std::size_t>(j - 1)];
        pa(j, 0) = 1.0;
        pa(j, j) = nodes[static_cast<std::size_t>(j - 1)];
        pb(j, j) = 1.0;
    }

    Eigen::GeneralizedEigenSolver<Eigen::MatrixXd> ges;
    ges.compute(pa, pb);
    if (ges.info() != Eigen::Success)
        throw ConversionFailure("poles_to_terms: generalized eigenvalue problem did not converge");

    const auto alphas = ges.alphas();
    const auto betas = ges.betas();
    const double beta_scale = betas.cwiseAbs().maxCoeff();
    if (beta_scale == 0.0) throw ConversionFailure("poles_to_terms: pencil is defective (all eigenvalues infinite)");

    std::vector<std::complex<double>> poles;
    for (Eigen::Index i = 0; i < betas.size(); ++i)
        if (std::abs(betas[i]) > 1e-10 * beta_scale) poles.push_back(alphas[i] / betas[i]);

    if (poles.size() != ns - 1)
        throw ConversionFailure("poles_to_terms: expected " + std::to_string(ns - 1) + " finite poles, got " +
                                std::to_string(poles.size()));

    for (const std::complex<double>& p : poles) {
        if (std::abs(p.imag()) > 1e-8 * (1.0 + std::abs(p.real())))
            throw ConversionFailure("poles_to_terms: complex pole " + std::to_string(p.real()) + " + " +
                                    std::to_string(p.imag()) + "i");
        const double pr = p.real();
        // a = N(p) / D'(p) with N(s) = sum w f/(s-z), D'(s) = -sum w/(s-z)^2
        double num = 0.0, dden = 0.0;
        for (std::size_t j = 0; j < ns; ++j) {
            const double d = pr - nodes[j];
            num += weights[j] * values[j] / d;
            dden -= weights[j] / (d * d);
        }
        pf.terms.push_back(ExpTerm{num / dden, -pr});
    }
    std::sort(pf.terms.begin(), pf.terms.end(), [](const ExpTerm& l, const ExpTerm& r) { return l.rate < r.rate; });
    return pf;
}

inline PartialFractions poles_to_terms(const BarycentricRational& r) {
    return poles_to_terms(r.nodes, r.weights, r.values);
}

}  // namespace expmem
