#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

#include "expmem/errors.hpp"

namespace expmem {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Self-adjoint positive-definite operator on R^dim.  Implementations are
// immutable and may be shared between problem specs and composites.
class LinearOperator {
public:
    virtual ~LinearOperator() = default;
    virtual Eigen::Index dimension() const = 0;
    virtual Vector apply(const Vector& v) const = 0;

    void check_dimension(const Vector& v, const char* who) const {
        if (v.size() != dimension())
            throw std::invalid_argument(std::string(who) + ": dimension mismatch (operator " +
                                        std::to_string(dimension()) + ", vector " + std::to_string(v.size()) + ")");
    }
};

using OpPtr = std::shared_ptr<const LinearOperator>;

class ScaledIdentity final : public LinearOperator {
public:
    ScaledIdentity(Eigen::Index dim, double scale) : dim_(dim), scale_(scale) {
        if (dim <= 0) throw std::invalid_argument("ScaledIdentity: dimension must be positive");
    }
    Eigen::Index dimension() const override { return dim_; }
    double scale() const { return scale_; }
    Vector apply(const Vector& v) const override {
        check_dimension(v, "ScaledIdentity::apply");
        return scale_ * v;
    }

private:
    Eigen::Index dim_;
    double scale_;
};

class DiagonalOperator final : public LinearOperator {
public:
    explicit DiagonalOperator(Vector diag) : diag_(std::move(diag)) {
        if (diag_.size() == 0) throw std::invalid_argument("DiagonalOperator: empty diagonal");
    }
    Eigen::Index dimension() const override { return diag_.size(); }
    Vector apply(const Vector& v) const override {
        check_dimension(v, "DiagonalOperator::apply");
        return diag_.cwiseProduct(v);
    }

private:
    Vector diag_;
};

class DenseOperator final : public LinearOperator {
public:
    explicit DenseOperator(Matrix mat) : mat_(std::move(mat)) {
        if (mat_.rows() == 0 || mat_.rows() != mat_.cols())
            throw std::invalid_argument("DenseOperator: matrix must be square and nonempty");
    }
    Eigen::Index dimension() const override { return mat_.rows(); }
    const Matrix& matrix() const { return mat_; }
    Vector apply(const Vector& v) const override {
        check_dimension(v, "DenseOperator::apply");
        return mat_ * v;
    }

private:
    Matrix mat_;
};

// Five-point grid Laplacian on the unit square with homogeneous Dirichlet
// data; vectors hold interior nodes only, x1 index varying fastest.
class GridLaplacian final : public LinearOperator {
public:
    GridLaplacian(int n1, int n2) : n1_(n1), n2_(n2) {
        if (n1 < 2 || n2 < 2) throw std::invalid_argument("GridLaplacian: need N1, N2 >= 2");
        h1_ = 1.0 / n1;
        h2_ = 1.0 / n2;
    }

    int n1() const { return n1_; }
    int n2() const { return n2_; }
    double h1() const { return h1_; }
    double h2() const { return h2_; }
    double cell_area() const { return h1_ * h2_; }
    Eigen::Index dimension() const override {
        return static_cast<Eigen::Index>(n1_ - 1) * static_cast<Eigen::Index>(n2_ - 1);
    }

    // Interior node (i, j), 1 <= i <= N1-1, 1 <= j <= N2-1.
    Eigen::Index node_index(int i, int j) const {
        if (i < 1 || i > n1_ - 1 || j < 1 || j > n2_ - 1)
            throw std::out_of_range("GridLaplacian::node_index: node outside interior");
        return static_cast<Eigen::Index>(j - 1) * (n1_ - 1) + (i - 1);
    }

    std::pair<double, double> node_coords(Eigen::Index idx) const {
        if (idx < 0 || idx >= dimension()) throw std::out_of_range("GridLaplacian::node_coords: bad index");
        const int i = static_cast<int>(idx % (n1_ - 1)) + 1;
        const int j = static_cast<int>(idx / (n1_ - 1)) + 1;
        return {i * h1_, j * h2_};
    }

    Vector apply(const Vector& v) const override {
        check_dimension(v, "GridLaplacian::apply");
        Vector out(v.size());
        const double c1 = 1.0 / (h1_ * h1_), c2 = 1.0 / (h2_ * h2_);
        const int m1 = n1_ - 1;
        for (int j = 1; j <= n2_ - 1; ++j) {
            for (int i = 1; i <= m1; ++i) {
                const Eigen::Index idx = static_cast<Eigen::Index>(j - 1) * m1 + (i - 1);
                const double w = v[idx];
                const double wl = (i > 1) ? v[idx - 1] : 0.0;
                const double wr = (i < m1) ? v[idx + 1] : 0.0;
                const double wd = (j > 1) ? v[idx - m1] : 0.0;
                const double wu = (j < n2_ - 1) ? v[idx + m1] : 0.0;
                out[idx] = c1 * (2.0 * w - wl - wr) + c2 * (2.0 * w - wd - wu);
            }
        }
        return out;
    }

    // lambda_{kl} = (4/h1^2) sin^2(k pi h1 / 2) + (4/h2^2) sin^2(l pi h2 / 2).
    double eigenvalue(int k, int l) const {
        if (k < 1 || k > n1_ - 1 || l < 1 || l > n2_ - 1)
            throw std::out_of_range("GridLaplacian::eigenvalue: mode outside range");
        const double s1 = std::sin(0.5 * std::numbers::pi * k * h1_);
        const double s2 = std::sin(0.5 * std::numbers::pi * l * h2_);
        return 4.0 / (h1_ * h1_) * s1 * s1 + 4.0 / (h2_ * h2_) * s2 * s2;
    }

    double min_eigenvalue() const { return eigenvalue(1, 1); }
    double max_eigenvalue() const { return eigenvalue(n1_ - 1, n2_ - 1); }

    Vector eigenvector(int k, int l) const {
        if (k < 1 || k > n1_ - 1 || l < 1 || l > n2_ - 1)
            throw std::out_of_range("GridLaplacian::eigenvector: mode outside range");
        Vector v(dimension());
        for (int j = 1; j <= n2_ - 1; ++j)
            for (int i = 1; i <= n1_ - 1; ++i)
                v[node_index(i, j)] =
                    std::sin(std::numbers::pi * k * i * h1_) * std::sin(std::numbers::pi * l * j * h2_);
        return v;
    }

private:
    int n1_, n2_;
    double h1_, h2_;
};

// v -> B v + sigma tau (mu C v + A v), the left-hand side of the per-step
// system, applied without materializing a matrix.
class CompositeOperator final : public LinearOperator {
public:
    CompositeOperator(OpPtr b, OpPtr c, OpPtr a, double mu, double sigma, double tau)
        : b_(std::move(b)), c_(std::move(c)), a_(std::move(a)), mu_(mu), sigma_(sigma), tau_(tau) {
        if (!b_ || !c_ || !a_) throw std::invalid_argument("CompositeOperator: null operand");
        if (b_->dimension() != c_->dimension() || b_->dimension() != a_->dimension())
            throw std::invalid_argument("CompositeOperator: operand dimensions differ");
        if (!(sigma_ > 0.0 && sigma_ <= 1.0)) throw std::invalid_argument("CompositeOperator: sigma must be in (0,1]");
        if (!(tau_ >= 0.0)) throw std::invalid_argument("CompositeOperator: tau must be >= 0");
        if (!(mu_ >= 0.0)) throw std::invalid_argument("CompositeOperator: mu must be >= 0");
    }

    Eigen::Index dimension() const override { return b_->dimension(); }
    Vector apply(const Vector& v) const override {
        check_dimension(v, "CompositeOperator::apply");
        Vector out = b_->apply(v);
        if (tau_ > 0.0) {
            if (mu_ > 0.0) out += (sigma_ * tau_ * mu_) * c_->apply(v);
            out += (sigma_ * tau_) * a_->apply(v);
        }
        return out;
    }

private:
    OpPtr b_, c_, a_;
    double mu_, sigma_, tau_;
};

inline OpPtr composite(OpPtr b, OpPtr c, OpPtr a, double mu, double sigma, double tau) {
    return std::make_shared<CompositeOperator>(std::move(b), std::move(c), std::move(a), mu, sigma, tau);
}

// D v + shift * C v, used when absorbing the kernel's gamma parts.
class ShiftedOperator final : public LinearOperator {
public:
    ShiftedOperator(OpPtr base, OpPtr shift_op, double shift)
        : base_(std::move(base)), shift_op_(std::move(shift_op)), shift_(shift) {
        if (!base_ || !shift_op_) throw std::invalid_argument("ShiftedOperator: null operand");
        if (base_->dimension() != shift_op_->dimension())
            throw std::invalid_argument("ShiftedOperator: operand dimensions differ");
    }
    Eigen::Index dimension() const override { return base_->dimension(); }
    Vector apply(const Vector& v) const override {
        check_dimension(v, "ShiftedOperator::apply");
        return base_->apply(v) + shift_ * shift_op_->apply(v);
    }

private:
    OpPtr base_, shift_op_;
    double shift_;
};

// Weighted inner product (w * dot); grid functions use w = h1 h2, abstract
// vectors w = 1.
inline double inner(const Vector& v, const Vector& w, double weight = 1.0) {
    if (v.size() != w.size()) throw std::invalid_argument("inner: dimension mismatch");
    return weight * v.dot(w);
}

inline double norm(const Vector& v, double weight = 1.0) { return std::sqrt(weight) * v.norm(); }

// (Dv, v) with the SPD sanity check; negative beyond roundoff means a
// non-SPD operator was passed where an SPD one is required.
inline double quadratic_form(const LinearOperator& d, const Vector& v, double weight = 1.0) {
    d.check_dimension(v, "quadratic_form");
    const double q = weight * v.dot(d.apply(v));
    const double slack = 1e-12 * (1.0 + weight * v.squaredNorm());
    if (q < -slack) throw NegativeQuadraticForm("quadratic_form: (Dv,v) = " + std::to_string(q) + " < 0");
    return q < 0.0 ? 0.0 : q;
}

inline double norm_in(const LinearOperator& d, const Vector& v, double weight = 1.0) {
    return std::sqrt(quadratic_form(d, v, weight));
}

// Materializes D column-by-column; for small dimensions (tests, references).
inline Matrix to_dense(const LinearOperator& d) {
    const Eigen::Index n = d.dimension();
    Matrix m(n, n);
    Vector e = Vector::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        e[j] = 1.0;
        m.col(j) = d.apply(e);
        e[j] = 0.0;
    }
    return m;
}

}  // namespace expmem
