#include "expmem/linop.hpp"

#include <gtest/gtest.h>

#include <memory>
#include <random>

#include "expmem/cg.hpp"
#include "test_util.hpp"

using namespace expmem;

TEST(ScaledIdentityOp, ActsAsScalar) {
    ScaledIdentity op(3, 2.5);
    Vector v(3);
    v << 1, -2, 4;
    Vector out = op.apply(v);
    EXPECT_EQ(out, Vector(2.5 * v));
    Vector wrong(2);
    EXPECT_THROW(op.apply(wrong), std::invalid_argument);
}

TEST(GridLaplacianOp, SingleInteriorNode) {
    // N1 = N2 = 2: one interior node, h = 1/2, stencil value 4/h^2 = 16
    GridLaplacian g(2, 2);
    EXPECT_EQ(g.dimension(), 1);
    Vector v = Vector::Constant(1, 1.0);
    EXPECT_DOUBLE_EQ(g.apply(v)[0], 16.0);
}

TEST(GridLaplacianOp, NodeIndexingRoundTrip) {
    GridLaplacian g(4, 6);
    EXPECT_EQ(g.dimension(), 15);
    for (int j = 1; j <= 5; ++j)
        for (int i = 1; i <= 3; ++i) {
            const auto idx = g.node_index(i, j);
            const auto [x1, x2] = g.node_coords(idx);
            EXPECT_DOUBLE_EQ(x1, i * g.h1());
            EXPECT_DOUBLE_EQ(x2, j * g.h2());
        }
    EXPECT_THROW(g.node_index(0, 1), std::out_of_range);
    EXPECT_THROW(g.node_index(4, 1), std::out_of_range);
    EXPECT_THROW(g.node_coords(15), std::out_of_range);
    EXPECT_THROW(GridLaplacian(1, 4), std::invalid_argument);
}

TEST(GridLaplacianOp, EigenIdentityHoldsOnAllModes) {
    for (int n : {4, 8, 16}) {
        GridLaplacian g(n, n);
        for (int k = 1; k <= n - 1; ++k)
            for (int l = 1; l <= n - 1; ++l) {
                Vector v = g.eigenvector(k, l);
                Vector av = g.apply(v);
                const double lambda = g.eigenvalue(k, l);
                EXPECT_LE((av - lambda * v).norm(), 1e-10 * lambda * v.norm())
                    << "n=" << n << " k=" << k << " l=" << l;
            }
    }
}

TEST(GridLaplacianOp, RectangularGridEigenIdentity) {
    GridLaplacian g(8, 4);
    Vector v = g.eigenvector(3, 2);
    Vector av = g.apply(v);
    EXPECT_LE((av - g.eigenvalue(3, 2) * v).norm(), 1e-10 * av.norm());
    EXPECT_DOUBLE_EQ(g.cell_area(), (1.0 / 8) * (1.0 / 4));
}

TEST(SelfAdjointness, AllShippedOperators) {
    std::mt19937 rng(3u);
    GridLaplacian grid(6, 5);
    DenseOperator dense(test::random_spd(8, rng));
    Vector diag = Vector::LinSpaced(8, 1.0, 3.0);
    DiagonalOperator diagonal(diag);
    ScaledIdentity ident(8, 1.7);

    auto check = [&](const LinearOperator& op) {
        for (int trial = 0; trial < 100; ++trial) {
            Vector v = test::random_vector(static_cast<int>(op.dimension()), rng);
            Vector w = test::random_vector(static_cast<int>(op.dimension()), rng);
            const double lhs = op.apply(v).dot(w);
            const double rhs = v.dot(op.apply(w));
            EXPECT_LE(std::abs(lhs - rhs), 1e-12 * v.norm() * w.norm());
        }
    };
    check(grid);
    check(dense);
    check(diagonal);
    check(ident);
}

TEST(InnerProducts, WeightedNorms) {
    Vector v = Vector::Constant(1, 1.0);
    GridLaplacian g(2, 2);
    // single node with value 1: ||v||^2 = h1 h2 = 0.25
    EXPECT_DOUBLE_EQ(inner(v, v, g.cell_area()), 0.25);
    EXPECT_DOUBLE_EQ(norm(v, g.cell_area()), 0.5);

    Vector w(3);
    w << 3, 0, 4;
    EXPECT_DOUBLE_EQ(norm(w), 5.0);
    ScaledIdentity ci(3, 4.0);
    EXPECT_DOUBLE_EQ(norm_in(ci, w), 10.0);  // sqrt(c) ||w||
    ScaledIdentity id(3, 1.0);
    EXPECT_DOUBLE_EQ(norm_in(id, w), 5.0);
    Vector mismatched(2);
    EXPECT_THROW(inner(w, mismatched), std::invalid_argument);
}

TEST(InnerProducts, NegativeQuadraticFormDetected) {
    ScaledIdentity neg(2, -1.0);
    Vector v(2);
    v << 1, 1;
    EXPECT_THROW(quadratic_form(neg, v), NegativeQuadraticForm);
}

TEST(CompositeOp, ReducesToBAtZeroTau) {
    auto b = std::make_shared<ScaledIdentity>(3, 2.0);
    auto c = std::make_shared<ScaledIdentity>(3, 5.0);
    auto a = std::make_shared<ScaledIdentity>(3, 7.0);
    auto op = composite(b, c, a, 3.0, 1.0, 0.0);
    Vector v(3);
    v << 1, 2, 3;
    EXPECT_EQ(op->apply(v), Vector(2.0 * v));
}

TEST(CompositeOp, UnitExample) {
    // B = C = A = I, mu = 1, sigma = 0.5, tau = 2 -> 1 + 0.5*2*(1+1) = 3
    auto i = std::make_shared<ScaledIdentity>(4, 1.0);
    auto op = composite(i, i, i, 1.0, 0.5, 2.0);
    Vector v = Vector::Ones(4);
    EXPECT_EQ(op->apply(v), Vector(3.0 * v));
}

TEST(CompositeOp, MatchesLinearCombination) {
    std::mt19937 rng(11u);
    auto b = std::make_shared<DenseOperator>(test::random_spd(6, rng));
    auto c = std::make_shared<DenseOperator>(test::random_spd(6, rng));
    auto a = std::make_shared<DenseOperator>(test::random_spd(6, rng));
    const double mu = 0.8, sigma = 0.75, tau = 0.01;
    auto op = composite(b, c, a, mu, sigma, tau);
    for (int trial = 0; trial < 20; ++trial) {
        Vector v = test::random_vector(6, rng);
        Vector expect = b->apply(v) + (sigma * tau * mu) * c->apply(v) + (sigma * tau) * a->apply(v);
        EXPECT_LE((op->apply(v) - expect).norm(), 1e-14 * expect.norm());
    }
}

TEST(CompositeOp, RayleighPositivityOnGridProblem) {
    std::mt19937 rng(13u);
    auto lap = std::make_shared<GridLaplacian>(8, 8);
    auto b = std::make_shared<ScaledIdentity>(lap->dimension(), 1.0);
    auto c = std::make_shared<ScaledIdentity>(lap->dimension(), 2.0);
    auto op = composite(b, c, lap, 0.5, 0.5, 0.01);
    for (int trial = 0; trial < 50; ++trial) {
        Vector v = test::random_vector(static_cast<int>(lap->dimension()), rng);
        EXPECT_GE(op->apply(v).dot(v), v.squaredNorm());  // >= (Bv, v)
    }
}

TEST(CompositeOp, ValidatesOperands) {
    auto i3 = std::make_shared<ScaledIdentity>(3, 1.0);
    auto i4 = std::make_shared<ScaledIdentity>(4, 1.0);
    EXPECT_THROW(composite(i3, i4, i3, 1.0, 0.5, 0.1), std::invalid_argument);
    EXPECT_THROW(composite(i3, i3, i3, 1.0, 0.0, 0.1), std::invalid_argument);
    EXPECT_THROW(composite(i3, i3, i3, -1.0, 0.5, 0.1), std::invalid_argument);
}

TEST(SolveSpd, IdentityConvergesInOneIteration) {
    ScaledIdentity id(5, 1.0);
    Vector rhs(5);
    rhs << 1, 2, 3, 4, 5;
    SolveReport rep;
    Vector x = solve_spd(id, rhs, 1e-12, -1, &rep);
    EXPECT_EQ(x, rhs);
    EXPECT_EQ(rep.iterations, 1);
}

TEST(SolveSpd, ScaledIdentityExample) {
    ScaledIdentity op(2, 4.0);
    Vector rhs(2);
    rhs << 8, 8;
    Vector x = solve_spd(op, rhs);
    EXPECT_LE((x - Vector::Constant(2, 2.0)).norm(), 1e-10);
}

TEST(SolveSpd, GridLaplacianMatchesDenseSolve) {
    std::mt19937 rng(5u);
    GridLaplacian g(4, 4);
    Vector rhs = test::random_vector(9, rng);
    Vector x = solve_spd(g, rhs, 1e-12);
    Matrix dense = to_dense(g);
    Vector direct = dense.ldlt().solve(rhs);
    EXPECT_LE((x - direct).norm(), 1e-10 * direct.norm());
    EXPECT_LE((g.apply(x) - rhs).norm(), 1e-12 * rhs.norm());
}

TEST(SolveSpd, ZeroRhsGivesZero) {
    GridLaplacian g(4, 4);
    Vector x = solve_spd(g, Vector::Zero(9));
    EXPECT_EQ(x, Vector::Zero(9));
}

TEST(SolveSpd, NoConvergenceReportsResidual) {
    GridLaplacian g(8, 8);  // 49 unknowns cannot converge in 1 iteration
    Vector rhs = Vector::Ones(49);
    try {
        solve_spd(g, rhs, 1e-14, 1);
        FAIL() << "expected NoConvergence";
    } catch (const NoConvergence& e) {
        EXPECT_GT(e.residual, 0.0);
    }
}

TEST(SolveSpd, RejectsIndefiniteOperator) {
    Vector diag(3);
    diag << 1.0, -1.0, 2.0;
    DiagonalOperator op(diag);
    Vector rhs(3);
    rhs << 1, 1, 1;
    EXPECT_THROW(solve_spd(op, rhs), NegativeQuadraticForm);
}

TEST(ToDense, ReproducesOperator) {
    GridLaplacian g(3, 3);
    Matrix d = to_dense(g);
    EXPECT_LE((d - d.transpose()).norm(), 1e-14);
    std::mt19937 rng(17u);
    Vector v = test::random_vector(4, rng);
    EXPECT_LE((d * v - g.apply(v)).norm(), 1e-14 * v.norm());
}
