#pragma once

#include <cmath>
#include <memory>

#include "expmem/kernel.hpp"
#include "expmem/linop.hpp"
#include "expmem/solver.hpp"

namespace expmem {

// Initial profile u0(x) = x1 (1 - x1^6) x2 (1 - x2^6) sampled at the interior
// nodes of the grid.
inline Vector polynomial_initial_profile(const GridLaplacian& grid) {
    Vector u0(grid.dimension());
    for (Eigen::Index idx = 0; idx < u0.size(); ++idx) {
        const auto [x1, x2] = grid.node_coords(idx);
        u0[idx] = x1 * (1.0 - std::pow(x1, 6)) * x2 * (1.0 - std::pow(x2, 6));
    }
    return u0;
}

// Relaxation problem on the unit square: B = I, C = c I, A = grid Laplacian,
// f == 0, with the grid cell area as the inner-product weight.
inline ProblemSpec make_relaxation_spec(std::shared_ptr<const GridLaplacian> lap, double c, ExpSumKernel kernel) {
    if (!lap) throw std::invalid_argument("make_relaxation_spec: null grid");
    if (!(c >= 0.0)) throw std::invalid_argument("make_relaxation_spec: memory coupling c must be >= 0");
    ProblemSpec spec;
    spec.B = std::make_shared<ScaledIdentity>(lap->dimension(), 1.0);
    spec.C = std::make_shared<ScaledIdentity>(lap->dimension(), c);
    spec.A = lap;
    spec.kernel = std::move(kernel);
    spec.u0 = polynomial_initial_profile(*lap);
    spec.space_weight = lap->cell_area();
    return spec;
}

// Interior node closest to (x1, x2).
inline Eigen::Index nearest_node(const GridLaplacian& grid, double x1, double x2) {
    int i = static_cast<int>(std::lround(x1 / grid.h1()));
    int j = static_cast<int>(std::lround(x2 / grid.h2()));
    i = std::max(1, std::min(grid.n1() - 1, i));
    j = std::max(1, std::min(grid.n2() - 1, j));
    return grid.node_index(i, j);
}

}  // namespace expmem
