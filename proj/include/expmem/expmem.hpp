#pragma once

// Solver library for evolution equations with time-derivative memory:
// exponential-sum kernel compression, rational approximation of the kernel's
// Laplace transform, local reformulation, weighted two-level schemes, and
// reference oracles.

#include "expmem/aaa.hpp"
#include "expmem/cg.hpp"
#include "expmem/coeff_io.hpp"
#include "expmem/csv.hpp"
#include "expmem/errors.hpp"
#include "expmem/kernel.hpp"
#include "expmem/linop.hpp"
#include "expmem/model_problem.hpp"
#include "expmem/ratapprox.hpp"
#include "expmem/reference.hpp"
#include "expmem/solver.hpp"
