#pragma once

#include "admmpc/problem.hpp"

namespace admmpc {

struct OracleResult {
  enum class Method { BruteForce, DynamicProgramming };

  Vec u, x;
  double objective = 0.0;
  int grid_resolution = 0;     // points per input axis
  Method method = Method::BruteForce;
  bool feasible = true;        // false: infeasible at this resolution
};

/// Exhaustive input-grid enumeration with stage-wise infeasibility pruning.
/// Requires n <= 4 and grid_points >= 3 (cost grows as grid_points^n).
OracleResult brute_force_solve(const ProblemInstance& inst, int grid_points);

/// Backward value iteration with linear interpolation of the cost-to-go.
/// State grids are uniform with x_grid points per stage over the exactly
/// computed feasible interval of the state box (backward interval recursion),
/// so infeasibility is detected exactly rather than at grid resolution. The
/// per-state input minimization scans the u_grid and locally refines around
/// the best cell. The forward pass extracts (u, x) and, for stages with an
/// affine loss model under identity dynamics, removes residual grid
/// quantization with a monotone feasible descent sweep (exact single-stage
/// and paired-stage moves).
OracleResult dp_solve(const ProblemInstance& inst, int u_grid = 201, int x_grid = 401);

/// True iff every input and state constraint is inactive by margin tol at the
/// oracle point. With zero state cost this is the case where the equality
/// multipliers of a global optimum vanish.
bool certify_multiplier_free_optimum(const ProblemInstance& inst,
                                     const OracleResult& result, double tol);

}  // namespace admmpc
