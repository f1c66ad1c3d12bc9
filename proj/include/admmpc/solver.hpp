#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "admmpc/problem.hpp"

namespace admmpc {

enum class TraceLevel { None, Residuals, FullIterates };
enum class Termination { Converged, MaxIters };

struct SolverParams {
  double rho1 = 1.0;          // penalty on b(u) - v = 0
  double rho2 = 0.2;          // penalty on phi*x0 + psi*v - x = 0
  double eps_primal = 1e-3;
  double eps_dual = 1e-3;
  int max_iters = 10000;
  TraceLevel trace_level = TraceLevel::None;

  void validate() const;      // throws std::invalid_argument
};

/// One solver iterate. u, v, x, y, z all have the horizon length; y, z are the
/// scaled duals of the two equality constraint blocks; j counts complete
/// iterations (0 = initialization).
struct IterateState {
  Vec u, v, x, y, z;
  int j = 0;
};

struct SolveReport {
  IterateState state;
  bool converged = false;
  int iterations = 0;
  std::vector<double> r_norm_history;
  std::vector<double> s_norm_history;
  std::vector<double> objective_history;   // filled at TraceLevel >= Residuals
  double objective = 0.0;
  Termination termination = Termination::MaxIters;
  double wall_time_s = 0.0;
  std::vector<IterateState> iterate_trace;  // init + every iterate, FullIterates only
};

/// Inequality-inactive initialization: u0 = clamped per-stage argmin of g
/// (affine stages pick the bound that minimizes g, ties -> lower bound),
/// v0 = b(u0), x0-trajectory = clamped free response, duals zero.
IterateState initialize(const ProblemInstance& inst, const PredictionMatrices& pred);

/// Per-stage global minimizer over the input box of
///   g_k(u) + rho1/2 (b_k(u) - w_k)^2,  w = v - y.
/// Candidates are the real stationary points (a cubic) plus both endpoints;
/// ties resolve to the smallest input.
Vec u_update(const ProblemInstance& inst, const SolverParams& params,
             const Vec& v, const Vec& y);

/// Explicit substitute update: solves
///   (rho1 I + rho2 psi'psi) v = rho1 (b(u_new) + y) + rho2 psi'(x - z - phi x0).
/// Builds the factorization cache on first use; throws std::logic_error if the
/// cache was prepared for different penalties.
Vec v_update(const ProblemInstance& inst, const SolverParams& params,
             PredictionMatrices& pred, const Vec& u_new, const Vec& y,
             const Vec& x, const Vec& z);

/// Per-stage clamped minimizer of f_{k+1}(x) + rho2/2 (c_{k+1} - x)^2 with
/// c = phi x0 + psi v_new + z.
Vec x_update(const ProblemInstance& inst, const SolverParams& params,
             const PredictionMatrices& pred, const Vec& v_new, const Vec& z);

/// y += b(u_new) - v_new;  z += phi x0 + psi v_new - x_new.
std::pair<Vec, Vec> dual_update(const ProblemInstance& inst,
                                const PredictionMatrices& pred,
                                const IterateState& state, const Vec& u_new,
                                const Vec& v_new, const Vec& x_new);

/// r stacks [b(u) - v; phi x0 + psi v - x] of the new iterate (length 2n).
/// s_k = rho1 b_k'(u_k^{j+1}) (v_k^{j+1} - v_k^j), the structured form of the
/// stacked dual residual (length n).
struct ResidualPair {
  Vec r;
  Vec s;
};
ResidualPair residuals(const ProblemInstance& inst, const SolverParams& params,
                       const PredictionMatrices& pred, const IterateState& prev,
                       const IterateState& next);

/// Full iteration: initialize, then repeat {u, v, x, dual updates, residuals}
/// until ||r||_2 <= eps_primal and ||s||_2 <= eps_dual, or max_iters. Residuals
/// are evaluated once per complete iteration, so a fixed-point initialization
/// terminates at iteration 1.
SolveReport solve(const ProblemInstance& inst, const SolverParams& params);

/// First-order condition residuals at an iterate, with multipliers unscaled as
/// (rho1 y, rho2 z). Bound-active stages are checked through the normal-cone
/// sign conditions of the box.
struct KktReport {
  double eq_residual = 0.0;      // ||b(u) - v; phi x0 + psi v - x||_inf
  double u_stationarity = 0.0;   // g' + b' * (rho1 y), projected
  double v_stationarity = 0.0;   // ||-rho1 y + rho2 psi' z||_inf
  double x_stationarity = 0.0;   // f' - rho2 z, projected
  double max_violation() const;
};
KktReport kkt_residual(const ProblemInstance& inst, const SolverParams& params,
                       const PredictionMatrices& pred, const IterateState& state);

/// Residual trace rows `iter,r_norm,s_norm,objective` in C-locale decimals.
void write_trace_csv(const SolveReport& report, std::ostream& out);

}  // namespace admmpc
