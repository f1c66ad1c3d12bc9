#include "admmpc/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "admmpc/cubic.hpp"

namespace admmpc {

namespace {

double clamp(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

void format_double(std::ostream& out, double v);

// b(u) - v and phi*x0 + psi*v - x, shared by dual_update and residuals so the
// dual increments equal the residual blocks bit for bit.
std::pair<Vec, Vec> constraint_residual(const ProblemInstance& inst,
                                        const PredictionMatrices& pred,
                                        const Vec& u, const Vec& v, const Vec& x) {
  Vec top(inst.n);
  for (int k = 0; k < inst.n; ++k) top[k] = inst.b(k, u[k]) - v[k];
  Vec bottom = pred.free_response(inst.x0, v) - x;
  return {std::move(top), std::move(bottom)};
}

}  // namespace

void SolverParams::validate() const {
  if (!(rho1 > 0.0) || !(rho2 > 0.0))
    throw std::invalid_argument("penalties must be positive");
  if (!(eps_primal > 0.0) || !(eps_dual > 0.0))
    throw std::invalid_argument("stopping thresholds must be positive");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
}

IterateState initialize(const ProblemInstance& inst, const PredictionMatrices& pred) {
  const int n = inst.n;
  IterateState st;
  st.u.resize(n);
  for (int k = 0; k < n; ++k) {
    double u;
    if (inst.alpha2[k] > 0.0) {
      u = clamp(-inst.alpha1[k] / (2.0 * inst.alpha2[k]), inst.u_min[k], inst.u_max[k]);
    } else if (inst.alpha1[k] > 0.0) {
      u = inst.u_min[k];
    } else if (inst.alpha1[k] < 0.0) {
      u = inst.u_max[k];
    } else {
      u = inst.u_min[k];   // constant g: tie resolves to the lower bound
    }
    st.u[k] = u;
  }
  st.v = inst.b_of(st.u);
  st.x = pred.free_response(inst.x0, st.v);
  for (int k = 0; k < n; ++k) st.x[k] = clamp(st.x[k], inst.x_min[k], inst.x_max[k]);
  st.y = Vec::Zero(n);
  st.z = Vec::Zero(n);
  st.j = 0;
  return st;
}

Vec u_update(const ProblemInstance& inst, const SolverParams& params,
             const Vec& v, const Vec& y) {
  const int n = inst.n;
  if (v.size() != n || y.size() != n)
    throw std::invalid_argument("u_update: length mismatch");
  const double rho1 = params.rho1;
  Vec out(n);
  for (int k = 0; k < n; ++k) {
    const double w = v[k] - y[k];
    const double lo = inst.u_min[k];
    const double hi = inst.u_max[k];
    // b as a polynomial in u: b(u) = b2 u^2 + b1 u + b0
    const double dk = inst.d[k];
    const double b2 = -inst.beta2[k];
    const double b1 = 2.0 * inst.beta2[k] * dk + inst.beta1[k];
    const double b0 = -inst.beta2[k] * dk * dk - inst.beta1[k] * dk - inst.beta0[k];
    const double e = b0 - w;
    // J'(u) = g'(u) + rho1 (b(u) - w) b'(u), a cubic
    const double c3 = 2.0 * rho1 * b2 * b2;
    const double c2 = 3.0 * rho1 * b2 * b1;
    const double c1 = 2.0 * inst.alpha2[k] + rho1 * (b1 * b1 + 2.0 * b2 * e);
    const double c0 = inst.alpha1[k] + rho1 * b1 * e;

    auto J = [&](double u) {
      const double q = (b2 * u + b1) * u + e;
      return (inst.alpha2[k] * u + inst.alpha1[k]) * u + inst.alpha0[k] +
             0.5 * rho1 * q * q;
    };

    // candidates: interior stationary points plus both endpoints, ascending so
    // ties resolve to the smallest input
    double cand[5];
    int m = 0;
    cand[m++] = lo;
    const CubicRoots roots = cubic_real_roots(c3, c2, c1, c0);
    for (int i = 0; i < roots.count; ++i)
      if (roots.r[i] > lo && roots.r[i] < hi) cand[m++] = roots.r[i];
    cand[m++] = hi;
    std::sort(cand, cand + m);

    double best_u = cand[0];
    double best_J = J(cand[0]);
    for (int i = 1; i < m; ++i) {
      const double Ji = J(cand[i]);
      if (Ji < best_J) {
        best_J = Ji;
        best_u = cand[i];
      }
    }
    out[k] = best_u;
  }
  return out;
}

Vec v_update(const ProblemInstance& inst, const SolverParams& params,
             PredictionMatrices& pred, const Vec& u_new, const Vec& y,
             const Vec& x, const Vec& z) {
  const int n = inst.n;
  if (u_new.size() != n || y.size() != n || x.size() != n || z.size() != n)
    throw std::invalid_argument("v_update: length mismatch");
  if (!pred.v_solve_ready(params.rho1, params.rho2))
    pred.prepare_v_solve(params.rho1, params.rho2);
  Vec t(n);
  for (int k = 0; k < n; ++k) t[k] = x[k] - z[k] - pred.phi()[k] * inst.x0;
  Vec rhs = params.rho1 * (inst.b_of(u_new) + y) + params.rho2 * pred.apply_psi_transpose(t);
  return pred.v_solve(rhs, params.rho1, params.rho2);
}

Vec x_update(const ProblemInstance& inst, const SolverParams& params,
             const PredictionMatrices& pred, const Vec& v_new, const Vec& z) {
  const int n = inst.n;
  if (v_new.size() != n || z.size() != n)
    throw std::invalid_argument("x_update: length mismatch");
  Vec c = pred.free_response(inst.x0, v_new) + z;
  Vec out(n);
  for (int k = 0; k < n; ++k) {
    double x;
    if (inst.gamma2[k] == 0.0 && inst.gamma1[k] == 0.0) {
      x = c[k];   // pure projection
    } else {
      x = (params.rho2 * c[k] - inst.gamma1[k]) / (2.0 * inst.gamma2[k] + params.rho2);
    }
    out[k] = clamp(x, inst.x_min[k], inst.x_max[k]);
  }
  return out;
}

std::pair<Vec, Vec> dual_update(const ProblemInstance& inst,
                                const PredictionMatrices& pred,
                                const IterateState& state, const Vec& u_new,
                                const Vec& v_new, const Vec& x_new) {
  auto [top, bottom] = constraint_residual(inst, pred, u_new, v_new, x_new);
  return {state.y + top, state.z + bottom};
}

ResidualPair residuals(const ProblemInstance& inst, const SolverParams& params,
                       const PredictionMatrices& pred, const IterateState& prev,
                       const IterateState& next) {
  const int n = inst.n;
  if (prev.v.size() != n || next.u.size() != n)
    throw std::invalid_argument("residuals: length mismatch");
  auto [top, bottom] = constraint_residual(inst, pred, next.u, next.v, next.x);
  ResidualPair out;
  out.r.resize(2 * n);
  out.r.head(n) = top;
  out.r.tail(n) = bottom;
  out.s.resize(n);
  for (int k = 0; k < n; ++k)
    out.s[k] = params.rho1 * inst.b_prime(k, next.u[k]) * (next.v[k] - prev.v[k]);
  return out;
}

SolveReport solve(const ProblemInstance& inst, const SolverParams& params) {
  params.validate();
  inst.validate();
  const auto t_start = std::chrono::steady_clock::now();

  PredictionMatrices pred = build_prediction_matrices(inst.a);
  pred.prepare_v_solve(params.rho1, params.rho2);

  SolveReport report;
  IterateState state = initialize(inst, pred);
  const bool trace_obj = params.trace_level >= TraceLevel::Residuals;
  const bool trace_full = params.trace_level == TraceLevel::FullIterates;
  if (trace_full) report.iterate_trace.push_back(state);

  for (int iter = 1; iter <= params.max_iters; ++iter) {
    IterateState next;
    next.u = u_update(inst, params, state.v, state.y);
    next.v = v_update(inst, params, pred, next.u, state.y, state.x, state.z);
    next.x = x_update(inst, params, pred, next.v, state.z);
    std::tie(next.y, next.z) = dual_update(inst, pred, state, next.u, next.v, next.x);
    next.j = iter;

    const ResidualPair res = residuals(inst, params, pred, state, next);
    const double r_norm = res.r.norm();
    const double s_norm = res.s.norm();
    report.r_norm_history.push_back(r_norm);
    report.s_norm_history.push_back(s_norm);
    if (trace_obj) report.objective_history.push_back(eval_objective(inst, next.u, next.x));

    state = std::move(next);
    if (trace_full) report.iterate_trace.push_back(state);

    if (r_norm <= params.eps_primal && s_norm <= params.eps_dual) {
      report.converged = true;
      report.termination = Termination::Converged;
      break;
    }
  }

  report.iterations = state.j;
  report.objective = eval_objective(inst, state.u, state.x);
  report.state = std::move(state);
  if (!report.converged) report.termination = Termination::MaxIters;
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return report;
}

double KktReport::max_violation() const {
  return std::max(std::max(eq_residual, u_stationarity),
                  std::max(v_stationarity, x_stationarity));
}

KktReport kkt_residual(const ProblemInstance& inst, const SolverParams& params,
                       const PredictionMatrices& pred, const IterateState& state) {
  const int n = inst.n;
  if (state.u.size() != n) throw std::invalid_argument("kkt_residual: length mismatch");
  KktReport rep;

  auto [top, bottom] = constraint_residual(inst, pred, state.u, state.v, state.x);
  rep.eq_residual = std::max(top.lpNorm<Eigen::Infinity>(), bottom.lpNorm<Eigen::Infinity>());

  // projected stationarity of a scalar derivative against a box
  auto box_violation = [](double grad, double val, double lo, double hi) {
    const bool at_lo = val <= lo;
    const bool at_hi = val >= hi;
    if (at_lo && at_hi) return 0.0;           // degenerate box
    if (at_lo) return std::max(0.0, -grad);   // needs grad >= 0
    if (at_hi) return std::max(0.0, grad);    // needs grad <= 0
    return std::abs(grad);
  };

  for (int k = 0; k < n; ++k) {
    const double grad =
        inst.g_prime(k, state.u[k]) +
        inst.b_prime(k, state.u[k]) * (params.rho1 * state.y[k]);
    rep.u_stationarity = std::max(
        rep.u_stationarity, box_violation(grad, state.u[k], inst.u_min[k], inst.u_max[k]));
  }

  const Vec psi_t_z = pred.apply_psi_transpose(state.z);
  for (int k = 0; k < n; ++k) {
    const double vb = -params.rho1 * state.y[k] + params.rho2 * psi_t_z[k];
    rep.v_stationarity = std::max(rep.v_stationarity, std::abs(vb));
  }

  for (int k = 0; k < n; ++k) {
    const double grad = inst.f_prime(k, state.x[k]) - params.rho2 * state.z[k];
    rep.x_stationarity = std::max(
        rep.x_stationarity, box_violation(grad, state.x[k], inst.x_min[k], inst.x_max[k]));
  }
  return rep;
}

namespace {

void format_double(std::ostream& out, double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof(buf), "%.17g", v);
  out.write(buf, len);
}

}  // namespace

void write_trace_csv(const SolveReport& report, std::ostream& out) {
  out << "iter,r_norm,s_norm,objective\n";
  for (std::size_t i = 0; i < report.r_norm_history.size(); ++i) {
    out << (i + 1) << ',';
    format_double(out, report.r_norm_history[i]);
    out << ',';
    format_double(out, report.s_norm_history[i]);
    out << ',';
    if (i < report.objective_history.size())
      format_double(out, report.objective_history[i]);
    else
      format_double(out, report.objective);
    out << '\n';
  }
}

}  // namespace admmpc
