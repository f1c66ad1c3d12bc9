#include "admmpc/lyapunov.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace admmpc {

namespace {

// ||B w||^2_R with w = [wv; wx]: B maps to [-wv; psi wv - wx]
double b_image_sq_norm(const PredictionMatrices& pred, const SolverParams& params,
                       const Vec& wv, const Vec& wx) {
  const Vec bottom = pred.apply_psi(wv) - wx;
  return params.rho1 * wv.squaredNorm() + params.rho2 * bottom.squaredNorm();
}

// ||r(u, x̂)||^2_R at an iterate
double residual_sq_norm(const ProblemInstance& inst, const SolverParams& params,
                        const PredictionMatrices& pred, const IterateState& st) {
  double top = 0.0;
  for (int k = 0; k < inst.n; ++k) {
    const double rk = inst.b(k, st.u[k]) - st.v[k];
    top += rk * rk;
  }
  const Vec bottom = pred.free_response(inst.x0, st.v) - st.x;
  return params.rho1 * top + params.rho2 * bottom.squaredNorm();
}

}  // namespace

void ReferencePoint::validate(const ProblemInstance& inst,
                              const PredictionMatrices& pred) const {
  const int n = inst.n;
  if (u_ref.size() != n || v_ref.size() != n || x_ref.size() != n ||
      y_ref.size() != n || z_ref.size() != n)
    throw std::invalid_argument("reference point: length mismatch");
  double worst = 0.0;
  for (int k = 0; k < n; ++k)
    worst = std::max(worst, std::abs(inst.b(k, u_ref[k]) - v_ref[k]));
  const Vec bottom = pred.free_response(inst.x0, v_ref) - x_ref;
  worst = std::max(worst, bottom.lpNorm<Eigen::Infinity>());
  if (worst > 1e-8)
    throw std::invalid_argument("reference point violates the equality constraints");
}

ReferencePoint reference_from_oracle(const ProblemInstance& inst,
                                     const PredictionMatrices& pred,
                                     const OracleResult& oracle) {
  if (!oracle.feasible)
    throw std::invalid_argument("cannot build a reference from an infeasible oracle result");
  ReferencePoint ref;
  ref.u_ref = oracle.u;
  ref.v_ref = inst.b_of(oracle.u);
  ref.x_ref = pred.free_response(inst.x0, ref.v_ref);
  ref.y_ref = Vec::Zero(inst.n);
  ref.z_ref = Vec::Zero(inst.n);
  ref.validate(inst, pred);
  return ref;
}

LyapunovParts lyapunov_value(const ProblemInstance& inst, const SolverParams& params,
                             const PredictionMatrices& pred, const IterateState& state,
                             const ReferencePoint& ref) {
  const int n = inst.n;
  if (state.u.size() != n) throw std::invalid_argument("lyapunov_value: length mismatch");
  LyapunovParts parts;
  // iterate duals are stored scaled; the stacked multipliers are R [y; z]
  for (int k = 0; k < n; ++k) {
    const double dy = params.rho1 * state.y[k] - ref.y_ref[k];
    const double dz = params.rho2 * state.z[k] - ref.z_ref[k];
    parts.dual_err += dy * dy / params.rho1 + dz * dz / params.rho2;
  }
  parts.state_err = b_image_sq_norm(pred, params, state.v - ref.v_ref, state.x - ref.x_ref);
  parts.residual = residual_sq_norm(inst, params, pred, state);
  return parts;
}

LyapunovTrace build_lyapunov_trace(const ProblemInstance& inst, const SolverParams& params,
                                   const PredictionMatrices& pred,
                                   const std::vector<IterateState>& iterates,
                                   const ReferencePoint& ref) {
  if (iterates.empty()) throw std::invalid_argument("empty iterate sequence");
  LyapunovTrace trace;
  trace.v_values.reserve(iterates.size());
  for (const IterateState& st : iterates)
    trace.v_values.push_back(lyapunov_value(inst, params, pred, st, ref).total());
  double running = 0.0;
  for (std::size_t j = 0; j + 1 < iterates.size(); ++j) {
    const double r_sq = residual_sq_norm(inst, params, pred, iterates[j]);
    const double step_sq = b_image_sq_norm(pred, params,
                                           iterates[j + 1].v - iterates[j].v,
                                           iterates[j + 1].x - iterates[j].x);
    trace.decrease_slack.push_back(trace.v_values[j] - trace.v_values[j + 1] -
                                   (r_sq + step_sq));
    running += r_sq + step_sq;
    trace.cumulative_sum.push_back(running);
  }
  return trace;
}

std::vector<int> check_descent(const LyapunovTrace& trace) {
  std::vector<int> violations;
  if (trace.v_values.empty()) return violations;
  const double tol = 1e-8 * std::max(1.0, trace.v_values.front());
  for (std::size_t j = 0; j < trace.decrease_slack.size(); ++j)
    if (trace.decrease_slack[j] < -tol) violations.push_back(static_cast<int>(j));
  return violations;
}

TelescopingResult check_telescoping(const LyapunovTrace& trace) {
  TelescopingResult res;
  if (trace.v_values.empty()) return res;
  const double v0 = trace.v_values.front();
  const double total = trace.cumulative_sum.empty() ? 0.0 : trace.cumulative_sum.back();
  res.slack = v0 - total;
  res.holds = total <= v0 + 1e-8 * std::max(1.0, v0);
  return res;
}

bool s_c_membership(const ProblemInstance& inst, const SolverParams& params,
                    const PredictionMatrices& pred, const IterateState& state,
                    const ReferencePoint& ref, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("level must be positive");
  return lyapunov_value(inst, params, pred, state, ref).total() <= c;
}

void write_lyapunov_csv(const LyapunovTrace& trace, std::ostream& out) {
  out << "iter,V,decrease_slack,cumsum\n";
  char buf[128];
  for (std::size_t j = 0; j < trace.v_values.size(); ++j) {
    const bool has_step = j < trace.decrease_slack.size();
    const int len = std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", j,
                                  trace.v_values[j],
                                  has_step ? trace.decrease_slack[j] : 0.0,
                                  has_step ? trace.cumulative_sum[j]
                                           : (trace.cumulative_sum.empty()
                                                  ? 0.0
                                                  : trace.cumulative_sum.back()));
    out.write(buf, len);
  }
}

}  // namespace admmpc
