#include "admmpc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace admmpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFeasTol = 1e-12;

struct Interval {
  double lo, hi;
  bool empty() const { return lo > hi; }
};

// exact range of b_k over the input box (extremes at the endpoints or the
// quadratic's vertex)
Interval b_range(const ProblemInstance& inst, int k) {
  const double lo = inst.u_min[k];
  const double hi = inst.u_max[k];
  double bmin = std::min(inst.b(k, lo), inst.b(k, hi));
  double bmax = std::max(inst.b(k, lo), inst.b(k, hi));
  if (inst.beta2[k] != 0.0) {
    const double uv = inst.d[k] + inst.beta1[k] / (2.0 * inst.beta2[k]);
    if (uv > lo && uv < hi) {
      const double bv = inst.b(k, uv);
      bmin = std::min(bmin, bv);
      bmax = std::max(bmax, bv);
    }
  }
  return {bmin, bmax};
}

// Backward recursion of the per-stage feasible interval for the trajectory
// value x_{i+1} (array index i): the state box intersected with the set from
// which some input keeps all later stages feasible. Exact for scalar stages.
bool feasible_tubes(const ProblemInstance& inst, std::vector<Interval>& tube) {
  const int n = inst.n;
  tube.assign(n, Interval{0.0, 0.0});
  tube[n - 1] = {inst.x_min[n - 1], inst.x_max[n - 1]};
  for (int i = n - 2; i >= 0; --i) {
    const Interval br = b_range(inst, i + 1);
    const double a = inst.a[i + 1];
    Interval future;
    if (a > 0.0) {
      future = {(tube[i + 1].lo - br.hi) / a, (tube[i + 1].hi - br.lo) / a};
    } else if (a < 0.0) {
      future = {(tube[i + 1].hi - br.lo) / a, (tube[i + 1].lo - br.hi) / a};
    } else {
      // successor no longer depends on this state
      const bool reachable =
          !(br.hi < tube[i + 1].lo - kFeasTol || br.lo > tube[i + 1].hi + kFeasTol);
      if (!reachable) return false;
      future = {-kInf, kInf};
    }
    tube[i] = {std::max(inst.x_min[i], future.lo), std::min(inst.x_max[i], future.hi)};
    if (tube[i].empty()) return false;
  }
  // the fixed initial state must reach tube[0]
  const Interval br0 = b_range(inst, 0);
  const double base = inst.a[0] * inst.x0;
  return !(base + br0.hi < tube[0].lo - kFeasTol || base + br0.lo > tube[0].hi + kFeasTol);
}

OracleResult infeasible_result(OracleResult::Method method, int resolution) {
  OracleResult res;
  res.method = method;
  res.grid_resolution = resolution;
  res.feasible = false;
  res.objective = kInf;
  return res;
}

}  // namespace

OracleResult brute_force_solve(const ProblemInstance& inst, int grid_points) {
  inst.validate();
  if (inst.n > 4) throw std::invalid_argument("brute_force_solve: horizon must be <= 4");
  if (grid_points < 3) throw std::invalid_argument("brute_force_solve: need >= 3 grid points");
  const int n = inst.n;

  std::vector<Vec> grids(n);
  for (int k = 0; k < n; ++k) {
    grids[k].resize(grid_points);
    for (int i = 0; i < grid_points; ++i) {
      const double t = static_cast<double>(i) / (grid_points - 1);
      grids[k][i] = inst.u_min[k] + t * (inst.u_max[k] - inst.u_min[k]);
    }
  }

  Vec u(n), x(n), best_u(n), best_x(n);
  double best = kInf;

  // depth-first over the input grid, pruning state-infeasible prefixes
  auto recurse = [&](auto&& self, int k, double xk, double cost) -> void {
    if (k == n) {
      if (cost < best) {
        best = cost;
        best_u = u;
        best_x = x;
      }
      return;
    }
    for (int i = 0; i < grid_points; ++i) {
      const double uk = grids[k][i];
      const double xn = inst.a[k] * xk + inst.b(k, uk);
      if (xn < inst.x_min[k] - kFeasTol || xn > inst.x_max[k] + kFeasTol) continue;
      u[k] = uk;
      x[k] = xn;
      self(self, k + 1, xn, cost + inst.g(k, uk) + inst.f(k, xn));
    }
  };
  recurse(recurse, 0, inst.x0, 0.0);

  if (!(best < kInf))
    return infeasible_result(OracleResult::Method::BruteForce, grid_points);
  OracleResult res;
  res.u = best_u;
  res.x = best_x;
  res.objective = best;
  res.grid_resolution = grid_points;
  res.method = OracleResult::Method::BruteForce;
  return res;
}

namespace {

class DpSolver {
 public:
  DpSolver(const ProblemInstance& inst, int u_grid, int x_grid)
      : inst_(inst), u_grid_(u_grid), x_grid_(x_grid) {}

  OracleResult run() {
    if (!feasible_tubes(inst_, tube_))
      return infeasible_result(OracleResult::Method::DynamicProgramming, u_grid_);
    const int n = inst_.n;
    xg_.assign(n, Vec());
    for (int i = 0; i < n; ++i) {
      xg_[i].resize(x_grid_);
      const double lo = tube_[i].lo, hi = tube_[i].hi;
      for (int p = 0; p < x_grid_; ++p)
        xg_[i][p] = lo + (hi - lo) * static_cast<double>(p) / (x_grid_ - 1);
    }
    ug_.assign(n, Vec());
    for (int k = 0; k < n; ++k) {
      ug_[k].resize(u_grid_);
      for (int p = 0; p < u_grid_; ++p)
        ug_[k][p] = inst_.u_min[k] +
                    (inst_.u_max[k] - inst_.u_min[k]) * static_cast<double>(p) / (u_grid_ - 1);
    }

    // cost_to_go_[i]: stages i+1..n-1 as a function of x_{i+1}, on xg_[i]
    cost_to_go_.assign(n, Vec());
    cost_to_go_[n - 1] = Vec::Zero(x_grid_);
    for (int k = n - 1; k >= 1; --k) {
      Vec table(x_grid_);
      for (int p = 0; p < x_grid_; ++p) table[p] = min_over_u(k, xg_[k - 1][p]).second;
      cost_to_go_[k - 1] = table;
    }

    OracleResult res;
    res.method = OracleResult::Method::DynamicProgramming;
    res.grid_resolution = u_grid_;
    res.u.resize(n);
    res.x.resize(n);
    double xc = inst_.x0;
    for (int k = 0; k < n; ++k) {
      auto [uk, ck] = min_over_u(k, xc);
      if (!(ck < kInf))
        return infeasible_result(OracleResult::Method::DynamicProgramming, u_grid_);
      res.u[k] = uk;
      xc = inst_.a[k] * xc + inst_.b(k, uk);
      res.x[k] = xc;
    }
    polish(res);
    res.objective = eval_objective(inst_, res.u, res.x);
    return res;
  }

 private:
  // stage cost + interpolated cost-to-go for one (state, input) pair
  double stage_eval(int k, double xk, double u) const {
    const double xn = inst_.a[k] * xk + inst_.b(k, u);
    if (xn < tube_[k].lo - kFeasTol || xn > tube_[k].hi + kFeasTol) return kInf;
    double tail = 0.0;
    if (k < inst_.n - 1) {
      const Vec& grid = xg_[k];
      const Vec& table = cost_to_go_[k];
      const double lo = grid[0], hi = grid[x_grid_ - 1];
      if (hi > lo) {
        const double q = std::min(hi, std::max(lo, xn));
        const double pos = (q - lo) / (hi - lo) * (x_grid_ - 1);
        int idx = std::min(x_grid_ - 2, static_cast<int>(pos));
        const double w = std::min(1.0, std::max(0.0, (q - grid[idx]) / (grid[idx + 1] - grid[idx])));
        // conservative near table entries that are infeasible at resolution
        if (w == 0.0) tail = table[idx];
        else if (w == 1.0) tail = table[idx + 1];
        else if (table[idx] == kInf || table[idx + 1] == kInf) tail = kInf;
        else tail = (1.0 - w) * table[idx] + w * table[idx + 1];
      } else {
        tail = table[0];
      }
    }
    if (tail == kInf) return kInf;
    return inst_.g(k, u) + inst_.f(k, xn) + tail;
  }

  // coarse scan of the input grid, then two local refinement passes
  std::pair<double, double> min_over_u(int k, double xk) const {
    double best_u = ug_[k][0];
    double best_c = stage_eval(k, xk, best_u);
    for (int p = 1; p < u_grid_; ++p) {
      const double c = stage_eval(k, xk, ug_[k][p]);
      if (c < best_c) {
        best_c = c;
        best_u = ug_[k][p];
      }
    }
    if (!(best_c < kInf)) {
      // the exactly-feasible input window can be narrower than the coarse grid
      // near tube endpoints; rescan finer before reporting infeasible
      const int fine = 20 * (u_grid_ - 1) + 1;
      for (int p = 0; p < fine; ++p) {
        const double u = inst_.u_min[k] + (inst_.u_max[k] - inst_.u_min[k]) *
                                              static_cast<double>(p) / (fine - 1);
        const double c = stage_eval(k, xk, u);
        if (c < best_c) {
          best_c = c;
          best_u = u;
        }
      }
      if (!(best_c < kInf)) return {best_u, kInf};
    }
    double du = (u_grid_ > 1) ? ug_[k][1] - ug_[k][0] : 0.0;
    for (int level = 0; level < 2 && du > 0.0; ++level) {
      const double lo = std::max(best_u - du, inst_.u_min[k]);
      const double hi = std::min(best_u + du, inst_.u_max[k]);
      constexpr int kPts = 21;
      for (int p = 0; p < kPts; ++p) {
        const double u = lo + (hi - lo) * static_cast<double>(p) / (kPts - 1);
        const double c = stage_eval(k, xk, u);
        if (c < best_c) {
          best_c = c;
          best_u = u;
        }
      }
      du = (hi - lo) / (kPts - 1);
    }
    return {best_u, best_c};
  }

  // Monotone feasible descent on the extracted trajectory, in charge-increment
  // coordinates: exact single-stage and paired-stage quadratic moves for
  // affine-loss stages (beta2 == 0). Identity dynamics only; every accepted
  // move strictly improves the true objective and keeps the state box.
  void polish(OracleResult& res) const {
    const int n = inst_.n;
    if (!inst_.identity_dynamics()) return;
    std::vector<int> ok(n, 0);
    for (int k = 0; k < n; ++k)
      ok[k] = (inst_.beta2[k] == 0.0 && std::abs(inst_.beta1[k]) > 1e-14) ? 1 : 0;

    Vec v(n);
    for (int k = 0; k < n; ++k) v[k] = inst_.b(k, res.u[k]);
    // v-box per affine stage (b affine in u, endpoints may come in either order)
    Vec vlo(n), vhi(n);
    for (int k = 0; k < n; ++k) {
      const double b_lo = inst_.b(k, inst_.u_min[k]);
      const double b_hi = inst_.b(k, inst_.u_max[k]);
      vlo[k] = std::min(b_lo, b_hi);
      vhi[k] = std::max(b_lo, b_hi);
    }
    auto u_of_v = [&](int k, double vk) {
      // invert b(u) = beta1 u - beta1 d - beta0
      return (vk + inst_.beta1[k] * inst_.d[k] + inst_.beta0[k]) / inst_.beta1[k];
    };
    // d/dv g(u(v)) and the quadratic coefficient in v
    auto dcost = [&](int k, double vk) {
      return inst_.g_prime(k, u_of_v(k, vk)) / inst_.beta1[k];
    };
    auto qcoef = [&](int k) {
      return inst_.alpha2[k] / (inst_.beta1[k] * inst_.beta1[k]);
    };

    Vec x(n), suf_lo(n), suf_hi(n);
    auto refresh = [&]() {
      double acc = inst_.x0;
      for (int i = 0; i < n; ++i) {
        acc += v[i];
        x[i] = acc;
      }
      double ml = kInf, mh = kInf;
      for (int i = n - 1; i >= 0; --i) {
        ml = std::min(ml, x[i] - inst_.x_min[i]);
        mh = std::min(mh, inst_.x_max[i] - x[i]);
        suf_lo[i] = ml;
        suf_hi[i] = mh;
      }
    };
    refresh();

    constexpr int kMaxSweeps = 80;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
      bool improved = false;
      for (int k = 0; k < n; ++k) {
        if (!ok[k]) continue;
        const double lo = std::max(-suf_lo[k], vlo[k] - v[k]);
        const double hi = std::min(suf_hi[k], vhi[k] - v[k]);
        if (lo > hi) continue;
        const double a = qcoef(k);
        const double b = dcost(k, v[k]);
        double step = (a > 0.0) ? -b / (2.0 * a) : (b > 0.0 ? lo : hi);
        step = std::min(hi, std::max(lo, step));
        const double gain = (a * step + b) * step;
        if (gain < -1e-15) {
          v[k] += step;
          refresh();
          improved = true;
        }
      }
      for (int k = 0; k < n; ++k) {
        if (!ok[k]) continue;
        for (int j = k + 1; j < n; ++j) {
          if (!ok[j]) continue;
          // +step at k, -step at j shifts states k..j-1 only
          double seg_lo = kInf, seg_hi = kInf;
          for (int i = k; i < j; ++i) {
            seg_lo = std::min(seg_lo, x[i] - inst_.x_min[i]);
            seg_hi = std::min(seg_hi, inst_.x_max[i] - x[i]);
          }
          const double lo = std::max({-seg_lo, vlo[k] - v[k], v[j] - vhi[j]});
          const double hi = std::min({seg_hi, vhi[k] - v[k], v[j] - vlo[j]});
          if (lo > hi) continue;
          const double a = qcoef(k) + qcoef(j);
          const double b = dcost(k, v[k]) - dcost(j, v[j]);
          double step = (a > 0.0) ? -b / (2.0 * a) : (b > 0.0 ? lo : hi);
          step = std::min(hi, std::max(lo, step));
          const double gain = (a * step + b) * step;
          if (gain < -1e-15) {
            v[k] += step;
            v[j] -= step;
            refresh();
            improved = true;
          }
        }
      }
      if (!improved) break;
    }

    for (int k = 0; k < n; ++k)
      if (ok[k])
        res.u[k] = std::min(inst_.u_max[k], std::max(inst_.u_min[k], u_of_v(k, v[k])));
    res.x = rollout(inst_, res.u);
  }

  const ProblemInstance& inst_;
  int u_grid_, x_grid_;
  std::vector<Interval> tube_;
  std::vector<Vec> xg_, ug_;
  std::vector<Vec> cost_to_go_;
};

}  // namespace

OracleResult dp_solve(const ProblemInstance& inst, int u_grid, int x_grid) {
  inst.validate();
  if (u_grid < 2 || x_grid < 2)
    throw std::invalid_argument("dp_solve: grids need at least 2 points");
  return DpSolver(inst, u_grid, x_grid).run();
}

bool certify_multiplier_free_optimum(const ProblemInstance& inst,
                                     const OracleResult& result, double tol) {
  if (!result.feasible) return false;
  for (int k = 0; k < inst.n; ++k) {
    if (result.u[k] - inst.u_min[k] <= tol) return false;
    if (inst.u_max[k] - result.u[k] <= tol) return false;
    if (result.x[k] - inst.x_min[k] <= tol) return false;
    if (inst.x_max[k] - result.x[k] <= tol) return false;
  }
  return true;
}

}  // namespace admmpc
