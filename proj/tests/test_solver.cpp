#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "admmpc/rng.hpp"
#include "admmpc/solver.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace admmpc;
using test::make_fixed_point_instance;
using test::make_instance;

namespace {

SolverParams default_params() {
  SolverParams p;
  p.rho1 = 1.0;
  p.rho2 = 0.2;
  p.eps_primal = 1e-6;
  p.eps_dual = 1e-6;
  p.max_iters = 100000;
  return p;
}

// stage objective of the u-update
double stage_J(const ProblemInstance& inst, int k, double rho1, double w, double u) {
  const double q = inst.b(k, u) - w;
  return inst.g(k, u) + 0.5 * rho1 * q * q;
}

}  // namespace

TEST_CASE("parameter validation") {
  SolverParams p = default_params();
  p.rho1 = 0.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = default_params();
  p.eps_dual = -1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = default_params();
  p.max_iters = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("initialization") {
  SUBCASE("symmetric quadratic cost starts at the interior minimizer") {
    ProblemInstance inst = make_instance(3);
    inst.alpha2 = Vec::Ones(3);
    const PredictionMatrices pred = build_prediction_matrices(inst.a);
    const IterateState st = initialize(inst, pred);
    for (int k = 0; k < 3; ++k) CHECK(st.u[k] == 0.0);
    CHECK(st.j == 0);
  }
  SUBCASE("affine cost clamps to the lower bound") {
    ProblemInstance inst = make_instance(3);
    inst.alpha1 = Vec::Ones(3);
    const PredictionMatrices pred = build_prediction_matrices(inst.a);
    const IterateState st = initialize(inst, pred);
    for (int k = 0; k < 3; ++k) CHECK(st.u[k] == -0.5);
  }
  SUBCASE("interior state trajectory equals the free response exactly") {
    ProblemInstance inst = make_fixed_point_instance(6);
    const PredictionMatrices pred = build_prediction_matrices(inst.a);
    const IterateState st = initialize(inst, pred);
    const Vec fr = pred.free_response(inst.x0, st.v);
    for (int k = 0; k < 6; ++k) CHECK(st.x[k] == fr[k]);
    CHECK(st.y.isZero(0.0));
    CHECK(st.z.isZero(0.0));
  }
}

TEST_CASE("input update solves the boxed stage problems") {
  SUBCASE("analytic convex quadratic, clamped") {
    // g = u, b(u) = u, w = 0: J = u + u^2/2, unconstrained minimizer -1
    ProblemInstance inst = make_instance(1);
    inst.alpha1[0] = 1.0;
    inst.beta1[0] = 1.0;
    SolverParams p = default_params();
    const Vec u = u_update(inst, p, Vec::Zero(1), Vec::Zero(1));
    CHECK(u[0] == -0.5);
  }
  SUBCASE("fixed point of the initialization") {
    const ProblemInstance inst = generate_random_instance(17, 8);
    const PredictionMatrices pred = build_prediction_matrices(inst.a);
    const IterateState st = initialize(inst, pred);
    SolverParams p = default_params();
    const Vec u = u_update(inst, p, st.v, st.y);   // w = b(u0)
    for (int k = 0; k < 8; ++k) {
      const double w = st.v[k] - st.y[k];
      CHECK(stage_J(inst, k, p.rho1, w, u[k]) <=
            stage_J(inst, k, p.rho1, w, st.u[k]) + 1e-15);
    }
  }
  SUBCASE("beats a fine grid on random stage problems") {
    RngState rng(1234);
    for (int trial = 0; trial < 300; ++trial) {
      ProblemInstance inst = make_instance(1);
      inst.alpha2[0] = rng.uniform(0.0, 0.1);
      inst.alpha1[0] = rng.uniform(0.0, 1.0);
      inst.beta2[0] = rng.uniform(0.0, 0.1);
      inst.beta1[0] = rng.uniform(0.0, 1.0);
      inst.d[0] = rng.uniform(-1.0, 1.0);
      SolverParams p = default_params();
      p.rho1 = std::pow(10.0, rng.uniform(-1.0, 1.0));
      Vec v(1), y(1);
      v << rng.uniform(-1.0, 1.0);
      y << rng.uniform(-1.0, 1.0);
      const Vec u = u_update(inst, p, v, y);
      const double w = v[0] - y[0];
      double grid_best = 1e300, grid_arg = 0.0;
      constexpr int kPts = 100001;
      for (int i = 0; i < kPts; ++i) {
        const double cand = -0.5 + static_cast<double>(i) / (kPts - 1);
        const double J = stage_J(inst, 0, p.rho1, w, cand);
        if (J < grid_best) {
          grid_best = J;
          grid_arg = cand;
        }
      }
      CHECK(stage_J(inst, 0, p.rho1, w, u[0]) <= grid_best + 1e-9);
      CHECK(std::abs(u[0] - grid_arg) <= 1e-4);
    }
  }
}

TEST_CASE("substitute update") {
  SUBCASE("scalar horizon closed form") {
    ProblemInstance inst = make_instance(1);
    inst.beta1[0] = 1.0;
    inst.x0 = 0.3;
    PredictionMatrices pred = build_prediction_matrices(inst.a);
    SolverParams p = default_params();
    p.rho1 = 2.0;
    p.rho2 = 0.5;
    Vec u(1), y(1), x(1), z(1);
    u << 0.2;
    y << -0.1;
    x << 0.6;
    z << 0.05;
    const Vec v = v_update(inst, p, pred, u, y, x, z);
    const double expect =
        (p.rho1 * (inst.b(0, 0.2) + y[0]) + p.rho2 * (-inst.x0 + x[0] - z[0])) /
        (p.rho1 + p.rho2);
    CHECK(v[0] == doctest::Approx(expect).epsilon(1e-14));
  }
  SUBCASE("consistent arguments return b(u)") {
    const ProblemInstance inst = generate_random_instance(5, 12);
    PredictionMatrices pred = build_prediction_matrices(inst.a);
    SolverParams p = default_params();
    RngState rng(6);
    Vec u(12);
    for (int k = 0; k < 12; ++k) u[k] = rng.uniform(-0.5, 0.5);
    const Vec bu = inst.b_of(u);
    const Vec x = pred.free_response(inst.x0, bu);
    const Vec v = v_update(inst, p, pred, u, Vec::Zero(12), x, Vec::Zero(12));
    CHECK((v - bu).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
  SUBCASE("matches a dense direct solve, identity and general dynamics") {
    RngState rng(77);
    for (int trial = 0; trial < 40; ++trial) {
      const int n = 8;
      ProblemInstance inst = generate_random_instance(rng.fork(trial).state(), n);
      if (trial % 2 == 0) {
        for (int k = 0; k < n; ++k) inst.a[k] = rng.uniform(0.5, 1.5);
      }
      PredictionMatrices pred = build_prediction_matrices(inst.a);
      SolverParams p = default_params();
      p.rho1 = std::pow(10.0, rng.uniform(-1.0, 2.0));
      p.rho2 = std::pow(10.0, rng.uniform(-2.0, 1.0));
      Vec u(n), y(n), x(n), z(n);
      for (int k = 0; k < n; ++k) {
        u[k] = rng.uniform(-0.5, 0.5);
        y[k] = rng.uniform(-1.0, 1.0);
        x[k] = rng.uniform(-2.0, 2.0);
        z[k] = rng.uniform(-1.0, 1.0);
      }
      const Vec v = v_update(inst, p, pred, u, y, x, z);
      const Eigen::MatrixXd G =
          p.rho1 * Eigen::MatrixXd::Identity(n, n) +
          p.rho2 * pred.psi().transpose() * pred.psi();
      const Vec rhs = p.rho1 * (inst.b_of(u) + y) +
                      p.rho2 * pred.psi().transpose() * (x - z - pred.phi() * inst.x0);
      const Vec dense = G.fullPivLu().solve(rhs);
      CHECK((v - dense).norm() <= 1e-10 * std::max(1.0, dense.norm()));
      // relative linear residual of the structured solve
      CHECK((G * v - rhs).norm() <= 1e-10 * std::max(1e-30, rhs.norm()));
    }
  }
  SUBCASE("stale factorization cache is an error") {
    ProblemInstance inst = make_instance(4);
    PredictionMatrices pred = build_prediction_matrices(inst.a);
    pred.prepare_v_solve(1.0, 0.2);
    CHECK_THROWS_AS(pred.v_solve(Vec::Zero(4), 2.0, 0.2), std::logic_error);
    CHECK_NOTHROW(pred.v_solve(Vec::Zero(4), 1.0, 0.2));
  }
}

TEST_CASE("state update") {
  ProblemInstance inst = make_instance(1);
  PredictionMatrices pred = build_prediction_matrices(inst.a);
  SolverParams p = default_params();
  p.rho2 = 1.0;
  SUBCASE("pure projection when the state cost is zero") {
    Vec v(1), z(1);
    v << 0.7;
    z << 0.0;
    const Vec x = x_update(inst, p, pred, v, z);
    CHECK(x[0] == 0.7);
  }
  SUBCASE("clamp at the upper bound") {
    inst.x0 = 5.0;   // c = 5
    const Vec x = x_update(inst, p, pred, Vec::Zero(1), Vec::Zero(1));
    CHECK(x[0] == 2.0);
  }
  SUBCASE("analytic quadratic interior minimizer") {
    inst.gamma2[0] = 1.0;
    inst.x0 = 3.0;   // c = 3, minimizer (rho2*3)/(2+rho2) = 1
    const Vec x = x_update(inst, p, pred, Vec::Zero(1), Vec::Zero(1));
    CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("dual update") {
  const ProblemInstance inst = generate_random_instance(8, 3);
  const PredictionMatrices pred = build_prediction_matrices(inst.a);
  RngState rng(10);
  IterateState st;
  st.u = Vec::Zero(3);
  st.v = Vec::Zero(3);
  st.x = Vec::Zero(3);
  st.y.resize(3);
  st.z.resize(3);
  for (int k = 0; k < 3; ++k) {
    st.y[k] = rng.uniform(-1.0, 1.0);
    st.z[k] = rng.uniform(-1.0, 1.0);
  }
  Vec u_new(3);
  for (int k = 0; k < 3; ++k) u_new[k] = rng.uniform(-0.5, 0.5);
  SUBCASE("consistent substitute keeps y") {
    const Vec v_new = inst.b_of(u_new);
    const Vec x_new = pred.free_response(inst.x0, v_new);
    const auto [y_new, z_new] = dual_update(inst, pred, st, u_new, v_new, x_new);
    for (int k = 0; k < 3; ++k) {
      CHECK(y_new[k] == st.y[k]);
      CHECK(z_new[k] == st.z[k]);
    }
  }
  SUBCASE("matches hand-stacked arithmetic") {
    Vec v_new(3), x_new(3);
    for (int k = 0; k < 3; ++k) {
      v_new[k] = rng.uniform(-1.0, 1.0);
      x_new[k] = rng.uniform(-2.0, 2.0);
    }
    const auto [y_new, z_new] = dual_update(inst, pred, st, u_new, v_new, x_new);
    const Vec fr = pred.phi() * inst.x0 + pred.psi() * v_new;
    for (int k = 0; k < 3; ++k) {
      CHECK(y_new[k] ==
            doctest::Approx(st.y[k] + inst.b(k, u_new[k]) - v_new[k]).epsilon(1e-14));
      CHECK(z_new[k] == doctest::Approx(st.z[k] + fr[k] - x_new[k]).epsilon(1e-13));
    }
  }
}

TEST_CASE("residual definitions") {
  const SolverParams p = default_params();
  SUBCASE("fixed point gives exactly zero residuals") {
    const ProblemInstance inst = make_fixed_point_instance(5);
    const PredictionMatrices pred = build_prediction_matrices(inst.a);
    const IterateState st = initialize(inst, pred);
    const ResidualPair res = residuals(inst, p, pred, st, st);
    CHECK(res.r.norm() == 0.0);
    CHECK(res.s.norm() == 0.0);
  }
  SUBCASE("unchanged substitute zeroes the dual residual") {
    const ProblemInstance inst = generate_random_instance(21, 4);
    const PredictionMatrices pred = build_prediction_matrices(inst.a);
    RngState rng(22);
    IterateState a, b;
    a.u = b.u = Vec::Zero(4);
    a.v.resize(4);
    for (int k = 0; k < 4; ++k) a.v[k] = rng.uniform(-1.0, 1.0);
    b.v = a.v;
    a.x = b.x = Vec::Zero(4);
    a.y = b.y = Vec::Zero(4);
    a.z = b.z = Vec::Zero(4);
    for (int k = 0; k < 4; ++k) b.u[k] = rng.uniform(-0.5, 0.5);
    const ResidualPair res = residuals(inst, p, pred, a, b);
    CHECK(res.s.norm() == 0.0);
  }
  SUBCASE("structured dual residual equals the stacked-matrix evaluation") {
    RngState rng(23);
    for (int trial = 0; trial < 30; ++trial) {
      const int n = 2 + static_cast<int>(rng.uniform() * 19);
      ProblemInstance inst = generate_random_instance(rng.fork(trial).state(), n);
      if (trial % 3 == 0)
        for (int k = 0; k < n; ++k) inst.a[k] = rng.uniform(0.5, 1.5);
      const PredictionMatrices pred = build_prediction_matrices(inst.a);
      SolverParams params = default_params();
      params.rho1 = std::pow(10.0, rng.uniform(-1.0, 1.0));
      params.rho2 = std::pow(10.0, rng.uniform(-1.0, 1.0));
      auto rand_vec = [&](int len, double lo, double hi) {
        Vec v(len);
        for (int k = 0; k < len; ++k) v[k] = rng.uniform(lo, hi);
        return v;
      };
      IterateState prev, next;
      prev.u = rand_vec(n, -0.5, 0.5);
      prev.v = rand_vec(n, -1.0, 1.0);
      prev.x = rand_vec(n, -2.0, 2.0);
      prev.y = rand_vec(n, -1.0, 1.0);
      prev.z = rand_vec(n, -1.0, 1.0);
      next = prev;
      next.u = rand_vec(n, -0.5, 0.5);
      next.v = rand_vec(n, -1.0, 1.0);
      next.x = rand_vec(n, -2.0, 2.0);
      const ResidualPair res = residuals(inst, params, pred, prev, next);

      // stacked form: s = (db)' R B (xhat_prev - xhat_next)
      Eigen::MatrixXd B = Eigen::MatrixXd::Zero(2 * n, 2 * n);
      B.topLeftCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
      B.bottomLeftCorner(n, n) = pred.psi();
      B.bottomRightCorner(n, n) = -Eigen::MatrixXd::Identity(n, n);
      Eigen::MatrixXd R = Eigen::MatrixXd::Zero(2 * n, 2 * n);
      R.topLeftCorner(n, n) = params.rho1 * Eigen::MatrixXd::Identity(n, n);
      R.bottomRightCorner(n, n) = params.rho2 * Eigen::MatrixXd::Identity(n, n);
      Eigen::MatrixXd db = Eigen::MatrixXd::Zero(2 * n, n);
      for (int k = 0; k < n; ++k) db(k, k) = inst.b_prime(k, next.u[k]);
      Eigen::VectorXd dxhat(2 * n);
      dxhat.head(n) = prev.v - next.v;
      dxhat.tail(n) = prev.x - next.x;
      const Vec stacked = db.transpose() * R * B * dxhat;
      CHECK((res.s - stacked).lpNorm<Eigen::Infinity>() <= 1e-12);

      // and r matches the stacked constraint residual
      Eigen::VectorXd bhat(2 * n);
      for (int k = 0; k < n; ++k) bhat[k] = inst.b(k, next.u[k]);
      bhat.tail(n) = pred.phi() * inst.x0;
      Eigen::VectorXd xhat(2 * n);
      xhat.head(n) = next.v;
      xhat.tail(n) = next.x;
      const Vec r_stacked = bhat + B * xhat;
      CHECK((res.r - r_stacked).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
  }
}

TEST_CASE("full solve") {
  SUBCASE("fixed-point instance terminates at iteration 1 with exact zeros") {
    const ProblemInstance inst = make_fixed_point_instance(12);
    SolverParams p = default_params();
    p.eps_primal = p.eps_dual = 1e-10;
    const SolveReport rep = solve(inst, p);
    CHECK(rep.converged);
    CHECK(rep.iterations == 1);
    CHECK(rep.r_norm_history.back() == 0.0);
    CHECK(rep.s_norm_history.back() == 0.0);
  }
  SUBCASE("bit-identical reruns") {
    const ProblemInstance inst = generate_random_instance(404, 40);
    SolverParams p = default_params();
    p.eps_primal = p.eps_dual = 1e-4;
    const SolveReport a = solve(inst, p);
    const SolveReport b = solve(inst, p);
    REQUIRE(a.iterations == b.iterations);
    for (std::size_t i = 0; i < a.r_norm_history.size(); ++i) {
      CHECK(a.r_norm_history[i] == b.r_norm_history[i]);
      CHECK(a.s_norm_history[i] == b.s_norm_history[i]);
    }
    CHECK(a.objective == b.objective);
    CHECK((a.state.u - b.state.u).norm() == 0.0);
  }
  SUBCASE("iterates stay inside both boxes and duals track residual blocks") {
    const ProblemInstance inst = generate_random_instance(2718, 25);
    SolverParams p = default_params();
    p.eps_primal = p.eps_dual = 1e-5;
    p.trace_level = TraceLevel::FullIterates;
    const SolveReport rep = solve(inst, p);
    REQUIRE(rep.converged);
    const PredictionMatrices pred = build_prediction_matrices(inst.a);
    for (std::size_t t = 1; t < rep.iterate_trace.size(); ++t) {
      const IterateState& prev = rep.iterate_trace[t - 1];
      const IterateState& cur = rep.iterate_trace[t];
      for (int k = 0; k < inst.n; ++k) {
        CHECK(cur.u[k] >= inst.u_min[k]);
        CHECK(cur.u[k] <= inst.u_max[k]);
        CHECK(cur.x[k] >= inst.x_min[k]);
        CHECK(cur.x[k] <= inst.x_max[k]);
      }
      const ResidualPair res = residuals(inst, p, pred, prev, cur);
      // the applied dual increments are the residual blocks, bit for bit
      for (int k = 0; k < inst.n; ++k) {
        CHECK(cur.y[k] == prev.y[k] + res.r[k]);
        CHECK(cur.z[k] == prev.z[k] + res.r[inst.n + k]);
      }
    }
  }
  SUBCASE("max-iters termination is reported, not thrown") {
    const ProblemInstance inst = generate_random_instance(11, 30);
    SolverParams p = default_params();
    p.eps_primal = p.eps_dual = 1e-12;
    p.max_iters = 5;
    const SolveReport rep = solve(inst, p);
    CHECK_FALSE(rep.converged);
    CHECK(rep.termination == Termination::MaxIters);
    CHECK(rep.iterations == 5);
  }
}

TEST_CASE("first-order condition checking") {
  SUBCASE("converged solve satisfies the conditions at ten times the tolerance") {
    const ProblemInstance inst = generate_random_instance(314, 10);
    SolverParams p = default_params();
    p.eps_primal = p.eps_dual = 1e-8;
    const SolveReport rep = solve(inst, p);
    REQUIRE(rep.converged);
    const PredictionMatrices pred = build_prediction_matrices(inst.a);
    const KktReport kkt = kkt_residual(inst, p, pred, rep.state);
    CHECK(kkt.max_violation() <= 1e-7);
  }
  SUBCASE("hand-built constraint defect is measured exactly") {
    ProblemInstance inst = make_instance(2);
    inst.beta1 = Vec::Ones(2);
    const PredictionMatrices pred = build_prediction_matrices(inst.a);
    IterateState st;
    st.u = Vec::Zero(2);
    st.v = Vec::Zero(2);
    st.x = Vec::Zero(2);
    st.y = Vec::Zero(2);
    st.z = Vec::Zero(2);
    st.v[0] = -0.3;   // b(u0) - v0 = 0.3
    st.x[0] = -0.3;   // keeps the bottom block consistent
    st.x[1] = -0.3;
    const KktReport kkt = kkt_residual(inst, default_params(), pred, st);
    CHECK(kkt.eq_residual == doctest::Approx(0.3).epsilon(1e-15));
  }
}

TEST_CASE("trace output") {
  const ProblemInstance inst = generate_random_instance(55, 10);
  SolverParams p = default_params();
  p.eps_primal = p.eps_dual = 1e-4;
  p.trace_level = TraceLevel::Residuals;
  const SolveReport rep = solve(inst, p);
  std::ostringstream out;
  write_trace_csv(rep, out);
  std::istringstream in(out.str());
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "iter,r_norm,s_norm,objective");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == rep.iterations);
  CHECK(rep.objective_history.size() == static_cast<std::size_t>(rep.iterations));
}
