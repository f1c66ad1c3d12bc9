#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "admmpc/bench.hpp"
#include "admmpc/plot.hpp"
#include "admmpc/problem.hpp"
#include "admmpc/solver.hpp"

namespace {

int run(int argc, char** argv) {
  CLI::App app{"ADMM solver and benchmark harness for box-constrained MPC with a "
               "nonlinear input map"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a random problem instance");
  std::uint64_t gen_seed = 1;
  int gen_n = 100;
  std::string gen_out;
  gen->add_option("--seed", gen_seed, "instance seed");
  gen->add_option("--n", gen_n, "horizon length")->check(CLI::PositiveNumber);
  gen->add_option("--out", gen_out, "output instance file")->required();

  // solve
  auto* sol = app.add_subcommand("solve", "solve an instance file");
  std::string sol_problem, sol_trace;
  double sol_rho1 = 1.0, sol_rho2 = 0.2, sol_eps = 1e-3;
  int sol_max_iter = 10000;
  sol->add_option("--problem", sol_problem, "instance file")->required();
  sol->add_option("--rho1", sol_rho1, "penalty rho1");
  sol->add_option("--rho2", sol_rho2, "penalty rho2");
  sol->add_option("--eps", sol_eps, "stopping threshold (primal and dual)");
  sol->add_option("--max-iter", sol_max_iter, "iteration cap");
  sol->add_option("--trace", sol_trace, "write per-iteration residual CSV here");

  // exp
  auto* exp = app.add_subcommand("exp", "run a randomized experiment");
  exp->require_subcommand(1);
  int exp_systems = -1, exp_threads = 0, exp_max_iter = 10000;
  std::uint64_t exp_seed = 1;
  std::string exp_out;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--systems", exp_systems, "number of random systems");
    sub->add_option("--seed", exp_seed, "master seed");
    sub->add_option("--out", exp_out, "output records CSV")->required();
    sub->add_option("--threads", exp_threads, "worker threads (0 = hardware)");
    sub->add_option("--max-iter", exp_max_iter, "per-solve iteration cap");
  };
  auto* exp_rho = exp->add_subcommand("rho", "iteration counts over a (rho1, rho2) grid");
  auto* exp_eps = exp->add_subcommand("eps", "iteration counts as the tolerance varies");
  auto* exp_hor = exp->add_subcommand("horizon", "iteration counts and time vs horizon");
  add_common(exp_rho);
  add_common(exp_eps);
  add_common(exp_hor);
  int eps_n = 100;
  exp_eps->add_option("--n", eps_n, "horizon length");

  // plot
  auto* plt = app.add_subcommand("plot", "render a records CSV to SVG");
  std::string plt_kind, plt_in, plt_out;
  plt->add_option("--kind", plt_kind, "heatmap | band")
      ->required()
      ->check(CLI::IsMember({"heatmap", "band"}));
  plt->add_option("--in", plt_in, "records CSV")->required();
  plt->add_option("--out", plt_out, "output SVG")->required();

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    const admmpc::ProblemInstance inst = admmpc::generate_random_instance(gen_seed, gen_n);
    admmpc::save_instance(inst, gen_out);
    std::cout << "wrote " << gen_out << " (n=" << gen_n << ", seed=" << gen_seed << ")\n";
    return 0;
  }

  if (sol->parsed()) {
    const admmpc::ProblemInstance inst = admmpc::load_instance(sol_problem);
    admmpc::SolverParams params;
    params.rho1 = sol_rho1;
    params.rho2 = sol_rho2;
    params.eps_primal = sol_eps;
    params.eps_dual = sol_eps;
    params.max_iters = sol_max_iter;
    params.trace_level = sol_trace.empty() ? admmpc::TraceLevel::None
                                           : admmpc::TraceLevel::Residuals;
    const admmpc::SolveReport rep = admmpc::solve(inst, params);
    if (!sol_trace.empty()) {
      std::ofstream out(sol_trace);
      if (!out) throw std::runtime_error("cannot open '" + sol_trace + "' for writing");
      admmpc::write_trace_csv(rep, out);
    }
    std::cout << "status:      " << (rep.converged ? "converged" : "max-iters") << '\n'
              << "iterations:  " << rep.iterations << '\n'
              << "objective:   " << rep.objective << '\n'
              << "r_norm:      " << (rep.r_norm_history.empty() ? 0.0 : rep.r_norm_history.back()) << '\n'
              << "s_norm:      " << (rep.s_norm_history.empty() ? 0.0 : rep.s_norm_history.back()) << '\n'
              << "wall_time_s: " << rep.wall_time_s << '\n';
    return 0;
  }

  if (exp->parsed()) {
    std::vector<admmpc::ExperimentRecord> records;
    if (exp_rho->parsed()) {
      admmpc::RhoGridConfig cfg;
      if (exp_systems > 0) cfg.systems = exp_systems;
      cfg.master_seed = exp_seed;
      cfg.threads = exp_threads;
      cfg.max_iters = exp_max_iter;
      records = admmpc::rho_grid_experiment(cfg);
    } else if (exp_eps->parsed()) {
      admmpc::EpsSweepConfig cfg;
      if (exp_systems > 0) cfg.systems = exp_systems;
      cfg.n = eps_n;
      cfg.master_seed = exp_seed;
      cfg.threads = exp_threads;
      cfg.max_iters = exp_max_iter;
      records = admmpc::epsilon_sweep(cfg);
    } else {
      admmpc::HorizonSweepConfig cfg;
      if (exp_systems > 0) cfg.systems = exp_systems;
      cfg.master_seed = exp_seed;
      cfg.threads = exp_threads;
      cfg.max_iters = exp_max_iter;
      records = admmpc::horizon_sweep(cfg);
    }
    admmpc::save_records_csv(records, exp_out);
    std::cout << "wrote " << records.size() << " records to " << exp_out << '\n';
    return 0;
  }

  if (plt->parsed()) {
    const auto records = admmpc::load_records_csv(plt_in);
    const auto kind = plt_kind == "heatmap" ? admmpc::PlotKind::Heatmap
                                            : admmpc::PlotKind::PercentileBand;
    admmpc::emit_plot(records, kind, plt_out);
    std::cout << "wrote " << plt_out << '\n';
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
