#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "admmpc/problem.hpp"
#include "admmpc/solver.hpp"

namespace admmpc {

/// One (instance, parameters) -> outcome row. Everything except wall_time_s is
/// bit-reproducible from the master seed.
struct ExperimentRecord {
  std::uint64_t seed = 0;
  int n = 0;
  double rho1 = 0.0, rho2 = 0.0;
  double epsilon = 0.0;
  int iterations = 0;
  bool converged = false;
  double wall_time_s = 0.0;
  double final_r_norm = 0.0, final_s_norm = 0.0;
  double objective = 0.0;
};

/// count log-spaced points from lo to hi inclusive (count >= 2, both > 0).
std::vector<double> log_spaced(double lo, double hi, int count);

struct RhoGridConfig {
  int systems = 20;
  std::vector<int> horizons = {50, 100, 200, 400};
  std::vector<double> rho1_grid = log_spaced(1e-1, 1e2, 13);
  std::vector<double> rho2_grid = log_spaced(1e-2, 1e1, 13);
  double epsilon = 1e-3;
  int max_iters = 10000;
  std::uint64_t master_seed = 1;
  int threads = 0;   // <= 0: hardware concurrency
};

struct EpsSweepConfig {
  int systems = 200;
  int n = 100;
  double rho1 = 1.0, rho2 = 0.2;
  std::vector<double> epsilon_grid = log_spaced(1e-4, 1e0, 17);
  int max_iters = 10000;
  std::uint64_t master_seed = 1;
  int threads = 0;
};

struct HorizonSweepConfig {
  int systems = 200;
  std::vector<int> n_grid = {10, 25, 50, 75, 100, 150, 200, 250, 300, 350, 400};
  double rho1 = 1.0, rho2 = 0.2;
  double epsilon = 1e-2;
  int max_iters = 10000;
  std::uint64_t master_seed = 1;
  int threads = 0;
};

/// Per-system seeds come from RngState(master_seed).fork(i), the same i across
/// horizons and parameter cells, so corpora extend without disturbing existing
/// rows. Solves run concurrently; record order is deterministic.
std::vector<ExperimentRecord> rho_grid_experiment(const RhoGridConfig& cfg);
std::vector<ExperimentRecord> epsilon_sweep(const EpsSweepConfig& cfg);
std::vector<ExperimentRecord> horizon_sweep(const HorizonSweepConfig& cfg);

struct SummaryStats {
  double median = 0.0, mean = 0.0, p98 = 0.0, min = 0.0, max = 0.0;
};

/// Median (midpoint for even counts), mean, nearest-rank 98th percentile, min,
/// max. Throws std::invalid_argument on an empty sample.
SummaryStats summarize_values(std::vector<double> values);

enum class GroupKey { Epsilon, Horizon, RhoCell };

struct SummaryGroup {
  // key fields; unused ones stay zero
  int n = 0;
  double rho1 = 0.0, rho2 = 0.0, epsilon = 0.0;
  int count = 0;
  SummaryStats iterations, wall_time_s, objective;
};

/// Groups records by the key and summarizes per group, sorted by key. Empty
/// input yields an empty table.
std::vector<SummaryGroup> summarize(const std::vector<ExperimentRecord>& records,
                                    GroupKey key);

/// Header exactly:
/// seed,n,rho1,rho2,epsilon,iterations,converged,wall_time_s,final_r_norm,final_s_norm,objective
/// Booleans as true/false, doubles with 17 significant digits, C-locale.
void write_records_csv(const std::vector<ExperimentRecord>& records, std::ostream& out);
std::vector<ExperimentRecord> read_records_csv(std::istream& in);
void save_records_csv(const std::vector<ExperimentRecord>& records, const std::string& path);
std::vector<ExperimentRecord> load_records_csv(const std::string& path);

}  // namespace admmpc
