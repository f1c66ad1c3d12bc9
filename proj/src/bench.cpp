#include "admmpc/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "admmpc/rng.hpp"

namespace admmpc {

namespace {

struct SolveTask {
  std::uint64_t seed;
  int n;
  double rho1, rho2, epsilon;
  int max_iters;
};

ExperimentRecord run_task(const SolveTask& t) {
  const ProblemInstance inst = generate_random_instance(t.seed, t.n);
  SolverParams params;
  params.rho1 = t.rho1;
  params.rho2 = t.rho2;
  params.eps_primal = t.epsilon;
  params.eps_dual = t.epsilon;
  params.max_iters = t.max_iters;
  const SolveReport rep = solve(inst, params);
  ExperimentRecord rec;
  rec.seed = t.seed;
  rec.n = t.n;
  rec.rho1 = t.rho1;
  rec.rho2 = t.rho2;
  rec.epsilon = t.epsilon;
  rec.iterations = rep.iterations;
  rec.converged = rep.converged;
  rec.wall_time_s = rep.wall_time_s;
  rec.final_r_norm = rep.r_norm_history.empty() ? 0.0 : rep.r_norm_history.back();
  rec.final_s_norm = rep.s_norm_history.empty() ? 0.0 : rep.s_norm_history.back();
  rec.objective = rep.objective;
  return rec;
}

// independent solves over a work queue; results land at their task index, so
// output order does not depend on scheduling
std::vector<ExperimentRecord> run_all(const std::vector<SolveTask>& tasks, int threads) {
  std::vector<ExperimentRecord> records(tasks.size());
  int workers = threads > 0 ? threads
                            : static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  workers = std::min<int>(workers, static_cast<int>(tasks.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) records[i] = run_task(tasks[i]);
    return records;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      records[i] = run_task(tasks[i]);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return records;
}

std::vector<std::uint64_t> system_seeds(std::uint64_t master, int count) {
  const RngState root(master);
  std::vector<std::uint64_t> seeds(count);
  for (int i = 0; i < count; ++i) seeds[i] = root.fork(static_cast<std::uint64_t>(i)).state();
  return seeds;
}

}  // namespace

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (count < 2 || !(lo > 0.0) || !(hi > lo))
    throw std::invalid_argument("log_spaced: need count >= 2 and 0 < lo < hi");
  std::vector<double> out(count);
  const double llo = std::log10(lo), lhi = std::log10(hi);
  for (int i = 0; i < count; ++i)
    out[i] = std::pow(10.0, llo + (lhi - llo) * i / (count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<ExperimentRecord> rho_grid_experiment(const RhoGridConfig& cfg) {
  if (cfg.rho1_grid.empty() || cfg.rho2_grid.empty() || cfg.horizons.empty())
    throw std::invalid_argument("rho grid: empty grid");
  const auto seeds = system_seeds(cfg.master_seed, cfg.systems);
  std::vector<SolveTask> tasks;
  tasks.reserve(static_cast<std::size_t>(cfg.systems) * cfg.horizons.size() *
                cfg.rho1_grid.size() * cfg.rho2_grid.size());
  for (int n : cfg.horizons)
    for (int i = 0; i < cfg.systems; ++i)
      for (double r1 : cfg.rho1_grid)
        for (double r2 : cfg.rho2_grid)
          tasks.push_back({seeds[i], n, r1, r2, cfg.epsilon, cfg.max_iters});
  return run_all(tasks, cfg.threads);
}

std::vector<ExperimentRecord> epsilon_sweep(const EpsSweepConfig& cfg) {
  if (cfg.epsilon_grid.empty()) throw std::invalid_argument("eps sweep: empty grid");
  const auto seeds = system_seeds(cfg.master_seed, cfg.systems);
  std::vector<SolveTask> tasks;
  tasks.reserve(static_cast<std::size_t>(cfg.systems) * cfg.epsilon_grid.size());
  for (int i = 0; i < cfg.systems; ++i)
    for (double eps : cfg.epsilon_grid)
      tasks.push_back({seeds[i], cfg.n, cfg.rho1, cfg.rho2, eps, cfg.max_iters});
  return run_all(tasks, cfg.threads);
}

std::vector<ExperimentRecord> horizon_sweep(const HorizonSweepConfig& cfg) {
  if (cfg.n_grid.empty()) throw std::invalid_argument("horizon sweep: empty grid");
  const auto seeds = system_seeds(cfg.master_seed, cfg.systems);
  std::vector<SolveTask> tasks;
  tasks.reserve(static_cast<std::size_t>(cfg.systems) * cfg.n_grid.size());
  for (int n : cfg.n_grid)
    for (int i = 0; i < cfg.systems; ++i)
      tasks.push_back({seeds[i], n, cfg.rho1, cfg.rho2, cfg.epsilon, cfg.max_iters});
  return run_all(tasks, cfg.threads);
}

SummaryStats summarize_values(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("summarize: empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  SummaryStats s;
  s.min = values.front();
  s.max = values.back();
  double total = 0.0;
  for (double v : values) total += v;
  s.mean = total / static_cast<double>(n);
  s.median = (n % 2 == 1) ? values[n / 2]
                          : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  // nearest-rank percentile
  std::size_t rank = static_cast<std::size_t>(std::ceil(0.98 * static_cast<double>(n)));
  if (rank < 1) rank = 1;
  s.p98 = values[rank - 1];
  return s;
}

std::vector<SummaryGroup> summarize(const std::vector<ExperimentRecord>& records,
                                    GroupKey key) {
  std::map<std::tuple<double, double, double>, std::vector<const ExperimentRecord*>> groups;
  for (const auto& r : records) {
    std::tuple<double, double, double> k;
    switch (key) {
      case GroupKey::Epsilon: k = {r.epsilon, 0.0, 0.0}; break;
      case GroupKey::Horizon: k = {static_cast<double>(r.n), 0.0, 0.0}; break;
      case GroupKey::RhoCell: k = {static_cast<double>(r.n), r.rho1, r.rho2}; break;
    }
    groups[k].push_back(&r);
  }
  std::vector<SummaryGroup> out;
  out.reserve(groups.size());
  for (const auto& [k, rows] : groups) {
    SummaryGroup g;
    g.count = static_cast<int>(rows.size());
    g.n = rows.front()->n;
    g.epsilon = rows.front()->epsilon;
    g.rho1 = rows.front()->rho1;
    g.rho2 = rows.front()->rho2;
    switch (key) {
      case GroupKey::Epsilon: g.rho1 = 0.0; g.rho2 = 0.0; break;
      case GroupKey::Horizon: g.rho1 = 0.0; g.rho2 = 0.0; g.epsilon = 0.0; break;
      case GroupKey::RhoCell: g.epsilon = 0.0; break;
    }
    std::vector<double> iters, times, objs;
    iters.reserve(rows.size());
    times.reserve(rows.size());
    objs.reserve(rows.size());
    for (const auto* r : rows) {
      iters.push_back(static_cast<double>(r->iterations));
      times.push_back(r->wall_time_s);
      objs.push_back(r->objective);
    }
    g.iterations = summarize_values(std::move(iters));
    g.wall_time_s = summarize_values(std::move(times));
    g.objective = summarize_values(std::move(objs));
    out.push_back(g);
  }
  return out;
}

namespace {

void append_double(std::string& line, double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  line.append(buf, res.ptr);
}

double parse_double(std::string_view s, const char* field) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw std::runtime_error(std::string("records csv: bad double in field ") + field);
  return v;
}

constexpr const char* kHeader =
    "seed,n,rho1,rho2,epsilon,iterations,converged,wall_time_s,final_r_norm,"
    "final_s_norm,objective";

}  // namespace

void write_records_csv(const std::vector<ExperimentRecord>& records, std::ostream& out) {
  out << kHeader << '\n';
  std::string line;
  for (const auto& r : records) {
    line.clear();
    line += std::to_string(r.seed);
    line += ',';
    line += std::to_string(r.n);
    line += ',';
    append_double(line, r.rho1);
    line += ',';
    append_double(line, r.rho2);
    line += ',';
    append_double(line, r.epsilon);
    line += ',';
    line += std::to_string(r.iterations);
    line += ',';
    line += r.converged ? "true" : "false";
    line += ',';
    append_double(line, r.wall_time_s);
    line += ',';
    append_double(line, r.final_r_norm);
    line += ',';
    append_double(line, r.final_s_norm);
    line += ',';
    append_double(line, r.objective);
    line += '\n';
    out << line;
  }
}

std::vector<ExperimentRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("records csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) throw std::runtime_error("records csv: unexpected header");
  std::vector<ExperimentRecord> records;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest = line;
    for (;;) {
      const auto pos = rest.find(',');
      if (pos == std::string_view::npos) {
        fields.push_back(rest);
        break;
      }
      fields.push_back(rest.substr(0, pos));
      rest.remove_prefix(pos + 1);
    }
    if (fields.size() != 11) throw std::runtime_error("records csv: wrong field count");
    ExperimentRecord r;
    {
      const auto res = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), r.seed);
      if (res.ec != std::errc()) throw std::runtime_error("records csv: bad seed");
    }
    r.n = static_cast<int>(parse_double(fields[1], "n"));
    r.rho1 = parse_double(fields[2], "rho1");
    r.rho2 = parse_double(fields[3], "rho2");
    r.epsilon = parse_double(fields[4], "epsilon");
    r.iterations = static_cast<int>(parse_double(fields[5], "iterations"));
    if (fields[6] == "true") r.converged = true;
    else if (fields[6] == "false") r.converged = false;
    else throw std::runtime_error("records csv: bad boolean");
    r.wall_time_s = parse_double(fields[7], "wall_time_s");
    r.final_r_norm = parse_double(fields[8], "final_r_norm");
    r.final_s_norm = parse_double(fields[9], "final_s_norm");
    r.objective = parse_double(fields[10], "objective");
    records.push_back(r);
  }
  return records;
}

void save_records_csv(const std::vector<ExperimentRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_records_csv(records, out);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::vector<ExperimentRecord> load_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_records_csv(in);
}

}  // namespace admmpc
