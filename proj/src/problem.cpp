#include "admmpc/problem.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "admmpc/rng.hpp"
#include "json.hpp"

namespace admmpc {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void check_len(const Vec& v, int n, const char* name) {
  if (static_cast<int>(v.size()) != n) {
    std::ostringstream msg;
    msg << "field '" << name << "' has length " << v.size() << ", expected " << n;
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

void ProblemInstance::validate() const {
  require(n >= 1, "horizon must be >= 1");
  check_len(a, n, "a");
  check_len(d, n, "d");
  check_len(alpha2, n, "alpha2");
  check_len(alpha1, n, "alpha1");
  check_len(alpha0, n, "alpha0");
  check_len(beta2, n, "beta2");
  check_len(beta1, n, "beta1");
  check_len(beta0, n, "beta0");
  check_len(u_min, n, "u_min");
  check_len(u_max, n, "u_max");
  check_len(x_min, n, "x_min");
  check_len(x_max, n, "x_max");
  check_len(gamma2, n, "gamma2");
  check_len(gamma1, n, "gamma1");
  check_len(gamma0, n, "gamma0");
  for (int k = 0; k < n; ++k) {
    require(u_min[k] <= u_max[k], "u_min must not exceed u_max");
    require(x_min[k] <= x_max[k], "x_min must not exceed x_max");
    require(alpha2[k] >= 0.0, "alpha2 must be nonnegative");
    require(gamma2[k] >= 0.0, "gamma2 must be nonnegative");
    require(std::isfinite(d[k]) && std::isfinite(a[k]), "coefficients must be finite");
  }
}

bool ProblemInstance::identity_dynamics() const {
  for (int k = 0; k < n; ++k)
    if (a[k] != 1.0) return false;
  return true;
}

bool ProblemInstance::has_state_cost() const {
  for (int k = 0; k < n; ++k)
    if (gamma2[k] != 0.0 || gamma1[k] != 0.0 || gamma0[k] != 0.0) return true;
  return false;
}

double ProblemInstance::b(int k, double u) const {
  if (k < 0 || k >= n) throw std::out_of_range("stage index out of range");
  const double t = d[k] - u;
  return -beta2[k] * t * t - beta1[k] * t - beta0[k];
}

double ProblemInstance::b_prime(int k, double u) const {
  if (k < 0 || k >= n) throw std::out_of_range("stage index out of range");
  return 2.0 * beta2[k] * (d[k] - u) + beta1[k];
}

double ProblemInstance::g(int k, double u) const {
  return alpha2[k] * u * u + alpha1[k] * u + alpha0[k];
}

double ProblemInstance::g_prime(int k, double u) const {
  return 2.0 * alpha2[k] * u + alpha1[k];
}

double ProblemInstance::f(int k, double x) const {
  return gamma2[k] * x * x + gamma1[k] * x + gamma0[k];
}

double ProblemInstance::f_prime(int k, double x) const {
  return 2.0 * gamma2[k] * x + gamma1[k];
}

Vec ProblemInstance::b_of(const Vec& u) const {
  if (u.size() != n) throw std::invalid_argument("input sequence length mismatch");
  Vec out(n);
  for (int k = 0; k < n; ++k) out[k] = b(k, u[k]);
  return out;
}

PredictionMatrices::PredictionMatrices(const Vec& a) : a_(a) {
  const int n = static_cast<int>(a.size());
  if (n < 1) throw std::invalid_argument("coefficient sequence must be nonempty");
  identity_ = true;
  for (int k = 0; k < n; ++k)
    if (a_[k] != 1.0) { identity_ = false; break; }

  phi_.resize(n);
  double acc = 1.0;
  for (int k = 0; k < n; ++k) {
    acc *= a_[k];
    phi_[k] = acc;
  }
}

const Eigen::MatrixXd& PredictionMatrices::psi() const {
  if (!psi_built_) {
    const int n = this->n();
    psi_ = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j) {
      psi_(j, j) = 1.0;
      for (int i = j + 1; i < n; ++i) psi_(i, j) = a_[i] * psi_(i - 1, j);
    }
    psi_built_ = true;
  }
  return psi_;
}

Vec PredictionMatrices::apply_psi(const Vec& v) const {
  // (psi v)_i = a_i (psi v)_{i-1} + v_i
  Vec out(v.size());
  double acc = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    acc = a_[i] * acc + v[i];
    out[i] = acc;
  }
  return out;
}

Vec PredictionMatrices::apply_psi_transpose(const Vec& w) const {
  // (psi' w)_j = w_j + a_{j+1} (psi' w)_{j+1}
  const int n = static_cast<int>(w.size());
  Vec out(n);
  double acc = 0.0;
  for (int j = n - 1; j >= 0; --j) {
    acc = w[j] + (j + 1 < n ? a_[j + 1] * acc : 0.0);
    out[j] = acc;
  }
  return out;
}

Vec PredictionMatrices::free_response(double x0, const Vec& v) const {
  Vec out(v.size());
  double acc = x0;
  for (int i = 0; i < v.size(); ++i) {
    acc = a_[i] * acc + v[i];
    out[i] = acc;
  }
  return out;
}

void PredictionMatrices::prepare_v_solve(double rho1, double rho2) {
  const int n = this->n();
  if (identity_) {
    // M = rho1 D'D + rho2 I, symmetric tridiagonal, diag (2rho1+rho2, ...,
    // 2rho1+rho2, rho1+rho2), off-diagonal -rho1; strictly diagonally dominant.
    ldl_d_.resize(n);
    ldl_l_.resize(n);
    const double off = -rho1;
    double prev_d = 2.0 * rho1 + rho2;
    ldl_d_[0] = (n == 1) ? rho1 + rho2 : prev_d;
    ldl_l_[0] = 0.0;
    prev_d = ldl_d_[0];
    for (int i = 1; i < n; ++i) {
      const double mi = (i == n - 1) ? rho1 + rho2 : 2.0 * rho1 + rho2;
      ldl_l_[i] = off / prev_d;
      prev_d = mi - off * ldl_l_[i];
      ldl_d_[i] = prev_d;
    }
  } else {
    Eigen::MatrixXd G = rho2 * (psi().transpose() * psi());
    G.diagonal().array() += rho1;
    llt_.compute(G);
    if (llt_.info() != Eigen::Success)
      throw std::runtime_error("v-solve factorization failed");
  }
  prepared_ = true;
  cached_rho1_ = rho1;
  cached_rho2_ = rho2;
}

bool PredictionMatrices::v_solve_ready(double rho1, double rho2) const {
  return prepared_ && cached_rho1_ == rho1 && cached_rho2_ == rho2;
}

Vec PredictionMatrices::v_solve(const Vec& rhs, double rho1, double rho2) const {
  if (!v_solve_ready(rho1, rho2))
    throw std::logic_error("v-solve cache missing or stale for these penalties");
  const int n = this->n();
  if (!identity_) return llt_.solve(rhs);

  // v = D M^{-1} D' rhs with D the first-difference operator (psi^{-1}).
  Vec t(n);
  for (int i = 0; i < n - 1; ++i) t[i] = rhs[i] - rhs[i + 1];
  t[n - 1] = rhs[n - 1];
  // LDL' solve
  Vec s(n);
  s[0] = t[0];
  for (int i = 1; i < n; ++i) s[i] = t[i] - ldl_l_[i] * s[i - 1];
  for (int i = 0; i < n; ++i) s[i] /= ldl_d_[i];
  for (int i = n - 2; i >= 0; --i) s[i] -= ldl_l_[i + 1] * s[i + 1];
  Vec v(n);
  v[0] = s[0];
  for (int i = 1; i < n; ++i) v[i] = s[i] - s[i - 1];
  return v;
}

PredictionMatrices build_prediction_matrices(const Vec& a) {
  return PredictionMatrices(a);
}

double eval_objective(const ProblemInstance& inst, const Vec& u, const Vec& x) {
  if (u.size() != inst.n || x.size() != inst.n)
    throw std::invalid_argument("objective: sequence length mismatch");
  double total = 0.0;
  for (int k = 0; k < inst.n; ++k) total += inst.g(k, u[k]);
  if (inst.has_state_cost())
    for (int k = 0; k < inst.n; ++k) total += inst.f(k, x[k]);
  return total;
}

Vec rollout(const ProblemInstance& inst, const Vec& u) {
  if (u.size() != inst.n) throw std::invalid_argument("rollout: length mismatch");
  Vec x(inst.n);
  double acc = inst.x0;
  for (int k = 0; k < inst.n; ++k) {
    acc = inst.a[k] * acc + inst.b(k, u[k]);
    x[k] = acc;
  }
  return x;
}

FeasibilityReport check_feasibility(const ProblemInstance& inst, const Vec& u,
                                    const Vec& x, double tol) {
  if (u.size() != inst.n || x.size() != inst.n)
    throw std::invalid_argument("feasibility: sequence length mismatch");
  FeasibilityReport rep;
  for (int k = 0; k < inst.n; ++k) {
    if (u[k] < inst.u_min[k] - tol)
      rep.violations.push_back({k, 'u', inst.u_min[k] - u[k]});
    else if (u[k] > inst.u_max[k] + tol)
      rep.violations.push_back({k, 'u', u[k] - inst.u_max[k]});
    if (x[k] < inst.x_min[k] - tol)
      rep.violations.push_back({k, 'x', inst.x_min[k] - x[k]});
    else if (x[k] > inst.x_max[k] + tol)
      rep.violations.push_back({k, 'x', x[k] - inst.x_max[k]});
  }
  const Vec xr = rollout(inst, u);
  rep.dynamics_defect = (x - xr).lpNorm<Eigen::Infinity>();
  return rep;
}

ProblemInstance generate_random_instance(std::uint64_t seed, int n) {
  if (n < 1) throw std::invalid_argument("horizon must be >= 1");
  RngState rng(seed);
  ProblemInstance inst;
  inst.n = n;
  inst.a = Vec::Ones(n);
  inst.d.resize(n);
  inst.alpha2.resize(n);
  inst.alpha1.resize(n);
  inst.alpha0 = Vec::Zero(n);
  inst.beta2.resize(n);
  inst.beta1.resize(n);
  inst.beta0 = Vec::Zero(n);
  inst.gamma2 = Vec::Zero(n);
  inst.gamma1 = Vec::Zero(n);
  inst.gamma0 = Vec::Zero(n);
  inst.u_min = Vec::Constant(n, -0.5);
  inst.u_max = Vec::Constant(n, 0.5);
  inst.x_min = Vec::Constant(n, -2.0);
  inst.x_max = Vec::Constant(n, 2.0);
  // frozen draw order: d stream, then per-stage coefficient tuples, then x0
  for (int k = 0; k < n; ++k) inst.d[k] = rng.uniform(-1.0, 1.0);
  for (int k = 0; k < n; ++k) {
    inst.alpha2[k] = rng.uniform(0.0, 0.1);
    inst.alpha1[k] = rng.uniform(0.0, 1.0);
    inst.beta2[k] = rng.uniform(0.0, 0.1);
    inst.beta1[k] = rng.uniform(0.0, 1.0);
  }
  inst.x0 = rng.uniform(-0.5, 0.5);
  return inst;
}

namespace {

using nlohmann::ordered_json;

ordered_json vec_to_json(const Vec& v) {
  ordered_json arr = ordered_json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vec vec_from_json(const ordered_json& j, int n, const char* name) {
  if (!j.is_array()) throw std::invalid_argument(std::string("field '") + name + "' must be an array");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
  check_len(v, n, name);
  return v;
}

}  // namespace

std::string instance_to_json(const ProblemInstance& inst) {
  ordered_json j;
  j["n"] = inst.n;
  j["x0"] = inst.x0;
  j["a"] = vec_to_json(inst.a);
  j["d"] = vec_to_json(inst.d);
  j["alpha2"] = vec_to_json(inst.alpha2);
  j["alpha1"] = vec_to_json(inst.alpha1);
  j["alpha0"] = vec_to_json(inst.alpha0);
  j["beta2"] = vec_to_json(inst.beta2);
  j["beta1"] = vec_to_json(inst.beta1);
  j["beta0"] = vec_to_json(inst.beta0);
  j["u_min"] = vec_to_json(inst.u_min);
  j["u_max"] = vec_to_json(inst.u_max);
  j["x_min"] = vec_to_json(inst.x_min);
  j["x_max"] = vec_to_json(inst.x_max);
  j["gamma2"] = vec_to_json(inst.gamma2);
  j["gamma1"] = vec_to_json(inst.gamma1);
  j["gamma0"] = vec_to_json(inst.gamma0);
  return j.dump(2) + "\n";
}

ProblemInstance instance_from_json(const std::string& text) {
  const ordered_json j = ordered_json::parse(text);
  ProblemInstance inst;
  inst.n = j.at("n").get<int>();
  require(inst.n >= 1, "horizon must be >= 1");
  inst.x0 = j.at("x0").get<double>();
  const int n = inst.n;
  auto field = [&](const char* name, double def) -> Vec {
    if (!j.contains(name)) return Vec::Constant(n, def);
    return vec_from_json(j.at(name), n, name);
  };
  inst.a = field("a", 1.0);
  inst.d = vec_from_json(j.at("d"), n, "d");
  inst.alpha2 = vec_from_json(j.at("alpha2"), n, "alpha2");
  inst.alpha1 = vec_from_json(j.at("alpha1"), n, "alpha1");
  inst.alpha0 = field("alpha0", 0.0);
  inst.beta2 = vec_from_json(j.at("beta2"), n, "beta2");
  inst.beta1 = vec_from_json(j.at("beta1"), n, "beta1");
  inst.beta0 = field("beta0", 0.0);
  inst.u_min = vec_from_json(j.at("u_min"), n, "u_min");
  inst.u_max = vec_from_json(j.at("u_max"), n, "u_max");
  inst.x_min = vec_from_json(j.at("x_min"), n, "x_min");
  inst.x_max = vec_from_json(j.at("x_max"), n, "x_max");
  inst.gamma2 = field("gamma2", 0.0);
  inst.gamma1 = field("gamma1", 0.0);
  inst.gamma0 = field("gamma0", 0.0);
  inst.validate();
  return inst;
}

void save_instance(const ProblemInstance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << instance_to_json(inst);
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

ProblemInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return instance_from_json(buf.str());
}

}  // namespace admmpc
