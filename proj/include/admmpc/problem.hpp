#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace admmpc {

using Vec = Eigen::VectorXd;

/// Scalar-stage optimal control problem data:
///   x_{k+1} = a_k x_k + b_k(u_k),  k = 0..n-1
///   b_k(u)  = -beta2_k (d_k - u)^2 - beta1_k (d_k - u) - beta0_k
///   g_k(u)  = alpha2_k u^2 + alpha1_k u + alpha0_k        (input cost)
///   f_k(x)  = gamma2_k x^2 + gamma1_k x + gamma0_k        (cost on x_{k+1})
/// subject to per-stage boxes u_min/u_max on u_k and x_min/x_max on x_{k+1}.
struct ProblemInstance {
  int n = 0;
  double x0 = 0.0;
  Vec a;                          // dynamics coefficients, default all 1
  Vec d;                          // demand sequence
  Vec alpha2, alpha1, alpha0;     // input cost
  Vec beta2, beta1, beta0;        // input loss model
  Vec u_min, u_max;               // input box
  Vec x_min, x_max;               // state box, indexed by successor state
  Vec gamma2, gamma1, gamma0;     // optional state cost, default all 0

  /// Throws std::invalid_argument on length mismatches, inverted boxes, or
  /// negative alpha2/gamma2.
  void validate() const;

  bool identity_dynamics() const;
  bool has_state_cost() const;

  double b(int k, double u) const;
  double b_prime(int k, double u) const;
  double g(int k, double u) const;
  double g_prime(int k, double u) const;
  double f(int k, double x) const;        // cost attached to x_{k+1}
  double f_prime(int k, double x) const;

  Vec b_of(const Vec& u) const;
};

/// Condensed prediction operators for x = phi*x0 + psi*b(u), plus the cached
/// factorization used by the substitute update.
///
/// phi[k]    = prod_{i<=k} a_i (coefficient of x0 in x_{k+1})
/// psi(i,j)  = prod_{m=j+1..i} a_m for j < i, 1 on the diagonal.
///
/// All operator applications run in O(n) through the defining recursions; the
/// dense psi is materialized on first access, for diagnostics and the
/// general-coefficient factorization. An object belongs to a single solve (the
/// factorization cache and the lazily built psi are not synchronized).
class PredictionMatrices {
 public:
  explicit PredictionMatrices(const Vec& a);

  int n() const { return static_cast<int>(a_.size()); }
  bool identity_dynamics() const { return identity_; }
  const Vec& phi() const { return phi_; }
  const Eigen::MatrixXd& psi() const;

  Vec apply_psi(const Vec& v) const;
  Vec apply_psi_transpose(const Vec& w) const;
  /// phi*x0 + psi*v through the state recursion (one pass, any a).
  Vec free_response(double x0, const Vec& v) const;

  /// Builds (or rebuilds) the factorization of rho1*I + rho2*psi'*psi.
  /// For a == 1 this is the O(n) route psi^{-1} (rho1 D'D + rho2 I)^{-1} psi^{-T}
  /// with D the first-difference operator, factored once as tridiagonal LDL';
  /// otherwise a dense LLT of the n-by-n matrix.
  void prepare_v_solve(double rho1, double rho2);
  bool v_solve_ready(double rho1, double rho2) const;

  /// Solves (rho1*I + rho2*psi'*psi) v = rhs. Throws std::logic_error when the
  /// cache is missing or was prepared for different penalties.
  Vec v_solve(const Vec& rhs, double rho1, double rho2) const;

 private:
  Vec a_, phi_;
  mutable Eigen::MatrixXd psi_;
  mutable bool psi_built_ = false;
  bool identity_ = false;

  bool prepared_ = false;
  double cached_rho1_ = 0.0, cached_rho2_ = 0.0;
  Vec ldl_d_, ldl_l_;                 // tridiagonal LDL' factors (identity path)
  Eigen::LLT<Eigen::MatrixXd> llt_;   // dense factorization (general path)
};

/// Throws std::invalid_argument on an empty coefficient sequence.
PredictionMatrices build_prediction_matrices(const Vec& a);

double eval_objective(const ProblemInstance& inst, const Vec& u, const Vec& x);

/// Recursive rollout x_{k+1} = a_k x_k + b_k(u_k); agrees with the matrix form
/// to machine precision.
Vec rollout(const ProblemInstance& inst, const Vec& u);

struct BoundViolation {
  int stage;
  char variable;   // 'u' or 'x'
  double amount;   // beyond tol
};

struct FeasibilityReport {
  std::vector<BoundViolation> violations;
  double dynamics_defect = 0.0;   // ||x - phi*x0 - psi*b(u)||_inf
  bool feasible(double defect_tol = 1e-9) const {
    return violations.empty() && dynamics_defect <= defect_tol;
  }
};

FeasibilityReport check_feasibility(const ProblemInstance& inst, const Vec& u,
                                    const Vec& x, double tol);

/// Random instance family: d_k ~ U[-1,1]; alpha2_k, beta2_k ~ U[0,0.1];
/// alpha1_k, beta1_k ~ U[0,1]; alpha0 = beta0 = 0; x0 ~ U[-0.5,0.5];
/// u bounds +-0.5, x bounds +-2, a = 1, gamma = 0.
///
/// Draw order is frozen for reproducibility: all d_k first (k ascending), then
/// per stage k the tuple (alpha2_k, alpha1_k, beta2_k, beta1_k), then x0.
ProblemInstance generate_random_instance(std::uint64_t seed, int n);

/// Flat JSON document with the exact field names of ProblemInstance
/// (key "n" plus scalar x0 and per-stage arrays). Omitted optional arrays
/// default as documented: a -> 1, alpha0/beta0/gamma* -> 0.
std::string instance_to_json(const ProblemInstance& inst);
ProblemInstance instance_from_json(const std::string& text);
void save_instance(const ProblemInstance& inst, const std::string& path);
ProblemInstance load_instance(const std::string& path);

}  // namespace admmpc
