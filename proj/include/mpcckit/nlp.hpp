#ifndef MPCCKIT_NLP_HPP
#define MPCCKIT_NLP_HPP

#include <string>
#include <string_view>

#include "mpcckit/expr.hpp"

namespace mpcckit {

// min f(x, p)  s.t.  lbc <= c(x, p) <= ubc,  lbx <= x <= ubx.
// Rows with lbc == ubc are equations; infinite entries mean "no bound".
struct SmoothNlp {
  VectorFunction objective;
  VectorFunction constraints;
  VectorXd lbc, ubc;
  VectorXd lbx, ubx;
  VectorXd p;

  int n() const { return objective.n_vars(); }
  int n_rows() const { return constraints.num_outputs(); }
  void validate() const;
};

enum class NlpStatus {
  kOptimal,
  kAcceptable,
  kInfeasible,
  kMaxIter,
  kTimeOut,
  kStepFailure,
};

std::string_view to_string(NlpStatus s);

struct SolverOptions {
  double tol = 1e-8;
  double acceptable_tol = 1e-6;
  int acceptable_iter = 15;
  int max_iter = 3000;
  double max_wall_time = 1e20;  // seconds
  double mu_init = 0.1;
  double bound_push = 1e-2;
  double bound_frac = 1e-2;
  // Must be at least as large as the equation residual that restoration
  // can leave behind on a feasible problem.
  double infeasibility_tol = 1e-6;
  int max_restorations = 10;
  int print_level = 0;  // 1 prints one line per iteration to stderr
  // After an optimal exit, guess the active set from the multipliers and
  // take Newton steps on the resulting equation system. The barrier leaves
  // the point about tol / z off its active constraints, which ill
  // conditioned active gradients turn into large multiplier errors. The
  // refined point is kept only if it is consistent and no worse.
  bool polish = true;
};

// Multiplier convention: grad f = J^T lambda + z_lower - z_upper, so a
// positive lambda_i means the lower side of row i is active and a negative
// one the upper side. Bound multipliers are non-negative.
struct KktSolution {
  VectorXd x;
  VectorXd lambda;
  VectorXd z_lower;
  VectorXd z_upper;
  VectorXd c;  // constraint values at x
  double objective = 0.0;
  NlpStatus status = NlpStatus::kStepFailure;
  double kkt_residual = 0.0;
  double infeasibility = 0.0;  // max bound violation of c and x
  int iterations = 0;
  int restorations = 0;
  // The solve ended because the search direction became negligible.
  bool small_step = false;
  double wall_time = 0.0;

  bool converged() const {
    return status == NlpStatus::kOptimal || status == NlpStatus::kAcceptable;
  }
  double lambda_lower(int i) const { return lambda[i] > 0 ? lambda[i] : 0.0; }
  double lambda_upper(int i) const { return lambda[i] < 0 ? -lambda[i] : 0.0; }
};

// Primal-dual interior-point method. `warm`, when given, supplies initial
// constraint and bound multipliers (its x is ignored in favour of x0).
KktSolution solve_nlp(const SmoothNlp& nlp, const VectorXd& x0,
                      const SolverOptions& opts = {},
                      const KktSolution* warm = nullptr);

// Same solver specialised to affine objective and constraints; throws
// std::invalid_argument if a nonzero second derivative shows up at x0.
// When x0 is empty the box midpoint (or 0) is used.
KktSolution solve_lp(const SmoothNlp& lp, const SolverOptions& opts = {},
                     const VectorXd& x0 = {});

}  // namespace mpcckit

#endif  // MPCCKIT_NLP_HPP
