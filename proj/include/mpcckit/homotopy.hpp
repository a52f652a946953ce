#ifndef MPCCKIT_HOMOTOPY_HPP
#define MPCCKIT_HOMOTOPY_HPP

#include <optional>
#include <string_view>
#include <vector>

#include "mpcckit/mpcc.hpp"
#include "mpcckit/nlp.hpp"
#include "mpcckit/relaxation.hpp"

namespace mpcckit {

enum class SigmaUpdate { kLinear, kMinPower };

struct HomotopyOptions {
  double sigma0 = 1.0;
  double kappa = 0.1;
  double eta = 1.5;
  SigmaUpdate update_rule = SigmaUpdate::kLinear;
  double comp_tol = kDefaultCompTol;
  double sigma_min = 1e-13;
  int max_homotopy_iters = 14;
  double total_time_budget = 3600.0;  // seconds
  // Post-hoc check applied to the MPCC at the candidate point.
  double feasibility_tol = 1e-8;  // tighter than the 1e-6 post-hoc bound; LF and Kadrani sit at G ~ -sigma_hat
  // Barrier parameter used for warm-started stages after the first.
  double warm_mu_init = 1e-3;
  double cck_lambda = kDefaultCckLambda;
  SolverOptions solver;

  void validate() const;
};

enum class HomotopyStatus {
  kSuccess,
  kNlpFailure,
  kCompResidualStall,
  kTimeOut,
  kMaxIters,
};

std::string_view to_string(HomotopyStatus s);

struct HomotopyResult {
  VectorXd w;            // final MPCC point (best so far unless SUCCESS)
  VectorXd x_relaxed;    // corresponding relaxed-NLP point
  KktSolution kkt;       // NLP solution the point came from
  NlpStatus last_nlp_status = NlpStatus::kStepFailure;
  std::vector<double> sigmas;       // one entry per stage solved
  std::vector<double> stage_times;  // seconds per stage
  std::vector<double> stage_comp;   // complementarity residual per stage
  double nlp_time = 0.0;            // sum of stage_times
  double comp_residual = 0.0;
  double feasibility = 0.0;
  double objective = 0.0;
  int nlp_iterations = 0;
  HomotopyStatus status = HomotopyStatus::kNlpFailure;

  bool success() const { return status == HomotopyStatus::kSuccess; }
};

double update_sigma(double sigma, const HomotopyOptions& opts);

HomotopyResult run_homotopy(const MpccProblem& prob, RelaxationKind kind,
                            SteeringMode mode, const VectorXd& x0,
                            const HomotopyOptions& opts = {});

enum class FailureReason {
  kSolved,
  kWorseThan2xBest,
  kNlpInfeasible,
  kStepFailureInfeasible,
  kCompResidualStall,
  kTimeOut,
  kMaxIters,
};

std::string_view to_string(FailureReason r);
FailureReason failure_reason_from_string(std::string_view s);

// The objective-quality rule: f <= 2 f_best for f_best > 0 (and not tiny),
// otherwise f <= f_best + max(|f_best|, 1e-6).
bool within_quality_bound(double f, double best_known);

FailureReason classify_failure(const HomotopyResult& result,
                               std::optional<double> best_known_objective);

}  // namespace mpcckit

#endif  // MPCCKIT_HOMOTOPY_HPP
