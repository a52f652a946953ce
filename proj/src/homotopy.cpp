#include "mpcckit/homotopy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace mpcckit {

void HomotopyOptions::validate() const {
  auto fail = [](const char* s) { throw std::invalid_argument(s); };
  if (!(kappa > 0.0 && kappa < 1.0)) fail("kappa must lie in (0, 1)");
  if (!(eta > 1.0)) fail("eta must exceed 1");
  if (!(sigma0 > 0.0)) fail("sigma0 must be positive");
  if (!(sigma_min > 0.0 && sigma_min < sigma0))
    fail("sigma_min must lie in (0, sigma0)");
  if (!(comp_tol > 0.0)) fail("comp_tol must be positive");
  if (max_homotopy_iters < 1) fail("max_homotopy_iters must be positive");
  if (!(total_time_budget > 0.0)) fail("time budget must be positive");
}

std::string_view to_string(HomotopyStatus s) {
  switch (s) {
    case HomotopyStatus::kSuccess: return "success";
    case HomotopyStatus::kNlpFailure: return "nlp_failure";
    case HomotopyStatus::kCompResidualStall: return "comp_residual_stall";
    case HomotopyStatus::kTimeOut: return "time_out";
    case HomotopyStatus::kMaxIters: return "max_iters";
  }
  return "?";
}

double update_sigma(double sigma, const HomotopyOptions& opts) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  const double lin = opts.kappa * sigma;
  if (opts.update_rule == SigmaUpdate::kLinear) return lin;
  return std::min(lin, std::pow(sigma, opts.eta));
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

bool nlp_usable(const KktSolution& s, double feas_tol) {
  if (s.converged()) return true;
  return s.status == NlpStatus::kStepFailure && s.small_step &&
         s.infeasibility <= feas_tol;
}

}  // namespace

HomotopyResult run_homotopy(const MpccProblem& prob, RelaxationKind kind,
                            SteeringMode mode, const VectorXd& x0,
                            const HomotopyOptions& opts) {
  opts.validate();
  if (x0.size() != prob.n)
    throw DimensionError("x0 has length " + std::to_string(x0.size()) +
                         ", expected " + std::to_string(prob.n));
  const auto t0 = Clock::now();
  auto elapsed = [&] { return elapsed_since(t0); };

  RelaxedNlp rel = build_relaxed_nlp(prob, kind, mode, opts.cck_lambda);
  const bool single = prob.m() == 0 || kind == RelaxationKind::kDirect;
  const int stages = single ? 1 : opts.max_homotopy_iters;

  HomotopyResult res;
  res.w = x0;
  bool have_best = false;
  double best_comp = std::numeric_limits<double>::infinity();

  auto adopt = [&](const KktSolution& sol, double comp, double feas) {
    res.x_relaxed = sol.x;
    res.w = sol.x.head(prob.n);
    res.kkt = sol;
    res.comp_residual = comp;
    res.feasibility = feas;
  };

  double sigma = opts.sigma0;
  VectorXd x = rel.initial_point(prob, x0, sigma);
  const KktSolution* warm = nullptr;
  KktSolution prev;
  bool ended = false;
  for (int k = 0; k < stages; ++k) {
    const double left = opts.total_time_budget - elapsed();
    if (left <= 0.0) {
      res.status = HomotopyStatus::kTimeOut;
      ended = true;
      break;
    }
    rel.set_sigma(sigma);
    if (k > 0 && rel.n_slack > 0) {
      x = rel.initial_point(prob, x.head(prob.n), sigma);
    }
    SolverOptions so = opts.solver;
    so.max_wall_time = std::min(so.max_wall_time, left);
    if (warm != nullptr) so.mu_init = opts.warm_mu_init;

    const auto ts = Clock::now();
    KktSolution sol = solve_nlp(rel.nlp, x, so, warm);
    if (warm != nullptr && !nlp_usable(sol, opts.feasibility_tol) &&
        sol.status != NlpStatus::kTimeOut) {
      // A warm start can sit on a saddle of the relaxed problem; one cold
      // retry from the same primal point with a fresh barrier usually
      // escapes it.
      SolverOptions cold = opts.solver;
      cold.max_wall_time = std::min(cold.max_wall_time, left - elapsed_since(ts));
      if (cold.max_wall_time > 0.0) {
        const int used = sol.iterations;
        sol = solve_nlp(rel.nlp, x, cold, nullptr);
        sol.iterations += used;
      }
    }
    const double dt = elapsed_since(ts);
    res.sigmas.push_back(sigma);
    res.stage_times.push_back(dt);
    res.nlp_time += dt;
    res.nlp_iterations += sol.iterations;
    res.last_nlp_status = sol.status;

    const VectorXd w = sol.x.head(prob.n);
    double comp = std::numeric_limits<double>::infinity();
    double feas = std::numeric_limits<double>::infinity();
    try {
      comp = comp_residual(prob, w);
      feas = feasibility_residual(prob, w);
    } catch (const DomainError&) {
    }
    res.stage_comp.push_back(comp);

    if (!nlp_usable(sol, opts.feasibility_tol)) {
      if (!have_best) adopt(sol, comp, feas);
      res.status = sol.status == NlpStatus::kTimeOut ? HomotopyStatus::kTimeOut
                                                     : HomotopyStatus::kNlpFailure;
      ended = true;
      break;
    }
    // Fresh evaluations decide success, not solver internals.
    if (comp <= opts.comp_tol && feas <= opts.feasibility_tol) {
      adopt(sol, comp, feas);
      res.status = HomotopyStatus::kSuccess;
      ended = true;
      break;
    }
    if (!have_best || comp < best_comp) {
      have_best = true;
      best_comp = comp;
      adopt(sol, comp, feas);
    }

    if (k + 1 < stages) {
      const double next = std::max(update_sigma(sigma, opts), opts.sigma_min);
      if (!(next < sigma)) break;  // sigma_min reached
      sigma = next;
    }
    x = sol.x;
    prev = std::move(sol);
    warm = &prev;
  }

  if (!ended) {
    // Loop exhausted without meeting the stopping rule. A residual that
    // still shrank by 10x over the last three stages counts as progress
    // cut short; anything else is a stall.
    const auto& c = res.stage_comp;
    bool progressing = false;
    if (c.size() >= 3) {
      const double before = c[c.size() - 3], last = c.back();
      progressing = std::isfinite(before) && last < 0.1 * before;
    }
    res.status = progressing ? HomotopyStatus::kMaxIters
                             : HomotopyStatus::kCompResidualStall;
    if (single) res.status = HomotopyStatus::kCompResidualStall;
  }
  try {
    res.objective = prob.objective(res.w);
  } catch (const DomainError&) {
    res.objective = std::numeric_limits<double>::quiet_NaN();
  }
  return res;
}

std::string_view to_string(FailureReason r) {
  switch (r) {
    case FailureReason::kSolved: return "solved";
    case FailureReason::kWorseThan2xBest: return "worse_than_2x_best";
    case FailureReason::kNlpInfeasible: return "nlp_infeasible";
    case FailureReason::kStepFailureInfeasible: return "step_failure_infeasible";
    case FailureReason::kCompResidualStall: return "comp_residual_stall";
    case FailureReason::kTimeOut: return "time_out";
    case FailureReason::kMaxIters: return "max_iters";
  }
  return "?";
}

FailureReason failure_reason_from_string(std::string_view s) {
  for (auto r : {FailureReason::kSolved, FailureReason::kWorseThan2xBest,
                 FailureReason::kNlpInfeasible,
                 FailureReason::kStepFailureInfeasible,
                 FailureReason::kCompResidualStall, FailureReason::kTimeOut,
                 FailureReason::kMaxIters})
    if (s == to_string(r)) return r;
  throw std::invalid_argument("unknown failure reason '" + std::string(s) + "'");
}

bool within_quality_bound(double f, double best) {
  if (!std::isfinite(f)) return false;
  if (best > 0.0 && std::fabs(best) >= 1e-6) return f <= 2.0 * best;
  return f <= best + std::max(std::fabs(best), 1e-6);
}

FailureReason classify_failure(const HomotopyResult& result,
                               std::optional<double> best_known) {
  switch (result.status) {
    case HomotopyStatus::kSuccess:
      if (best_known && !within_quality_bound(result.objective, *best_known))
        return FailureReason::kWorseThan2xBest;
      return FailureReason::kSolved;
    case HomotopyStatus::kTimeOut:
      return FailureReason::kTimeOut;
    case HomotopyStatus::kMaxIters:
      return FailureReason::kMaxIters;
    case HomotopyStatus::kCompResidualStall:
      return FailureReason::kCompResidualStall;
    case HomotopyStatus::kNlpFailure:
      switch (result.last_nlp_status) {
        case NlpStatus::kInfeasible: return FailureReason::kNlpInfeasible;
        case NlpStatus::kTimeOut: return FailureReason::kTimeOut;
        case NlpStatus::kMaxIter: return FailureReason::kMaxIters;
        default: return FailureReason::kStepFailureInfeasible;
      }
  }
  return FailureReason::kStepFailureInfeasible;
}

}  // namespace mpcckit
