#ifndef MPCCKIT_STATIONARITY_HPP
#define MPCCKIT_STATIONARITY_HPP

#include <optional>
#include <string_view>
#include <vector>

#include "mpcckit/mpcc.hpp"
#include "mpcckit/nlp.hpp"

namespace mpcckit {

enum class StationarityLabel { kW, kC, kM, kA, kS };
// Strongest concept a point satisfies. CA is "C and A"; ND means the tight
// NLP could not be matched to the point even after active-set repair.
enum class Strongest { kS, kM, kCA, kC, kA, kW, kND };
enum class BVerdict { kYes, kNo, kSkipped };

std::string_view to_string(StationarityLabel l);
std::string_view to_string(Strongest s);
std::string_view to_string(BVerdict v);
Strongest strongest_from_string(std::string_view s);
BVerdict b_verdict_from_string(std::string_view s);

// How a complementarity function enters a pair NLP.
enum class PairRow { kEqual, kNonneg };

// Where the multiplier of G_i (or H_i) lives in the solution of a pair NLP.
// Bare variables are handled through bounds instead of extra rows.
struct PairSlot {
  enum Where { kRow, kBound, kNone } where = kNone;
  int index = -1;  // constraint row or variable index
};

// The NLP obtained from the MPCC by replacing each pair with G_i = 0 or
// G_i >= 0 (same for H_i). Rows 0..n_g-1 are the original g rows.
struct PairNlp {
  SmoothNlp nlp;
  std::vector<PairSlot> g_slot, h_slot;
  IndexSets sets;

  // nu_i / xi_i in the convention grad f = ... + nu_i grad G_i + xi_i grad H_i.
  VectorXd nu(const KktSolution& sol) const;
  VectorXd xi(const KktSolution& sol) const;
};

PairNlp build_pair_nlp(const MpccProblem& prob,
                       const std::vector<PairRow>& g_rows,
                       const std::vector<PairRow>& h_rows);
// G_i = 0 on I0+ and I00, H_i = 0 on I+0 and I00, >= 0 elsewhere.
PairNlp build_tnlp(const MpccProblem& prob, const IndexSets& sets);
// Like the TNLP but with G_i, H_i >= 0 on I00.
PairNlp build_rnlp(const MpccProblem& prob, const IndexSets& sets);
// Branch NLP: for the k-th biactive pair, g_branch[k] selects G = 0, H >= 0
// (true) or H = 0, G >= 0 (false).
PairNlp build_bnlp(const MpccProblem& prob, const IndexSets& sets,
                   const std::vector<bool>& g_branch);

struct StationarityOptions {
  double tol_active = default_tol_active();
  double tol_sign = 1e-8;
  // The TNLP optimum must match f(pt) within max(abs, rel |f(pt)|).
  double obj_tol_abs = 1e-6;
  double obj_tol_rel = 1e-6;
  double feasibility_tol = 1e-5;
  SolverOptions solver;

  double trust_radius = 1e-2;
  double trust_radius_min = 1e-4;
  double tol_lp = 1e-9;
  int max_biactive = 20;
  bool parallel = true;  // solve branch LPs with OpenMP
};

struct MultiplierSigns {
  std::vector<StationarityLabel> labels;  // ascending enum order
  Strongest strongest = Strongest::kW;
};

// Sign tests on the biactive multipliers. nu and xi are indexed by pair.
MultiplierSigns classify_multipliers(const VectorXd& nu, const VectorXd& xi,
                                     const std::vector<int>& biactive,
                                     double tol_sign);

struct StationarityReport {
  IndexSets index_sets;
  NlpStatus tnlp_status = NlpStatus::kStepFailure;
  VectorXd nu, xi;
  std::vector<StationarityLabel> labels;
  Strongest strongest = Strongest::kND;
  BVerdict b_stationary = BVerdict::kSkipped;
  std::optional<VectorXd> descent_direction;
  double lpcc_value = 0.0;  // LPCC optimum at the radius that decided
  int active_set_repair_steps = 0;

  bool has(StationarityLabel l) const;
};

StationarityReport classify_point(const MpccProblem& prob, const VectorXd& pt,
                                  const StationarityOptions& opts = {});

struct BCheckResult {
  BVerdict verdict = BVerdict::kSkipped;
  std::optional<VectorXd> descent_direction;
  double lpcc_value = 0.0;
  int branches_solved = 0;
};

// LPCC over the linearized MPCC cone at pt, solved by enumerating the
// branches of the biactive pairs.
BCheckResult check_b_stationarity(const MpccProblem& prob, const VectorXd& pt,
                                  const IndexSets& sets,
                                  const StationarityOptions& opts = {});

// Linearized cone data at pt, shared with the brute-force test oracle.
struct LinearizedCone {
  VectorXd grad_f;
  MatrixXd eq;      // eq d = 0 (active equations, fixed variables, I0+/I+0)
  MatrixXd ineq;    // ineq d >= 0 (active inequality rows and bounds)
  MatrixXd bi_g, bi_h;  // rows grad G_i, grad H_i for the biactive pairs
};

LinearizedCone linearized_cone(const MpccProblem& prob, const VectorXd& pt,
                               const IndexSets& sets, double tol_active);
// Largest violation of the cone conditions at d (for the biactive pairs:
// both products >= 0 and min(|grad G d|, |grad H d|) = 0).
double cone_violation(const LinearizedCone& cone, const VectorXd& d);

// classify_point followed by the B-check.
StationarityReport analyze_point(const MpccProblem& prob, const VectorXd& pt,
                                 const StationarityOptions& opts = {});

}  // namespace mpcckit

#endif  // MPCCKIT_STATIONARITY_HPP
