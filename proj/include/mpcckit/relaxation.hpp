#ifndef MPCCKIT_RELAXATION_HPP
#define MPCCKIT_RELAXATION_HPP

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mpcckit/mpcc.hpp"
#include "mpcckit/nlp.hpp"

namespace mpcckit {

enum class RelaxationKind {
  kScholtes,
  kFischerBurmeister,
  kNaturalResidual,
  kChenChenKanzow,
  kLinFukushima,
  kSteffensenUlbrichPoly,
  kSteffensenUlbrichSine,
  kKadrani,
  kKanzowSchwartz,
  kDirect,
  kEll1Penalty,
};

enum class SteeringMode { kStandard, kEllInf, kEll1 };

// Lowercase names used on the command line and in result records.
std::string_view to_string(RelaxationKind k);
std::string_view to_string(SteeringMode m);
RelaxationKind relaxation_kind_from_string(std::string_view s);
SteeringMode steering_mode_from_string(std::string_view s);
const std::vector<RelaxationKind>& all_relaxation_kinds();

// True for kinds described by a single function Phi(a, b, sigma_hat) <= 0.
bool is_scalar_kind(RelaxationKind k);

inline constexpr double kDefaultCckLambda = 0.5;

double phi(RelaxationKind kind, double a, double b, double sigma_hat,
           double cck_lambda = kDefaultCckLambda);
std::pair<double, double> phi_grad(RelaxationKind kind, double a, double b,
                                   double sigma_hat,
                                   double cck_lambda = kDefaultCckLambda);
// Same function as graph nodes; sigma_hat may be a parameter or a variable.
Expr phi_expr(RelaxationKind kind, const Expr& a, const Expr& b,
              const Expr& sigma_hat, double cck_lambda = kDefaultCckLambda);

// The relaxation parameter whose zero set meets the diagonal a = b at
// (sqrt(sigma), sqrt(sigma)). DIRECT and ELL1_PENALTY return sigma.
double calibrate_sigma(RelaxationKind kind, double sigma,
                       double cck_lambda = kDefaultCckLambda);

enum class RowRole {
  kOriginal,   // a row of g
  kGLower,     // G_i >= 0, or G_i >= -sigma_hat for Kadrani
  kHLower,
  kPhi,        // the relaxed complementarity row
  kPhiOuter,   // second Lin-Fukushima row
};

struct RowInfo {
  RowRole role;
  int index;  // row of g for kOriginal, pair index otherwise
};

// Relaxed NLP over [w; slacks]. The last entry of nlp.p is the homotopy slot:
// sigma_hat in standard mode, the penalty weight 1/sigma in the ell modes
// and for ELL1_PENALTY.
struct RelaxedNlp {
  SmoothNlp nlp;
  RelaxationKind kind;
  SteeringMode mode;
  double cck_lambda = kDefaultCckLambda;
  int n_mpcc = 0;
  int n_slack = 0;
  std::vector<RowInfo> rows;

  int slot() const { return static_cast<int>(nlp.p.size()) - 1; }
  // Stores the value implied by the homotopy parameter sigma in the slot.
  void set_sigma(double sigma);
  double slot_value() const { return nlp.p[slot()]; }
  // Starting point for the relaxed NLP: w followed by slack initial values
  // max(slack_floor, current complementarity violation).
  VectorXd initial_point(const MpccProblem& prob, const VectorXd& w,
                         double slack_floor) const;
};

// Throws std::invalid_argument for combinations that are not defined
// (multi-row kinds in the ell modes).
RelaxedNlp build_relaxed_nlp(const MpccProblem& prob, RelaxationKind kind,
                             SteeringMode mode,
                             double cck_lambda = kDefaultCckLambda);

}  // namespace mpcckit

#endif  // MPCCKIT_RELAXATION_HPP
