#include "mpcckit/relaxation.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include <boost/math/tools/roots.hpp>

namespace mpcckit {

namespace {

struct KindName {
  RelaxationKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {RelaxationKind::kScholtes, "scholtes"},
    {RelaxationKind::kFischerBurmeister, "fb"},
    {RelaxationKind::kNaturalResidual, "nr"},
    {RelaxationKind::kChenChenKanzow, "cck"},
    {RelaxationKind::kLinFukushima, "lf"},
    {RelaxationKind::kSteffensenUlbrichPoly, "su-poly"},
    {RelaxationKind::kSteffensenUlbrichSine, "su-sine"},
    {RelaxationKind::kKadrani, "kadrani"},
    {RelaxationKind::kKanzowSchwartz, "ks"},
    {RelaxationKind::kDirect, "direct"},
    {RelaxationKind::kEll1Penalty, "ell1-penalty"},
};

constexpr double kPi = std::numbers::pi;

void require_scalar(RelaxationKind kind) {
  if (!is_scalar_kind(kind)) {
    throw std::invalid_argument("relaxation kind '" +
                                std::string(to_string(kind)) +
                                "' has no single Phi function");
  }
}

// Overloads so that the row templates below work for double and Expr.
double emin(double a, double b) { return a <= b ? a : b; }
double emax(double a, double b) { return a >= b ? a : b; }
Expr emin(const Expr& a, const Expr& b) { return min(a, b); }
Expr emax(const Expr& a, const Expr& b) { return max(a, b); }
double esqrt(double a) { return std::sqrt(a); }
Expr esqrt(const Expr& a) { return sqrt(a); }
double esin(double a) { return std::sin(a); }
Expr esin(const Expr& a) { return sin(a); }
double eabs(double a) { return std::fabs(a); }
Expr eabs(const Expr& a) { return abs(a); }

template <typename T>
T su_inner(RelaxationKind kind, const T& u) {
  if (kind == RelaxationKind::kSteffensenUlbrichPoly)
    return (-1.0 * (u * u * u * u) + 6.0 * (u * u) + 3.0) * 0.125;
  return (2.0 / kPi) * esin(u * (kPi / 2.0) + 1.5 * kPi) + 1.0;
}

// Branch-free forms of Phi. For SU the clamp zc = max(-s, min(z, s)) gives
// |z| - |zc| + s phi_b(zc / s), which equals |z| outside [-s, s] and
// s phi_b(z / s) inside. For KS, with S = y1 + y2 and D = y1 - y2, both
// pieces collapse to (S|S| - D^2) / 4.
template <typename T>
T phi_generic(RelaxationKind kind, const T& a, const T& b, const T& s,
              double lam) {
  switch (kind) {
    case RelaxationKind::kScholtes:
      return a * b - s;
    case RelaxationKind::kFischerBurmeister:
      return a + b - esqrt(a * a + b * b + s * s);
    case RelaxationKind::kNaturalResidual:
      return a + b - esqrt((a - b) * (a - b) + s * s);
    case RelaxationKind::kChenChenKanzow:
      return lam * (a + b - esqrt(a * a + b * b + s * s)) +
             (1.0 - lam) * (a * b - s);
    case RelaxationKind::kSteffensenUlbrichPoly:
    case RelaxationKind::kSteffensenUlbrichSine: {
      const T z = a - b;
      const T zc = emax(-1.0 * s, emin(z, s));
      return a + b - (eabs(z) - eabs(zc) + s * su_inner(kind, zc / s));
    }
    case RelaxationKind::kKanzowSchwartz: {
      const T y1 = a - s, y2 = b - s;
      const T sum = y1 + y2, diff = y1 - y2;
      return 0.25 * (sum * eabs(sum) - diff * diff);
    }
    default:
      break;
  }
  require_scalar(kind);
  return T(0.0);
}

}  // namespace

std::string_view to_string(RelaxationKind k) {
  for (const auto& e : kKindNames)
    if (e.kind == k) return e.name;
  return "?";
}

std::string_view to_string(SteeringMode m) {
  switch (m) {
    case SteeringMode::kStandard: return "standard";
    case SteeringMode::kEllInf: return "ell-inf";
    case SteeringMode::kEll1: return "ell-1";
  }
  return "?";
}

RelaxationKind relaxation_kind_from_string(std::string_view s) {
  for (const auto& e : kKindNames)
    if (s == e.name) return e.kind;
  throw std::invalid_argument("unknown relaxation kind '" + std::string(s) +
                              "'");
}

SteeringMode steering_mode_from_string(std::string_view s) {
  for (auto m : {SteeringMode::kStandard, SteeringMode::kEllInf,
                 SteeringMode::kEll1})
    if (s == to_string(m)) return m;
  throw std::invalid_argument("unknown steering mode '" + std::string(s) +
                              "'");
}

const std::vector<RelaxationKind>& all_relaxation_kinds() {
  static const std::vector<RelaxationKind> kinds = [] {
    std::vector<RelaxationKind> v;
    for (const auto& e : kKindNames) v.push_back(e.kind);
    return v;
  }();
  return kinds;
}

bool is_scalar_kind(RelaxationKind k) {
  switch (k) {
    case RelaxationKind::kLinFukushima:
    case RelaxationKind::kKadrani:
    case RelaxationKind::kDirect:
    case RelaxationKind::kEll1Penalty:
      return false;
    default:
      return true;
  }
}

double phi(RelaxationKind kind, double a, double b, double sh, double lam) {
  require_scalar(kind);
  switch (kind) {
    case RelaxationKind::kSteffensenUlbrichPoly:
    case RelaxationKind::kSteffensenUlbrichSine: {
      const double z = a - b;
      const double pa = std::fabs(z) >= sh ? std::fabs(z)
                                           : sh * su_inner(kind, z / sh);
      return a + b - pa;
    }
    case RelaxationKind::kKanzowSchwartz: {
      const double y1 = a - sh, y2 = b - sh;
      return y1 + y2 >= 0.0 ? y1 * y2 : -0.5 * (y1 * y1 + y2 * y2);
    }
    default:
      return phi_generic<double>(kind, a, b, sh, lam);
  }
}

std::pair<double, double> phi_grad(RelaxationKind kind, double a, double b,
                                   double sh, double lam) {
  require_scalar(kind);
  auto fb_grad = [&]() -> std::pair<double, double> {
    const double r = std::sqrt(a * a + b * b + sh * sh);
    if (r == 0.0) throw std::domain_error("FB gradient undefined at origin");
    return {1.0 - a / r, 1.0 - b / r};
  };
  switch (kind) {
    case RelaxationKind::kScholtes:
      return {b, a};
    case RelaxationKind::kFischerBurmeister:
      return fb_grad();
    case RelaxationKind::kNaturalResidual: {
      const double r = std::sqrt((a - b) * (a - b) + sh * sh);
      if (r == 0.0) throw std::domain_error("NR gradient undefined");
      return {1.0 - (a - b) / r, 1.0 + (a - b) / r};
    }
    case RelaxationKind::kChenChenKanzow: {
      const auto [ga, gb] = fb_grad();
      return {lam * ga + (1.0 - lam) * b, lam * gb + (1.0 - lam) * a};
    }
    case RelaxationKind::kSteffensenUlbrichPoly:
    case RelaxationKind::kSteffensenUlbrichSine: {
      const double z = a - b;
      double dpa;
      if (std::fabs(z) >= sh) {
        dpa = z > 0.0 ? 1.0 : (z < 0.0 ? -1.0 : 0.0);
      } else {
        const double u = z / sh;
        dpa = kind == RelaxationKind::kSteffensenUlbrichPoly
                  ? 0.5 * (3.0 * u - u * u * u)
                  : std::sin(u * kPi / 2.0);
      }
      return {1.0 - dpa, 1.0 + dpa};
    }
    case RelaxationKind::kKanzowSchwartz: {
      const double y1 = a - sh, y2 = b - sh;
      if (y1 + y2 >= 0.0) return {y2, y1};
      return {-y1, -y2};
    }
    default:
      break;
  }
  return {0.0, 0.0};
}

Expr phi_expr(RelaxationKind kind, const Expr& a, const Expr& b,
              const Expr& sh, double lam) {
  require_scalar(kind);
  return phi_generic<Expr>(kind, a, b, sh, lam);
}

double calibrate_sigma(RelaxationKind kind, double sigma, double lam) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  const double t = std::sqrt(sigma);
  switch (kind) {
    case RelaxationKind::kScholtes:
    case RelaxationKind::kDirect:
    case RelaxationKind::kEll1Penalty:
      return sigma;
    case RelaxationKind::kFischerBurmeister:
      return std::sqrt(2.0 * sigma);
    case RelaxationKind::kNaturalResidual:
      return 2.0 * t;
    case RelaxationKind::kLinFukushima:
    case RelaxationKind::kKadrani:
    case RelaxationKind::kKanzowSchwartz:
      return t;
    case RelaxationKind::kSteffensenUlbrichPoly:
      return 16.0 * t / 3.0;
    case RelaxationKind::kSteffensenUlbrichSine:
      return 2.0 * t / (1.0 - 2.0 / kPi);
    case RelaxationKind::kChenChenKanzow: {
      // Phi_CCK(t, t, s) decreases strictly in s, positive at s = 0.
      auto f = [&](double s) { return phi(kind, t, t, s, lam); };
      double hi = std::max(1.0, sigma);
      int grow = 0;
      while (f(hi) > 0.0) {
        hi *= 2.0;
        if (++grow > 200) throw std::runtime_error("CCK calibration bracket");
      }
      std::uintmax_t max_iter = 200;
      boost::math::tools::eps_tolerance<double> tol(50);
      const auto [lo_r, hi_r] =
          boost::math::tools::toms748_solve(f, 0.0, hi, f(0.0), f(hi), tol,
                                            max_iter);
      return 0.5 * (lo_r + hi_r);
    }
  }
  return sigma;
}

// ---------------------------------------------------------------------------

void RelaxedNlp::set_sigma(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  double v;
  if (kind == RelaxationKind::kEll1Penalty || mode != SteeringMode::kStandard)
    v = 1.0 / sigma;
  else
    v = calibrate_sigma(kind, sigma, cck_lambda);
  nlp.p[slot()] = v;
}

VectorXd RelaxedNlp::initial_point(const MpccProblem& prob, const VectorXd& w,
                                   double slack_floor) const {
  VectorXd x(n_mpcc + n_slack);
  x.head(n_mpcc) = w;
  if (n_slack == 0) return x;
  VectorXd viol = VectorXd::Zero(prob.m());
  try {
    const VectorXd G = prob.eval_G(w), H = prob.eval_H(w);
    for (int i = 0; i < prob.m(); ++i) {
      const double pos_g = std::max(G[i], 0.0), pos_h = std::max(H[i], 0.0);
      viol[i] = std::max(0.0, phi(kind, pos_g, pos_h, 0.0, cck_lambda));
    }
  } catch (const DomainError&) {
  }
  if (mode == SteeringMode::kEllInf) {
    x[n_mpcc] = std::max(slack_floor, viol.size() ? viol.maxCoeff() : 0.0);
  } else {
    for (int i = 0; i < n_slack; ++i)
      x[n_mpcc + i] = std::max(slack_floor, viol[i]);
  }
  return x;
}

namespace {

bool is_nonneg_variable(const MpccProblem& prob, const Expr& e) {
  return e.kind() == OpKind::kVariable && prob.lbw[e.index()] >= 0.0;
}

}  // namespace

RelaxedNlp build_relaxed_nlp(const MpccProblem& prob, RelaxationKind kind,
                             SteeringMode mode, double cck_lambda) {
  if (!(cck_lambda > 0.0 && cck_lambda < 1.0))
    throw std::invalid_argument("cck_lambda must lie in (0, 1)");
  const bool mode_free =
      kind == RelaxationKind::kDirect || kind == RelaxationKind::kEll1Penalty;
  if (mode != SteeringMode::kStandard && !mode_free && !is_scalar_kind(kind)) {
    throw std::invalid_argument(
        "relaxation '" + std::string(to_string(kind)) +
        "' is not defined for steering mode '" + std::string(to_string(mode)) +
        "'");
  }
  if (mode_free) mode = SteeringMode::kStandard;

  const int n = prob.n;
  const int m = prob.m();
  const int np = prob.n_params();
  RelaxedNlp r;
  r.kind = kind;
  r.mode = mode;
  r.cck_lambda = cck_lambda;
  r.n_mpcc = n;
  if (kind != RelaxationKind::kEll1Penalty && m > 0) {
    if (mode == SteeringMode::kEllInf) r.n_slack = 1;
    if (mode == SteeringMode::kEll1) r.n_slack = m;
  }
  const int nx = n + r.n_slack;
  const Expr slot = Expr::parameter(np);

  std::vector<Expr> rows;
  std::vector<double> lo, hi;
  auto add_row = [&](Expr e, double l, double u, RowRole role, int idx) {
    rows.push_back(std::move(e));
    lo.push_back(l);
    hi.push_back(u);
    r.rows.push_back({role, idx});
  };
  for (int j = 0; j < prob.n_g(); ++j)
    add_row(prob.g.output(j), prob.lbg[j], prob.ubg[j], RowRole::kOriginal, j);

  Expr objective = prob.f.output(0);
  std::vector<Expr> penalty_terms;
  for (int i = 0; i < m; ++i) {
    const Expr& G = prob.G.output(i);
    const Expr& H = prob.H.output(i);
    auto nonneg_rows = [&]() {
      // A bare variable with a non-negative lower bound is already covered
      // by its bound; a duplicate row would only add degeneracy.
      if (!is_nonneg_variable(prob, G)) add_row(G, 0.0, kInf, RowRole::kGLower, i);
      if (!is_nonneg_variable(prob, H)) add_row(H, 0.0, kInf, RowRole::kHLower, i);
    };
    Expr sh = slot;
    if (mode == SteeringMode::kEllInf) sh = Expr::variable(n);
    if (mode == SteeringMode::kEll1) sh = Expr::variable(n + i);

    switch (kind) {
      case RelaxationKind::kDirect:
        nonneg_rows();
        add_row(G * H, -kInf, 0.0, RowRole::kPhi, i);
        break;
      case RelaxationKind::kEll1Penalty:
        nonneg_rows();
        penalty_terms.push_back(G * H);
        break;
      case RelaxationKind::kLinFukushima:
        add_row(G * H - sh * sh, -kInf, 0.0, RowRole::kPhi, i);
        add_row((G + sh) * (H + sh) - sh * sh, 0.0, kInf, RowRole::kPhiOuter,
                i);
        break;
      case RelaxationKind::kKadrani:
        add_row(G + sh, 0.0, kInf, RowRole::kGLower, i);
        add_row(H + sh, 0.0, kInf, RowRole::kHLower, i);
        add_row((G - sh) * (H - sh), -kInf, 0.0, RowRole::kPhi, i);
        break;
      default:
        nonneg_rows();
        add_row(phi_expr(kind, G, H, sh, cck_lambda), -kInf, 0.0,
                RowRole::kPhi, i);
        break;
    }
  }
  if (kind == RelaxationKind::kEll1Penalty && m > 0)
    objective = objective + slot * sum(penalty_terms);
  if (r.n_slack > 0) {
    std::vector<Expr> s;
    for (int k = 0; k < r.n_slack; ++k) s.push_back(Expr::variable(n + k));
    objective = objective + slot * sum(s);
  }

  // Expressions over w only refer to indices < n, which remain valid.
  r.nlp.objective = VectorFunction({objective}, nx, np + 1);
  r.nlp.constraints = VectorFunction(rows, nx, np + 1);
  r.nlp.lbc = Eigen::Map<const VectorXd>(lo.data(), lo.size());
  r.nlp.ubc = Eigen::Map<const VectorXd>(hi.data(), hi.size());
  r.nlp.lbx.resize(nx);
  r.nlp.ubx.resize(nx);
  r.nlp.lbx << prob.lbw, VectorXd::Zero(r.n_slack);
  r.nlp.ubx << prob.ubw, VectorXd::Constant(r.n_slack, kInf);
  r.nlp.p.resize(np + 1);
  r.nlp.p << prob.p, 1.0;
  r.set_sigma(1.0);
  r.nlp.validate();
  return r;
}

}  // namespace mpcckit
