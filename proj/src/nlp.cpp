#include "mpcckit/nlp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>

#include <Eigen/LU>

#include "mpcckit/dense_ldl.hpp"

namespace mpcckit {

std::string_view to_string(NlpStatus s) {
  switch (s) {
    case NlpStatus::kOptimal: return "optimal";
    case NlpStatus::kAcceptable: return "acceptable";
    case NlpStatus::kInfeasible: return "infeasible";
    case NlpStatus::kMaxIter: return "max_iter";
    case NlpStatus::kTimeOut: return "time_out";
    case NlpStatus::kStepFailure: return "step_failure";
  }
  return "?";
}

void SmoothNlp::validate() const {
  const int nx = n();
  auto fail = [](const std::string& s) { throw std::invalid_argument(s); };
  if (objective.num_outputs() != 1) fail("objective must have one output");
  if (constraints.num_outputs() > 0 && constraints.n_vars() != nx)
    fail("constraints and objective disagree on variable count");
  if (objective.n_params() != p.size() ||
      (constraints.num_outputs() > 0 && constraints.n_params() != p.size()))
    fail("parameter vector length mismatch");
  if (lbx.size() != nx || ubx.size() != nx) fail("variable bounds length");
  if (lbc.size() != n_rows() || ubc.size() != n_rows())
    fail("constraint bounds length");
  for (int i = 0; i < nx; ++i)
    if (!(lbx[i] <= ubx[i])) fail("lbx > ubx at " + std::to_string(i));
  for (int i = 0; i < n_rows(); ++i)
    if (!(lbc[i] <= ubc[i])) fail("lbc > ubc at " + std::to_string(i));
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Problem seen by the interior-point core:
//   min f(z)  s.t.  ce(z) = 0,  l <= z <= u.
class IpProblem {
 public:
  virtual ~IpProblem() = default;
  virtual int nz() const = 0;
  virtual int nc() const = 0;
  virtual const VectorXd& lower() const = 0;
  virtual const VectorXd& upper() const = 0;
  virtual double objective(const VectorXd& z) const = 0;
  virtual VectorXd gradient(const VectorXd& z) const = 0;
  virtual VectorXd constraints(const VectorXd& z) const = 0;
  virtual MatrixXd jacobian(const VectorXd& z) const = 0;
  // Hessian of obj_factor * f + y^T ce.
  virtual MatrixXd hessian(const VectorXd& z, double obj_factor,
                           const VectorXd& y) const = 0;
};

// SmoothNlp with a slack for every non-equation row (c_r - s_k = 0 with the
// row bounds moved onto s_k) and fixed variables turned into equations.
class SlackedNlp final : public IpProblem {
 public:
  explicit SlackedNlp(const SmoothNlp& nlp) : nlp_(nlp) {
    n_ = nlp.n();
    rows_ = nlp.n_rows();
    slack_of_row_.assign(rows_, -1);
    for (int r = 0; r < rows_; ++r)
      if (nlp.lbc[r] != nlp.ubc[r]) slack_of_row_[r] = n_slack_++;
    for (int i = 0; i < n_; ++i)
      if (nlp.lbx[i] == nlp.ubx[i]) fixed_.push_back(i);
    const int nzv = n_ + n_slack_;
    lo_.resize(nzv);
    up_.resize(nzv);
    for (int i = 0; i < n_; ++i) {
      lo_[i] = nlp.lbx[i];
      up_[i] = nlp.ubx[i];
    }
    for (int i : fixed_) {
      lo_[i] = -kInfD;
      up_[i] = kInfD;
    }
    for (int r = 0; r < rows_; ++r) {
      const int k = slack_of_row_[r];
      if (k < 0) continue;
      lo_[n_ + k] = nlp.lbc[r];
      up_[n_ + k] = nlp.ubc[r];
    }
  }

  int nz() const override { return n_ + n_slack_; }
  int nc() const override { return rows_ + static_cast<int>(fixed_.size()); }
  const VectorXd& lower() const override { return lo_; }
  const VectorXd& upper() const override { return up_; }
  int n() const { return n_; }
  int rows() const { return rows_; }
  const std::vector<int>& fixed() const { return fixed_; }
  int slack_of_row(int r) const { return slack_of_row_[r]; }

  double objective(const VectorXd& z) const override {
    return nlp_.objective.eval(z.head(n_), nlp_.p)[0];
  }
  VectorXd gradient(const VectorXd& z) const override {
    VectorXd g = VectorXd::Zero(nz());
    g.head(n_) = nlp_.objective.jacobian(z.head(n_), nlp_.p).row(0).transpose();
    return g;
  }
  VectorXd row_values(const VectorXd& x) const {
    if (rows_ == 0) return VectorXd(0);
    return nlp_.constraints.eval(x, nlp_.p);
  }
  VectorXd constraints(const VectorXd& z) const override {
    VectorXd ce(nc());
    const VectorXd c = row_values(z.head(n_));
    for (int r = 0; r < rows_; ++r) {
      const int k = slack_of_row_[r];
      ce[r] = k < 0 ? c[r] - nlp_.lbc[r] : c[r] - z[n_ + k];
    }
    for (size_t j = 0; j < fixed_.size(); ++j)
      ce[rows_ + j] = z[fixed_[j]] - nlp_.lbx[fixed_[j]];
    return ce;
  }
  MatrixXd jacobian(const VectorXd& z) const override {
    MatrixXd a = MatrixXd::Zero(nc(), nz());
    if (rows_ > 0) a.topLeftCorner(rows_, n_) =
        nlp_.constraints.jacobian(z.head(n_), nlp_.p);
    for (int r = 0; r < rows_; ++r) {
      const int k = slack_of_row_[r];
      if (k >= 0) a(r, n_ + k) = -1.0;
    }
    for (size_t j = 0; j < fixed_.size(); ++j) a(rows_ + j, fixed_[j]) = 1.0;
    return a;
  }
  MatrixXd hessian(const VectorXd& z, double obj_factor,
                   const VectorXd& y) const override {
    MatrixXd h = MatrixXd::Zero(nz(), nz());
    MatrixXd hx = MatrixXd::Zero(n_, n_);
    const VectorXd x = z.head(n_);
    if (obj_factor != 0.0) {
      VectorXd w(1);
      w[0] = obj_factor;
      nlp_.objective.add_weighted_hessian(x, nlp_.p, w, hx);
    }
    if (rows_ > 0) {
      nlp_.constraints.add_weighted_hessian(x, nlp_.p, y.head(rows_), hx);
    }
    h.topLeftCorner(n_, n_) = hx;
    return h;
  }

 private:
  static constexpr double kInfD = std::numeric_limits<double>::infinity();
  const SmoothNlp& nlp_;
  int n_ = 0, rows_ = 0, n_slack_ = 0;
  std::vector<int> slack_of_row_;
  std::vector<int> fixed_;
  VectorXd lo_, up_;
};

// Feasibility restoration problem over [z; p; n]:
//   min rho * sum(p + n) + zeta/2 * ||D (z - zR)||^2
//   s.t. ce(z) - p + n = 0,  bounds of z,  p, n >= 0.
class RestorationProblem final : public IpProblem {
 public:
  RestorationProblem(const IpProblem& inner, VectorXd z_ref, double rho,
                     double zeta)
      : inner_(inner), zr_(std::move(z_ref)), rho_(rho), zeta_(zeta) {
    const int nzi = inner.nz(), nci = inner.nc();
    d2_.resize(nzi);
    for (int i = 0; i < nzi; ++i) {
      const double d = std::min(1.0, 1.0 / std::max(1e-300, std::fabs(zr_[i])));
      d2_[i] = d * d;
    }
    lo_.resize(nzi + 2 * nci);
    up_.resize(nzi + 2 * nci);
    lo_ << inner.lower(), VectorXd::Zero(2 * nci);
    up_ << inner.upper(),
        VectorXd::Constant(2 * nci, std::numeric_limits<double>::infinity());
  }

  int nz() const override { return inner_.nz() + 2 * inner_.nc(); }
  int nc() const override { return inner_.nc(); }
  const VectorXd& lower() const override { return lo_; }
  const VectorXd& upper() const override { return up_; }

  double objective(const VectorXd& v) const override {
    const int nzi = inner_.nz(), nci = inner_.nc();
    const VectorXd dz = v.head(nzi) - zr_;
    return rho_ * v.tail(2 * nci).sum() +
           0.5 * zeta_ * (d2_.array() * dz.array().square()).sum();
  }
  VectorXd gradient(const VectorXd& v) const override {
    const int nzi = inner_.nz(), nci = inner_.nc();
    VectorXd g(nz());
    g.head(nzi) = zeta_ * d2_.cwiseProduct(v.head(nzi) - zr_);
    g.tail(2 * nci).setConstant(rho_);
    return g;
  }
  VectorXd constraints(const VectorXd& v) const override {
    const int nzi = inner_.nz(), nci = inner_.nc();
    return inner_.constraints(v.head(nzi)) - v.segment(nzi, nci) +
           v.tail(nci);
  }
  MatrixXd jacobian(const VectorXd& v) const override {
    const int nzi = inner_.nz(), nci = inner_.nc();
    MatrixXd a = MatrixXd::Zero(nci, nz());
    a.leftCols(nzi) = inner_.jacobian(v.head(nzi));
    a.block(0, nzi, nci, nci) = -MatrixXd::Identity(nci, nci);
    a.block(0, nzi + nci, nci, nci) = MatrixXd::Identity(nci, nci);
    return a;
  }
  MatrixXd hessian(const VectorXd& v, double obj_factor,
                   const VectorXd& y) const override {
    const int nzi = inner_.nz();
    MatrixXd h = MatrixXd::Zero(nz(), nz());
    h.topLeftCorner(nzi, nzi) = inner_.hessian(v.head(nzi), 0.0, y);
    for (int i = 0; i < nzi; ++i) h(i, i) += obj_factor * zeta_ * d2_[i];
    return h;
  }

 private:
  const IpProblem& inner_;
  VectorXd zr_;
  double rho_, zeta_;
  VectorXd d2_;
  VectorXd lo_, up_;
};

struct IpState {
  VectorXd z, y, zl, zu;
};

struct IpOutcome {
  IpState st;
  NlpStatus status = NlpStatus::kStepFailure;
  double kkt = 0.0;
  int iterations = 0;
  int restorations = 0;
  bool early_stopped = false;
  bool small_step = false;
  double mu = 0.0;
};

struct IpControl {
  const SolverOptions* opt = nullptr;
  Clock::time_point t0;
  double budget = 1e20;
  double mu_init = 0.1;
  bool allow_restoration = true;
  int iteration_offset = 0;
  // Checked after every accepted step; returning true ends the solve.
  std::function<bool(const VectorXd&)> early_stop;
};

constexpr double kKappaEps = 10.0;
constexpr double kKappaMu = 0.2;
constexpr double kThetaMu = 1.5;
constexpr double kKappaSigma = 1e10;
constexpr double kKappaDamp = 1e-5;
constexpr double kArmijo = 1e-4;
constexpr double kRhoPenalty = 0.1;
constexpr int kStallIters = 25;
constexpr double kRunawayMultiplier = 1e6;

// Pushes z strictly inside its bounds.
VectorXd push_interior(const VectorXd& z0, const VectorXd& l,
                       const VectorXd& u, double k1, double k2) {
  VectorXd z = z0;
  for (int i = 0; i < z.size(); ++i) {
    const bool hl = std::isfinite(l[i]), hu = std::isfinite(u[i]);
    if (!std::isfinite(z[i])) z[i] = 0.0;
    if (hl && hu) {
      const double pl = std::min(k1 * std::max(1.0, std::fabs(l[i])),
                                 k2 * (u[i] - l[i]));
      const double pu = std::min(k1 * std::max(1.0, std::fabs(u[i])),
                                 k2 * (u[i] - l[i]));
      z[i] = std::clamp(z[i], l[i] + pl, u[i] - pu);
    } else if (hl) {
      z[i] = std::max(z[i], l[i] + k1 * std::max(1.0, std::fabs(l[i])));
    } else if (hu) {
      z[i] = std::min(z[i], u[i] - k1 * std::max(1.0, std::fabs(u[i])));
    }
  }
  return z;
}

// Largest alpha in (0, 1] with v + alpha dv >= (1 - tau) v on the masked
// entries (v > 0 there).
double fraction_to_boundary(const VectorXd& v, const VectorXd& dv,
                            const std::vector<int>& idx, double tau) {
  double alpha = 1.0;
  for (int i : idx)
    if (dv[i] < 0.0) alpha = std::min(alpha, -tau * v[i] / dv[i]);
  return alpha;
}

class IpCore {
 public:
  IpCore(const IpProblem& prob, const IpControl& ctl)
      : prob_(prob), ctl_(ctl), opt_(*ctl.opt) {
    nz_ = prob.nz();
    nc_ = prob.nc();
    const VectorXd& l = prob.lower();
    const VectorXd& u = prob.upper();
    for (int i = 0; i < nz_; ++i) {
      const bool hl = std::isfinite(l[i]), hu = std::isfinite(u[i]);
      if (hl) il_.push_back(i);
      if (hu) iu_.push_back(i);
      if (hl && !hu) lonly_.push_back(i);
      if (hu && !hl) uonly_.push_back(i);
    }
  }

  IpOutcome run(IpState st);

 private:
  VectorXd slack_l(const VectorXd& z) const {
    VectorXd s = VectorXd::Zero(nz_);
    for (int i : il_) s[i] = z[i] - prob_.lower()[i];
    return s;
  }
  VectorXd slack_u(const VectorXd& z) const {
    VectorXd s = VectorXd::Zero(nz_);
    for (int i : iu_) s[i] = prob_.upper()[i] - z[i];
    return s;
  }
  double barrier(double f, const VectorXd& sl, const VectorXd& su,
                 double mu) const {
    double b = f;
    for (int i : il_) b -= mu * std::log(sl[i]);
    for (int i : iu_) b -= mu * std::log(su[i]);
    for (int i : lonly_) b += kKappaDamp * mu * sl[i];
    for (int i : uonly_) b += kKappaDamp * mu * su[i];
    return b;
  }
  VectorXd barrier_grad(const VectorXd& g, const VectorXd& sl,
                        const VectorXd& su, double mu) const {
    VectorXd gb = g;
    for (int i : il_) gb[i] -= mu / sl[i];
    for (int i : iu_) gb[i] += mu / su[i];
    for (int i : lonly_) gb[i] += kKappaDamp * mu;
    for (int i : uonly_) gb[i] -= kKappaDamp * mu;
    return gb;
  }
  double kkt_error(const VectorXd& g, const MatrixXd& a, const VectorXd& c,
                   const IpState& st, const VectorXd& sl, const VectorXd& su,
                   double mu) const {
    const VectorXd rd = g + a.transpose() * st.y - st.zl + st.zu;
    double compl_err = 0.0;
    for (int i : il_) compl_err = std::max(compl_err, std::fabs(sl[i] * st.zl[i] - mu));
    for (int i : iu_) compl_err = std::max(compl_err, std::fabs(su[i] * st.zu[i] - mu));
    const double rinf = nz_ > 0 ? rd.lpNorm<Eigen::Infinity>() : 0.0;
    const double cinf = nc_ > 0 ? c.lpNorm<Eigen::Infinity>() : 0.0;
    return std::max({rinf, cinf, compl_err});
  }

  // Factorizes the primal-dual matrix with inertia correction. Returns false
  // if no suitable regularization was found.
  bool factor(const MatrixXd& w, const VectorXd& sigma, const MatrixXd& a,
              double mu, SymmetricIndefiniteFactor& fac);

  VectorXd least_squares_y(const VectorXd& g, const MatrixXd& a,
                           const IpState& st) const;

  const IpProblem& prob_;
  const IpControl& ctl_;
  const SolverOptions& opt_;
  int nz_ = 0, nc_ = 0;
  std::vector<int> il_, iu_, lonly_, uonly_;
  double delta_w_last_ = 0.0;
  MatrixXd kkt_;
};

bool IpCore::factor(const MatrixXd& w, const VectorXd& sigma,
                    const MatrixXd& a, double mu,
                    SymmetricIndefiniteFactor& fac) {
  const int nt = nz_ + nc_;
  auto build = [&](double dw, double dc) {
    kkt_.setZero(nt, nt);
    kkt_.topLeftCorner(nz_, nz_) = w;
    for (int i = 0; i < nz_; ++i) kkt_(i, i) += sigma[i] + dw;
    if (nc_ > 0) {
      kkt_.bottomLeftCorner(nc_, nz_) = a;
      kkt_.topRightCorner(nz_, nc_) = a.transpose();
      for (int j = 0; j < nc_; ++j) kkt_(nz_ + j, nz_ + j) = -dc;
    }
  };
  auto correct = [&]() {
    return fac.num_positive() == nz_ && fac.num_negative() == nc_ &&
           fac.num_zero() == 0;
  };
  double dc = 0.0;
  build(0.0, 0.0);
  if (!fac.factorize(kkt_)) return false;
  if (correct()) return true;
  if (fac.num_zero() > 0) {
    dc = 1e-8 * std::pow(mu, 0.25);
    build(0.0, dc);
    if (!fac.factorize(kkt_)) return false;
    if (correct()) return true;
  }
  double dw = delta_w_last_ == 0.0 ? 1e-4 : std::max(1e-20, delta_w_last_ / 3);
  const double grow = delta_w_last_ == 0.0 ? 100.0 : 8.0;
  while (dw <= 1e40) {
    build(dw, dc);
    if (!fac.factorize(kkt_)) return false;
    if (correct()) {
      delta_w_last_ = dw;
      return true;
    }
    if (fac.num_zero() > 0 && dc == 0.0) dc = 1e-8 * std::pow(mu, 0.25);
    dw *= grow;
  }
  return false;
}

VectorXd IpCore::least_squares_y(const VectorXd& g, const MatrixXd& a,
                                 const IpState& st) const {
  if (nc_ == 0) return VectorXd(0);
  const int nt = nz_ + nc_;
  MatrixXd k = MatrixXd::Zero(nt, nt);
  k.topLeftCorner(nz_, nz_).setIdentity();
  k.bottomLeftCorner(nc_, nz_) = a;
  k.topRightCorner(nz_, nc_) = a.transpose();
  for (int j = 0; j < nc_; ++j) k(nz_ + j, nz_ + j) = -1e-10;
  SymmetricIndefiniteFactor fac;
  if (!fac.factorize(k)) return VectorXd::Zero(nc_);
  VectorXd rhs = VectorXd::Zero(nt);
  rhs.head(nz_) = -(g - st.zl + st.zu);
  const VectorXd sol = fac.solve(rhs);
  VectorXd y = sol.tail(nc_);
  if (!y.allFinite() || y.lpNorm<Eigen::Infinity>() > 1e3) y.setZero();
  return y;
}

IpOutcome IpCore::run(IpState st) {
  IpOutcome out;
  const SolverOptions& opt = opt_;
  const double mu_min = opt.tol / 10.0;
  double mu = ctl_.mu_init;
  double nu = 1.0;  // l1 penalty of the merit function, set per iteration
  int acceptable_count = 0;
  int iter = 0;

  auto eval_all = [&](const VectorXd& z, double& f, VectorXd& g,
                      VectorXd& c, MatrixXd& a) {
    f = prob_.objective(z);
    g = prob_.gradient(z);
    c = prob_.constraints(z);
    a = prob_.jacobian(z);
  };

  double f;
  VectorXd g, c;
  MatrixXd a;
  try {
    eval_all(st.z, f, g, c, a);
  } catch (const DomainError&) {
    out.st = st;
    out.status = NlpStatus::kStepFailure;
    return out;
  }
  if (st.y.size() != nc_) st.y = least_squares_y(g, a, st);

  auto finish = [&](NlpStatus s, double err, const char* why = "") {
    if (opt.print_level > 0)
      std::fprintf(stderr, "exit %s: %s\n", std::string(to_string(s)).c_str(), why);
    out.st = st;
    out.status = s;
    out.kkt = err;
    out.iterations = iter;
    out.mu = mu;
    return out;
  };

  double theta_ref = nc_ ? c.lpNorm<Eigen::Infinity>() : 0.0;
  const double theta_small =
      1e-4 * std::max(1.0, nc_ ? c.lpNorm<1>() : 0.0);
  int theta_ref_iter = 0;

  // Feasibility restoration from the current iterate. Returns a status when
  // the solve has to stop, std::nullopt when the main iteration continues.
  std::optional<NlpStatus> exit_status;
  double exit_err = 0.0;
  auto finish_status = [&](NlpStatus s, double err, const char* why) {
    if (opt.print_level > 0)
      std::fprintf(stderr, "restoration exit %s: %s\n",
                   std::string(to_string(s)).c_str(), why);
    exit_status = s;
    exit_err = err;
    return false;
  };
  auto restore = [&](double e0) -> bool {
    ++out.restorations;
    const double cinf = c.lpNorm<Eigen::Infinity>();
    const double mu_r = std::max(mu, cinf);
    const double rho = 1000.0;
    RestorationProblem rp(prob_, st.z, rho, std::sqrt(mu_r));
    IpState rs;
    const int nci = nc_;
    rs.z.resize(rp.nz());
    VectorXd pp(nci), nn(nci);
    for (int j = 0; j < nci; ++j) {
      const double t = (mu_r - rho * c[j]) / (2.0 * rho);
      nn[j] = t + std::sqrt(t * t + mu_r * c[j] / (2.0 * rho));
      pp[j] = c[j] + nn[j];
    }
    rs.z << st.z, pp, nn;
    rs.zl = VectorXd::Zero(rp.nz());
    rs.zu = VectorXd::Zero(rp.nz());
    for (int i : il_) rs.zl[i] = std::min(rho, st.zl[i]);
    for (int i : iu_) rs.zu[i] = std::min(rho, st.zu[i]);
    for (int j = 0; j < 2 * nci; ++j)
      rs.zl[nz_ + j] = mu_r / rs.z[nz_ + j];
    rs.y = VectorXd::Zero(nci);
    const double theta_start = nc_ ? c.lpNorm<1>() : 0.0;
    IpControl rctl;
    rctl.opt = &opt;
    rctl.t0 = ctl_.t0;
    rctl.budget = ctl_.budget;
    rctl.mu_init = mu_r;
    rctl.allow_restoration = false;
    rctl.iteration_offset = ctl_.iteration_offset + iter;
    const int nzi = nz_;
    rctl.early_stop = [&, nzi](const VectorXd& v) {
      const VectorXd ci = prob_.constraints(v.head(nzi));
      const double th = ci.lpNorm<1>();
      return th <= std::max(0.1 * theta_start, opt.tol);
    };
    IpCore rcore(rp, rctl);
    IpOutcome ro = rcore.run(rs);
    iter += ro.iterations;
    if (opt.print_level > 0) {
      std::fprintf(stderr, "restoration: %s%s after %d iterations\n",
                   std::string(to_string(ro.status)).c_str(),
                   ro.early_stopped ? " (early stop)" : "", ro.iterations);
    }
    const VectorXd zr = ro.st.z.head(nz_);
    VectorXd cr;
    try {
      cr = prob_.constraints(zr);
    } catch (const DomainError&) {
      return finish_status(NlpStatus::kStepFailure, e0, "restoration failed");
    }
    const double cr_inf = cr.lpNorm<Eigen::Infinity>();
    if (!ro.early_stopped) {
      if ((ro.status == NlpStatus::kOptimal ||
           ro.status == NlpStatus::kAcceptable) &&
          cr_inf > opt.infeasibility_tol) {
        st.z = zr;
        eval_all(st.z, f, g, c, a);
        return finish_status(NlpStatus::kInfeasible,
                             kkt_error(g, a, c, st, slack_l(st.z),
                                       slack_u(st.z), 0.0),
                             "restoration converged to an infeasible point");
      }
      if (ro.status == NlpStatus::kTimeOut)
        return finish_status(NlpStatus::kTimeOut, e0, "time budget");
      if (cr_inf > opt.infeasibility_tol)
        return finish_status(NlpStatus::kStepFailure, e0, "restoration failed");
    }
    st.z = zr;
    st.zl = ro.st.zl.head(nz_);
    st.zu = ro.st.zu.head(nz_);
    for (int i : il_) st.zl[i] = std::max(st.zl[i], 1e-20);
    for (int i : iu_) st.zu[i] = std::max(st.zu[i], 1e-20);
    eval_all(st.z, f, g, c, a);
    st.y = least_squares_y(g, a, st);
    theta_ref = nc_ ? c.lpNorm<Eigen::Infinity>() : 0.0;
    theta_ref_iter = iter;
    return true;
  };
  auto can_restore = [&]() {
    return ctl_.allow_restoration && nc_ > 0 &&
           c.lpNorm<Eigen::Infinity>() > opt.tol &&
           out.restorations < opt.max_restorations;
  };

  while (true) {
    VectorXd sl = slack_l(st.z), su = slack_u(st.z);
    const double e0 = kkt_error(g, a, c, st, sl, su, 0.0);
    if (e0 <= opt.tol) return finish(NlpStatus::kOptimal, e0);
    acceptable_count = e0 <= opt.acceptable_tol ? acceptable_count + 1 : 0;
    if (acceptable_count >= opt.acceptable_iter)
      return finish(NlpStatus::kAcceptable, e0);
    if (iter >= opt.max_iter)
      return finish(e0 <= opt.acceptable_tol ? NlpStatus::kAcceptable
                                             : NlpStatus::kMaxIter, e0);
    if (seconds_since(ctl_.t0) > ctl_.budget)
      return finish(e0 <= opt.acceptable_tol ? NlpStatus::kAcceptable
                                             : NlpStatus::kTimeOut, e0);

    // Monotone barrier update. Multipliers running away while the iterate
    // is nearly feasible mean the barrier problem has no strict interior
    // (a degenerate feasible set); its center cannot be reached, so the
    // barrier is reduced anyway.
    const double theta_inf = nc_ ? c.lpNorm<Eigen::Infinity>() : 0.0;
    const bool runaway =
        nc_ > 0 &&
        st.y.lpNorm<Eigen::Infinity>() >
            kRunawayMultiplier * (1.0 + g.lpNorm<Eigen::Infinity>()) &&
        theta_inf <= mu;
    if (runaway && mu > mu_min) {
      mu = std::max(mu_min, std::min(kKappaMu * mu, std::pow(mu, kThetaMu)));
    }
    while (mu > mu_min &&
           kkt_error(g, a, c, st, sl, su, mu) <= kKappaEps * mu) {
      mu = std::max(mu_min, std::min(kKappaMu * mu, std::pow(mu, kThetaMu)));
    }
    const double tau = std::max(0.99, 1.0 - mu);

    // Infeasibility that stops shrinking is handed to restoration, which
    // either finds a better point or certifies local infeasibility.
    {
      const double cinf = nc_ ? c.lpNorm<Eigen::Infinity>() : 0.0;
      if (cinf <= 0.5 * theta_ref || cinf <= opt.tol) {
        theta_ref = cinf;
        theta_ref_iter = iter;
      } else if (iter - theta_ref_iter >= kStallIters && can_restore()) {
        if (!restore(e0)) return finish(*exit_status, exit_err);
        ++iter;
        continue;
      }
    }

    // Newton system.
    MatrixXd w = prob_.hessian(st.z, 1.0, st.y);
    VectorXd sigma = VectorXd::Zero(nz_);
    for (int i : il_) sigma[i] += st.zl[i] / sl[i];
    for (int i : iu_) sigma[i] += st.zu[i] / su[i];
    SymmetricIndefiniteFactor fac;
    const bool factored = factor(w, sigma, a, mu, fac);
    const VectorXd gb = barrier_grad(g, sl, su, mu);
    VectorXd dz, dy;
    VectorXd rhs(nz_ + nc_);
    if (factored) {
      rhs.head(nz_) = -(gb + a.transpose() * st.y);
      rhs.tail(nc_) = -c;
      const VectorXd sol = fac.solve(rhs, 2);
      dz = sol.head(nz_);
      dy = sol.tail(nc_);
    }
    if (!factored || !dz.allFinite() || !dy.allFinite()) {
      if (opt.print_level > 1) {
        std::fprintf(stderr, "factored=%d inertia=%d/%d/%d\n", factored,
                     fac.num_positive(), fac.num_negative(), fac.num_zero());
        std::cerr << "z=" << st.z.transpose() << "\nsigma=" << sigma.transpose()
                  << "\nw=" << w << "\ny=" << st.y.transpose() << "\n";
      }
      if (can_restore()) {
        if (!restore(e0)) return finish(*exit_status, exit_err);
        ++iter;
        continue;
      }
      return finish(e0 <= opt.acceptable_tol ? NlpStatus::kAcceptable
                                             : NlpStatus::kStepFailure, e0,
                    "no usable Newton step");
    }
    VectorXd dzl = VectorXd::Zero(nz_), dzu = VectorXd::Zero(nz_);
    for (int i : il_) dzl[i] = mu / sl[i] - st.zl[i] - st.zl[i] / sl[i] * dz[i];
    for (int i : iu_) dzu[i] = mu / su[i] - st.zu[i] + st.zu[i] / su[i] * dz[i];

    if (opt.print_level > 0) {
      std::fprintf(stderr,
                   "%4d f=% .6e inf=%.2e err=%.2e mu=%.1e |dz|=%.2e dw=%.1e\n",
                   ctl_.iteration_offset + iter, f,
                   nc_ ? c.lpNorm<Eigen::Infinity>() : 0.0, e0, mu,
                   dz.size() ? dz.lpNorm<Eigen::Infinity>() : 0.0,
                   delta_w_last_);
    }

    // Tiny step: the barrier problem is solved as well as it can be.
    double rel = 0.0;
    for (int i = 0; i < nz_; ++i)
      rel = std::max(rel, std::fabs(dz[i]) / (1.0 + std::fabs(st.z[i])));
    const double theta0 = nc_ ? c.lpNorm<1>() : 0.0;
    if (rel < 10.0 * std::numeric_limits<double>::epsilon() &&
        theta0 <= opt.tol) {
      // The primal point is settled but the multipliers may still be off
      // their central values; move them before touching mu. Not when they
      // are running away, there is no center to reach then.
      double dual_rel = dy.size() ? dy.lpNorm<Eigen::Infinity>() /
                                        (1.0 + st.y.lpNorm<Eigen::Infinity>())
                                  : 0.0;
      for (int i : il_)
        dual_rel = std::max(dual_rel, std::fabs(dzl[i]) / (1.0 + st.zl[i]));
      for (int i : iu_)
        dual_rel = std::max(dual_rel, std::fabs(dzu[i]) / (1.0 + st.zu[i]));
      if (dual_rel > 1e-12 && !runaway) {
        st.y += dy;
        st.zl += fraction_to_boundary(st.zl, dzl, il_, tau) * dzl;
        st.zu += fraction_to_boundary(st.zu, dzu, iu_, tau) * dzu;
        ++iter;
        continue;
      }
      if (mu > mu_min) {
        mu = std::max(mu_min, std::min(kKappaMu * mu, std::pow(mu, kThetaMu)));
        ++iter;
        continue;
      }
      out.small_step = true;
      return finish(e0 <= opt.tol ? NlpStatus::kOptimal
                    : e0 <= opt.acceptable_tol ? NlpStatus::kAcceptable
                                               : NlpStatus::kStepFailure, e0,
                    "search direction too small");
    }

    // Merit penalty update.
    const double phi0 = barrier(f, sl, su, mu);
    const double gtd = gb.dot(dz);
    // The penalty is recomputed every iteration from the multiplier estimate
    // and the model-decrease requirement. A monotone penalty inflated once by
    // a nearly feasible iterate would otherwise throttle every later step.
    nu = nc_ ? 1.1 * (st.y + dy).lpNorm<Eigen::Infinity>() + 1e-8 : 0.0;
    if (theta0 > 1e-14) {
      const double curv = dz.dot(w * dz) + dz.dot(sigma.cwiseProduct(dz));
      const double nu_trial =
          (gtd + 0.5 * std::max(0.0, curv)) / ((1.0 - kRhoPenalty) * theta0);
      if (nu < nu_trial) nu = std::max(1.1 * nu_trial, nu_trial + 1e-8);
    }
    const double lin_theta = nc_ ? (c + a * dz).lpNorm<1>() : 0.0;
    const double dmerit = gtd + nu * (lin_theta - theta0);
    const double merit0 = phi0 + nu * theta0;

    const double alpha_max =
        std::min(fraction_to_boundary(sl, dz, il_, tau),
                 fraction_to_boundary(su, -dz, iu_, tau));
    const double alpha_zl = fraction_to_boundary(st.zl, dzl, il_, tau);
    const double alpha_zu = fraction_to_boundary(st.zu, dzu, iu_, tau);

    auto trial_merit = [&](const VectorXd& zt, double& ft, VectorXd& ct,
                           double& theta_t) -> double {
      try {
        ft = prob_.objective(zt);
        ct = prob_.constraints(zt);
      } catch (const DomainError&) {
        return std::numeric_limits<double>::infinity();
      }
      const VectorXd slt = slack_l(zt), sut = slack_u(zt);
      theta_t = nc_ ? ct.lpNorm<1>() : 0.0;
      const double m = barrier(ft, slt, sut, mu) + nu * theta_t;
      return std::isfinite(m) ? m : std::numeric_limits<double>::infinity();
    };

    bool accepted = false;
    double alpha = alpha_max;
    VectorXd z_new;
    VectorXd step = dz;
    for (int k = 0; k < 60 && alpha > 1e-14; ++k) {
      VectorXd zt = st.z + alpha * dz;
      double ft, theta_t = 0.0;
      VectorXd ct;
      const double mt = trial_merit(zt, ft, ct, theta_t);
      if (mt <= merit0 + kArmijo * alpha * std::min(dmerit, 0.0) &&
          (dmerit < 0.0 || mt < merit0)) {
        accepted = true;
        z_new = zt;
        break;
      }
      // Nearly feasible iterates may trade a negligible amount of
      // infeasibility for barrier decrease. Without this a penalty sized by
      // very large multipliers rejects every step near degenerate points.
      if (std::isfinite(mt) && gtd < 0.0 && theta0 <= theta_small &&
          theta_t <= theta_small &&
          mt - nu * theta_t <= phi0 + kArmijo * alpha * gtd) {
        accepted = true;
        z_new = zt;
        break;
      }
      if (k == 0 && nc_ > 0 && std::isfinite(mt) && theta_t >= theta0) {
        // Second-order correction with the same factorization.
        VectorXd rhs_soc = rhs;
        rhs_soc.tail(nc_) = -(alpha * c + ct);
        const VectorXd sol = fac.solve(rhs_soc, 2);
        const VectorXd dsoc = sol.head(nz_);
        const double a_soc =
            std::min(fraction_to_boundary(sl, dsoc, il_, tau),
                     fraction_to_boundary(su, -dsoc, iu_, tau));
        const VectorXd zs = st.z + a_soc * dsoc;
        double fs, theta_s = 0.0;
        VectorXd cs;
        const double ms = trial_merit(zs, fs, cs, theta_s);
        if (ms <= merit0 + kArmijo * alpha * std::min(dmerit, 0.0) &&
            ms < merit0) {
          accepted = true;
          z_new = zs;
          step = dsoc;
          alpha = a_soc;
          dy = sol.tail(nc_);
          break;
        }
      }
      alpha *= 0.5;
    }

    if (!accepted) {
      if (opt.print_level > 1) {
        std::fprintf(stderr, "     rejected: gtd=%.3e dmerit=%.3e theta0=%.3e nu=%.2e\n",
                     gtd, dmerit, theta0, nu);
        std::cerr << "z=" << st.z.transpose() << "\ndz=" << dz.transpose() << "\n";
      }
      if (runaway && mu > mu_min) {
        mu = std::max(mu_min, std::min(kKappaMu * mu, std::pow(mu, kThetaMu)));
        ++iter;
        continue;
      }
      if (can_restore()) {
        if (!restore(e0)) return finish(*exit_status, exit_err);
        ++iter;
        continue;
      }
      return finish(e0 <= opt.acceptable_tol ? NlpStatus::kAcceptable
                                             : NlpStatus::kStepFailure, e0,
                    "line search failed");
    }

    if (opt.print_level > 1)
      std::fprintf(stderr, "     alpha=%.2e alpha_max=%.2e alpha_z=%.2e/%.2e nu=%.2e\n",
                   alpha, alpha_max, alpha_zl, alpha_zu, nu);
    // Accept the step.
    st.z = z_new;
    st.y += alpha * dy;
    st.zl += alpha_zl * dzl;
    st.zu += alpha_zu * dzu;
    try {
      eval_all(st.z, f, g, c, a);
    } catch (const DomainError&) {
      return finish(NlpStatus::kStepFailure, e0);
    }
    sl = slack_l(st.z);
    su = slack_u(st.z);
    for (int i : il_) {
      st.zl[i] = std::clamp(st.zl[i], mu / (kKappaSigma * sl[i]),
                            kKappaSigma * mu / sl[i]);
    }
    for (int i : iu_) {
      st.zu[i] = std::clamp(st.zu[i], mu / (kKappaSigma * su[i]),
                            kKappaSigma * mu / su[i]);
    }
    ++iter;
    if (ctl_.early_stop && ctl_.early_stop(st.z)) {
      out.early_stopped = true;
      return finish(NlpStatus::kAcceptable,
                    kkt_error(g, a, c, st, sl, su, 0.0));
    }
  }
}

KktSolution to_solution(const SmoothNlp& nlp, const SlackedNlp& sn,
                        const IpOutcome& out, Clock::time_point t0) {
  KktSolution sol;
  const int n = sn.n();
  sol.x = out.st.z.head(n);
  sol.lambda = -out.st.y.head(sn.rows());
  sol.z_lower = out.st.zl.head(n);
  sol.z_upper = out.st.zu.head(n);
  const auto& fixed = sn.fixed();
  for (size_t j = 0; j < fixed.size(); ++j) {
    const double lam = -out.st.y[sn.rows() + j];
    sol.z_lower[fixed[j]] = std::max(lam, 0.0);
    sol.z_upper[fixed[j]] = std::max(-lam, 0.0);
  }
  sol.status = out.status;
  sol.kkt_residual = out.kkt;
  sol.iterations = out.iterations;
  sol.restorations = out.restorations;
  sol.small_step = out.small_step;
  try {
    sol.objective = nlp.objective.eval(sol.x, nlp.p)[0];
    sol.c = sn.row_values(sol.x);
  } catch (const DomainError&) {
    sol.objective = std::numeric_limits<double>::quiet_NaN();
    sol.c = VectorXd::Constant(sn.rows(), std::numeric_limits<double>::quiet_NaN());
  }
  double inf = 0.0;
  for (int i = 0; i < n; ++i) {
    inf = std::max({inf, nlp.lbx[i] - sol.x[i], sol.x[i] - nlp.ubx[i]});
  }
  for (int r = 0; r < sn.rows(); ++r) {
    inf = std::max({inf, nlp.lbc[r] - sol.c[r], sol.c[r] - nlp.ubc[r]});
  }
  sol.infeasibility = inf;
  sol.wall_time = seconds_since(t0);
  return sol;
}


// Unscaled KKT error in the original variables: stationarity, bound
// violation and complementarity, all in the max norm.
double original_kkt_error(const SmoothNlp& nlp, const KktSolution& s) {
  const int n = nlp.n();
  const int rows = nlp.n_rows();
  VectorXd r = nlp.objective.jacobian(s.x, nlp.p).row(0).transpose() - s.z_lower + s.z_upper;
  if (rows) r -= nlp.constraints.jacobian(s.x, nlp.p).transpose() * s.lambda;
  double e = n ? r.lpNorm<Eigen::Infinity>() : 0.0;
  for (int j = 0; j < n; ++j) {
    e = std::max({e, nlp.lbx[j] - s.x[j], s.x[j] - nlp.ubx[j]});
    if (std::isfinite(nlp.lbx[j])) e = std::max(e, std::fabs(s.z_lower[j] * (s.x[j] - nlp.lbx[j])));
    if (std::isfinite(nlp.ubx[j])) e = std::max(e, std::fabs(s.z_upper[j] * (nlp.ubx[j] - s.x[j])));
    if (s.z_lower[j] < 0.0 || s.z_upper[j] < 0.0) e = std::max({e, -s.z_lower[j], -s.z_upper[j]});
  }
  for (int i = 0; i < rows; ++i) {
    e = std::max({e, nlp.lbc[i] - s.c[i], s.c[i] - nlp.ubc[i]});
    if (nlp.lbc[i] == nlp.ubc[i]) continue;
    const double lo = s.lambda_lower(i), up = s.lambda_upper(i);
    if (lo > 0.0) e = std::max(e, std::isfinite(nlp.lbc[i]) ? lo * std::fabs(s.c[i] - nlp.lbc[i]) : lo);
    if (up > 0.0) e = std::max(e, std::isfinite(nlp.ubc[i]) ? up * std::fabs(nlp.ubc[i] - s.c[i]) : up);
  }
  return e;
}

// Active-set refinement of an optimal interior-point solution.
void polish_solution(const SmoothNlp& nlp, KktSolution& sol) {
  const int n = nlp.n();
  const int rows = nlp.n_rows();
  // Active constraint k: row index (>= 0) or bound -1 - j, with the side
  // (-1 lower, +1 upper, 0 both) and target value.
  struct Act { int id; int side; double target; };
  std::vector<Act> act;
  for (int i = 0; i < rows; ++i) {
    if (nlp.lbc[i] == nlp.ubc[i]) {
      act.push_back({i, 0, nlp.lbc[i]});
    } else if (sol.lambda[i] > 0.0 && std::isfinite(nlp.lbc[i]) &&
               sol.lambda[i] > sol.c[i] - nlp.lbc[i]) {
      act.push_back({i, -1, nlp.lbc[i]});
    } else if (sol.lambda[i] < 0.0 && std::isfinite(nlp.ubc[i]) &&
               -sol.lambda[i] > nlp.ubc[i] - sol.c[i]) {
      act.push_back({i, 1, nlp.ubc[i]});
    }
  }
  for (int j = 0; j < n; ++j) {
    if (nlp.lbx[j] == nlp.ubx[j]) {
      act.push_back({-1 - j, 0, nlp.lbx[j]});
    } else if (std::isfinite(nlp.lbx[j]) && sol.z_lower[j] > sol.x[j] - nlp.lbx[j]) {
      act.push_back({-1 - j, -1, nlp.lbx[j]});
    } else if (std::isfinite(nlp.ubx[j]) && sol.z_upper[j] > nlp.ubx[j] - sol.x[j]) {
      act.push_back({-1 - j, 1, nlp.ubx[j]});
    }
  }
  const int k = static_cast<int>(act.size());
  if (k > n) return;

  KktSolution cand = sol;
  VectorXd nu(k);
  for (int a = 0; a < k; ++a) {
    const int id = act[a].id;
    nu[a] = id >= 0 ? sol.lambda[id] : sol.z_lower[-1 - id] - sol.z_upper[-1 - id];
  }
  try {
    for (int it = 0; it < 5; ++it) {
      VectorXd lam = VectorXd::Zero(rows);
      for (int a = 0; a < k; ++a)
        if (act[a].id >= 0) lam[act[a].id] = nu[a];
      const MatrixXd J = rows ? nlp.constraints.jacobian(cand.x, nlp.p) : MatrixXd(0, n);
      const VectorXd c = rows ? nlp.constraints.eval(cand.x, nlp.p) : VectorXd();
      const VectorXd g = nlp.objective.jacobian(cand.x, nlp.p).row(0).transpose();
      // L = f - nu^T b(x)
      const MatrixXd H = hessian_lagrangian(nlp.objective, nlp.constraints, cand.x, nlp.p, 1.0, -lam);
      MatrixXd B = MatrixXd::Zero(k, n);
      VectorXd res(k);
      for (int a = 0; a < k; ++a) {
        const int id = act[a].id;
        if (id >= 0) {
          B.row(a) = J.row(id);
          res[a] = c[id] - act[a].target;
        } else {
          B(a, -1 - id) = 1.0;
          res[a] = cand.x[-1 - id] - act[a].target;
        }
      }
      const VectorXd stat = g - B.transpose() * nu;
      if (it > 0 && std::max(stat.lpNorm<Eigen::Infinity>(),
                             k ? res.lpNorm<Eigen::Infinity>() : 0.0) <= 1e-15)
        break;
      MatrixXd K = MatrixXd::Zero(n + k, n + k);
      K.topLeftCorner(n, n) = H;
      K.topRightCorner(n, k) = -B.transpose();
      K.bottomLeftCorner(k, n) = B;
      VectorXd rhs(n + k);
      rhs << -stat, -res;
      Eigen::FullPivLU<MatrixXd> lu(K);
      if (lu.rank() < n + k) return;
      const VectorXd d = lu.solve(rhs);
      if (!d.allFinite()) return;
      cand.x += d.head(n);
      nu += d.tail(k);
    }
    // Active constraints land exactly on their targets.
    for (int a = 0; a < k; ++a)
      if (act[a].id < 0) cand.x[-1 - act[a].id] = act[a].target;
    cand.lambda.setZero();
    cand.z_lower.setZero();
    cand.z_upper.setZero();
    for (int a = 0; a < k; ++a) {
      const int id = act[a].id;
      if (act[a].side * nu[a] > 0.0) return;  // wrong sign: not a KKT point
      if (id >= 0) {
        cand.lambda[id] = nu[a];
      } else {
        cand.z_lower[-1 - id] = std::max(nu[a], 0.0);
        cand.z_upper[-1 - id] = std::max(-nu[a], 0.0);
      }
    }
    cand.c = rows ? nlp.constraints.eval(cand.x, nlp.p) : VectorXd();
    cand.objective = nlp.objective.eval(cand.x, nlp.p)[0];
    if (!cand.x.allFinite() || !std::isfinite(cand.objective)) return;
    const double e_old = original_kkt_error(nlp, sol);
    const double e_new = original_kkt_error(nlp, cand);
    if (!(e_new <= e_old)) return;
    double inf = 0.0;
    for (int j = 0; j < n; ++j) inf = std::max({inf, nlp.lbx[j] - cand.x[j], cand.x[j] - nlp.ubx[j]});
    for (int r = 0; r < rows; ++r) inf = std::max({inf, nlp.lbc[r] - cand.c[r], cand.c[r] - nlp.ubc[r]});
    cand.infeasibility = inf;
    sol = std::move(cand);
  } catch (const DomainError&) {
  }
}

}  // namespace

KktSolution solve_nlp(const SmoothNlp& nlp, const VectorXd& x0,
                      const SolverOptions& opts, const KktSolution* warm) {
  const auto t0 = Clock::now();
  nlp.validate();
  if (x0.size() != nlp.n())
    throw DimensionError("x0 has length " + std::to_string(x0.size()) +
                         ", expected " + std::to_string(nlp.n()));
  SlackedNlp sn(nlp);
  const int n = sn.n();
  const int nz = sn.nz();

  IpState st;
  VectorXd z0(nz);
  z0.head(n) = x0;
  for (int i : sn.fixed()) z0[i] = nlp.lbx[i];
  VectorXd c0;
  try {
    c0 = sn.row_values(x0);
  } catch (const DomainError&) {
    c0 = VectorXd::Zero(sn.rows());
  }
  for (int r = 0; r < sn.rows(); ++r) {
    const int k = sn.slack_of_row(r);
    if (k >= 0) z0[n + k] = c0[r];
  }
  st.z = push_interior(z0, sn.lower(), sn.upper(), opts.bound_push,
                       opts.bound_frac);

  const VectorXd& l = sn.lower();
  const VectorXd& u = sn.upper();
  st.zl = VectorXd::Zero(nz);
  st.zu = VectorXd::Zero(nz);
  const bool use_warm = warm != nullptr && warm->lambda.size() == sn.rows() &&
                        warm->z_lower.size() == n && warm->z_upper.size() == n;
  for (int i = 0; i < nz; ++i) {
    if (std::isfinite(l[i])) {
      double v = 1.0;
      if (use_warm) {
        const double given = i < n ? warm->z_lower[i]
                                   : 0.0;
        v = std::max(given, opts.mu_init / (st.z[i] - l[i]));
      }
      st.zl[i] = v;
    }
    if (std::isfinite(u[i])) {
      double v = 1.0;
      if (use_warm) {
        const double given = i < n ? warm->z_upper[i] : 0.0;
        v = std::max(given, opts.mu_init / (u[i] - st.z[i]));
      }
      st.zu[i] = v;
    }
  }
  if (use_warm) {
    st.y = VectorXd::Zero(sn.nc());
    for (int r = 0; r < sn.rows(); ++r) {
      const double lam = warm->lambda[r];
      st.y[r] = -lam;
      const int k = sn.slack_of_row(r);
      if (k < 0) continue;
      const int i = n + k;
      if (std::isfinite(l[i])) st.zl[i] = std::max(st.zl[i], lam);
      if (std::isfinite(u[i])) st.zu[i] = std::max(st.zu[i], -lam);
    }
  }

  IpControl ctl;
  ctl.opt = &opts;
  ctl.t0 = t0;
  ctl.budget = opts.max_wall_time;
  ctl.mu_init = opts.mu_init;
  IpCore core(sn, ctl);
  const IpOutcome out = core.run(std::move(st));
  KktSolution sol = to_solution(nlp, sn, out, t0);
  if (opts.polish && sol.status == NlpStatus::kOptimal) {
    polish_solution(nlp, sol);
    sol.wall_time = seconds_since(t0);
  }
  return sol;
}

KktSolution solve_lp(const SmoothNlp& lp, const SolverOptions& opts,
                     const VectorXd& x0_in) {
  lp.validate();
  const int n = lp.n();
  const int rows = lp.n_rows();
  VectorXd probe = x0_in.size() ? x0_in : VectorXd::Zero(n);
  MatrixXd h = hessian_lagrangian(lp.objective, lp.constraints, probe, lp.p, 1.0,
                                  VectorXd::Ones(rows));
  if (n > 0 && h.cwiseAbs().maxCoeff() > 0.0)
    throw std::invalid_argument("solve_lp called with a nonlinear problem");

  // Presolve: a row a x_j + b touching one variable is a bound. Keeping it
  // as a row next to a bound on the same variable leaves no strict
  // interior, which an interior-point method cannot cope with.
  const MatrixXd J = rows ? lp.constraints.jacobian(probe, lp.p) : MatrixXd(0, n);
  const VectorXd c0 = rows ? lp.constraints.eval(probe, lp.p) : VectorXd();
  VectorXd lbx = lp.lbx, ubx = lp.ubx;
  std::vector<int> lo_src(n, -1), up_src(n, -1);  // row that set the bound
  std::vector<Expr> kept;
  std::vector<int> kept_rows;
  for (int r = 0; r < rows; ++r) {
    int nz = 0, j = -1;
    for (int k = 0; k < n; ++k)
      if (J(r, k) != 0.0) ++nz, j = k;
    if (nz != 1) {
      kept.push_back(lp.constraints.output(r));
      kept_rows.push_back(r);
      continue;
    }
    const double a = J(r, j), b = c0[r] - a * probe[j];
    double lo = (lp.lbc[r] - b) / a, up = (lp.ubc[r] - b) / a;
    if (a < 0.0) std::swap(lo, up);
    if (lo > lbx[j]) lbx[j] = lo, lo_src[j] = r;
    if (up < ubx[j]) ubx[j] = up, up_src[j] = r;
  }
  for (int j = 0; j < n; ++j) {
    if (lbx[j] > ubx[j]) {
      const double gap = lbx[j] - ubx[j];
      if (gap > 1e-12 * std::max(1.0, std::fabs(lbx[j]))) {
        KktSolution out;
        out.x = probe.cwiseMax(lp.lbx).cwiseMin(lp.ubx);
        out.lambda = VectorXd::Zero(rows);
        out.z_lower = out.z_upper = VectorXd::Zero(n);
        out.c = rows ? lp.constraints.eval(out.x, lp.p) : VectorXd();
        out.objective = lp.objective.eval(out.x, lp.p)[0];
        out.status = NlpStatus::kInfeasible;
        out.infeasibility = gap;
        return out;
      }
      ubx[j] = lbx[j];
    }
  }

  SmoothNlp red;
  red.objective = lp.objective;
  red.constraints = VectorFunction(kept, n, static_cast<int>(lp.p.size()));
  red.lbc.resize(kept_rows.size());
  red.ubc.resize(kept_rows.size());
  for (std::size_t k = 0; k < kept_rows.size(); ++k) {
    red.lbc[k] = lp.lbc[kept_rows[k]];
    red.ubc[k] = lp.ubc[kept_rows[k]];
  }
  red.lbx = lbx;
  red.ubx = ubx;
  red.p = lp.p;

  VectorXd x0 = x0_in;
  if (x0.size() == 0) {
    x0 = VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      const bool hl = std::isfinite(lbx[i]), hu = std::isfinite(ubx[i]);
      if (hl && hu) x0[i] = 0.5 * (lbx[i] + ubx[i]);
      else if (hl) x0[i] = std::max(0.0, lbx[i]);
      else if (hu) x0[i] = std::min(0.0, ubx[i]);
    }
  }
  KktSolution sol = solve_nlp(red, x0, opts);

  // Back to the original rows: a bound multiplier owned by a folded row
  // becomes that row's multiplier.
  KktSolution out = sol;
  out.lambda = VectorXd::Zero(rows);
  for (std::size_t k = 0; k < kept_rows.size(); ++k) out.lambda[kept_rows[k]] = sol.lambda[k];
  for (int j = 0; j < n; ++j) {
    if (lo_src[j] >= 0 && out.z_lower[j] != 0.0) {
      out.lambda[lo_src[j]] += out.z_lower[j] / J(lo_src[j], j);
      out.z_lower[j] = 0.0;
    }
    if (up_src[j] >= 0 && out.z_upper[j] != 0.0) {
      out.lambda[up_src[j]] -= out.z_upper[j] / J(up_src[j], j);
      out.z_upper[j] = 0.0;
    }
  }
  out.c = rows ? lp.constraints.eval(out.x, lp.p) : VectorXd();
  return out;
}

}  // namespace mpcckit
