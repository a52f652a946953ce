#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include <Eigen/Dense>

namespace oracle {

using namespace mpcckit;

std::uint64_t test_seed() {
  if (const char* s = std::getenv("MPCCKIT_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
    }
  }
  return 20240517ULL;
}

std::mt19937_64 make_rng(std::uint64_t salt) {
  std::seed_seq seq{test_seed(), salt};
  return std::mt19937_64(seq);
}

MatrixXd fd_jacobian(const VectorFunction& f, const VectorXd& x,
                     const VectorXd& p, double h) {
  MatrixXd J(f.num_outputs(), x.size());
  VectorXd xp = x, xm = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    J.col(j) = (f.eval(xp, p) - f.eval(xm, p)) / (2.0 * h);
    xp[j] = xm[j] = x[j];
  }
  return J;
}

MatrixXd fd_hessian(const VectorFunction& f, int output, const VectorXd& x,
                    const VectorXd& p, double h) {
  const Eigen::Index n = x.size();
  MatrixXd H(n, n);
  VectorXd xp = x, xm = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    H.col(j) = (f.jacobian(xp, p).row(output) - f.jacobian(xm, p).row(output)).transpose() /
               (2.0 * h);
    xp[j] = xm[j] = x[j];
  }
  return H;
}

std::pair<double, double> fd_phi_grad(RelaxationKind kind, double a, double b,
                                      double s, double h) {
  const double da = (phi(kind, a + h, b, s) - phi(kind, a - h, b, s)) / (2.0 * h);
  const double db = (phi(kind, a, b + h, s) - phi(kind, a, b - h, s)) / (2.0 * h);
  return {da, db};
}

double rel_error(const MatrixXd& a, const MatrixXd& b) {
  double e = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      e = std::max(e, std::fabs(a(i, j) - b(i, j)) / std::max(1.0, std::fabs(b(i, j))));
  return e;
}

double diagonal_zero_bisection(RelaxationKind kind, double s) {
  auto F = [&](double t) { return phi(kind, t, t, s); };
  double lo = 0.0, hi = 1.0;
  const bool neg_lo = F(lo) < 0.0;
  while ((F(hi) < 0.0) == neg_lo) {
    hi *= 2.0;
    if (hi > 1e8) return std::numeric_limits<double>::quiet_NaN();
  }
  for (int it = 0; it < 400 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if ((F(mid) < 0.0) == neg_lo) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

double random_in(std::mt19937_64& rng, double lo, double hi) {
  double a, b;
  if (std::isfinite(lo) && std::isfinite(hi)) {
    a = lo; b = hi;
  } else if (std::isfinite(lo)) {
    a = lo; b = lo + 3.0;
  } else if (std::isfinite(hi)) {
    a = hi - 3.0; b = hi;
  } else {
    a = -3.0; b = 3.0;
  }
  return std::uniform_real_distribution<double>(a, b)(rng);
}

}  // namespace

BranchOptimum branch_enumeration(const MpccProblem& prob, const VectorXd& x0,
                                 int starts, std::uint64_t seed) {
  const int m = prob.m();
  if (m > 8) throw std::invalid_argument("branch enumeration limited to m <= 8");
  const int ng = prob.n_g();
  std::mt19937_64 rng(seed);

  std::vector<VectorXd> points{x0};
  for (int s = 0; s < starts; ++s) {
    VectorXd x(prob.n);
    for (int j = 0; j < prob.n; ++j) x[j] = random_in(rng, prob.lbw[j], prob.ubw[j]);
    points.push_back(x);
  }

  BranchOptimum best;
  // A zero side that is a bare variable is pinned through its bounds; as a
  // row next to the bound 0 <= w_j it would leave no strict interior.
  auto bare = [](const mpcckit::Expr& e) {
    return e.kind() == mpcckit::OpKind::kVariable ? e.index() : -1;
  };
  for (int mask = 0; mask < (1 << m); ++mask) {
    ++best.branches;
    std::vector<mpcckit::Expr> rows(prob.g.outputs().begin(), prob.g.outputs().end());
    std::vector<double> lo(prob.lbg.data(), prob.lbg.data() + ng);
    std::vector<double> hi(prob.ubg.data(), prob.ubg.data() + ng);
    VectorXd lbx = prob.lbw, ubx = prob.ubw;
    bool empty = false;
    auto add = [&](const mpcckit::Expr& e, bool zero) {
      const int j = bare(e);
      if (j >= 0) {
        if (zero) {
          if (lbx[j] > 0.0 || ubx[j] < 0.0) empty = true;
          lbx[j] = ubx[j] = 0.0;
        } else {
          if (ubx[j] < 0.0) empty = true;
          lbx[j] = std::max(lbx[j], 0.0);
        }
        return;
      }
      rows.push_back(e);
      lo.push_back(0.0);
      hi.push_back(zero ? 0.0 : kInf);
    };
    for (int i = 0; i < m; ++i) {
      const bool g_zero = (mask >> i) & 1;
      add(prob.G.output(i), g_zero);
      add(prob.H.output(i), !g_zero);
    }
    if (empty) continue;
    SmoothNlp nlp;
    nlp.objective = prob.f;
    nlp.constraints = VectorFunction(rows, prob.n, prob.n_params());
    nlp.lbx = lbx;
    nlp.ubx = ubx;
    nlp.p = prob.p;
    nlp.lbc = Eigen::Map<VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size()));
    nlp.ubc = Eigen::Map<VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size()));
    for (const auto& x : points) {
      KktSolution sol = solve_nlp(nlp, x);
      if (!sol.converged()) continue;
      ++best.branch_solves_converged;
      double feas, comp, f;
      try {
        feas = feasibility_residual(prob, sol.x);
        comp = comp_residual(prob, sol.x);
        f = prob.objective(sol.x);
      } catch (const std::exception&) {
        continue;
      }
      if (feas > 1e-6 || comp > 1e-8) continue;
      if (!best.found || f < best.objective) {
        best.found = true;
        best.objective = f;
        best.x = sol.x;
      }
    }
  }
  return best;
}

namespace {

struct Cone {
  VectorXd grad_f;
  std::vector<VectorXd> eq, ineq;
  std::vector<std::pair<VectorXd, VectorXd>> bi;
};

Cone build_cone(const MpccProblem& prob, const VectorXd& pt, double tol_active) {
  const int n = prob.n;
  Cone k;
  k.grad_f = prob.f.jacobian(pt, prob.p).row(0).transpose();
  const VectorXd gv = prob.eval_g(pt), Gv = prob.eval_G(pt), Hv = prob.eval_H(pt);
  const MatrixXd Jg = prob.g.jacobian(pt, prob.p), JG = prob.G.jacobian(pt, prob.p),
                 JH = prob.H.jacobian(pt, prob.p);
  for (int r = 0; r < prob.n_g(); ++r) {
    const bool lo = std::fabs(gv[r] - prob.lbg[r]) <= tol_active;
    const bool up = std::fabs(gv[r] - prob.ubg[r]) <= tol_active;
    const VectorXd row = Jg.row(r).transpose();
    if (lo && up) k.eq.push_back(row);
    else if (lo) k.ineq.push_back(row);
    else if (up) k.ineq.push_back(-row);
  }
  for (int j = 0; j < n; ++j) {
    VectorXd e = VectorXd::Unit(n, j);
    const bool lo = std::fabs(pt[j] - prob.lbw[j]) <= tol_active;
    const bool up = std::fabs(pt[j] - prob.ubw[j]) <= tol_active;
    if (lo && up) k.eq.push_back(e);
    else if (lo) k.ineq.push_back(e);
    else if (up) k.ineq.push_back(-e);
  }
  for (int i = 0; i < prob.m(); ++i) {
    const bool g0 = Gv[i] <= tol_active, h0 = Hv[i] <= tol_active;
    const VectorXd rg = JG.row(i).transpose(), rh = JH.row(i).transpose();
    if (g0 && h0) k.bi.emplace_back(rg, rh);
    else if (g0) k.eq.push_back(rg);
    else if (h0) k.eq.push_back(rh);
  }
  return k;
}

}  // namespace

double witness_violation(const MpccProblem& prob, const VectorXd& pt,
                         const VectorXd& d, double tol_active) {
  const Cone k = build_cone(prob, pt, tol_active);
  double v = 0.0;
  for (const auto& r : k.eq) v = std::max(v, std::fabs(r.dot(d)));
  for (const auto& r : k.ineq) v = std::max(v, -r.dot(d));
  for (const auto& [rg, rh] : k.bi) {
    const double a = rg.dot(d), b = rh.dot(d);
    v = std::max({v, -a, -b, std::min(std::fabs(a), std::fabs(b))});
  }
  return v;
}

SampledDescent sampled_b_check(const MpccProblem& prob, const VectorXd& pt,
                               int samples, std::uint64_t seed,
                               double tol_active, double slope_tol) {
  const int n = prob.n;
  const Cone k = build_cone(prob, pt, tol_active);
  const VectorXd& grad_f = k.grad_f;
  const auto& eq = k.eq;
  const auto& ineq = k.ineq;
  const auto& bi = k.bi;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution coin(0.5);
  SampledDescent out;
  out.best_slope = std::numeric_limits<double>::infinity();

  for (int s = 0; s < samples; ++s) {
    std::vector<VectorXd> rows = eq, cons;
    for (const auto& r : ineq) (coin(rng) ? rows : cons).push_back(r);
    for (const auto& [rg, rh] : bi) {
      if (coin(rng)) {
        rows.push_back(rg);
        cons.push_back(rh);
      } else {
        rows.push_back(rh);
        cons.push_back(rg);
      }
    }
    MatrixXd N;
    if (rows.empty()) {
      N = MatrixXd::Identity(n, n);
    } else {
      MatrixXd A(rows.size(), n);
      for (std::size_t k = 0; k < rows.size(); ++k) A.row(k) = rows[k].transpose();
      Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeFullV);
      const auto& sv = svd.singularValues();
      int rank = 0;
      for (Eigen::Index k = 0; k < sv.size(); ++k)
        if (sv[k] > 1e-10 * std::max(1.0, sv[0])) ++rank;
      if (rank == n) continue;
      N = svd.matrixV().rightCols(n - rank);
    }
    VectorXd z(N.cols());
    for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = normal(rng);
    VectorXd d = N * z;
    const double dn = d.lpNorm<Eigen::Infinity>();
    if (dn <= 0.0) continue;
    d /= dn;
    bool ok = true;
    for (const auto& c : cons) {
      if (c.dot(d) < -1e-12 * std::max(1.0, c.lpNorm<Eigen::Infinity>())) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    ++out.accepted;
    const double slope = grad_f.dot(d);
    if (slope < out.best_slope) {
      out.best_slope = slope;
      out.direction = d;
    }
  }
  out.descent_found = out.accepted > 0 && out.best_slope < -slope_tol;
  return out;
}

namespace {

// States along one sign sequence, or false if the sequence is inconsistent.
bool sign_trajectory(double x, double h, int steps, unsigned mask, std::vector<double>& xs) {
  xs.resize(steps);
  for (int k = 0; k < steps; ++k) {
    if ((mask >> k) & 1u) {
      if (x < -h) return false;
      x = std::max(x - h, 0.0);
    } else {
      if (x > h) return false;
      x = std::min(x + h, 0.0);
    }
    xs[k] = x;
  }
  return true;
}

}  // namespace

SignSequenceOptimum sign_sequence_oracle(
    double lo, double hi, double h, int steps,
    const std::function<double(double, const std::vector<double>&)>& objective) {
  SignSequenceOptimum best;
  std::vector<double> xs;
  const int grid = lo == hi ? 1 : 200001;
  const double step = grid > 1 ? (hi - lo) / (grid - 1) : 0.0;
  for (unsigned mask = 0; mask < (1u << steps); ++mask) {
    ++best.sequences;
    auto value = [&](double x0) {
      if (!sign_trajectory(x0, h, steps, mask, xs)) return std::numeric_limits<double>::infinity();
      return objective(x0, xs);
    };
    double bx = 0.0, bf = std::numeric_limits<double>::infinity();
    for (int i = 0; i < grid; ++i) {
      const double x0 = i + 1 == grid ? hi : lo + i * step;
      const double f = value(x0);
      if (f < bf) bf = f, bx = x0;
    }
    if (!std::isfinite(bf)) continue;
    ++best.consistent;
    if (grid > 1) {
      double a = std::max(lo, bx - step), b = std::min(hi, bx + step);
      if (std::isfinite(value(a)) && std::isfinite(value(b))) {
        const double r = 0.5 * (std::sqrt(5.0) - 1.0);
        for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
          const double c = b - r * (b - a), d = a + r * (b - a);
          if (value(c) < value(d)) b = d; else a = c;
        }
        const double xm = 0.5 * (a + b), fm = value(xm);
        if (fm < bf) bf = fm, bx = xm;
      }
    }
    if (!best.found || bf < best.objective) {
      best.found = true;
      best.objective = bf;
      best.x_init = bx;
      sign_trajectory(bx, h, steps, mask, best.states);
    }
  }
  return best;
}

}  // namespace oracle
