#include "mpcckit/mpcc.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace mpcckit {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

void check_bounds(const VectorXd& lo, const VectorXd& hi, int expected,
                  const std::string& lo_name, const std::string& hi_name) {
  require(lo.size() == expected,
          lo_name + " has length " + std::to_string(lo.size()) +
              ", expected " + std::to_string(expected));
  require(hi.size() == expected,
          hi_name + " has length " + std::to_string(hi.size()) +
              ", expected " + std::to_string(expected));
  for (int i = 0; i < expected; ++i) {
    if (std::isnan(lo[i]) || std::isnan(hi[i]) || lo[i] > hi[i]) {
      std::ostringstream os;
      os << lo_name << "[" << i << "] = " << lo[i] << " exceeds " << hi_name
         << "[" << i << "] = " << hi[i];
      throw std::invalid_argument(os.str());
    }
  }
}

}  // namespace

double default_tol_active() { return std::sqrt(kDefaultCompTol); }

void MpccProblem::validate() const {
  require(n >= 0, "negative variable count");
  require(f.num_outputs() == 1, "objective must have exactly one output");
  const int np = n_params();
  for (const auto* fun : {&f, &g, &G, &H}) {
    require(fun->n_vars() == n, "function dimension does not match n");
    require(fun->n_params() == np,
            "function parameter count does not match p");
  }
  require(G.num_outputs() == H.num_outputs(),
          "G and H have different output counts");
  check_bounds(lbw, ubw, n, "lbw", "ubw");
  check_bounds(lbg, ubg, g.num_outputs(), "lbg", "ubg");
  require(p_names.empty() || static_cast<int>(p_names.size()) == np,
          "p_names length does not match p");
}

MpccProblem make_problem(std::string name, int n, const Expr& f,
                         const std::vector<Expr>& g, VectorXd lbg,
                         VectorXd ubg, VectorXd lbw, VectorXd ubw,
                         const std::vector<Expr>& G,
                         const std::vector<Expr>& H, VectorXd p,
                         std::vector<std::string> p_names) {
  MpccProblem prob;
  prob.name = std::move(name);
  prob.n = n;
  const int np = static_cast<int>(p.size());
  prob.f = VectorFunction({f}, n, np);
  prob.g = VectorFunction(g, n, np);
  prob.G = VectorFunction(G, n, np);
  prob.H = VectorFunction(H, n, np);
  prob.lbg = std::move(lbg);
  prob.ubg = std::move(ubg);
  prob.lbw = lbw.size() == 0 ? VectorXd::Constant(n, -kInf) : std::move(lbw);
  prob.ubw = ubw.size() == 0 ? VectorXd::Constant(n, kInf) : std::move(ubw);
  prob.p = std::move(p);
  prob.p_names = std::move(p_names);
  prob.validate();
  return prob;
}

double comp_residual(const MpccProblem& prob, const VectorXd& w) {
  if (prob.m() == 0) return 0.0;
  const VectorXd G = prob.eval_G(w);
  const VectorXd H = prob.eval_H(w);
  return G.cwiseProduct(H).maxCoeff();
}

double feasibility_residual(const MpccProblem& prob, const VectorXd& w) {
  double r = 0.0;
  for (int i = 0; i < prob.n; ++i) {
    r = std::max(r, prob.lbw[i] - w[i]);
    r = std::max(r, w[i] - prob.ubw[i]);
  }
  if (prob.n_g() > 0) {
    const VectorXd g = prob.eval_g(w);
    for (int i = 0; i < prob.n_g(); ++i) {
      r = std::max(r, prob.lbg[i] - g[i]);
      r = std::max(r, g[i] - prob.ubg[i]);
    }
  }
  if (prob.m() > 0) {
    r = std::max(r, -prob.eval_G(w).minCoeff());
    r = std::max(r, -prob.eval_H(w).minCoeff());
  }
  return r;
}

IndexSets index_sets_from_values(const VectorXd& G, const VectorXd& H,
                                 double tol_active) {
  if (!(tol_active > 0.0))
    throw std::invalid_argument("tol_active must be positive");
  if (G.size() != H.size())
    throw std::invalid_argument("G and H values differ in length");
  IndexSets sets;
  for (int i = 0; i < G.size(); ++i) {
    if (G[i] < tol_active && H[i] < tol_active)
      sets.i_zero_zero.push_back(i);
    else if (G[i] < H[i])
      sets.i_zero_plus.push_back(i);
    else
      sets.i_plus_zero.push_back(i);
  }
  return sets;
}

IndexSets index_sets(const MpccProblem& prob, const VectorXd& w,
                     double tol_active) {
  return index_sets_from_values(prob.eval_G(w), prob.eval_H(w), tol_active);
}

MpccProblem lift_vertical(const MpccProblem& prob) {
  const int n = prob.n;
  const int m = prob.m();
  if (m == 0) return prob;
  const int nl = n + 2 * m;
  const int np = prob.n_params();

  std::vector<Expr> g = prob.g.outputs();
  std::vector<Expr> G, H;
  for (int i = 0; i < m; ++i) {
    const Expr sg = Expr::variable(n + i);
    const Expr sh = Expr::variable(n + m + i);
    G.push_back(sg);
    H.push_back(sh);
  }
  for (int i = 0; i < m; ++i) g.push_back(G[i] - prob.G.output(i));
  for (int i = 0; i < m; ++i) g.push_back(H[i] - prob.H.output(i));

  MpccProblem out;
  out.name = prob.name;
  out.n = nl;
  out.f = VectorFunction(prob.f.outputs(), nl, np);
  out.g = VectorFunction(g, nl, np);
  out.G = VectorFunction(G, nl, np);
  out.H = VectorFunction(H, nl, np);
  out.lbg.resize(prob.n_g() + 2 * m);
  out.ubg.resize(prob.n_g() + 2 * m);
  out.lbg << prob.lbg, VectorXd::Zero(2 * m);
  out.ubg << prob.ubg, VectorXd::Zero(2 * m);
  out.lbw.resize(nl);
  out.ubw.resize(nl);
  out.lbw << prob.lbw, VectorXd::Zero(2 * m);
  out.ubw << prob.ubw, VectorXd::Constant(2 * m, kInf);
  out.p = prob.p;
  out.p_names = prob.p_names;
  out.validate();
  return out;
}

VectorXd lift_point(const MpccProblem& prob, const VectorXd& w) {
  if (prob.m() == 0) return w;
  VectorXd out(prob.n + 2 * prob.m());
  out << w, prob.eval_G(w), prob.eval_H(w);
  return out;
}

VectorXd unlift_point(const VectorXd& lifted, int n) { return lifted.head(n); }

}  // namespace mpcckit
