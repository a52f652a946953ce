#ifndef MPCCKIT_MPCC_HPP
#define MPCCKIT_MPCC_HPP

#include <limits>
#include <string>
#include <vector>

#include "mpcckit/expr.hpp"

namespace mpcckit {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Parametric MPCC
//
//   min f(w, p)  s.t.  lbw <= w <= ubw,  lbg <= g(w, p) <= ubg,
//                      0 <= G(w, p)  _|_  H(w, p) >= 0.
//
// Inequalities h(w) >= 0 are written as rows of g with lbg = 0, ubg = inf.
struct MpccProblem {
  std::string name;
  int n = 0;
  VectorFunction f;
  VectorFunction g;
  VectorXd lbg, ubg;
  VectorXd lbw, ubw;
  VectorFunction G;
  VectorFunction H;
  VectorXd p;
  std::vector<std::string> p_names;

  int m() const { return G.num_outputs(); }
  int n_g() const { return g.num_outputs(); }
  int n_params() const { return static_cast<int>(p.size()); }

  // Throws std::invalid_argument naming the first inconsistency.
  void validate() const;

  double objective(const VectorXd& w) const { return f.eval(w, p)[0]; }
  VectorXd eval_g(const VectorXd& w) const { return g.eval(w, p); }
  VectorXd eval_G(const VectorXd& w) const { return G.eval(w, p); }
  VectorXd eval_H(const VectorXd& w) const { return H.eval(w, p); }
};

// Assembles and validates a problem from expressions. Empty bound vectors
// mean "unbounded" for w.
MpccProblem make_problem(std::string name, int n, const Expr& f,
                         const std::vector<Expr>& g, VectorXd lbg,
                         VectorXd ubg, VectorXd lbw, VectorXd ubw,
                         const std::vector<Expr>& G,
                         const std::vector<Expr>& H, VectorXd p = {},
                         std::vector<std::string> p_names = {});

// Partition of the pair indices 0..m-1.
struct IndexSets {
  std::vector<int> i_plus_zero;  // G_i > 0 = H_i
  std::vector<int> i_zero_plus;  // G_i = 0 < H_i
  std::vector<int> i_zero_zero;  // biactive
};

inline constexpr double kDefaultCompTol = 1e-7;
double default_tol_active();  // sqrt(kDefaultCompTol)

// max_i G_i(w) H_i(w), 0 when m = 0.
double comp_residual(const MpccProblem& prob, const VectorXd& w);
// Largest violation of the bounds on w and g and of G, H >= 0.
double feasibility_residual(const MpccProblem& prob, const VectorXd& w);

IndexSets index_sets(const MpccProblem& prob, const VectorXd& w,
                     double tol_active = default_tol_active());
IndexSets index_sets_from_values(const VectorXd& G, const VectorXd& H,
                                 double tol_active = default_tol_active());

// Vertical form: variables [w; sG; sH], complementarity on sG _|_ sH, and the
// equations sG - G(w) = 0, sH - H(w) = 0 appended after the original g rows.
MpccProblem lift_vertical(const MpccProblem& prob);
// Maps a point of `prob` to the corresponding point of lift_vertical(prob).
VectorXd lift_point(const MpccProblem& prob, const VectorXd& w);
// Drops the slack block of a lifted point (n = original variable count).
VectorXd unlift_point(const VectorXd& lifted, int n);

}  // namespace mpcckit

#endif  // MPCCKIT_MPCC_HPP
