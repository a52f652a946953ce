#include "mpcckit/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <stdexcept>

namespace mpcckit {

bool CorpusEntry::has_tag(std::string_view t) const {
  return std::find(tags.begin(), tags.end(), t) != tags.end();
}

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Expr var(int i) { return Expr::variable(i); }
Expr sq(const Expr& e) { return pow(e, 2); }

VectorXd inf_vec(int n, double sign) { return VectorXd::Constant(n, sign * kInf); }

// min (w1-1)^2 + (w2-1)^2 s.t. 0 <= w1 _|_ w2 >= 0
CorpusEntry ex2() {
  CorpusEntry e;
  e.problem = make_problem("ex2", 2, sq(var(0) - 1.0) + sq(var(1) - 1.0), {},
                           {}, {}, {}, {}, {var(0)}, {var(1)});
  e.x0 = vec({1.0, 0.5});
  e.best_known_objective = 1.0;
  e.known_solutions = {{vec({1, 0}), Strongest::kS},
                       {vec({0, 1}), Strongest::kS},
                       {vec({0, 0}), Strongest::kC}};
  e.tags = {"example", "degenerate"};
  return e;
}

CorpusEntry ex2_vertical() {
  CorpusEntry e;
  const CorpusEntry base = ex2();
  e.problem = lift_vertical(base.problem);
  e.problem.name = "ex2v";
  e.x0 = lift_point(base.problem, base.x0);
  e.best_known_objective = 1.0;
  e.known_solutions = {{vec({1, 0, 1, 0}), Strongest::kS},
                       {vec({0, 1, 0, 1}), Strongest::kS}};
  e.tags = {"example", "lifted"};
  return e;
}

// Two pairs with indefinite bilinear coupling in the objective.
CorpusEntry bilinear2() {
  const Expr x1 = var(0), x2 = var(1), y1 = var(2), y2 = var(3);
  const Expr f = 2.0 * x1 * y2 + 2.0 * x2 * y1 - x1 - x2 +
                 0.5 * (sq(x1) + sq(x2) + sq(y1) + sq(y2));
  CorpusEntry e;
  e.problem = make_problem("bilinear2", 4, f, {}, {}, {}, {}, {}, {x1, x2},
                           {y1, y2});
  e.x0 = vec({0.5, 0.5, 0.5, 0.5});
  e.best_known_objective = -1.0;
  e.known_solutions = {{vec({1, 1, 0, 0}), Strongest::kS}};
  e.tags = {"nonconvex"};
  return e;
}

// Implicit Euler for xdot = -sign(x) as a step DCS: x_k = lp_k - ln_k,
// 0 <= lp_k _|_ 1 - y_k >= 0, 0 <= ln_k _|_ y_k >= 0,
// x_k = x_{k-1} + h (1 - 2 y_k).
struct SignDcs {
  std::vector<Expr> g, G, H;
  int n = 0;
  int x(int k) const { return k == 0 ? 0 : 1 + 4 * (k - 1); }
  int y(int k) const { return 2 + 4 * (k - 1); }
  int lp(int k) const { return 3 + 4 * (k - 1); }
  int ln(int k) const { return 4 + 4 * (k - 1); }
};

SignDcs sign_dcs(int steps, double h, const Expr& x_init) {
  SignDcs d;
  d.n = 1 + 4 * steps;
  for (int k = 1; k <= steps; ++k) {
    const Expr xk = var(d.x(k)), yk = var(d.y(k));
    const Expr xprev = k == 1 ? x_init : var(d.x(k - 1));
    d.g.push_back(xk - var(d.lp(k)) + var(d.ln(k)));
    d.g.push_back(xk - xprev - h * (1.0 - 2.0 * yk));
    d.G.push_back(var(d.lp(k)));
    d.H.push_back(1.0 - yk);
    d.G.push_back(var(d.ln(k)));
    d.H.push_back(yk);
  }
  return d;
}

// OCP: choose x_0 in [-1, 1] so that x_3 lands near 0.2.
CorpusEntry sign_ocp() {
  const double h = 0.25;
  SignDcs d = sign_dcs(3, h, var(0));
  const Expr f = sq(var(d.x(3)) - 0.2) + 0.1 * sq(var(0) - 0.5);
  VectorXd lbw = inf_vec(d.n, -1.0), ubw = inf_vec(d.n, 1.0);
  lbw[0] = -1.0;
  ubw[0] = 1.0;
  const int ng = static_cast<int>(d.g.size());
  CorpusEntry e;
  e.problem = make_problem("SGNOCP_001_001_003_1_IE_STEP_0_FIL_0", d.n, f, d.g,
                           VectorXd::Zero(ng), VectorXd::Zero(ng), lbw, ubw,
                           d.G, d.H);
  e.x0 = VectorXd::Zero(d.n);
  for (int k = 1; k <= 3; ++k) e.x0[d.y(k)] = 0.5;
  // All states stay positive: x_3 = x_0 - 3h, and the quadratic in x_0 is
  // minimized at (0.95 + 0.1 * 0.5) / 1.1.
  const double x0 = 10.0 / 11.0;
  VectorXd w = VectorXd::Zero(d.n);
  w[0] = x0;
  for (int k = 1; k <= 3; ++k) {
    const double xk = x0 - k * h;
    w[d.x(k)] = xk;
    w[d.y(k)] = 1.0;
    w[d.lp(k)] = xk;
  }
  e.best_known_objective = std::pow(x0 - 3 * h - 0.2, 2) + 0.1 * std::pow(x0 - 0.5, 2);
  e.known_solutions = {{w, Strongest::kS}};
  e.tags = {"dcs", "ocp"};
  return e;
}

// Simulation from x(0) = 0.3 with h = 0.2: one step down, then sliding at 0.
CorpusEntry sign_sim() {
  const double h = 0.2;
  SignDcs d = sign_dcs(3, h, Expr(0.3));
  // x_0 is not a decision here; pin it so the variable layout matches.
  VectorXd lbw = inf_vec(d.n, -1.0), ubw = inf_vec(d.n, 1.0);
  lbw[0] = ubw[0] = 0.3;
  Expr f = 0.0;
  for (int k = 1; k <= 3; ++k) f += sq(var(d.x(k)));
  const int ng = static_cast<int>(d.g.size());
  CorpusEntry e;
  e.problem = make_problem("SGNSIM_001_001_003_1_IE_STEP_0_FIL_0", d.n, f, d.g,
                           VectorXd::Zero(ng), VectorXd::Zero(ng), lbw, ubw,
                           d.G, d.H);
  e.x0 = VectorXd::Zero(d.n);
  e.x0[0] = 0.3;
  for (int k = 1; k <= 3; ++k) e.x0[d.y(k)] = 0.5;
  VectorXd w = VectorXd::Zero(d.n);
  w[0] = 0.3;
  w[d.x(1)] = 0.1;
  w[d.lp(1)] = 0.1;
  w[d.y(1)] = 1.0;
  w[d.y(2)] = 0.75;
  w[d.y(3)] = 0.5;
  e.best_known_objective = 0.01;
  e.known_solutions = {{w, Strongest::kS}};
  e.is_ocp = false;
  e.tags = {"dcs", "simulation"};
  return e;
}

CorpusEntry degen_lin() {
  CorpusEntry e;
  e.problem = make_problem("degen_lin", 3, var(0) + var(1) + sq(var(2) - 1.0),
                           {}, {}, {}, {}, {}, {var(0)}, {var(1)});
  e.x0 = vec({0.5, 0.5, 0.0});
  e.best_known_objective = 0.0;
  e.known_solutions = {{vec({0, 0, 1}), Strongest::kS}};
  e.tags = {"degenerate"};
  return e;
}

CorpusEntry degen_sq() {
  CorpusEntry e;
  e.problem = make_problem("degen_sq", 2, sq(var(0) + 1.0) + sq(var(1) + 1.0),
                           {}, {}, {}, {}, {}, {var(0)}, {var(1)});
  e.x0 = vec({1.0, 1.0});
  e.best_known_objective = 2.0;
  e.known_solutions = {{vec({0, 0}), Strongest::kS}};
  e.tags = {"degenerate"};
  return e;
}

// Biactive optimum with vanishing multipliers and an indefinite objective.
CorpusEntry ralph2() {
  CorpusEntry e;
  e.problem = make_problem("ralph2", 2,
                           sq(var(0)) + sq(var(1)) - 4.0 * var(0) * var(1), {},
                           {}, {}, {}, {}, {var(0)}, {var(1)});
  e.x0 = vec({1.0, 0.8});
  e.best_known_objective = 0.0;
  e.known_solutions = {{vec({0, 0}), Strongest::kS}};
  e.tags = {"degenerate", "nonconvex"};
  return e;
}

CorpusEntry degen_2pair() {
  const Expr f = sq(var(0) + 1.0) + sq(var(1) + 1.0) + sq(var(2) - 1.0) +
                 sq(var(3) + 2.0);
  CorpusEntry e;
  e.problem = make_problem("degen_2pair", 4, f, {}, {}, {}, {}, {},
                           {var(0), var(2)}, {var(1), var(3)});
  e.x0 = vec({0.5, 0.5, 0.5, 0.5});
  e.best_known_objective = 6.0;
  e.known_solutions = {{vec({0, 0, 1, 0}), Strongest::kS}};
  e.tags = {"degenerate"};
  return e;
}

CorpusEntry degen3() {
  const Expr f = var(0) + var(1) + sq(var(2) + 1.0) + sq(var(3) + 0.5) +
                 var(4) + 2.0 * var(5);
  CorpusEntry e;
  e.problem = make_problem("degen3", 6, f, {}, {}, {}, {}, {},
                           {var(0), var(2), var(4)}, {var(1), var(3), var(5)});
  e.x0 = VectorXd::Constant(6, 0.5);
  e.best_known_objective = 1.25;
  e.known_solutions = {{VectorXd::Zero(6), Strongest::kS}};
  e.tags = {"degenerate"};
  return e;
}

// Lower level min_y 0.5 y^2 - x y s.t. y <= 2 replaced by its KKT system.
// Both branches meet at the biactive optimum (2, 2, 0).
CorpusEntry bilevel_box() {
  const Expr x = var(0), y = var(1), l = var(2);
  CorpusEntry e;
  e.problem = make_problem("bilevel_box", 3, sq(x - 1.0) + sq(y - 3.0),
                           {y - x + l}, vec({0}), vec({0}), {}, {}, {2.0 - y},
                           {l});
  e.x0 = vec({0.0, 0.0, 0.0});
  e.best_known_objective = 2.0;
  e.known_solutions = {{vec({2, 2, 0}), Strongest::kS}};
  e.tags = {"bilevel", "degenerate"};
  return e;
}

CorpusEntry smooth_qp() {
  CorpusEntry e;
  e.problem = make_problem("smooth_qp", 2, sq(var(0) - 1.0) + sq(var(1) - 2.0),
                           {var(0) + var(1)}, vec({-kInf}), vec({2.0}), {}, {},
                           {}, {});
  e.x0 = vec({0.0, 0.0});
  e.best_known_objective = 0.5;
  e.known_solutions = {{vec({0.5, 1.5}), Strongest::kS}};
  e.tags = {"smooth"};
  return e;
}

CorpusEntry infeasible() {
  const Expr x = var(0), y = var(1), z = var(2);
  CorpusEntry e;
  e.problem = make_problem("infeasible", 3, sq(x - 1.0) + sq(y - 1.0) + sq(z),
                           {sq(z)}, vec({-kInf}), vec({-1.0}), {}, {}, {x}, {y});
  e.x0 = vec({1.0, 0.5, 0.5});
  e.tags = {"infeasible"};
  return e;
}

// Two isolated local minima; the start sits in the basin of the better one.
CorpusEntry knapsack2() {
  CorpusEntry e;
  e.problem = make_problem("knapsack2", 2, -var(0) - 2.0 * var(1), {}, {}, {},
                           vec({0, 0}), vec({1, 1}), {var(0)}, {var(1)});
  e.x0 = vec({0.2, 0.8});
  e.best_known_objective = -2.0;
  e.known_solutions = {{vec({0, 1}), Strongest::kS},
                       {vec({1, 0}), Strongest::kS}};
  e.tags = {"multimodal"};
  return e;
}

// Bilevel program with a convex lower level, written through its KKT system.
CorpusEntry bard1() {
  const Expr x = var(0), y = var(1), l1 = var(2), l2 = var(3), l3 = var(4);
  CorpusEntry e;
  e.problem = make_problem(
      "bard1", 5, sq(x - 5.0) + sq(2.0 * y + 1.0),
      {2.0 * (y - 1.0) - 1.5 * x + l1 - 0.5 * l2 + l3}, vec({0}), vec({0}),
      VectorXd::Zero(5), {},
      {3.0 * x - y - 3.0, -x + 0.5 * y + 4.0, -x - y + 7.0}, {l1, l2, l3});
  e.x0 = vec({1.0, 1.0, 1.0, 1.0, 1.0});
  e.best_known_objective = 17.0;
  e.known_solutions = {{vec({1, 0, 3.5, 0, 0}), Strongest::kS}};
  e.tags = {"bilevel"};
  return e;
}

// The corner (0, 1) is biactive with nu = -2, xi = 0: M-stationary but
// not a minimizer.
CorpusEntry lcp_line() {
  const Expr z1 = var(0), z2 = var(1);
  CorpusEntry e;
  e.problem = make_problem("lcp_line", 2, sq(z1 - 1.0) + sq(z2 - 1.0), {}, {},
                           {}, {}, {}, {z1}, {z1 + z2 - 1.0});
  e.x0 = vec({0.0, 0.0});
  e.best_known_objective = 0.5;
  e.known_solutions = {{vec({0.5, 0.5}), Strongest::kS},
                       {vec({0, 1}), Strongest::kM}};
  e.tags = {"lcp"};
  return e;
}

// 0 <= y _|_ y - x^2 >= 0; the optimum is on the parabola branch at the
// root of 2x^2 - 2x - 1.
CorpusEntry nonlin_pair() {
  const Expr x = var(0), y = var(1);
  CorpusEntry e;
  e.problem = make_problem("nonlin_pair", 2, sq(x - 1.0) + sq(y - 2.0), {}, {},
                           {}, {}, {}, {y}, {y - sq(x)});
  e.x0 = vec({1.0, 1.0});
  const double s3 = std::sqrt(3.0);
  e.best_known_objective = 11.0 / 4.0 - 1.5 * s3;
  e.known_solutions = {{vec({0.5 * (1.0 + s3), 1.0 + 0.5 * s3}), Strongest::kS}};
  e.tags = {"nonlinear"};
  return e;
}

CorpusEntry param_ex() {
  const Expr f = sq(var(0) - Expr::parameter(0)) + sq(var(1) - Expr::parameter(1));
  CorpusEntry e;
  e.problem = make_problem("param_ex", 2, f, {}, {}, {}, {}, {}, {var(0)},
                           {var(1)}, vec({1.0, 0.5}), {"a", "b"});
  e.x0 = vec({1.0, 0.25});
  e.best_known_objective = 0.25;
  e.known_solutions = {{vec({1, 0}), Strongest::kS},
                       {vec({0, 0.5}), Strongest::kS}};
  e.tags = {"parametric"};
  return e;
}

// x_i in {0, 1} through 0 <= x_i _|_ 1 - x_i >= 0.
CorpusEntry binary4() {
  const double c[4] = {0.3, 0.8, 0.6, -0.2};
  Expr f = 0.0;
  std::vector<Expr> G, H;
  for (int i = 0; i < 4; ++i) {
    f += sq(var(i) - c[i]);
    G.push_back(var(i));
    H.push_back(1.0 - var(i));
  }
  CorpusEntry e;
  e.problem = make_problem("binary4", 4, f, {}, {}, {}, {}, {}, G, H);
  e.x0 = VectorXd::Constant(4, 0.5);
  e.best_known_objective = 0.33;
  e.known_solutions = {{vec({0, 1, 1, 0}), Strongest::kS}};
  e.tags = {"combinatorial"};
  return e;
}

CorpusEntry circle_pair() {
  const Expr x = var(0), y = var(1);
  CorpusEntry e;
  e.problem = make_problem("circle_pair", 2, -x - y, {sq(x) + sq(y)},
                           vec({-kInf}), vec({4.0}), {}, {}, {x}, {y});
  e.x0 = vec({1.0, 0.5});
  e.best_known_objective = -2.0;
  e.known_solutions = {{vec({2, 0}), Strongest::kS},
                       {vec({0, 2}), Strongest::kS}};
  e.tags = {"nonlinear"};
  return e;
}

// Same structure as ex2 with the unconstrained minimizer off the diagonal.
CorpusEntry ex2_shifted() {
  CorpusEntry e;
  e.problem = make_problem("ex2_shifted", 2, sq(var(0) - 2.0) + sq(var(1) - 1.0),
                           {}, {}, {}, {}, {}, {var(0)}, {var(1)});
  e.x0 = vec({1.0, 1.0});
  e.best_known_objective = 1.0;
  e.known_solutions = {{vec({2, 0}), Strongest::kS},
                       {vec({0, 1}), Strongest::kS}};
  e.tags = {"example"};
  return e;
}

std::vector<CorpusEntry> build() {
  std::vector<CorpusEntry> out;
  for (auto make : {ex2, ex2_vertical, ex2_shifted, bilinear2, sign_ocp,
                    sign_sim, degen_lin, degen_sq, ralph2, degen_2pair, degen3,
                    bilevel_box, smooth_qp, infeasible, knapsack2, bard1,
                    lcp_line, nonlin_pair, param_ex, binary4, circle_pair})
    out.push_back(make());
  return out;
}

}  // namespace

const std::vector<CorpusEntry>& corpus() {
  static const std::vector<CorpusEntry> entries = build();
  return entries;
}

const CorpusEntry& corpus_entry(std::string_view name) {
  for (const auto& e : corpus())
    if (e.name() == name) return e;
  throw std::out_of_range("no corpus entry named '" + std::string(name) + "'");
}

}  // namespace mpcckit
