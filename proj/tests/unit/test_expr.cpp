#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <omp.h>

#include "mpcckit/expr.hpp"
#include "oracles.hpp"
#include "random_problems.hpp"

using namespace mpcckit;

namespace {

Expr x(int i) { return Expr::variable(i); }
Expr p(int i) { return Expr::parameter(i); }

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(v.size());
  int i = 0;
  for (double d : v) out[i++] = d;
  return out;
}

VectorXd random_point(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = U(rng);
  return v;
}

}  // namespace

TEST(Expr, EvalSmallExamples) {
  EXPECT_DOUBLE_EQ(VectorFunction({pow(x(0), 2)}, 1, 0).eval(vec({3}), {})[0], 9.0);
  EXPECT_DOUBLE_EQ(VectorFunction({x(0) * x(1) - p(0)}, 2, 1).eval(vec({2, 3}), vec({1}))[0], 5.0);
  VectorFunction hyp({sqrt(pow(x(0), 2) + pow(x(1), 2) + pow(p(0), 2))}, 2, 1);
  EXPECT_DOUBLE_EQ(hyp.eval(vec({3, 4}), vec({0}))[0], 5.0);
}

TEST(Expr, JacobianSmallExamples) {
  MatrixXd J = VectorFunction({pow(x(0), 2)}, 1, 0).jacobian(vec({3}), {});
  EXPECT_DOUBLE_EQ(J(0, 0), 6.0);
  J = VectorFunction({x(0) * x(1)}, 2, 0).jacobian(vec({2, 3}), {});
  EXPECT_DOUBLE_EQ(J(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(J(0, 1), 2.0);
}

TEST(Expr, HessianSmallExamples) {
  VectorFunction none({}, 1, 0);
  MatrixXd H = hessian_lagrangian(VectorFunction({pow(x(0), 2)}, 1, 0), none,
                                  vec({0.7}), {}, 1.0, VectorXd());
  ASSERT_EQ(H.rows(), 1);
  EXPECT_DOUBLE_EQ(H(0, 0), 2.0);
  VectorFunction none2({}, 2, 0);
  H = hessian_lagrangian(VectorFunction({x(0) * x(1)}, 2, 0), none2, vec({0.3, -2}), {},
                         1.0, VectorXd());
  EXPECT_DOUBLE_EQ(H(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(H(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(H(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(H(1, 1), 0.0);
}

TEST(Expr, HessianLagrangianWeightsConstraints) {
  VectorFunction f({pow(x(0), 3)}, 2, 0);
  VectorFunction c({x(0) * x(1), sin(x(1))}, 2, 0);
  const VectorXd at = vec({0.5, 0.25});
  MatrixXd H = hessian_lagrangian(f, c, at, {}, 2.0, vec({3.0, -1.0}));
  EXPECT_NEAR(H(0, 0), 2.0 * 6.0 * 0.5, 1e-14);
  EXPECT_NEAR(H(0, 1), 3.0, 1e-14);
  EXPECT_NEAR(H(1, 1), std::sin(0.25), 1e-14);
}

TEST(Expr, OperatorNamesRoundTrip) {
  for (int k = 0; k <= static_cast<int>(OpKind::kMax); ++k) {
    auto kind = static_cast<OpKind>(k);
    EXPECT_EQ(op_from_name(op_name(kind)), kind);
  }
  EXPECT_THROW(op_from_name("pow"), std::invalid_argument);
}

TEST(Expr, MakeChecksArity) {
  EXPECT_THROW(Expr::make(OpKind::kAdd, {x(0)}), std::invalid_argument);
  EXPECT_THROW(Expr::make(OpKind::kSin, {x(0), x(1)}), std::invalid_argument);
  EXPECT_NO_THROW(Expr::make(OpKind::kMax, {x(0), x(1)}));
}

TEST(Expr, OutputsMustStayInDeclaredDimensions) {
  EXPECT_THROW(VectorFunction({x(2)}, 2, 0), std::exception);
  EXPECT_THROW(VectorFunction({p(1)}, 1, 1), std::exception);
}

TEST(Expr, DimensionMismatchOnEval) {
  VectorFunction f({x(0) + x(1)}, 2, 0);
  EXPECT_THROW(f.eval(vec({1}), {}), DimensionError);
}

TEST(Expr, DomainErrors) {
  EXPECT_THROW(VectorFunction({log(x(0))}, 1, 0).eval(vec({-1}), {}), DomainError);
  EXPECT_THROW(VectorFunction({sqrt(x(0))}, 1, 0).eval(vec({-1}), {}), DomainError);
  EXPECT_THROW(VectorFunction({1.0 / x(0)}, 1, 0).eval(vec({0}), {}), DomainError);
}

TEST(Expr, MinMaxTiesPickFirstArgument) {
  VectorFunction f({min(x(0), x(1)), max(x(0), x(1))}, 2, 0);
  MatrixXd J = f.jacobian(vec({1, 1}), {});
  EXPECT_EQ(J(0, 0), 1.0);
  EXPECT_EQ(J(0, 1), 0.0);
  EXPECT_EQ(J(1, 0), 1.0);
  EXPECT_EQ(J(1, 1), 0.0);
}

TEST(Expr, SubstituteVariables) {
  Expr e = x(0) * x(1) + sin(x(0));
  Expr s = substitute_variables(e, {p(0) + 1.0, x(0)});
  VectorFunction f({s}, 1, 1);
  EXPECT_NEAR(f.eval(vec({2}), vec({0.5}))[0], 1.5 * 2 + std::sin(1.5), 1e-15);
}

TEST(Expr, JacobianMatchesFiniteDifferences) {
  auto rng = oracle::make_rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 4;
    std::vector<Expr> outs;
    for (int k = 0; k < 3; ++k) outs.push_back(oracle::random_expr(rng, n, 4));
    VectorFunction f(outs, n, 0);
    const VectorXd at = random_point(rng, n);
    const MatrixXd J = f.jacobian(at, {});
    const MatrixXd Jfd = oracle::fd_jacobian(f, at, {}, 1e-6 * (1.0 + at.norm()));
    EXPECT_LE(oracle::rel_error(J, Jfd), 1e-6) << "trial " << trial;
  }
}

TEST(Expr, KinkOperatorsMatchFiniteDifferencesAwayFromKinks) {
  auto rng = oracle::make_rng(12);
  int tested = 0;
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const std::vector<std::pair<const char*, std::function<Expr(Expr, Expr)>>> fam = {
      {"abs", [](Expr a, Expr) { return abs(a); }},
      {"min", [](Expr a, Expr b) { return min(a, b); }},
      {"max", [](Expr a, Expr b) { return max(a, b); }}};
  for (const auto& [name, make] : fam) {
    VectorFunction f({make(sin(x(0)) * x(1), x(1) - x(0))}, 2, 0);
    int done = 0;
    while (done < 100) {
      VectorXd at(2);
      at << U(rng), U(rng);
      const double a = std::sin(at[0]) * at[1], b = at[1] - at[0];
      const double gap = std::string(name) == "abs" ? std::fabs(a) : std::fabs(a - b);
      if (gap < 1e-3) continue;
      const MatrixXd J = f.jacobian(at, {});
      EXPECT_LE(oracle::rel_error(J, oracle::fd_jacobian(f, at, {})), 1e-6) << name;
      ++done;
      ++tested;
    }
  }
  EXPECT_EQ(tested, 300);
}

TEST(Expr, HessianMatchesFiniteDifferencesAndIsSymmetric) {
  auto rng = oracle::make_rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 4;
    Expr e = oracle::random_expr(rng, n, 3);
    VectorFunction f({e}, n, 0);
    VectorFunction none({}, n, 0);
    const VectorXd at = random_point(rng, n);
    const MatrixXd H = hessian_lagrangian(f, none, at, {}, 1.0, VectorXd());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) ASSERT_EQ(H(i, j), H(j, i));
    EXPECT_LE(oracle::rel_error(H, oracle::fd_hessian(f, 0, at, {})), 1e-5)
        << "trial " << trial;
  }
}

TEST(Expr, AddChainPermutationInvariance) {
  auto rng = oracle::make_rng(14);
  std::vector<Expr> terms;
  for (int k = 0; k < 8; ++k) terms.push_back(oracle::random_expr(rng, 3, 2));
  const VectorXd at = random_point(rng, 3);
  const double ref = VectorFunction({sum(terms)}, 3, 0).eval(at, {})[0];
  // Same association gives the same bits.
  EXPECT_EQ(VectorFunction({sum(terms)}, 3, 0).eval(at, {})[0], ref);
  std::shuffle(terms.begin(), terms.end(), rng);
  const double perm = VectorFunction({sum(terms)}, 3, 0).eval(at, {})[0];
  EXPECT_LE(std::fabs(perm - ref), 1e-15 * std::fabs(ref));
}

TEST(Expr, ConcurrentEvaluationMatchesSerial) {
  auto rng = oracle::make_rng(15);
  std::vector<Expr> outs;
  for (int k = 0; k < 5; ++k) outs.push_back(oracle::random_expr(rng, 4, 4));
  VectorFunction f(outs, 4, 0);
  std::vector<VectorXd> pts;
  for (int k = 0; k < 64; ++k) pts.push_back(random_point(rng, 4));
  std::vector<MatrixXd> serial, par(pts.size());
  for (const auto& pt : pts) serial.push_back(f.jacobian(pt, {}));
#pragma omp parallel for num_threads(4)
  for (int k = 0; k < static_cast<int>(pts.size()); ++k) par[k] = f.jacobian(pts[k], {});
  for (std::size_t k = 0; k < pts.size(); ++k) EXPECT_EQ(serial[k], par[k]);
}
