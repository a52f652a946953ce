#ifndef MPCCKIT_EXPR_HPP
#define MPCCKIT_EXPR_HPP

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace mpcckit {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class OpKind : std::uint8_t {
  kVariable,
  kParameter,
  kConstant,
  kAdd,
  kSub,
  kMul,
  kDiv,
  kNeg,
  kPowInt,
  kSqrt,
  kSin,
  kCos,
  kExp,
  kLog,
  kAbs,
  kMin,
  kMax,
};

// Serialized operator name ("var", "add", "powi", ...).
std::string_view op_name(OpKind kind);
// Inverse of op_name; throws std::invalid_argument for unknown names.
OpKind op_from_name(std::string_view name);
// Number of children a node of this kind carries.
int op_arity(OpKind kind);

// Immutable graph node. Nodes are only created through Expr factories, which
// enforce arity, so graphs are acyclic by construction.
struct ExprNode {
  OpKind kind;
  std::shared_ptr<const ExprNode> lhs;
  std::shared_ptr<const ExprNode> rhs;
  // Variable/parameter index, or the exponent of kPowInt.
  int index = 0;
  double value = 0.0;
};

class Expr {
 public:
  Expr();  // constant 0
  Expr(double value);  // NOLINT(google-explicit-constructor)

  static Expr variable(int index);
  static Expr parameter(int index);
  static Expr constant(double value);
  // Builds a node from its parts; the child count must match op_arity(kind).
  static Expr make(OpKind kind, std::vector<Expr> children, int index = 0,
                   double value = 0.0);

  OpKind kind() const { return node_->kind; }
  int index() const { return node_->index; }
  double value() const { return node_->value; }
  int arity() const { return op_arity(node_->kind); }
  // i-th child (0 or 1).
  Expr child(int i) const;
  const ExprNode* node() const { return node_.get(); }

  bool is_constant() const { return node_->kind == OpKind::kConstant; }

  // Largest variable / parameter index referenced, -1 if none.
  int max_variable_index() const;
  int max_parameter_index() const;

 private:
  explicit Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const ExprNode> node_;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr& operator+=(Expr& a, const Expr& b);
Expr& operator-=(Expr& a, const Expr& b);
Expr& operator*=(Expr& a, const Expr& b);

// Non-negative integer powers only; general powers go through exp/log.
Expr pow(const Expr& base, int exponent);
Expr sqrt(const Expr& a);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr exp(const Expr& a);
Expr log(const Expr& a);
Expr abs(const Expr& a);
// Ties select the first argument.
Expr min(const Expr& a, const Expr& b);
Expr max(const Expr& a, const Expr& b);

// Left-associated sum; 0 for an empty list.
Expr sum(const std::vector<Expr>& terms);

// Replaces every variable reference j with replacement[j].
Expr substitute_variables(const Expr& e, const std::vector<Expr>& replacement);

// Raised when an evaluation hits a division by zero, log of a non-positive
// value or sqrt of a negative value.
class DomainError : public std::domain_error {
 public:
  DomainError(const std::string& what, int node_id, OpKind kind)
      : std::domain_error(what), node_id_(node_id), kind_(kind) {}
  // Position of the offending node in the function's evaluation order.
  int node_id() const { return node_id_; }
  OpKind kind() const { return kind_; }

 private:
  int node_id_;
  OpKind kind_;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A list of scalar outputs over n_vars variables and n_params parameters.
// The graph is flattened once at construction into a topologically ordered
// node list; the object is immutable afterwards and may be evaluated
// concurrently from several threads.
class VectorFunction {
 public:
  VectorFunction();
  VectorFunction(std::vector<Expr> outputs, int n_vars, int n_params);

  int num_outputs() const { return static_cast<int>(outputs_.size()); }
  int n_vars() const { return n_vars_; }
  int n_params() const { return n_params_; }
  const std::vector<Expr>& outputs() const { return outputs_; }
  const Expr& output(int i) const { return outputs_[i]; }

  VectorXd eval(const VectorXd& x, const VectorXd& p) const;
  MatrixXd jacobian(const VectorXd& x, const VectorXd& p) const;
  // H += sum_i weights[i] * Hessian(output_i). The result is exactly
  // symmetric.
  void add_weighted_hessian(const VectorXd& x, const VectorXd& p,
                            const VectorXd& weights, MatrixXd& hessian) const;

  // Variables each output depends on (sorted).
  const std::vector<std::vector<int>>& output_variables() const;
  // Number of distinct nodes in the flattened graph.
  int node_count() const;

  struct Program;  // flattened evaluation order, defined in expr.cpp

 private:
  std::vector<Expr> outputs_;
  int n_vars_ = 0;
  int n_params_ = 0;
  std::shared_ptr<const Program> program_;
};

VectorXd eval(const VectorFunction& fun, const VectorXd& x, const VectorXd& p);
MatrixXd jacobian(const VectorFunction& fun, const VectorXd& x,
                  const VectorXd& p);
// Hessian of sigma_obj * f + lambda^T c with respect to the variables.
MatrixXd hessian_lagrangian(const VectorFunction& objective,
                            const VectorFunction& constraints,
                            const VectorXd& x, const VectorXd& p,
                            double sigma_obj, const VectorXd& lambda);

}  // namespace mpcckit

#endif  // MPCCKIT_EXPR_HPP
