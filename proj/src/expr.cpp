#include "mpcckit/expr.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>
#include <utility>

namespace mpcckit {

namespace {

struct OpInfo {
  OpKind kind;
  const char* name;
  int arity;
};

constexpr OpInfo kOps[] = {
    {OpKind::kVariable, "var", 0},  {OpKind::kParameter, "par", 0},
    {OpKind::kConstant, "num", 0},  {OpKind::kAdd, "add", 2},
    {OpKind::kSub, "sub", 2},       {OpKind::kMul, "mul", 2},
    {OpKind::kDiv, "div", 2},       {OpKind::kNeg, "neg", 1},
    {OpKind::kPowInt, "powi", 1},   {OpKind::kSqrt, "sqrt", 1},
    {OpKind::kSin, "sin", 1},       {OpKind::kCos, "cos", 1},
    {OpKind::kExp, "exp", 1},       {OpKind::kLog, "log", 1},
    {OpKind::kAbs, "abs", 1},       {OpKind::kMin, "min", 2},
    {OpKind::kMax, "max", 2},
};

using NodePtr = std::shared_ptr<const ExprNode>;

// Visits every distinct node reachable from the roots in post order
// (children before parents). Iterative so that long add chains do not
// exhaust the call stack.
template <typename Visit>
void post_order(const std::vector<const ExprNode*>& roots, Visit&& visit) {
  std::unordered_map<const ExprNode*, bool> seen;
  std::vector<std::pair<const ExprNode*, int>> stack;
  for (const ExprNode* root : roots) {
    if (seen.count(root)) continue;
    stack.emplace_back(root, 0);
    seen[root] = true;
    while (!stack.empty()) {
      auto& [node, state] = stack.back();
      const int ar = op_arity(node->kind);
      if (state < ar) {
        const ExprNode* c = state == 0 ? node->lhs.get() : node->rhs.get();
        ++state;
        if (!seen.count(c)) {
          seen[c] = true;
          stack.emplace_back(c, 0);
        }
        continue;
      }
      visit(node);
      stack.pop_back();
    }
  }
}

bool foldable(OpKind kind, double a, double b) {
  switch (kind) {
    case OpKind::kDiv: return b != 0.0;
    case OpKind::kLog: return a > 0.0;
    case OpKind::kSqrt: return a >= 0.0;
    default: return true;
  }
}

double int_pow(double a, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= a;
  return r;
}

double apply(OpKind kind, double a, double b, int k) {
  switch (kind) {
    case OpKind::kAdd: return a + b;
    case OpKind::kSub: return a - b;
    case OpKind::kMul: return a * b;
    case OpKind::kDiv: return a / b;
    case OpKind::kNeg: return -a;
    case OpKind::kPowInt: return int_pow(a, k);
    case OpKind::kSqrt: return std::sqrt(a);
    case OpKind::kSin: return std::sin(a);
    case OpKind::kCos: return std::cos(a);
    case OpKind::kExp: return std::exp(a);
    case OpKind::kLog: return std::log(a);
    case OpKind::kAbs: return std::fabs(a);
    case OpKind::kMin: return a <= b ? a : b;
    case OpKind::kMax: return a >= b ? a : b;
    default: return 0.0;
  }
}

}  // namespace

std::string_view op_name(OpKind kind) {
  for (const auto& op : kOps)
    if (op.kind == kind) return op.name;
  return "?";
}

OpKind op_from_name(std::string_view name) {
  for (const auto& op : kOps)
    if (name == op.name) return op.kind;
  throw std::invalid_argument("unknown expression operator '" +
                              std::string(name) + "'");
}

int op_arity(OpKind kind) {
  for (const auto& op : kOps)
    if (op.kind == kind) return op.arity;
  return 0;
}

Expr::Expr() : Expr(0.0) {}

Expr::Expr(double value) {
  auto n = std::make_shared<ExprNode>();
  n->kind = OpKind::kConstant;
  n->value = value;
  node_ = std::move(n);
}

Expr Expr::variable(int index) {
  if (index < 0) throw std::invalid_argument("negative variable index");
  auto n = std::make_shared<ExprNode>();
  n->kind = OpKind::kVariable;
  n->index = index;
  return Expr(NodePtr(std::move(n)));
}

Expr Expr::parameter(int index) {
  if (index < 0) throw std::invalid_argument("negative parameter index");
  auto n = std::make_shared<ExprNode>();
  n->kind = OpKind::kParameter;
  n->index = index;
  return Expr(NodePtr(std::move(n)));
}

Expr Expr::constant(double value) { return Expr(value); }

Expr Expr::make(OpKind kind, std::vector<Expr> children, int index,
                double value) {
  const int ar = op_arity(kind);
  if (static_cast<int>(children.size()) != ar) {
    std::ostringstream os;
    os << "operator '" << op_name(kind) << "' expects " << ar
       << " children, got " << children.size();
    throw std::invalid_argument(os.str());
  }
  switch (kind) {
    case OpKind::kVariable: return variable(index);
    case OpKind::kParameter: return parameter(index);
    case OpKind::kConstant: return constant(value);
    default: break;
  }
  if (kind == OpKind::kPowInt && index < 0)
    throw std::invalid_argument("powi exponent must be >= 0");

  bool all_const = true;
  for (const auto& c : children) all_const = all_const && c.is_constant();
  if (all_const) {
    const double a = children[0].value();
    const double b = ar == 2 ? children[1].value() : 0.0;
    if (foldable(kind, a, b)) return constant(apply(kind, a, b, index));
  }

  auto n = std::make_shared<ExprNode>();
  n->kind = kind;
  n->index = index;
  n->lhs = children[0].node_;
  if (ar == 2) n->rhs = children[1].node_;
  return Expr(NodePtr(std::move(n)));
}

Expr Expr::child(int i) const {
  if (i < 0 || i >= arity()) throw std::out_of_range("no such child");
  return Expr(i == 0 ? node_->lhs : node_->rhs);
}

int Expr::max_variable_index() const {
  int best = -1;
  post_order({node_.get()}, [&](const ExprNode* n) {
    if (n->kind == OpKind::kVariable) best = std::max(best, n->index);
  });
  return best;
}

int Expr::max_parameter_index() const {
  int best = -1;
  post_order({node_.get()}, [&](const ExprNode* n) {
    if (n->kind == OpKind::kParameter) best = std::max(best, n->index);
  });
  return best;
}

Expr operator+(const Expr& a, const Expr& b) {
  return Expr::make(OpKind::kAdd, {a, b});
}
Expr operator-(const Expr& a, const Expr& b) {
  return Expr::make(OpKind::kSub, {a, b});
}
Expr operator*(const Expr& a, const Expr& b) {
  return Expr::make(OpKind::kMul, {a, b});
}
Expr operator/(const Expr& a, const Expr& b) {
  return Expr::make(OpKind::kDiv, {a, b});
}
Expr operator-(const Expr& a) { return Expr::make(OpKind::kNeg, {a}); }
Expr& operator+=(Expr& a, const Expr& b) { return a = a + b; }
Expr& operator-=(Expr& a, const Expr& b) { return a = a - b; }
Expr& operator*=(Expr& a, const Expr& b) { return a = a * b; }

Expr pow(const Expr& base, int exponent) {
  return Expr::make(OpKind::kPowInt, {base}, exponent);
}
Expr sqrt(const Expr& a) { return Expr::make(OpKind::kSqrt, {a}); }
Expr sin(const Expr& a) { return Expr::make(OpKind::kSin, {a}); }
Expr cos(const Expr& a) { return Expr::make(OpKind::kCos, {a}); }
Expr exp(const Expr& a) { return Expr::make(OpKind::kExp, {a}); }
Expr log(const Expr& a) { return Expr::make(OpKind::kLog, {a}); }
Expr abs(const Expr& a) { return Expr::make(OpKind::kAbs, {a}); }
Expr min(const Expr& a, const Expr& b) {
  return Expr::make(OpKind::kMin, {a, b});
}
Expr max(const Expr& a, const Expr& b) {
  return Expr::make(OpKind::kMax, {a, b});
}

Expr sum(const std::vector<Expr>& terms) {
  if (terms.empty()) return Expr(0.0);
  Expr acc = terms[0];
  for (size_t i = 1; i < terms.size(); ++i) acc = acc + terms[i];
  return acc;
}

Expr substitute_variables(const Expr& e,
                          const std::vector<Expr>& replacement) {
  std::unordered_map<const ExprNode*, Expr> done;
  post_order({e.node()}, [&](const ExprNode* n) {
    Expr out;
    switch (n->kind) {
      case OpKind::kVariable:
        if (n->index >= static_cast<int>(replacement.size()))
          throw DimensionError("substitution misses variable " +
                               std::to_string(n->index));
        out = replacement[n->index];
        break;
      case OpKind::kParameter: out = Expr::parameter(n->index); break;
      case OpKind::kConstant: out = Expr(n->value); break;
      default: {
        std::vector<Expr> kids{done.at(n->lhs.get())};
        if (n->rhs) kids.push_back(done.at(n->rhs.get()));
        out = Expr::make(n->kind, std::move(kids), n->index, n->value);
      }
    }
    done.emplace(n, std::move(out));
  });
  return done.at(e.node());
}


// ---------------------------------------------------------------------------

struct VectorFunction::Program {
  struct Op {
    OpKind kind;
    int a = -1, b = -1;  // operand slots
    int index = 0;
    double value = 0.0;
  };
  std::vector<Op> ops;
  std::vector<int> output_slot;
  // Slots reachable from each output, ascending (hence topologically sorted).
  std::vector<std::vector<int>> output_ops;
  std::vector<std::vector<int>> output_vars;
  // Variables referenced by any output.
  std::vector<int> used_vars;
};

namespace {

using ProgramOp = VectorFunction::Program;

// Local first and second partials of one node with respect to its operands.
struct Partials {
  double da = 0, db = 0;
  double aa = 0, ab = 0, bb = 0;
};

[[noreturn]] void domain_fail(const char* msg, int slot, OpKind kind,
                              double arg) {
  std::ostringstream os;
  os << msg << " at node " << slot << " ('" << op_name(kind)
     << "', argument " << arg << ")";
  throw DomainError(os.str(), slot, kind);
}

}  // namespace

VectorFunction::VectorFunction() : program_(std::make_shared<Program>()) {}

VectorFunction::VectorFunction(std::vector<Expr> outputs, int n_vars,
                               int n_params)
    : outputs_(std::move(outputs)), n_vars_(n_vars), n_params_(n_params) {
  if (n_vars < 0 || n_params < 0)
    throw DimensionError("negative dimension");
  auto prog = std::make_shared<Program>();
  std::unordered_map<const ExprNode*, int> slot;
  std::vector<const ExprNode*> roots;
  roots.reserve(outputs_.size());
  for (const auto& e : outputs_) roots.push_back(e.node());

  post_order(roots, [&](const ExprNode* n) {
    Program::Op op;
    op.kind = n->kind;
    op.index = n->index;
    op.value = n->value;
    if (n->kind == OpKind::kVariable && n->index >= n_vars) {
      throw DimensionError("variable index " + std::to_string(n->index) +
                           " out of range (n_vars = " +
                           std::to_string(n_vars) + ")");
    }
    if (n->kind == OpKind::kParameter && n->index >= n_params) {
      throw DimensionError("parameter index " + std::to_string(n->index) +
                           " out of range (n_params = " +
                           std::to_string(n_params) + ")");
    }
    if (n->lhs) op.a = slot.at(n->lhs.get());
    if (n->rhs) op.b = slot.at(n->rhs.get());
    slot[n] = static_cast<int>(prog->ops.size());
    prog->ops.push_back(op);
  });

  const int n_ops = static_cast<int>(prog->ops.size());
  std::vector<char> mark(n_ops);
  std::vector<char> var_used(n_vars, 0);
  for (const auto& e : outputs_) {
    const int root = slot.at(e.node());
    prog->output_slot.push_back(root);
    std::fill(mark.begin(), mark.end(), 0);
    mark[root] = 1;
    for (int s = root; s >= 0; --s) {
      if (!mark[s]) continue;
      const auto& op = prog->ops[s];
      if (op.a >= 0) mark[op.a] = 1;
      if (op.b >= 0) mark[op.b] = 1;
    }
    std::vector<int> list;
    std::vector<int> vars;
    for (int s = 0; s <= root; ++s) {
      if (!mark[s]) continue;
      list.push_back(s);
      if (prog->ops[s].kind == OpKind::kVariable)
        vars.push_back(prog->ops[s].index);
    }
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    for (int v : vars) var_used[v] = 1;
    prog->output_ops.push_back(std::move(list));
    prog->output_vars.push_back(std::move(vars));
  }
  for (int v = 0; v < n_vars; ++v)
    if (var_used[v]) prog->used_vars.push_back(v);
  program_ = std::move(prog);
}

const std::vector<std::vector<int>>& VectorFunction::output_variables() const {
  return program_->output_vars;
}

int VectorFunction::node_count() const {
  return static_cast<int>(program_->ops.size());
}

namespace {

void check_dims(const VectorFunction& f, const VectorXd& x,
                const VectorXd& p) {
  if (x.size() != f.n_vars()) {
    throw DimensionError("expected " + std::to_string(f.n_vars()) +
                         " variables, got " + std::to_string(x.size()));
  }
  if (p.size() != f.n_params()) {
    throw DimensionError("expected " + std::to_string(f.n_params()) +
                         " parameters, got " + std::to_string(p.size()));
  }
}

// Forward value sweep. When `partials` is non-null the local derivatives are
// filled in as well; `second` additionally requests second partials.
void forward(const std::vector<ProgramOp::Op>& ops, const VectorXd& x,
             const VectorXd& p, std::vector<double>& val,
             std::vector<Partials>* partials, bool second) {
  const int n = static_cast<int>(ops.size());
  val.resize(n);
  if (partials) partials->assign(n, Partials{});
  for (int s = 0; s < n; ++s) {
    const auto& op = ops[s];
    const double a = op.a >= 0 ? val[op.a] : 0.0;
    const double b = op.b >= 0 ? val[op.b] : 0.0;
    double v = 0.0;
    Partials d;
    switch (op.kind) {
      case OpKind::kVariable: v = x[op.index]; break;
      case OpKind::kParameter: v = p[op.index]; break;
      case OpKind::kConstant: v = op.value; break;
      case OpKind::kAdd:
        v = a + b;
        d.da = 1.0;
        d.db = 1.0;
        break;
      case OpKind::kSub:
        v = a - b;
        d.da = 1.0;
        d.db = -1.0;
        break;
      case OpKind::kMul:
        v = a * b;
        d.da = b;
        d.db = a;
        d.ab = 1.0;
        break;
      case OpKind::kDiv:
        if (b == 0.0) domain_fail("division by zero", s, op.kind, b);
        v = a / b;
        d.da = 1.0 / b;
        d.db = -v / b;
        if (second) {
          d.ab = -1.0 / (b * b);
          d.bb = 2.0 * v / (b * b);
        }
        break;
      case OpKind::kNeg:
        v = -a;
        d.da = -1.0;
        break;
      case OpKind::kPowInt: {
        const int k = op.index;
        v = int_pow(a, k);
        if (k >= 1) d.da = k * int_pow(a, k - 1);
        if (second && k >= 2) d.aa = k * (k - 1) * int_pow(a, k - 2);
        break;
      }
      case OpKind::kSqrt:
        if (a < 0.0) domain_fail("sqrt of negative value", s, op.kind, a);
        v = std::sqrt(a);
        if (partials) {
          if (v == 0.0)
            domain_fail("sqrt not differentiable", s, op.kind, a);
          d.da = 0.5 / v;
          if (second) d.aa = -0.25 / (v * v * v);
        }
        break;
      case OpKind::kSin:
        v = std::sin(a);
        d.da = std::cos(a);
        d.aa = -v;
        break;
      case OpKind::kCos:
        v = std::cos(a);
        d.da = -std::sin(a);
        d.aa = -v;
        break;
      case OpKind::kExp:
        v = std::exp(a);
        d.da = v;
        d.aa = v;
        break;
      case OpKind::kLog:
        if (a <= 0.0) domain_fail("log of non-positive value", s, op.kind, a);
        v = std::log(a);
        d.da = 1.0 / a;
        d.aa = -1.0 / (a * a);
        break;
      case OpKind::kAbs:
        v = std::fabs(a);
        d.da = a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
        break;
      case OpKind::kMin:
        if (a <= b) {
          v = a;
          d.da = 1.0;
        } else {
          v = b;
          d.db = 1.0;
        }
        break;
      case OpKind::kMax:
        if (a >= b) {
          v = a;
          d.da = 1.0;
        } else {
          v = b;
          d.db = 1.0;
        }
        break;
    }
    val[s] = v;
    if (partials) (*partials)[s] = d;
  }
}

}  // namespace

VectorXd VectorFunction::eval(const VectorXd& x, const VectorXd& p) const {
  check_dims(*this, x, p);
  std::vector<double> val;
  forward(program_->ops, x, p, val, nullptr, false);
  VectorXd out(num_outputs());
  for (int i = 0; i < num_outputs(); ++i) out[i] = val[program_->output_slot[i]];
  return out;
}

MatrixXd VectorFunction::jacobian(const VectorXd& x, const VectorXd& p) const {
  check_dims(*this, x, p);
  const auto& ops = program_->ops;
  std::vector<double> val;
  std::vector<Partials> d;
  forward(ops, x, p, val, &d, false);
  MatrixXd jac = MatrixXd::Zero(num_outputs(), n_vars_);
  std::vector<double> adj(ops.size(), 0.0);
  for (int i = 0; i < num_outputs(); ++i) {
    const auto& list = program_->output_ops[i];
    for (int s : list) adj[s] = 0.0;
    adj[program_->output_slot[i]] = 1.0;
    for (auto it = list.rbegin(); it != list.rend(); ++it) {
      const int s = *it;
      const double w = adj[s];
      if (w == 0.0) continue;
      const auto& op = ops[s];
      if (op.kind == OpKind::kVariable) {
        jac(i, op.index) += w;
        continue;
      }
      if (op.a >= 0) adj[op.a] += w * d[s].da;
      if (op.b >= 0) adj[op.b] += w * d[s].db;
    }
  }
  return jac;
}

void VectorFunction::add_weighted_hessian(const VectorXd& x, const VectorXd& p,
                                          const VectorXd& weights,
                                          MatrixXd& hessian) const {
  check_dims(*this, x, p);
  if (weights.size() != num_outputs())
    throw DimensionError("weight vector length does not match outputs");
  if (hessian.rows() != n_vars_ || hessian.cols() != n_vars_)
    throw DimensionError("hessian has wrong shape");
  const auto& ops = program_->ops;
  const int n_ops = static_cast<int>(ops.size());
  std::vector<double> val;
  std::vector<Partials> d;
  forward(ops, x, p, val, &d, true);

  // Nodes reachable from outputs with a nonzero weight.
  std::vector<char> live(n_ops, 0);
  std::vector<char> var_live(n_vars_, 0);
  bool any = false;
  for (int i = 0; i < num_outputs(); ++i) {
    if (weights[i] == 0.0) continue;
    any = true;
    for (int s : program_->output_ops[i]) live[s] = 1;
    for (int v : program_->output_vars[i]) var_live[v] = 1;
  }
  if (!any) return;

  // Plain reverse sweep (shared across all directions).
  std::vector<double> adj(n_ops, 0.0);
  for (int i = 0; i < num_outputs(); ++i)
    adj[program_->output_slot[i]] += weights[i];
  for (int s = n_ops - 1; s >= 0; --s) {
    if (!live[s] || adj[s] == 0.0) continue;
    const auto& op = ops[s];
    if (op.a >= 0) adj[op.a] += adj[s] * d[s].da;
    if (op.b >= 0) adj[op.b] += adj[s] * d[s].db;
  }

  std::vector<double> dot(n_ops), adj_dot(n_ops);
  MatrixXd cols = MatrixXd::Zero(n_vars_, n_vars_);
  for (int j = 0; j < n_vars_; ++j) {
    if (!var_live[j]) continue;
    // Tangent sweep in direction e_j.
    for (int s = 0; s < n_ops; ++s) {
      if (!live[s]) continue;
      const auto& op = ops[s];
      double t = 0.0;
      if (op.kind == OpKind::kVariable) {
        t = op.index == j ? 1.0 : 0.0;
      } else {
        if (op.a >= 0) t += d[s].da * dot[op.a];
        if (op.b >= 0) t += d[s].db * dot[op.b];
      }
      dot[s] = t;
    }
    // Tangent of the reverse sweep.
    std::fill(adj_dot.begin(), adj_dot.end(), 0.0);
    for (int s = n_ops - 1; s >= 0; --s) {
      if (!live[s]) continue;
      const auto& op = ops[s];
      const double w = adj[s];
      const double wd = adj_dot[s];
      if (op.kind == OpKind::kVariable) {
        cols(op.index, j) += wd;
        continue;
      }
      const double ta = op.a >= 0 ? dot[op.a] : 0.0;
      const double tb = op.b >= 0 ? dot[op.b] : 0.0;
      if (op.a >= 0)
        adj_dot[op.a] += wd * d[s].da + w * (d[s].aa * ta + d[s].ab * tb);
      if (op.b >= 0)
        adj_dot[op.b] += wd * d[s].db + w * (d[s].ab * ta + d[s].bb * tb);
    }
  }
  for (int j = 0; j < n_vars_; ++j) {
    for (int i = j; i < n_vars_; ++i) {
      const double h = 0.5 * (cols(i, j) + cols(j, i));
      hessian(i, j) += h;
      if (i != j) hessian(j, i) += h;
    }
  }
}

VectorXd eval(const VectorFunction& fun, const VectorXd& x, const VectorXd& p) {
  return fun.eval(x, p);
}

MatrixXd jacobian(const VectorFunction& fun, const VectorXd& x,
                  const VectorXd& p) {
  return fun.jacobian(x, p);
}

MatrixXd hessian_lagrangian(const VectorFunction& objective,
                            const VectorFunction& constraints,
                            const VectorXd& x, const VectorXd& p,
                            double sigma_obj, const VectorXd& lambda) {
  if (objective.num_outputs() != 1)
    throw DimensionError("objective must have exactly one output");
  if (lambda.size() != constraints.num_outputs())
    throw DimensionError("lambda length does not match constraint count");
  if (constraints.num_outputs() > 0 && constraints.n_vars() != objective.n_vars())
    throw DimensionError("objective and constraints disagree on n_vars");
  MatrixXd h = MatrixXd::Zero(objective.n_vars(), objective.n_vars());
  VectorXd w(1);
  w[0] = sigma_obj;
  objective.add_weighted_hessian(x, p, w, h);
  if (constraints.num_outputs() > 0)
    constraints.add_weighted_hessian(x, p, lambda, h);
  return h;
}

}  // namespace mpcckit
