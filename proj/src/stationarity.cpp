#include "mpcckit/stationarity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace mpcckit {

std::string_view to_string(StationarityLabel l) {
  switch (l) {
    case StationarityLabel::kW: return "W";
    case StationarityLabel::kC: return "C";
    case StationarityLabel::kM: return "M";
    case StationarityLabel::kA: return "A";
    case StationarityLabel::kS: return "S";
  }
  return "?";
}

std::string_view to_string(Strongest s) {
  switch (s) {
    case Strongest::kS: return "S";
    case Strongest::kM: return "M";
    case Strongest::kCA: return "CA";
    case Strongest::kC: return "C";
    case Strongest::kA: return "A";
    case Strongest::kW: return "W";
    case Strongest::kND: return "ND";
  }
  return "?";
}

std::string_view to_string(BVerdict v) {
  switch (v) {
    case BVerdict::kYes: return "YES";
    case BVerdict::kNo: return "NO";
    case BVerdict::kSkipped: return "SKIPPED";
  }
  return "?";
}

Strongest strongest_from_string(std::string_view s) {
  for (auto v : {Strongest::kS, Strongest::kM, Strongest::kCA, Strongest::kC,
                 Strongest::kA, Strongest::kW, Strongest::kND})
    if (s == to_string(v)) return v;
  throw std::invalid_argument("unknown stationarity '" + std::string(s) + "'");
}

BVerdict b_verdict_from_string(std::string_view s) {
  for (auto v : {BVerdict::kYes, BVerdict::kNo, BVerdict::kSkipped})
    if (s == to_string(v)) return v;
  throw std::invalid_argument("unknown B verdict '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Pair NLPs

namespace {

double slot_multiplier(const PairSlot& s, const KktSolution& sol) {
  switch (s.where) {
    case PairSlot::kRow: return sol.lambda[s.index];
    case PairSlot::kBound: return sol.z_lower[s.index] - sol.z_upper[s.index];
    case PairSlot::kNone: return 0.0;
  }
  return 0.0;
}

}  // namespace

VectorXd PairNlp::nu(const KktSolution& sol) const {
  VectorXd v(g_slot.size());
  for (size_t i = 0; i < g_slot.size(); ++i) v[i] = slot_multiplier(g_slot[i], sol);
  return v;
}

VectorXd PairNlp::xi(const KktSolution& sol) const {
  VectorXd v(h_slot.size());
  for (size_t i = 0; i < h_slot.size(); ++i) v[i] = slot_multiplier(h_slot[i], sol);
  return v;
}

PairNlp build_pair_nlp(const MpccProblem& prob,
                       const std::vector<PairRow>& g_rows,
                       const std::vector<PairRow>& h_rows) {
  const int m = prob.m();
  if (static_cast<int>(g_rows.size()) != m ||
      static_cast<int>(h_rows.size()) != m)
    throw DimensionError("pair row selection must have one entry per pair");
  PairNlp out;
  SmoothNlp& nlp = out.nlp;
  nlp.objective = prob.f;
  nlp.p = prob.p;
  nlp.lbx = prob.lbw;
  nlp.ubx = prob.ubw;

  std::vector<Expr> rows = prob.g.outputs();
  std::vector<double> lo(prob.lbg.data(), prob.lbg.data() + prob.n_g());
  std::vector<double> hi(prob.ubg.data(), prob.ubg.data() + prob.n_g());
  // A variable's bounds can carry the multiplier of at most one pair function.
  std::vector<bool> claimed(prob.n, false);

  auto place = [&](const Expr& e, PairRow kind) {
    PairSlot slot;
    if (e.kind() == OpKind::kVariable && !claimed[e.index()]) {
      const int j = e.index();
      const double lb = nlp.lbx[j], ub = nlp.ubx[j];
      if (kind == PairRow::kEqual && lb <= 0.0 && ub >= 0.0) {
        nlp.lbx[j] = nlp.ubx[j] = 0.0;
        claimed[j] = true;
        return PairSlot{PairSlot::kBound, j};
      }
      if (kind == PairRow::kNonneg && lb >= 0.0) {
        claimed[j] = true;
        // With lb > 0 the function never reaches zero and its multiplier is 0.
        return lb == 0.0 ? PairSlot{PairSlot::kBound, j} : PairSlot{};
      }
    }
    slot.where = PairSlot::kRow;
    slot.index = static_cast<int>(rows.size());
    rows.push_back(e);
    lo.push_back(0.0);
    hi.push_back(kind == PairRow::kEqual ? 0.0 : kInf);
    return slot;
  };

  out.g_slot.resize(m);
  out.h_slot.resize(m);
  for (int i = 0; i < m; ++i) {
    out.g_slot[i] = place(prob.G.output(i), g_rows[i]);
    out.h_slot[i] = place(prob.H.output(i), h_rows[i]);
  }
  nlp.constraints = VectorFunction(std::move(rows), prob.n, prob.n_params());
  nlp.lbc = Eigen::Map<VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size()));
  nlp.ubc = Eigen::Map<VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size()));
  return out;
}

namespace {

void check_sets(const IndexSets& sets, int m) {
  std::vector<int> seen(m, 0);
  for (const auto* v : {&sets.i_plus_zero, &sets.i_zero_plus, &sets.i_zero_zero})
    for (int i : *v) {
      if (i < 0 || i >= m) throw std::invalid_argument("pair index out of range");
      ++seen[i];
    }
  for (int c : seen)
    if (c != 1) throw std::invalid_argument("index sets do not partition the pairs");
}

}  // namespace

PairNlp build_tnlp(const MpccProblem& prob, const IndexSets& sets) {
  const int m = prob.m();
  check_sets(sets, m);
  std::vector<PairRow> g(m, PairRow::kNonneg), h(m, PairRow::kNonneg);
  for (int i : sets.i_zero_plus) g[i] = PairRow::kEqual;
  for (int i : sets.i_plus_zero) h[i] = PairRow::kEqual;
  for (int i : sets.i_zero_zero) g[i] = h[i] = PairRow::kEqual;
  PairNlp out = build_pair_nlp(prob, g, h);
  out.sets = sets;
  return out;
}

PairNlp build_rnlp(const MpccProblem& prob, const IndexSets& sets) {
  const int m = prob.m();
  check_sets(sets, m);
  std::vector<PairRow> g(m, PairRow::kNonneg), h(m, PairRow::kNonneg);
  for (int i : sets.i_zero_plus) g[i] = PairRow::kEqual;
  for (int i : sets.i_plus_zero) h[i] = PairRow::kEqual;
  PairNlp out = build_pair_nlp(prob, g, h);
  out.sets = sets;
  return out;
}

PairNlp build_bnlp(const MpccProblem& prob, const IndexSets& sets,
                   const std::vector<bool>& g_branch) {
  const int m = prob.m();
  check_sets(sets, m);
  if (g_branch.size() != sets.i_zero_zero.size())
    throw DimensionError("one branch flag per biactive pair expected");
  std::vector<PairRow> g(m, PairRow::kNonneg), h(m, PairRow::kNonneg);
  for (int i : sets.i_zero_plus) g[i] = PairRow::kEqual;
  for (int i : sets.i_plus_zero) h[i] = PairRow::kEqual;
  for (size_t k = 0; k < g_branch.size(); ++k)
    (g_branch[k] ? g : h)[sets.i_zero_zero[k]] = PairRow::kEqual;
  PairNlp out = build_pair_nlp(prob, g, h);
  out.sets = sets;
  return out;
}

// ---------------------------------------------------------------------------
// Sign tests

MultiplierSigns classify_multipliers(const VectorXd& nu, const VectorXd& xi,
                                     const std::vector<int>& biactive,
                                     double tol_sign) {
  auto nonneg = [&](double v) { return v >= -tol_sign; };
  auto pos = [&](double v) { return v > tol_sign; };
  auto zero = [&](double v) { return std::fabs(v) <= tol_sign; };
  auto neg = [&](double v) { return v < -tol_sign; };

  bool s = true, m = true, c = true, a = true;
  for (int i : biactive) {
    const double v = nu[i], x = xi[i];
    s = s && nonneg(v) && nonneg(x);
    m = m && ((pos(v) && pos(x)) || zero(v) || zero(x));
    // Product >= 0: one factor zero or both of the same sign.
    c = c && (zero(v) || zero(x) || (pos(v) && pos(x)) || (neg(v) && neg(x)));
    a = a && (nonneg(v) || nonneg(x));
  }
  MultiplierSigns out;
  out.labels.push_back(StationarityLabel::kW);
  if (c) out.labels.push_back(StationarityLabel::kC);
  if (m) out.labels.push_back(StationarityLabel::kM);
  if (a) out.labels.push_back(StationarityLabel::kA);
  if (s) out.labels.push_back(StationarityLabel::kS);
  if (s) out.strongest = Strongest::kS;
  else if (m) out.strongest = Strongest::kM;
  else if (c && a) out.strongest = Strongest::kCA;
  else if (c) out.strongest = Strongest::kC;
  else if (a) out.strongest = Strongest::kA;
  else out.strongest = Strongest::kW;
  return out;
}

bool StationarityReport::has(StationarityLabel l) const {
  return std::find(labels.begin(), labels.end(), l) != labels.end();
}

StationarityReport classify_point(const MpccProblem& prob, const VectorXd& pt,
                                  const StationarityOptions& opts) {
  if (pt.size() != prob.n)
    throw DimensionError("point has length " + std::to_string(pt.size()) +
                         ", expected " + std::to_string(prob.n));
  StationarityReport rep;
  rep.nu = VectorXd::Zero(prob.m());
  rep.xi = VectorXd::Zero(prob.m());
  double f0 = 0.0;
  VectorXd gv, hv;
  try {
    rep.index_sets = index_sets(prob, pt, opts.tol_active);
    if (feasibility_residual(prob, pt) > opts.feasibility_tol) {
      rep.tnlp_status = NlpStatus::kInfeasible;
      return rep;
    }
    f0 = prob.objective(pt);
    gv = prob.eval_G(pt);
    hv = prob.eval_H(pt);
  } catch (const DomainError&) {
    return rep;
  }

  IndexSets sets = rep.index_sets;
  const int max_repairs = static_cast<int>(sets.i_zero_zero.size());
  const double obj_tol = std::max(opts.obj_tol_abs, opts.obj_tol_rel * std::fabs(f0));
  for (;;) {
    const PairNlp tnlp = build_tnlp(prob, sets);
    const KktSolution sol = solve_nlp(tnlp.nlp, pt, opts.solver);
    rep.tnlp_status = sol.status;
    rep.index_sets = sets;
    if (sol.converged() && std::fabs(sol.objective - f0) <= obj_tol) {
      rep.nu = tnlp.nu(sol);
      rep.xi = tnlp.xi(sol);
      const MultiplierSigns signs =
          classify_multipliers(rep.nu, rep.xi, sets.i_zero_zero, opts.tol_sign);
      rep.labels = signs.labels;
      rep.strongest = signs.strongest;
      return rep;
    }
    if (rep.active_set_repair_steps >= max_repairs || sets.i_zero_zero.empty())
      break;
    // Release the biactive pair farthest from the origin into the set its
    // larger component points to.
    auto& bi = sets.i_zero_zero;
    auto far = std::max_element(bi.begin(), bi.end(), [&](int a, int b) {
      return std::hypot(gv[a], hv[a]) < std::hypot(gv[b], hv[b]);
    });
    const int i = *far;
    bi.erase(far);
    (gv[i] < hv[i] ? sets.i_zero_plus : sets.i_plus_zero).push_back(i);
    ++rep.active_set_repair_steps;
  }
  rep.strongest = Strongest::kND;
  rep.labels.clear();
  return rep;
}

// ---------------------------------------------------------------------------
// B-stationarity

LinearizedCone linearized_cone(const MpccProblem& prob, const VectorXd& pt,
                               const IndexSets& sets, double tol_active) {
  const int n = prob.n;
  LinearizedCone cone;
  cone.grad_f = prob.f.jacobian(pt, prob.p).row(0).transpose();
  std::vector<VectorXd> eq, ineq;

  if (prob.n_g() > 0) {
    const VectorXd g = prob.eval_g(pt);
    const MatrixXd jg = prob.g.jacobian(pt, prob.p);
    for (int i = 0; i < prob.n_g(); ++i) {
      const VectorXd row = jg.row(i).transpose();
      if (prob.lbg[i] == prob.ubg[i]) {
        eq.push_back(row);
        continue;
      }
      if (std::fabs(g[i] - prob.lbg[i]) <= tol_active) ineq.push_back(row);
      if (std::fabs(g[i] - prob.ubg[i]) <= tol_active) ineq.push_back(-row);
    }
  }
  for (int j = 0; j < n; ++j) {
    const VectorXd e = VectorXd::Unit(n, j);
    if (prob.lbw[j] == prob.ubw[j]) {
      eq.push_back(e);
      continue;
    }
    if (std::fabs(pt[j] - prob.lbw[j]) <= tol_active) ineq.push_back(e);
    if (std::fabs(pt[j] - prob.ubw[j]) <= tol_active) ineq.push_back(-e);
  }
  if (prob.m() > 0) {
    const MatrixXd jG = prob.G.jacobian(pt, prob.p);
    const MatrixXd jH = prob.H.jacobian(pt, prob.p);
    for (int i : sets.i_zero_plus) eq.push_back(jG.row(i).transpose());
    for (int i : sets.i_plus_zero) eq.push_back(jH.row(i).transpose());
    const int k = static_cast<int>(sets.i_zero_zero.size());
    cone.bi_g.resize(k, n);
    cone.bi_h.resize(k, n);
    for (int r = 0; r < k; ++r) {
      cone.bi_g.row(r) = jG.row(sets.i_zero_zero[r]);
      cone.bi_h.row(r) = jH.row(sets.i_zero_zero[r]);
    }
  } else {
    cone.bi_g.resize(0, n);
    cone.bi_h.resize(0, n);
  }
  auto stack = [n](const std::vector<VectorXd>& v) {
    MatrixXd a(static_cast<Eigen::Index>(v.size()), n);
    for (size_t r = 0; r < v.size(); ++r) a.row(r) = v[r].transpose();
    return a;
  };
  cone.eq = stack(eq);
  cone.ineq = stack(ineq);
  return cone;
}

double cone_violation(const LinearizedCone& cone, const VectorXd& d) {
  double v = 0.0;
  if (cone.eq.rows() > 0) v = std::max(v, (cone.eq * d).cwiseAbs().maxCoeff());
  if (cone.ineq.rows() > 0) v = std::max(v, -(cone.ineq * d).minCoeff());
  for (Eigen::Index r = 0; r < cone.bi_g.rows(); ++r) {
    const double a = cone.bi_g.row(r).dot(d), b = cone.bi_h.row(r).dot(d);
    v = std::max({v, -a, -b, std::min(std::fabs(a), std::fabs(b))});
  }
  return v;
}

namespace {

constexpr double kWitnessTol = 1e-10;

Expr linear_form(const VectorXd& a) {
  std::vector<Expr> terms;
  for (Eigen::Index j = 0; j < a.size(); ++j)
    if (a[j] != 0.0) terms.push_back(a[j] * Expr::variable(static_cast<int>(j)));
  return sum(terms);
}

bool negligible(const VectorXd& row) {
  return row.lpNorm<Eigen::Infinity>() <= 1e-14;
}

struct BranchOutcome {
  bool ok = false;
  double value = 0.0;
  VectorXd d;
};

// Unit rows become bounds on d and parallel duplicates are dropped: a
// repeated or bound-implied row leaves the LP without a strict interior.
SmoothNlp branch_lp(const LinearizedCone& cone, std::uint32_t mask,
                    double radius) {
  const int n = static_cast<int>(cone.grad_f.size());
  VectorXd lb = VectorXd::Constant(n, -radius), ub = VectorXd::Constant(n, radius);
  std::vector<VectorXd> eqs, ineqs;
  auto add = [&](const VectorXd& a, bool eq) {
    if (negligible(a)) return;
    int nz = 0, j = -1;
    for (int i = 0; i < n; ++i)
      if (a[i] != 0.0) ++nz, j = i;
    if (nz == 1) {
      if (eq) lb[j] = ub[j] = 0.0;
      else if (a[j] > 0.0) lb[j] = std::max(lb[j], 0.0);
      else ub[j] = std::min(ub[j], 0.0);
      return;
    }
    (eq ? eqs : ineqs).push_back(a / a.lpNorm<Eigen::Infinity>());
  };
  for (Eigen::Index r = 0; r < cone.eq.rows(); ++r) add(cone.eq.row(r).transpose(), true);
  for (Eigen::Index r = 0; r < cone.ineq.rows(); ++r) add(cone.ineq.row(r).transpose(), false);
  // Bit k set: the H_k gradient row is the equation, otherwise the G row.
  for (Eigen::Index k = 0; k < cone.bi_g.rows(); ++k) {
    const bool h_eq = (mask >> k) & 1u;
    add(cone.bi_g.row(k).transpose(), !h_eq);
    add(cone.bi_h.row(k).transpose(), h_eq);
  }

  auto same = [](const VectorXd& a, const VectorXd& b) {
    return (a - b).lpNorm<Eigen::Infinity>() <= 1e-12;
  };
  std::vector<Expr> rows;
  std::vector<double> lo, hi;
  std::vector<VectorXd> kept_eq;
  for (const auto& a : eqs) {
    bool dup = false;
    for (const auto& b : kept_eq) dup = dup || same(a, b) || same(a, -b);
    if (dup) continue;
    kept_eq.push_back(a);
    rows.push_back(linear_form(a));
    lo.push_back(0.0);
    hi.push_back(0.0);
  }
  // a >= 0 together with -a >= 0 is an equation.
  std::vector<VectorXd> kept_ineq;
  std::vector<bool> as_eq;
  for (const auto& a : ineqs) {
    bool dup = false;
    for (const auto& b : kept_eq) dup = dup || same(a, b) || same(a, -b);
    for (size_t r = 0; r < kept_ineq.size() && !dup; ++r) {
      if (same(a, kept_ineq[r])) dup = true;
      else if (same(a, -kept_ineq[r])) dup = as_eq[r] = true;
    }
    if (dup) continue;
    kept_ineq.push_back(a);
    as_eq.push_back(false);
  }
  for (size_t r = 0; r < kept_ineq.size(); ++r) {
    rows.push_back(linear_form(kept_ineq[r]));
    lo.push_back(0.0);
    hi.push_back(as_eq[r] ? 0.0 : kInf);
  }
  SmoothNlp lp;
  lp.objective = VectorFunction({linear_form(cone.grad_f)}, n, 0);
  lp.constraints = VectorFunction(std::move(rows), n, 0);
  lp.lbc = Eigen::Map<VectorXd>(lo.data(), static_cast<Eigen::Index>(lo.size()));
  lp.ubc = Eigen::Map<VectorXd>(hi.data(), static_cast<Eigen::Index>(hi.size()));
  lp.lbx = lb;
  lp.ubx = ub;
  return lp;
}

BranchOutcome solve_branch(const LinearizedCone& cone, std::uint32_t mask,
                           double radius, const SolverOptions& so) {
  const SmoothNlp lp = branch_lp(cone, mask, radius);
  BranchOutcome out;
  const KktSolution sol = solve_lp(lp, so);
  if (!sol.converged()) return out;
  out.d = sol.x;
  out.value = cone.grad_f.dot(out.d);
  out.ok = true;
  return out;
}

}  // namespace

BCheckResult check_b_stationarity(const MpccProblem& prob, const VectorXd& pt,
                                  const IndexSets& sets,
                                  const StationarityOptions& opts) {
  if (pt.size() != prob.n)
    throw DimensionError("point has length " + std::to_string(pt.size()) +
                         ", expected " + std::to_string(prob.n));
  BCheckResult res;
  const int k = static_cast<int>(sets.i_zero_zero.size());
  if (k > opts.max_biactive || k > 30) return res;  // SKIPPED

  LinearizedCone cone;
  try {
    cone = linearized_cone(prob, pt, sets, opts.tol_active);
  } catch (const DomainError&) {
    return res;
  }
  const int n = prob.n;
  if (n == 0) {
    res.verdict = BVerdict::kYes;
    return res;
  }
  SolverOptions so = opts.solver;
  so.tol = std::min(so.tol, 1e-11);
  so.acceptable_tol = std::min(so.acceptable_tol, 1e-9);

  const std::int64_t branches = std::int64_t{1} << k;
  std::optional<BranchOutcome> first_witness;
  double radius = opts.trust_radius;
  for (;;) {
    std::vector<BranchOutcome> outs(static_cast<size_t>(branches));
#pragma omp parallel for schedule(dynamic) if (opts.parallel && branches > 1)
    for (std::int64_t b = 0; b < branches; ++b) {
      outs[static_cast<size_t>(b)] =
          solve_branch(cone, static_cast<std::uint32_t>(b), radius, so);
    }
    res.branches_solved += static_cast<int>(branches);

    // Pure min over validated branches; ties go to the lowest branch index
    // so the serial and parallel paths agree exactly.
    bool all_ok = true;
    const BranchOutcome* best = nullptr;
    for (const auto& o : outs) {
      if (!o.ok) {
        all_ok = false;
        continue;
      }
      if (o.value < -opts.tol_lp && cone_violation(cone, o.d) > kWitnessTol)
        continue;
      if (best == nullptr || o.value < best->value) best = &o;
    }
    if (best == nullptr || best->value >= -opts.tol_lp) {
      if (!all_ok && !first_witness) return res;  // some branch undecided
      if (first_witness) break;  // negative at the larger radius only
      res.verdict = BVerdict::kYes;
      res.lpcc_value = best != nullptr ? best->value : 0.0;
      return res;
    }
    if (!first_witness) first_witness = *best;
    const bool region_active =
        best->d.lpNorm<Eigen::Infinity>() >= radius * (1.0 - 1e-6);
    if (!region_active || radius <= opts.trust_radius_min) {
      res.verdict = BVerdict::kNo;
      res.descent_direction = first_witness->d;
      res.lpcc_value = first_witness->value;
      return res;
    }
    radius = opts.trust_radius_min;
  }
  // The descent found at the larger radius vanished below tol_lp after
  // shrinking, so the decrease is within the LP tolerance.
  res.verdict = BVerdict::kYes;
  res.lpcc_value = 0.0;
  return res;
}

StationarityReport analyze_point(const MpccProblem& prob, const VectorXd& pt,
                                 const StationarityOptions& opts) {
  StationarityReport rep = classify_point(prob, pt, opts);
  const BCheckResult b = check_b_stationarity(prob, pt, rep.index_sets, opts);
  rep.b_stationary = b.verdict;
  rep.descent_direction = b.descent_direction;
  rep.lpcc_value = b.lpcc_value;
  return rep;
}

}  // namespace mpcckit
