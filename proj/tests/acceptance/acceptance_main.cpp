// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mpcckit/batch.hpp"
#include "mpcckit/corpus.hpp"
#include "mpcckit/homotopy.hpp"
#include "mpcckit/nlp.hpp"
#include "mpcckit/profile.hpp"
#include "mpcckit/relaxation.hpp"
#include "mpcckit/stationarity.hpp"
#include "oracles.hpp"
#include "random_problems.hpp"

using namespace mpcckit;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(v.size());
  int i = 0;
  for (double d : v) out[i++] = d;
  return out;
}

// Collects failure notes; a criterion passes when none were added and it ran
// within its time limit.
struct Check {
  std::vector<std::string> notes;
  void expect(bool ok, const std::string& what) {
    if (!ok) notes.push_back(what);
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

int failures = 0;

void run(const char* id, const char* title, double limit_s,
         const std::function<std::string(Check&)>& body) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  std::string summary;
  try {
    summary = body(c);
  } catch (const std::exception& e) {
    c.notes.push_back(std::string("exception: ") + e.what());
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (dt >= limit_s) c.notes.push_back("took " + fmt(dt) + " s, limit " + fmt(limit_s) + " s");
  const bool ok = c.notes.empty();
  if (!ok) ++failures;
  std::printf("%s %s  %s  (%.2f s)%s%s\n", id, ok ? "PASS" : "FAIL", title, dt,
              summary.empty() ? "" : "  ", summary.c_str());
  const std::size_t shown = std::min<std::size_t>(c.notes.size(), 10);
  for (std::size_t k = 0; k < shown; ++k) std::printf("    %s\n", c.notes[k].c_str());
  if (c.notes.size() > shown) std::printf("    ... %zu more\n", c.notes.size() - shown);
  std::fflush(stdout);
}

std::filesystem::path data_dir() {
  if (const char* d = std::getenv("MPCCKIT_DATA_DIR")) return d;
  return MPCCKIT_DEFAULT_DATA_DIR;
}

const MpccProblem& ex2() { return corpus_entry("ex2").problem; }

double slope(const MpccProblem& p, const VectorXd& pt, const VectorXd& d) {
  return p.f.jacobian(pt, p.p).row(0).dot(d);
}

// Residuals recomputed from a problem parsed out of its data file. The
// complementarity residual is the signed max of G_i H_i; a negative product
// means a violated sign, which feas_by_hand picks up.
double comp_by_hand(const MpccProblem& p, const VectorXd& w) {
  if (p.m() == 0) return 0.0;
  const VectorXd G = p.G.eval(w, p.p), H = p.H.eval(w, p.p);
  double r = -kInf;
  for (int i = 0; i < p.m(); ++i) r = std::max(r, G[i] * H[i]);
  return r;
}

double feas_by_hand(const MpccProblem& p, const VectorXd& w) {
  double r = 0.0;
  auto viol = [&](double v, double lo, double hi) {
    if (v < lo) r = std::max(r, lo - v);
    if (v > hi) r = std::max(r, v - hi);
    if (std::isnan(v)) r = kInf;
  };
  for (int i = 0; i < p.n; ++i) viol(w[i], p.lbw[i], p.ubw[i]);
  if (p.n_g() > 0) {
    const VectorXd g = p.g.eval(w, p.p);
    for (int i = 0; i < p.n_g(); ++i) viol(g[i], p.lbg[i], p.ubg[i]);
  }
  if (p.m() > 0) {
    const VectorXd G = p.G.eval(w, p.p), H = p.H.eval(w, p.p);
    for (int i = 0; i < p.m(); ++i) {
      viol(G[i], 0.0, kInf);
      viol(H[i], 0.0, kInf);
    }
  }
  return r;
}

std::vector<RunRecord> full_batch;

const std::vector<RunRecord>& default_batch() {
  if (full_batch.empty()) {
    BatchOptions o;
    o.cell_time_budget = 120.0;
    full_batch = run_batch(corpus_problem_files(), default_methods(), o, omp_get_max_threads());
  }
  return full_batch;
}

std::vector<RelaxationKind> scalar_kinds() {
  std::vector<RelaxationKind> out;
  for (auto k : all_relaxation_kinds())
    if (is_scalar_kind(k)) out.push_back(k);
  return out;
}

VectorXd random_point(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = U(rng);
  return v;
}

RunRecord synthetic(const char* problem, const char* method, double t) {
  RunRecord r;
  r.problem = problem;
  r.method = method;
  if (std::isfinite(t)) {
    r.status = HomotopyStatus::kSuccess;
    r.reason = FailureReason::kSolved;
    r.wall_time = t;
  } else {
    r.reason = FailureReason::kCompResidualStall;
    r.wall_time = 1.0;
  }
  return r;
}

void check_profile_properties(Check& c, const PerformanceProfile& prof, const std::string& tag) {
  for (std::size_t s = 0; s < prof.methods.size(); ++s) {
    for (std::size_t k = 1; k < prof.tau.size(); ++k) {
      c.expect(prof.tau[k] >= prof.tau[k - 1], tag + ": tau grid not sorted");
      c.expect(prof.rho[s][k] >= prof.rho[s][k - 1], tag + ": rho decreases for " + prof.methods[s]);
    }
    const double lim = prof.solved_fraction(static_cast<int>(s));
    c.expect(prof.rho[s].back() == lim && prof.rho_at(static_cast<int>(s), 1e300) == lim,
             tag + ": limit differs from solved fraction for " + prof.methods[s]);
    c.expect(prof.rho[s].front() >= 0.0 && lim <= 1.0, tag + ": rho outside [0,1]");
  }
}

}  // namespace

int main() {
  std::printf("seed %llu, threads %d\n", static_cast<unsigned long long>(oracle::test_seed()),
              omp_get_max_threads());

  run("AC1", "example classifier", 1.0, [](Check& c) {
    auto o = classify_point(ex2(), vec({0, 0}));
    c.expect(o.strongest == Strongest::kC, "origin: strongest " + std::string(to_string(o.strongest)));
    c.expect(o.nu.size() == 1 && std::fabs(o.nu[0] + 2) <= 1e-6, "origin: nu off");
    c.expect(o.xi.size() == 1 && std::fabs(o.xi[0] + 2) <= 1e-6, "origin: xi off");
    for (auto pt : {vec({1, 0}), vec({0, 1})}) {
      auto r = classify_point(ex2(), pt);
      c.expect(r.strongest == Strongest::kS, "vertex: strongest " + std::string(to_string(r.strongest)));
    }
    return o.nu.size() == 1 ? "nu " + fmt(o.nu[0]) + " xi " + fmt(o.xi[0]) : std::string();
  });

  run("AC2", "example B-check", 1.0, [](Check& c) {
    const VectorXd o = vec({0, 0});
    auto b = check_b_stationarity(ex2(), o, index_sets(ex2(), o));
    c.expect(b.verdict == BVerdict::kNo, "origin: verdict " + std::string(to_string(b.verdict)));
    double s = 0.0;
    if (b.descent_direction) {
      const VectorXd& d = *b.descent_direction;
      s = slope(ex2(), o, d);
      c.expect(d.lpNorm<Eigen::Infinity>() <= 1e-2 + 1e-12, "witness outside radius 1e-2");
      c.expect(s <= -2e-2 + 1e-9, "witness slope " + fmt(s));
      c.expect(oracle::witness_violation(ex2(), o, d) <= 1e-10, "witness leaves the MPCC cone");
    } else {
      c.expect(false, "origin: no witness");
    }
    for (auto pt : {vec({1, 0}), vec({0, 1})}) {
      auto r = check_b_stationarity(ex2(), pt, index_sets(ex2(), pt));
      c.expect(r.verdict == BVerdict::kYes, "vertex: verdict " + std::string(to_string(r.verdict)));
    }
    return "witness slope " + fmt(s);
  });

  run("AC3", "homotopy limit set", 10.0, [](Check& c) {
    auto rng = oracle::make_rng(31);
    std::uniform_real_distribution<double> U(0.0, 2.0);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const VectorXd x0 = vec({U(rng), U(rng)});
      auto r = run_homotopy(ex2(), RelaxationKind::kScholtes, SteeringMode::kStandard, x0);
      std::ostringstream at;
      at << "start (" << x0[0] << ", " << x0[1] << ")";
      c.expect(r.success(), at.str() + ": " + std::string(to_string(r.status)));
      double d = kInf;
      for (auto l : {vec({1, 0}), vec({0, 1}), vec({0, 0})})
        d = std::min(d, (r.w - l).lpNorm<Eigen::Infinity>());
      worst = std::max(worst, d);
      c.expect(d <= 1e-4, at.str() + ": distance " + fmt(d));
    }
    return "worst distance " + fmt(worst);
  });

  run("AC4", "calibration", 1.0, [](Check& c) {
    double worst = 0.0;
    int n = 0;
    for (auto k : scalar_kinds()) {
      for (double s : {1.0, 1e-2, 1e-4}) {
        const double t = oracle::diagonal_zero_bisection(k, calibrate_sigma(k, s));
        const double e = std::fabs(t - std::sqrt(s));
        worst = std::max(worst, e);
        c.expect(e <= 1e-9, std::string(to_string(k)) + " sigma " + fmt(s) + ": error " + fmt(e));
        ++n;
      }
    }
    return std::to_string(n) + " cases, worst " + fmt(worst);
  });

  run("AC5", "derivatives vs finite differences", 30.0, [](Check& c) {
    double worst_g = 0.0, worst_h = 0.0;
    auto rng = oracle::make_rng(51);
    std::uniform_real_distribution<double> A(-1.0, 2.0), S(0.1, 1.0);
    for (auto k : scalar_kinds()) {
      int done = 0;
      while (done < 100) {
        const double a = A(rng), b = A(rng), s = S(rng);
        // skip the seams of the piecewise kinds
        const bool su = k == RelaxationKind::kSteffensenUlbrichPoly ||
                        k == RelaxationKind::kSteffensenUlbrichSine;
        if (su && std::fabs(std::fabs(a - b) - s) < 1e-3) continue;
        if (k == RelaxationKind::kKanzowSchwartz && std::fabs(a + b - 2 * s) < 1e-3) continue;
        const auto [ga, gb] = phi_grad(k, a, b, s);
        const auto [fa, fb] = oracle::fd_phi_grad(k, a, b, s);
        const double e = std::max(std::fabs(ga - fa) / std::max(1.0, std::fabs(fa)),
                                  std::fabs(gb - fb) / std::max(1.0, std::fabs(fb)));
        worst_g = std::max(worst_g, e);
        c.expect(e <= 1e-6, std::string(to_string(k)) + ": phi_grad error " + fmt(e));
        ++done;
      }
    }
    for (int t = 0; t < 100; ++t) {
      const int n = 1 + t % 4;
      std::vector<Expr> outs;
      for (int k = 0; k < 3; ++k) outs.push_back(oracle::random_expr(rng, n, 4));
      VectorFunction f(outs, n, 0);
      const VectorXd at = random_point(rng, n);
      const double e = oracle::rel_error(f.jacobian(at, {}), oracle::fd_jacobian(f, at, {}, 1e-6 * (1.0 + at.norm())));
      worst_g = std::max(worst_g, e);
      c.expect(e <= 1e-6, "jacobian trial " + std::to_string(t) + ": " + fmt(e));
    }
    for (int t = 0; t < 100; ++t) {
      const int n = 1 + t % 4;
      VectorFunction f({oracle::random_expr(rng, n, 3)}, n, 0);
      VectorFunction none({}, n, 0);
      const VectorXd at = random_point(rng, n);
      const MatrixXd H = hessian_lagrangian(f, none, at, {}, 1.0, VectorXd());
      const double e = oracle::rel_error(H, oracle::fd_hessian(f, 0, at, {}));
      worst_h = std::max(worst_h, e);
      c.expect(e <= 1e-5, "hessian trial " + std::to_string(t) + ": " + fmt(e));
    }
    return "worst gradient " + fmt(worst_g) + ", hessian " + fmt(worst_h);
  });

  run("AC6", "branch-enumeration oracle", 300.0, [](Check& c) {
    const auto& recs = default_batch();
    int compared = 0, all_failed = 0;
    double worst = 0.0;
    for (const auto& e : corpus()) {
      if (e.problem.m() > 8) continue;
      double best = kInf;
      for (const auto& r : recs)
        if (r.problem == e.problem.name && r.solved()) best = std::min(best, r.objective);
      if (!std::isfinite(best)) {
        ++all_failed;
        continue;
      }
      auto o = oracle::branch_enumeration(e.problem, e.x0, 20, oracle::test_seed());
      c.expect(o.found, e.name() + ": oracle found nothing but a method solved it");
      if (!o.found) continue;
      const double diff = std::fabs(best - o.objective);
      worst = std::max(worst, diff);
      c.expect(diff <= 1e-6, e.name() + ": best " + fmt(best) + " oracle " + fmt(o.objective));
      ++compared;
    }
    return std::to_string(compared) + " compared, " + std::to_string(all_failed) +
           " failed by every method, worst gap " + fmt(worst);
  });

  run("AC7", "robustness ordering", 600.0, [](Check& c) {
    const auto& recs = default_batch();
    std::map<std::string, int> solved;
    for (const auto& r : recs)
      if (r.solved()) ++solved[r.method];
    const int n = static_cast<int>(corpus().size());
    const int s = solved["scholtes/standard"], k = solved["kadrani/standard"],
              su = solved["su-poly/standard"];
    c.expect(s >= k, "scholtes " + std::to_string(s) + " < kadrani " + std::to_string(k));
    c.expect(s >= su, "scholtes " + std::to_string(s) + " < su-poly " + std::to_string(su));
    c.expect(s >= 0.9 * n, "scholtes solves " + std::to_string(s) + " of " + std::to_string(n));
    return "scholtes " + std::to_string(s) + "/" + std::to_string(n) + ", kadrani " +
           std::to_string(k) + ", su-poly " + std::to_string(su);
  });

  run("AC8", "stopping rule", 600.0, [](Check& c) {
    const auto& recs = default_batch();
    std::map<std::string, MpccProblem> from_file;
    for (const auto& e : corpus())
      from_file[e.problem.name] = load_problem(data_dir() / (e.name() + ".json")).problem;
    int checked = 0;
    double wc = 0.0, wf = 0.0;
    for (const auto& r : recs) {
      if (!r.solved()) continue;
      const auto& p = from_file.at(r.problem);
      const VectorXd w = Eigen::Map<const VectorXd>(r.w.data(), static_cast<Eigen::Index>(r.w.size()));
      if (w.size() != p.n) {
        c.expect(false, r.problem + " " + r.method + ": point has wrong length");
        continue;
      }
      const double comp = comp_by_hand(p, w), feas = feas_by_hand(p, w);
      wc = std::max(wc, comp);
      wf = std::max(wf, feas);
      c.expect(comp <= 1e-7, r.problem + " " + r.method + ": comp " + fmt(comp));
      c.expect(feas <= 1e-6, r.problem + " " + r.method + ": feasibility " + fmt(feas));
      ++checked;
    }
    c.expect(checked > 0, "no SOLVED records");
    return std::to_string(checked) + " records, worst comp " + fmt(wc) + ", feasibility " + fmt(wf);
  });

  run("AC9", "performance profiles", 60.0, [](Check& c) {
    // ratios:      A    B    C
    //   p1         1    2    4
    //   p2         3    1    -
    //   p3         -    -    -
    //   p4         2    2    1
    const double u = kInf;
    std::vector<RunRecord> rs = {
        synthetic("p1", "A", 1), synthetic("p1", "B", 2), synthetic("p1", "C", 4),
        synthetic("p2", "A", 3), synthetic("p2", "B", 1), synthetic("p2", "C", u),
        synthetic("p3", "A", u), synthetic("p3", "B", u), synthetic("p3", "C", u),
        synthetic("p4", "A", 2), synthetic("p4", "B", 2), synthetic("p4", "C", 1)};
    auto prof = performance_profile(rs);
    const double want[5][4] = {{1, 0.25, 0.25, 0.25}, {2, 0.5, 0.75, 0.25},
                               {3, 0.75, 0.75, 0.25}, {4, 0.75, 0.75, 0.5},
                               {100, 0.75, 0.75, 0.5}};
    c.expect(prof.methods == std::vector<std::string>{"A", "B", "C"}, "method order");
    for (const auto& row : want)
      for (int s = 0; s < 3; ++s)
        c.expect(prof.rho_at(s, row[0]) == row[1 + s],
                 "rho_" + prof.methods[s] + "(" + fmt(row[0]) + ") = " + fmt(prof.rho_at(s, row[0])));
    check_profile_properties(c, prof, "synthetic");
    int profiles = 1;
    for (auto metric : {ProfileMetric::kWallTime, ProfileMetric::kNlpTime}) {
      auto real = performance_profile(default_batch(), metric);
      check_profile_properties(c, real, "corpus run");
      ++profiles;
    }
    return std::to_string(profiles) + " profiles checked";
  });

  run("AC10", "convex QP regression", 30.0, [](Check& c) {
    auto rng = oracle::make_rng(41);
    double wp = 0.0, wd = 0.0;
    for (int t = 0; t < 50; ++t) {
      const int n = 2 + t % 6, rows = t % (n + 1);
      auto qp = oracle::random_convex_qp(rng, n, rows);
      auto s = solve_nlp(qp.nlp, qp.x0);
      const std::string tag = "qp " + std::to_string(t);
      c.expect(s.status == NlpStatus::kOptimal, tag + ": " + std::string(to_string(s.status)));
      if (s.status != NlpStatus::kOptimal) continue;
      const double ep = (s.x - qp.x_star).lpNorm<Eigen::Infinity>();
      double ed = std::max((s.z_lower - qp.zl_star).lpNorm<Eigen::Infinity>(),
                           (s.z_upper - qp.zu_star).lpNorm<Eigen::Infinity>());
      if (rows > 0) ed = std::max(ed, (s.lambda - qp.lambda_star).lpNorm<Eigen::Infinity>());
      wp = std::max(wp, ep);
      wd = std::max(wd, ed);
      c.expect(ep <= 1e-6, tag + ": primal " + fmt(ep));
      c.expect(ed <= 1e-5, tag + ": dual " + fmt(ed));
    }
    return "worst primal " + fmt(wp) + ", dual " + fmt(wd);
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
