#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "mpcckit/batch.hpp"
#include "mpcckit/corpus.hpp"
#include "mpcckit/homotopy.hpp"
#include "mpcckit/problem_io.hpp"
#include "mpcckit/stationarity.hpp"
#include "oracles.hpp"

using namespace mpcckit;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(v.size());
  int i = 0;
  for (double d : v) out[i++] = d;
  return out;
}

std::filesystem::path data_dir() {
  if (const char* d = std::getenv("MPCCKIT_DATA_DIR")) return d;
  return MPCCKIT_DEFAULT_DATA_DIR;
}

// Points around the default start, with bounded coordinates kept inside.
VectorXd random_point(std::mt19937_64& rng, const CorpusEntry& e) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  VectorXd w = e.x0;
  for (int j = 0; j < w.size(); ++j) {
    w[j] += U(rng);
    w[j] = std::clamp(w[j], e.problem.lbw[j], e.problem.ubw[j]);
  }
  return w;
}

// Objective and constraint values, or empty on a domain error.
std::optional<std::vector<VectorXd>> values(const MpccProblem& p, const VectorXd& w) {
  try {
    return std::vector<VectorXd>{p.f.eval(w, p.p), p.eval_g(w), p.eval_G(w), p.eval_H(w)};
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

}  // namespace

TEST(Corpus, HasTheRequiredEntries) {
  const auto& c = corpus();
  EXPECT_GE(c.size(), 15u);
  std::set<std::string> names;
  for (const auto& e : c) EXPECT_TRUE(names.insert(e.name()).second) << "duplicate " << e.name();

  const auto& ex2 = corpus_entry("ex2");
  EXPECT_EQ(ex2.best_known_objective, 1.0);
  ASSERT_EQ(ex2.known_solutions.size(), 3u);
  EXPECT_EQ(ex2.known_solutions[0].point, vec({1, 0}));
  EXPECT_EQ(ex2.known_solutions[0].label, Strongest::kS);
  EXPECT_EQ(ex2.known_solutions[1].point, vec({0, 1}));
  EXPECT_EQ(ex2.known_solutions[1].label, Strongest::kS);
  EXPECT_EQ(ex2.known_solutions[2].point, vec({0, 0}));
  EXPECT_EQ(ex2.known_solutions[2].label, Strongest::kC);

  EXPECT_EQ(corpus_entry("bilinear2").problem.m(), 2);
  EXPECT_EQ(corpus_entry("SGNOCP_001_001_003_1_IE_STEP_0_FIL_0").problem.m(), 6);
  EXPECT_FALSE(corpus_entry("SGNSIM_001_001_003_1_IE_STEP_0_FIL_0").is_ocp);
  EXPECT_EQ(corpus_entry("smooth_qp").problem.m(), 0);
  EXPECT_TRUE(corpus_entry("infeasible").has_tag("infeasible"));

  int degenerate = 0;
  for (const auto& e : c)
    for (const auto& ks : e.known_solutions)
      if (!index_sets(e.problem, ks.point).i_zero_zero.empty()) {
        ++degenerate;
        break;
      }
  EXPECT_GE(degenerate, 2);
  EXPECT_THROW(corpus_entry("nope"), std::out_of_range);
}

TEST(Corpus, ExampleObjective) {
  const auto& p = corpus_entry("ex2").problem;
  EXPECT_EQ(p.objective(vec({1, 0})), 1.0);
  EXPECT_EQ(p.objective(vec({0, 0})), 2.0);
}

TEST(Corpus, KnownSolutionsAreFeasible) {
  for (const auto& e : corpus()) {
    for (const auto& ks : e.known_solutions) {
      EXPECT_LE(feasibility_residual(e.problem, ks.point), 1e-10) << e.name();
      EXPECT_LE(comp_residual(e.problem, ks.point), 1e-10) << e.name();
      if (e.best_known_objective)
        EXPECT_GE(e.problem.objective(ks.point), *e.best_known_objective - 1e-10) << e.name();
    }
  }
}

TEST(Corpus, KnownSolutionLabels) {
  for (const auto& e : corpus())
    for (const auto& ks : e.known_solutions)
      EXPECT_EQ(classify_point(e.problem, ks.point).strongest, ks.label)
          << e.name() << " at " << ks.point.transpose();
}

TEST(Corpus, BestKnownMatchesBranchEnumeration) {
  for (const auto& e : corpus()) {
    if (e.problem.m() > 8) continue;
    auto o = oracle::branch_enumeration(e.problem, e.x0, 20, oracle::test_seed());
    EXPECT_EQ(o.branches, 1 << e.problem.m());
    if (e.has_tag("infeasible")) {
      EXPECT_FALSE(o.found) << e.name();
      continue;
    }
    ASSERT_TRUE(o.found) << e.name();
    ASSERT_TRUE(e.best_known_objective.has_value()) << e.name();
    EXPECT_NEAR(o.objective, *e.best_known_objective, 1e-6) << e.name();
  }
}

TEST(Corpus, BilinearGlobalByGrid) {
  const auto& e = corpus_entry("bilinear2");
  // Branch on which side of each pair is zero, grid the other two.
  double best = kInf;
  for (int mask = 0; mask < 4; ++mask) {
    const int a = (mask & 1) ? 0 : 2;  // free variable of pair 1
    const int b = (mask & 2) ? 1 : 3;  // free variable of pair 2
    for (int i = 0; i <= 300; ++i) {
      for (int j = 0; j <= 300; ++j) {
        VectorXd w = VectorXd::Zero(4);
        w[a] = 0.01 * i;
        w[b] = 0.01 * j;
        best = std::min(best, e.problem.objective(w));
      }
    }
  }
  EXPECT_GE(best, *e.best_known_objective - 1e-12);
  EXPECT_LE(best, *e.best_known_objective + 1e-3);
}

TEST(Corpus, SignDynamicsOcpMatchesSignSequences) {
  const auto& e = corpus_entry("SGNOCP_001_001_003_1_IE_STEP_0_FIL_0");
  auto o = oracle::sign_sequence_oracle(-1.0, 1.0, 0.25, 3, [](double x0, const std::vector<double>& x) {
    return std::pow(x[2] - 0.2, 2) + 0.1 * std::pow(x0 - 0.5, 2);
  });
  EXPECT_EQ(o.sequences, 8);
  ASSERT_TRUE(o.found);
  EXPECT_NEAR(o.objective, *e.best_known_objective, 1e-6);
  // The complementarity encoding reaches the same value.
  auto b = oracle::branch_enumeration(e.problem, e.x0, 10, oracle::test_seed());
  ASSERT_TRUE(b.found);
  EXPECT_NEAR(b.objective, o.objective, 1e-6);
}

TEST(Corpus, SignDynamicsSimulationMatchesSignSequences) {
  const auto& e = corpus_entry("SGNSIM_001_001_003_1_IE_STEP_0_FIL_0");
  auto o = oracle::sign_sequence_oracle(0.3, 0.3, 0.2, 3, [](double, const std::vector<double>& x) {
    double f = 0.0;
    for (double v : x) f += v * v;
    return f;
  });
  EXPECT_EQ(o.sequences, 8);
  ASSERT_TRUE(o.found);
  EXPECT_NEAR(o.objective, *e.best_known_objective, 1e-12);
  // Unique trajectory: one step down to 0.1, then sliding at 0.
  EXPECT_NEAR(o.states[0], 0.1, 1e-15);
  EXPECT_EQ(o.states[1], 0.0);
  EXPECT_EQ(o.states[2], 0.0);
  const VectorXd& w = e.known_solutions.at(0).point;
  EXPECT_NEAR(w[1], o.states[0], 1e-15);
  EXPECT_EQ(w[5], o.states[1]);
  EXPECT_EQ(w[9], o.states[2]);
}

TEST(Corpus, SmoothEntrySolvesInOneStage) {
  const auto& e = corpus_entry("smooth_qp");
  auto r = run_homotopy(e.problem, RelaxationKind::kScholtes, SteeringMode::kStandard, e.x0);
  EXPECT_TRUE(r.success());
  EXPECT_EQ(r.sigmas.size(), 1u);
  EXPECT_NEAR(r.objective, *e.best_known_objective, 1e-8);
}

TEST(Corpus, DataFilesMatchBuiltins) {
  const auto files = load_problem_dir(data_dir());
  ASSERT_EQ(files.size(), corpus().size()) << data_dir();
  auto rng = oracle::make_rng(61);
  for (const auto& file : files) {
    const auto& e = corpus_entry(file.problem.name);
    EXPECT_EQ(file.is_ocp, e.is_ocp) << e.name();
    EXPECT_EQ(file.best_known_objective, e.best_known_objective) << e.name();
    ASSERT_TRUE(file.x0.has_value());
    EXPECT_EQ(*file.x0, e.x0) << e.name();
    EXPECT_EQ(file.problem.lbw, e.problem.lbw);
    EXPECT_EQ(file.problem.ubw, e.problem.ubw);
    EXPECT_EQ(file.problem.lbg, e.problem.lbg);
    EXPECT_EQ(file.problem.ubg, e.problem.ubg);
    EXPECT_EQ(file.problem.p, e.problem.p);
    int checked = 0;
    for (int t = 0; t < 200 && checked < 20; ++t) {
      const VectorXd w = random_point(rng, e);
      auto a = values(e.problem, w), b = values(file.problem, w);
      ASSERT_EQ(a.has_value(), b.has_value()) << e.name();
      if (!a) continue;
      ++checked;
      for (std::size_t k = 0; k < a->size(); ++k) EXPECT_EQ((*a)[k], (*b)[k]) << e.name();
    }
    EXPECT_EQ(checked, 20) << e.name();
  }
}

TEST(Corpus, SaveLoadRoundTrip) {
  auto rng = oracle::make_rng(62);
  const auto dir = std::filesystem::temp_directory_path() /
                   ("mpcckit_corpus_" + std::to_string(oracle::test_seed()));
  std::filesystem::create_directories(dir);
  for (const auto& e : corpus()) {
    const auto path = dir / (e.name() + ".json");
    save_problem(to_problem_file(e), path);
    const ProblemFile back = load_problem(path);
    EXPECT_EQ(serialize_problem(back), serialize_problem(to_problem_file(e))) << e.name();
    int checked = 0;
    for (int t = 0; t < 200 && checked < 20; ++t) {
      const VectorXd w = random_point(rng, e);
      auto a = values(e.problem, w), b = values(back.problem, w);
      ASSERT_EQ(a.has_value(), b.has_value());
      if (!a) continue;
      ++checked;
      for (std::size_t k = 0; k < a->size(); ++k) EXPECT_EQ((*a)[k], (*b)[k]) << e.name();
    }
    EXPECT_EQ(checked, 20) << e.name();
  }
  std::filesystem::remove_all(dir);
}

TEST(Corpus, BestKnownIsNeverBeaten) {
  BatchOptions o;
  o.cell_time_budget = 60.0;
  o.classify = false;
  const auto records = run_batch(corpus_problem_files(), default_methods(), o, 1);
  int checked = 0;
  for (const auto& r : records) {
    if (!r.solved()) continue;
    const auto& e = corpus_entry(r.problem);
    if (!e.best_known_objective) continue;
    const VectorXd w = Eigen::Map<const VectorXd>(r.w.data(), r.w.size());
    ASSERT_LE(comp_residual(e.problem, w), 1e-7);
    ASSERT_LE(feasibility_residual(e.problem, w), 1e-6);
    // A SOLVED point may still carry comp ~ 1e-7, enough to undercut the
    // best value by about that much. Clean it up into a feasible point
    // first: solving the tight problem of its own pieces can only lower f.
    PairNlp t = build_tnlp(e.problem, index_sets(e.problem, w));
    KktSolution s = solve_nlp(t.nlp, w);
    if (!s.converged()) continue;
    if (feasibility_residual(e.problem, s.x) > 1e-9 || comp_residual(e.problem, s.x) > 1e-12)
      continue;
    EXPECT_GE(e.problem.objective(s.x), *e.best_known_objective - 1e-8)
        << r.problem << " by " << r.method;
    ++checked;
  }
  EXPECT_GT(checked, 100);
}
