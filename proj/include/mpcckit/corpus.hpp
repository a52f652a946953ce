#ifndef MPCCKIT_CORPUS_HPP
#define MPCCKIT_CORPUS_HPP

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mpcckit/mpcc.hpp"
#include "mpcckit/stationarity.hpp"

namespace mpcckit {

struct KnownSolution {
  VectorXd point;
  Strongest label;
};

struct CorpusEntry {
  MpccProblem problem;
  VectorXd x0;
  std::optional<double> best_known_objective;
  std::vector<KnownSolution> known_solutions;
  // Optimization problem, so the objective-quality rule applies. Simulation
  // entries have isolated solutions and skip it.
  bool is_ocp = true;
  std::vector<std::string> tags;

  const std::string& name() const { return problem.name; }
  bool has_tag(std::string_view t) const;
};

// Built once, read-only afterwards.
const std::vector<CorpusEntry>& corpus();
// Throws std::out_of_range for an unknown name.
const CorpusEntry& corpus_entry(std::string_view name);

}  // namespace mpcckit

#endif  // MPCCKIT_CORPUS_HPP
