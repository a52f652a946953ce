#ifndef MPCCKIT_BATCH_HPP
#define MPCCKIT_BATCH_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mpcckit/homotopy.hpp"
#include "mpcckit/problem_io.hpp"
#include "mpcckit/stationarity.hpp"

namespace mpcckit {

struct Method {
  RelaxationKind kind = RelaxationKind::kScholtes;
  SteeringMode mode = SteeringMode::kStandard;
  HomotopyOptions opts;

  // "kind/mode", with "@xxxxxxxx" appended when the options differ from the
  // defaults. The time budget is not part of the id.
  std::string id() const;
};

// "scholtes/standard", or just "scholtes" for the standard mode.
Method parse_method(std::string_view s);
// Comma separated list; "all" expands to default_methods().
std::vector<Method> parse_method_list(std::string_view s);
// Every kind in standard mode plus the scalar kinds in the two slack modes.
std::vector<Method> default_methods();

struct BatchOptions {
  double cell_time_budget = 3600.0;  // seconds, per (problem, method) cell
  bool classify = true;              // stationarity of SOLVED points
  StationarityOptions stationarity;
};

struct RunRecord {
  std::string problem;
  std::string method;
  HomotopyStatus status = HomotopyStatus::kNlpFailure;
  FailureReason reason = FailureReason::kStepFailureInfeasible;
  NlpStatus last_nlp_status = NlpStatus::kStepFailure;
  double objective = 0.0;
  double comp_residual = 0.0;
  double feasibility = 0.0;
  int nlp_iterations = 0;
  int stages = 0;
  double final_sigma = 0.0;
  std::vector<double> w;
  std::optional<Strongest> strongest;
  std::optional<BVerdict> b_stationary;
  std::optional<double> lpcc_value;
  std::string error;  // exception text if the cell threw

  // Timing, excluded from determinism comparisons.
  double nlp_time = 0.0;
  double wall_time = 0.0;

  bool solved() const { return reason == FailureReason::kSolved; }
  // Everything except the timing fields.
  bool same_outcome(const RunRecord& other) const;
};

RunRecord run_cell(const ProblemFile& problem, const Method& method,
                   const BatchOptions& opts = {});

// Records come out in (problem, method) order whatever the parallelism.
std::vector<RunRecord> run_batch(const std::vector<ProblemFile>& problems,
                                 const std::vector<Method>& methods,
                                 const BatchOptions& opts, int parallelism);
// Plain loop without OpenMP, the reference for run_batch.
std::vector<RunRecord> run_batch_serial(const std::vector<ProblemFile>& problems,
                                        const std::vector<Method>& methods,
                                        const BatchOptions& opts);

std::string record_to_json(const RunRecord& r);
RunRecord record_from_json(std::string_view line);
void write_records(const std::vector<RunRecord>& records,
                   const std::filesystem::path& path);
std::vector<RunRecord> read_records(const std::filesystem::path& path);

}  // namespace mpcckit

#endif  // MPCCKIT_BATCH_HPP
