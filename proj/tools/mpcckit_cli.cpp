// mpcckit command line: solve / classify / bcheck single problems, run
// benchmark grids and turn their records into performance profiles.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mpcckit/batch.hpp"
#include "mpcckit/corpus.hpp"
#include "mpcckit/problem_io.hpp"
#include "mpcckit/profile.hpp"
#include "mpcckit/stationarity.hpp"

using namespace mpcckit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitSolveFailed = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// "builtin:NAME" picks a corpus entry, anything else is a file.
ProblemFile load_any(const std::string& spec) {
  const std::string prefix = "builtin:";
  if (spec.rfind(prefix, 0) == 0) {
    try {
      return to_problem_file(corpus_entry(spec.substr(prefix.size())));
    } catch (const std::out_of_range&) {
      throw UsageError("no corpus entry named '" + spec.substr(prefix.size()) + "'");
    }
  }
  return load_problem(spec);
}

VectorXd parse_csv(const std::string& s, int n, const char* what) {
  std::vector<double> v;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto comma = s.find(',', start);
    std::string tok = s.substr(start, comma == std::string::npos ? comma : comma - start);
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (tok.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError(std::string(what) + ": not a number: '" + tok + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (static_cast<int>(v.size()) != n)
    throw UsageError(std::string(what) + " has " + std::to_string(v.size()) +
                     " entries, the problem has n = " + std::to_string(n));
  return Eigen::Map<VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json vec_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isfinite(v[i])) a.push_back(v[i]); else a.push_back(nullptr);
  }
  return a;
}

json report_json(const StationarityReport& r, bool with_b) {
  json j;
  j["strongest"] = std::string(to_string(r.strongest));
  json labels = json::array();
  for (auto l : r.labels) labels.push_back(std::string(to_string(l)));
  j["labels"] = labels;
  j["tnlp_status"] = std::string(to_string(r.tnlp_status));
  j["nu"] = vec_json(r.nu);
  j["xi"] = vec_json(r.xi);
  j["I+0"] = r.index_sets.i_plus_zero;
  j["I0+"] = r.index_sets.i_zero_plus;
  j["I00"] = r.index_sets.i_zero_zero;
  j["active_set_repair_steps"] = r.active_set_repair_steps;
  if (with_b) {
    j["b_stationary"] = std::string(to_string(r.b_stationary));
    j["lpcc_value"] = r.lpcc_value;
    j["descent_direction"] = r.descent_direction ? vec_json(*r.descent_direction) : json();
  }
  return j;
}

void print_summary(const std::vector<RunRecord>& recs) {
  std::map<std::string, std::pair<int, int>> count;  // solved, total
  std::vector<std::string> order;
  for (const auto& r : recs) {
    if (!count.count(r.method)) order.push_back(r.method);
    auto& c = count[r.method];
    c.first += r.solved();
    c.second += 1;
  }
  for (const auto& m : order) {
    std::printf("%-28s %3d / %3d solved\n", m.c_str(), count[m].first, count[m].second);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MPCC relaxation-homotopy toolkit"};
  app.require_subcommand(1);

  // solve
  auto* solve = app.add_subcommand("solve", "Run one homotopy on a problem");
  std::string problem, kind = "scholtes", mode = "standard", update = "linear", x0_csv;
  HomotopyOptions hopts;
  bool no_classify = false;
  solve->add_option("--problem", problem, "Problem file or builtin:NAME")->required();
  solve->add_option("--kind", kind, "Relaxation kind");
  solve->add_option("--mode", mode, "Steering mode");
  solve->add_option("--sigma0", hopts.sigma0, "Initial relaxation parameter");
  solve->add_option("--kappa", hopts.kappa, "Linear update factor");
  solve->add_option("--eta", hopts.eta, "Power update exponent");
  solve->add_option("--update", update, "linear or min-power")
      ->check(CLI::IsMember({"linear", "min-power"}));
  solve->add_option("--comp-tol", hopts.comp_tol, "Complementarity tolerance");
  solve->add_option("--max-time", hopts.total_time_budget, "Time budget in seconds");
  solve->add_option("--max-homotopy-iters", hopts.max_homotopy_iters);
  solve->add_option("--tol", hopts.solver.tol, "NLP tolerance");
  solve->add_option("--acceptable-tol", hopts.solver.acceptable_tol);
  solve->add_option("--max-iter", hopts.solver.max_iter, "NLP iteration limit");
  solve->add_option("--max-wall-time", hopts.solver.max_wall_time, "Per-NLP wall time");
  solve->add_option("--x0", x0_csv, "Start point, comma separated");
  solve->add_flag("--no-classify", no_classify, "Skip the stationarity analysis");

  // classify / bcheck
  std::string point_csv;
  auto* classify = app.add_subcommand("classify", "Stationarity type of a point");
  classify->add_option("--problem", problem)->required();
  classify->add_option("--point", point_csv)->required();
  auto* bcheck = app.add_subcommand("bcheck", "B-stationarity test at a point");
  bcheck->add_option("--problem", problem)->required();
  bcheck->add_option("--point", point_csv)->required();
  bool serial = false;
  bcheck->add_flag("--serial", serial, "Solve the branch LPs without OpenMP");

  // bench
  auto* bench = app.add_subcommand("bench", "Run a (problem x method) grid");
  std::string problems_dir = "builtin", methods = "all", out_dir = "results";
  int jobs = 1;
  double cell_budget = 3600.0;
  bench->add_option("--problems", problems_dir, "Directory of problem files or builtin");
  bench->add_option("--methods", methods, "Comma separated kind/mode list or all");
  bench->add_option("--jobs", jobs, "Parallel cells")->check(CLI::PositiveNumber);
  bench->add_option("--out", out_dir, "Output directory");
  bench->add_option("--max-time", cell_budget, "Per-cell time budget in seconds")
      ->check(CLI::PositiveNumber);

  // profile
  auto* profile = app.add_subcommand("profile", "Performance profile from records");
  std::string records_path, profile_out, metric = "wall_time";
  profile->add_option("--records", records_path)->required();
  profile->add_option("--out", profile_out)->required();
  profile->add_option("--metric", metric)->check(CLI::IsMember({"wall_time", "nlp_time"}));

  // export-corpus
  auto* exportc = app.add_subcommand("export-corpus", "Write the corpus as problem files");
  std::string export_dir;
  exportc->add_option("--out", export_dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*solve) {
      ProblemFile pf = load_any(problem);
      if (!x0_csv.empty()) pf.x0 = parse_csv(x0_csv, pf.problem.n, "--x0");
      hopts.update_rule = update == "min-power" ? SigmaUpdate::kMinPower : SigmaUpdate::kLinear;
      Method m;
      try {
        m.kind = relaxation_kind_from_string(kind);
        m.mode = steering_mode_from_string(mode);
        hopts.validate();
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      m.opts = hopts;
      BatchOptions bo;
      bo.cell_time_budget = hopts.total_time_budget;
      bo.classify = !no_classify;
      RunRecord rec = run_cell(pf, m, bo);
      std::cout << record_to_json(rec) << "\n";
      return rec.solved() ? kExitOk : kExitSolveFailed;
    }
    if (*classify || *bcheck) {
      ProblemFile pf = load_any(problem);
      VectorXd pt = parse_csv(point_csv, pf.problem.n, "--point");
      StationarityOptions so;
      if (*classify) {
        std::cout << report_json(classify_point(pf.problem, pt, so), false).dump(1) << "\n";
      } else {
        so.parallel = !serial;
        std::cout << report_json(analyze_point(pf.problem, pt, so), true).dump(1) << "\n";
      }
      return kExitOk;
    }
    if (*bench) {
      std::vector<ProblemFile> probs =
          problems_dir == "builtin" ? corpus_problem_files() : load_problem_dir(problems_dir);
      if (probs.empty()) throw UsageError("no problem files in " + problems_dir);
      std::vector<Method> ms;
      try {
        ms = parse_method_list(methods);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      BatchOptions bo;
      bo.cell_time_budget = cell_budget;
      auto recs = run_batch(probs, ms, bo, jobs);
      fs::create_directories(out_dir);
      write_records(recs, fs::path(out_dir) / "records.jsonl");
      print_summary(recs);
      return kExitOk;
    }
    if (*profile) {
      auto recs = read_records(records_path);
      auto prof = performance_profile(
          recs, metric == "nlp_time" ? ProfileMetric::kNlpTime : ProfileMetric::kWallTime);
      std::ofstream out(profile_out);
      if (!out) throw std::runtime_error("cannot write " + profile_out);
      out << profile_csv(prof);
      return kExitOk;
    }
    if (*exportc) {
      fs::create_directories(export_dir);
      for (const auto& e : corpus()) {
        save_problem(to_problem_file(e), fs::path(export_dir) / (e.name() + ".json"));
      }
      std::printf("wrote %zu problem files to %s\n", corpus().size(), export_dir.c_str());
      return kExitOk;
    }
  } catch (const SchemaError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
  return kExitUsage;
}
