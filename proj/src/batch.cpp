#include "mpcckit/batch.hpp"

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace mpcckit {

using nlohmann::json;

namespace {

// Every option that can change a result, as one canonical string.
std::string canonical_options(const HomotopyOptions& o) {
  const SolverOptions& s = o.solver;
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "s0=%.17g;k=%.17g;e=%.17g;u=%d;ct=%.17g;smin=%.17g;it=%d;"
                "ft=%.17g;wmu=%.17g;cck=%.17g;tol=%.17g;atol=%.17g;aiter=%d;"
                "miter=%d;mu=%.17g;bp=%.17g;bf=%.17g;itol=%.17g;rest=%d",
                o.sigma0, o.kappa, o.eta, static_cast<int>(o.update_rule),
                o.comp_tol, o.sigma_min, o.max_homotopy_iters, o.feasibility_tol,
                o.warm_mu_init, o.cck_lambda, s.tol, s.acceptable_tol,
                s.acceptable_iter, s.max_iter, s.mu_init, s.bound_push,
                s.bound_frac, s.infeasibility_tol, s.max_restorations);
  return buf;
}

// FNV-1a, stable across platforms unlike std::hash.
std::uint32_t fnv1a(const std::string& s) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : s) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

template <class E, class F>
E enum_from_string(std::string_view s, std::initializer_list<E> values, F name,
                   const char* what) {
  for (E v : values)
    if (name(v) == s) return v;
  throw std::invalid_argument(std::string("unknown ") + what + " '" +
                              std::string(s) + "'");
}

HomotopyStatus homotopy_status_from_string(std::string_view s) {
  return enum_from_string(
      s,
      {HomotopyStatus::kSuccess, HomotopyStatus::kNlpFailure,
       HomotopyStatus::kCompResidualStall, HomotopyStatus::kTimeOut,
       HomotopyStatus::kMaxIters},
      [](HomotopyStatus v) { return to_string(v); }, "homotopy status");
}

NlpStatus nlp_status_from_string(std::string_view s) {
  return enum_from_string(
      s,
      {NlpStatus::kOptimal, NlpStatus::kAcceptable, NlpStatus::kInfeasible,
       NlpStatus::kMaxIter, NlpStatus::kTimeOut, NlpStatus::kStepFailure},
      [](NlpStatus v) { return to_string(v); }, "NLP status");
}

json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

double number_or_nan(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

bool same_double(double a, double b) {
  return a == b || (std::isnan(a) && std::isnan(b));
}

}  // namespace

std::string Method::id() const {
  std::string base = std::string(to_string(kind)) + "/" + std::string(to_string(mode));
  const std::string mine = canonical_options(opts);
  if (mine == canonical_options(HomotopyOptions{})) return base;
  char buf[16];
  std::snprintf(buf, sizeof buf, "@%08" PRIx32, fnv1a(mine));
  return base + buf;
}

Method parse_method(std::string_view s) {
  Method m;
  const auto slash = s.find('/');
  m.kind = relaxation_kind_from_string(s.substr(0, slash));
  if (slash != std::string_view::npos)
    m.mode = steering_mode_from_string(s.substr(slash + 1));
  return m;
}

std::vector<Method> default_methods() {
  std::vector<Method> out;
  for (RelaxationKind k : all_relaxation_kinds()) {
    Method m;
    m.kind = k;
    out.push_back(m);
  }
  for (SteeringMode mode : {SteeringMode::kEllInf, SteeringMode::kEll1}) {
    for (RelaxationKind k : all_relaxation_kinds()) {
      if (!is_scalar_kind(k)) continue;
      Method m;
      m.kind = k;
      m.mode = mode;
      out.push_back(m);
    }
  }
  return out;
}

std::vector<Method> parse_method_list(std::string_view s) {
  if (s == "all") return default_methods();
  std::vector<Method> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto comma = s.find(',', start);
    auto tok = s.substr(start, comma == std::string_view::npos ? comma : comma - start);
    if (!tok.empty()) out.push_back(parse_method(tok));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw std::invalid_argument("empty method list");
  return out;
}

bool RunRecord::same_outcome(const RunRecord& o) const {
  if (problem != o.problem || method != o.method || status != o.status ||
      reason != o.reason || last_nlp_status != o.last_nlp_status ||
      nlp_iterations != o.nlp_iterations || stages != o.stages ||
      strongest != o.strongest || b_stationary != o.b_stationary ||
      error != o.error || w.size() != o.w.size())
    return false;
  if (!same_double(objective, o.objective) ||
      !same_double(comp_residual, o.comp_residual) ||
      !same_double(feasibility, o.feasibility) ||
      !same_double(final_sigma, o.final_sigma))
    return false;
  if (lpcc_value.has_value() != o.lpcc_value.has_value()) return false;
  if (lpcc_value && !same_double(*lpcc_value, *o.lpcc_value)) return false;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (!same_double(w[i], o.w[i])) return false;
  return true;
}

RunRecord run_cell(const ProblemFile& pf, const Method& method,
                   const BatchOptions& opts) {
  RunRecord rec;
  rec.problem = pf.problem.name;
  rec.method = method.id();
  HomotopyOptions ho = method.opts;
  ho.total_time_budget = std::min(ho.total_time_budget, opts.cell_time_budget);

  const auto t0 = std::chrono::steady_clock::now();
  try {
    HomotopyResult res =
        run_homotopy(pf.problem, method.kind, method.mode, pf.start(), ho);
    rec.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.status = res.status;
    rec.last_nlp_status = res.last_nlp_status;
    // Simulation problems have an isolated solution; the objective-quality
    // rule only applies to optimal control problems.
    rec.reason = classify_failure(
        res, pf.is_ocp ? pf.best_known_objective : std::nullopt);
    rec.objective = res.objective;
    rec.comp_residual = res.comp_residual;
    rec.feasibility = res.feasibility;
    rec.nlp_iterations = res.nlp_iterations;
    rec.stages = static_cast<int>(res.sigmas.size());
    rec.final_sigma = res.sigmas.empty() ? 0.0 : res.sigmas.back();
    rec.nlp_time = res.nlp_time;
    rec.w.assign(res.w.data(), res.w.data() + res.w.size());

    if (rec.solved() && opts.classify) {
      StationarityOptions so = opts.stationarity;
      StationarityReport rep = analyze_point(pf.problem, res.w, so);
      rec.strongest = rep.strongest;
      rec.b_stationary = rep.b_stationary;
      rec.lpcc_value = rep.lpcc_value;
    }
  } catch (const std::exception& e) {
    rec.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec.status = HomotopyStatus::kNlpFailure;
    rec.reason = FailureReason::kStepFailureInfeasible;
    rec.error = e.what();
  }
  return rec;
}

std::vector<RunRecord> run_batch(const std::vector<ProblemFile>& problems,
                                 const std::vector<Method>& methods,
                                 const BatchOptions& opts, int parallelism) {
  if (parallelism < 1) throw std::invalid_argument("parallelism must be >= 1");
  const int nm = static_cast<int>(methods.size());
  const int cells = static_cast<int>(problems.size()) * nm;
  // Each cell writes only its own slot, so the output order is fixed.
  std::vector<RunRecord> out(cells);
#pragma omp parallel for schedule(dynamic) num_threads(parallelism) if (parallelism > 1)
  for (int c = 0; c < cells; ++c) {
    out[c] = run_cell(problems[c / nm], methods[c % nm], opts);
  }
  return out;
}

std::vector<RunRecord> run_batch_serial(const std::vector<ProblemFile>& problems,
                                        const std::vector<Method>& methods,
                                        const BatchOptions& opts) {
  std::vector<RunRecord> out;
  out.reserve(problems.size() * methods.size());
  for (const auto& p : problems)
    for (const auto& m : methods) out.push_back(run_cell(p, m, opts));
  return out;
}

std::string record_to_json(const RunRecord& r) {
  json j;
  j["problem"] = r.problem;
  j["method"] = r.method;
  j["status"] = std::string(to_string(r.status));
  j["reason"] = std::string(to_string(r.reason));
  j["solved"] = r.solved();
  j["last_nlp_status"] = std::string(to_string(r.last_nlp_status));
  j["objective"] = finite_or_null(r.objective);
  j["comp_residual"] = finite_or_null(r.comp_residual);
  j["feasibility"] = finite_or_null(r.feasibility);
  j["nlp_iterations"] = r.nlp_iterations;
  j["stages"] = r.stages;
  j["final_sigma"] = r.final_sigma;
  json w = json::array();
  for (double v : r.w) w.push_back(finite_or_null(v));
  j["w"] = std::move(w);
  j["strongest"] = r.strongest ? json(std::string(to_string(*r.strongest))) : json();
  j["b_stationary"] =
      r.b_stationary ? json(std::string(to_string(*r.b_stationary))) : json();
  j["lpcc_value"] = r.lpcc_value ? finite_or_null(*r.lpcc_value) : json();
  if (!r.error.empty()) j["error"] = r.error;
  j["nlp_time"] = r.nlp_time;
  j["wall_time"] = r.wall_time;
  return j.dump();
}

RunRecord record_from_json(std::string_view line) {
  const json j = json::parse(line);
  RunRecord r;
  r.problem = j.at("problem").get<std::string>();
  r.method = j.at("method").get<std::string>();
  r.status = homotopy_status_from_string(j.at("status").get<std::string>());
  r.reason = failure_reason_from_string(j.at("reason").get<std::string>());
  r.last_nlp_status = nlp_status_from_string(j.at("last_nlp_status").get<std::string>());
  r.objective = number_or_nan(j.at("objective"));
  r.comp_residual = number_or_nan(j.at("comp_residual"));
  r.feasibility = number_or_nan(j.at("feasibility"));
  r.nlp_iterations = j.at("nlp_iterations").get<int>();
  r.stages = j.at("stages").get<int>();
  r.final_sigma = j.at("final_sigma").get<double>();
  for (const auto& v : j.at("w")) r.w.push_back(number_or_nan(v));
  if (!j.at("strongest").is_null())
    r.strongest = strongest_from_string(j["strongest"].get<std::string>());
  if (!j.at("b_stationary").is_null())
    r.b_stationary = b_verdict_from_string(j["b_stationary"].get<std::string>());
  if (!j.at("lpcc_value").is_null()) r.lpcc_value = j["lpcc_value"].get<double>();
  if (j.contains("error")) r.error = j["error"].get<std::string>();
  r.nlp_time = j.at("nlp_time").get<double>();
  r.wall_time = j.at("wall_time").get<double>();
  return r;
}

void write_records(const std::vector<RunRecord>& records,
                   const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& r : records) out << record_to_json(r) << '\n';
}

std::vector<RunRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<RunRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": " + e.what());
    }
  }
  return out;
}

}  // namespace mpcckit
