#include "mpcckit/profile.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>

namespace mpcckit {

namespace {

constexpr double kUnsolved = std::numeric_limits<double>::infinity();

int index_of(std::vector<std::string>& names, std::map<std::string, int>& pos,
             const std::string& s) {
  auto [it, inserted] = pos.emplace(s, static_cast<int>(names.size()));
  if (inserted) names.push_back(s);
  return it->second;
}

}  // namespace

double PerformanceProfile::rho_at(int s, double t) const {
  const auto& r = ratio.at(s);
  if (r.empty()) return 0.0;
  const auto hits = std::count_if(r.begin(), r.end(), [&](double v) { return v <= t; });
  return static_cast<double>(hits) / static_cast<double>(r.size());
}

double PerformanceProfile::solved_fraction(int s) const {
  return rho_at(s, std::numeric_limits<double>::max());
}

PerformanceProfile profile_from_times(std::vector<std::string> methods,
                                      std::vector<std::string> problems,
                                      const std::vector<std::vector<double>>& times,
                                      int grid_points) {
  const std::size_t ns = methods.size(), np = problems.size();
  if (ns == 0 || np == 0) throw std::invalid_argument("profile needs a method and a problem");
  if (times.size() != ns) throw std::invalid_argument("times rows != methods");
  for (const auto& row : times)
    if (row.size() != np) throw std::invalid_argument("times columns != problems");

  PerformanceProfile prof;
  prof.methods = std::move(methods);
  prof.problems = std::move(problems);
  prof.ratio.assign(ns, std::vector<double>(np, kUnsolved));

  double tau_max = 1.0;
  std::vector<double> breaks{1.0};
  for (std::size_t p = 0; p < np; ++p) {
    double best = kUnsolved;
    for (std::size_t s = 0; s < ns; ++s) {
      const double t = times[s][p];
      if (!std::isnan(t) && t >= 0.0) best = std::min(best, t);
    }
    if (!std::isfinite(best)) continue;
    for (std::size_t s = 0; s < ns; ++s) {
      const double t = times[s][p];
      if (std::isnan(t) || !std::isfinite(t) || t < 0.0) continue;
      // Zero times only tie with each other.
      const double r = best > 0.0 ? t / best : (t == 0.0 ? 1.0 : kUnsolved);
      prof.ratio[s][p] = r;
      if (std::isfinite(r)) {
        breaks.push_back(r);
        tau_max = std::max(tau_max, r);
      }
    }
  }

  std::vector<double> tau = breaks;
  if (tau_max > 1.0 && grid_points > 1) {
    const double lmax = std::log(tau_max);
    for (int k = 0; k < grid_points; ++k)
      tau.push_back(std::exp(lmax * k / (grid_points - 1)));
  }
  std::sort(tau.begin(), tau.end());
  tau.erase(std::unique(tau.begin(), tau.end()), tau.end());
  // The last grid point can round a hair past tau_max.
  while (tau.size() > 1 && tau.back() > tau_max) tau.pop_back();
  prof.tau = std::move(tau);

  prof.rho.assign(ns, std::vector<double>(prof.tau.size(), 0.0));
  for (std::size_t s = 0; s < ns; ++s)
    for (std::size_t k = 0; k < prof.tau.size(); ++k)
      prof.rho[s][k] = prof.rho_at(static_cast<int>(s), prof.tau[k]);
  return prof;
}

PerformanceProfile performance_profile(const std::vector<RunRecord>& records,
                                       ProfileMetric metric, int grid_points) {
  if (records.empty()) throw std::invalid_argument("empty record set");
  std::vector<std::string> methods, problems;
  std::map<std::string, int> mpos, ppos;
  for (const auto& r : records) {
    index_of(methods, mpos, r.method);
    index_of(problems, ppos, r.problem);
  }
  // Cells without a record stay unsolved.
  std::vector<std::vector<double>> times(methods.size(),
                                         std::vector<double>(problems.size(), kUnsolved));
  std::vector<std::vector<bool>> seen(methods.size(),
                                      std::vector<bool>(problems.size(), false));
  for (const auto& r : records) {
    const int s = mpos[r.method], p = ppos[r.problem];
    if (seen[s][p])
      throw std::invalid_argument("duplicate record for " + r.problem + " / " + r.method);
    seen[s][p] = true;
    if (r.solved())
      times[s][p] = metric == ProfileMetric::kWallTime ? r.wall_time : r.nlp_time;
  }
  return profile_from_times(std::move(methods), std::move(problems), times,
                            grid_points);
}

std::string profile_csv(const PerformanceProfile& prof) {
  std::string out = "method,tau,rho\n";
  char buf[96];
  for (std::size_t s = 0; s < prof.methods.size(); ++s) {
    for (std::size_t k = 0; k < prof.tau.size(); ++k) {
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", prof.tau[k], prof.rho[s][k]);
      out += prof.methods[s];
      out += buf;
    }
  }
  return out;
}

}  // namespace mpcckit
