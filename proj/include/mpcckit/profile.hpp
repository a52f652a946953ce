#ifndef MPCCKIT_PROFILE_HPP
#define MPCCKIT_PROFILE_HPP

#include <string>
#include <vector>

#include "mpcckit/batch.hpp"

namespace mpcckit {

enum class ProfileMetric { kWallTime, kNlpTime };

// Dolan-More performance profile. Unsolved cells have t = +inf, so a problem
// nobody solves counts against every method at every tau.
struct PerformanceProfile {
  std::vector<std::string> methods;
  std::vector<std::string> problems;
  std::vector<std::vector<double>> ratio;  // [method][problem]
  std::vector<double> tau;                 // ascending, tau[0] = 1
  std::vector<std::vector<double>> rho;    // [method][tau index]

  // Fraction of problems with ratio <= tau, computed from the ratios.
  double rho_at(int method, double tau) const;
  double solved_fraction(int method) const;
};

// times[s][p]; +inf (or NaN) marks an unsolved cell.
PerformanceProfile profile_from_times(std::vector<std::string> methods,
                                      std::vector<std::string> problems,
                                      const std::vector<std::vector<double>>& times,
                                      int grid_points = 64);

// Methods and problems in order of first appearance. A record that is not
// SOLVED contributes t = +inf. Throws std::invalid_argument on an empty set.
PerformanceProfile performance_profile(const std::vector<RunRecord>& records,
                                       ProfileMetric metric = ProfileMetric::kWallTime,
                                       int grid_points = 64);

// Header "method,tau,rho", one row per method and tau.
std::string profile_csv(const PerformanceProfile& prof);

}  // namespace mpcckit

#endif  // MPCCKIT_PROFILE_HPP
