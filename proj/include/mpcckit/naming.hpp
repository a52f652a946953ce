#ifndef MPCCKIT_NAMING_HPP
#define MPCCKIT_NAMING_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace mpcckit {

// Benchmark problem names, ten underscore-delimited fields:
//   base_param_N_NFE_ns_rk_dcs_ccm_class_lifted
// e.g. 986EQ_001_001_003_2_GL_STEP_7_FIL_1. The base name is the first
// token, so it cannot contain an underscore.
struct ProblemName {
  std::string base;
  int param_index = 0;
  int N = 0;
  int N_FE = 0;
  int n_s = 0;
  std::string rk_scheme;
  std::string dcs_type;
  int cross_comp_mode = 0;
  std::string source_class;
  bool lifted = false;

  bool operator==(const ProblemName&) const = default;
};

class NameError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

ProblemName parse_problem_name(std::string_view s);
// param_index, N and N_FE are zero-padded to three digits.
std::string format_problem_name(const ProblemName& name);

}  // namespace mpcckit

#endif  // MPCCKIT_NAMING_HPP
