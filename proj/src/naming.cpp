#include "mpcckit/naming.hpp"

#include <charconv>
#include <cstdio>
#include <vector>

namespace mpcckit {

namespace {

constexpr int kFields = 10;

int parse_int(std::string_view tok, const char* field) {
  int v = 0;
  auto [end, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (tok.empty() || ec != std::errc() || end != tok.data() + tok.size() || v < 0) {
    throw NameError(std::string(field) + " is not a non-negative integer: '" +
                    std::string(tok) + "'");
  }
  return v;
}

void check_token(const std::string& tok, const char* field) {
  if (tok.empty()) throw NameError(std::string(field) + " is empty");
  if (tok.find('_') != std::string::npos) {
    throw NameError(std::string(field) + " contains '_': '" + tok + "'");
  }
}

std::string pad3(int v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", v);
  return buf;
}

}  // namespace

ProblemName parse_problem_name(std::string_view s) {
  std::vector<std::string_view> tok;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find('_', start);
    tok.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (tok.size() != kFields) {
    throw NameError("expected " + std::to_string(kFields) +
                    " underscore-delimited fields, got " +
                    std::to_string(tok.size()) + " in '" + std::string(s) + "'");
  }
  ProblemName n;
  n.base = std::string(tok[0]);
  if (n.base.empty()) throw NameError("base name is empty");
  n.param_index = parse_int(tok[1], "parameter index");
  n.N = parse_int(tok[2], "N");
  n.N_FE = parse_int(tok[3], "N_FE");
  n.n_s = parse_int(tok[4], "n_s");
  n.rk_scheme = std::string(tok[5]);
  n.dcs_type = std::string(tok[6]);
  n.cross_comp_mode = parse_int(tok[7], "cross-comp mode");
  n.source_class = std::string(tok[8]);
  if (tok[9] == "1") {
    n.lifted = true;
  } else if (tok[9] == "0") {
    n.lifted = false;
  } else {
    throw NameError("lifted flag must be 0 or 1, got '" + std::string(tok[9]) + "'");
  }
  if (n.rk_scheme.empty() || n.dcs_type.empty() || n.source_class.empty()) {
    throw NameError("empty text field in '" + std::string(s) + "'");
  }
  return n;
}

std::string format_problem_name(const ProblemName& n) {
  check_token(n.base, "base name");
  check_token(n.rk_scheme, "RK scheme");
  check_token(n.dcs_type, "DCS type");
  check_token(n.source_class, "source class");
  if (n.param_index < 0 || n.N < 0 || n.N_FE < 0 || n.n_s < 0 ||
      n.cross_comp_mode < 0) {
    throw NameError("negative numeric field");
  }
  return n.base + "_" + pad3(n.param_index) + "_" + pad3(n.N) + "_" +
         pad3(n.N_FE) + "_" + std::to_string(n.n_s) + "_" + n.rk_scheme + "_" +
         n.dcs_type + "_" + std::to_string(n.cross_comp_mode) + "_" +
         n.source_class + "_" + (n.lifted ? "1" : "0");
}

}  // namespace mpcckit
