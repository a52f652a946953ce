#include "mpcckit/problem_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace mpcckit {

using nlohmann::json;

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "name", "n",   "lbw", "ubw",    "f",      "g",    "lbg",
      "ubg",  "G",   "H",   "p_names", "p_val", "x0",   "best_known_objective",
      "is_ocp"};
  return keys;
}

std::string join_path(const std::string& base, std::size_t i) {
  return base + "/" + std::to_string(i);
}

SchemaError key_error(const std::string& key, const std::string& why) {
  return SchemaError(key, "", why);
}

// Numbers as JSON numbers; infinities as the strings "inf" / "-inf" since
// JSON has no literal for them.
json number_to_json(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  return json(v);
}

double number_from_json(const json& j, const std::string& key,
                        const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  throw SchemaError(key, where, "expected a number, got " + j.dump());
}

json vector_to_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_to_json(v[i]));
  return a;
}

VectorXd vector_from_json(const json& j, const std::string& key,
                          Eigen::Index expected_size) {
  if (!j.is_array()) throw key_error(key, "expected an array");
  if (expected_size >= 0 && static_cast<Eigen::Index>(j.size()) != expected_size) {
    throw key_error(key, "length " + std::to_string(j.size()) + ", expected " +
                             std::to_string(expected_size));
  }
  VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[i] = number_from_json(j[i], key, key + "[" + std::to_string(i) + "]");
  }
  return v;
}

json expr_to_json(const Expr& e) {
  json a = json::array();
  a.push_back(std::string(op_name(e.kind())));
  switch (e.kind()) {
    case OpKind::kVariable:
    case OpKind::kParameter:
      a.push_back(e.index());
      return a;
    case OpKind::kConstant:
      a.push_back(number_to_json(e.value()));
      return a;
    case OpKind::kPowInt:
      a.push_back(expr_to_json(e.child(0)));
      a.push_back(e.index());
      return a;
    default:
      for (int i = 0; i < e.arity(); ++i) a.push_back(expr_to_json(e.child(i)));
      return a;
  }
}

struct ExprReader {
  std::string key;
  int n = 0;
  int n_params = 0;

  int read_index(const json& j, const std::string& path, int limit,
                 const char* what) const {
    if (!j.is_number_integer()) {
      throw SchemaError(key, path, std::string(what) + " must be an integer");
    }
    auto idx = j.get<long long>();
    if (idx < 0 || idx >= limit) {
      throw SchemaError(key, path,
                        std::string(what) + " " + std::to_string(idx) +
                            " out of range [0, " + std::to_string(limit) + ")");
    }
    return static_cast<int>(idx);
  }

  Expr read(const json& j, const std::string& path) const {
    if (!j.is_array() || j.empty() || !j[0].is_string()) {
      throw SchemaError(key, path, "expression must be [\"op\", ...]");
    }
    const auto& name = j[0].get_ref<const std::string&>();
    OpKind kind;
    try {
      kind = op_from_name(name);
    } catch (const std::invalid_argument&) {
      throw SchemaError(key, path, "unknown operator '" + name + "'");
    }
    const std::size_t want =
        (kind == OpKind::kPowInt) ? 2 : std::max(op_arity(kind), 1);
    if (j.size() != want + 1) {
      throw SchemaError(key, path,
                        "'" + name + "' takes " + std::to_string(want) +
                            " argument(s), got " + std::to_string(j.size() - 1));
    }
    switch (kind) {
      case OpKind::kVariable:
        return Expr::variable(read_index(j[1], join_path(path, 1), n, "variable"));
      case OpKind::kParameter:
        return Expr::parameter(
            read_index(j[1], join_path(path, 1), n_params, "parameter"));
      case OpKind::kConstant:
        return Expr::constant(number_from_json(j[1], key, join_path(path, 1)));
      case OpKind::kPowInt: {
        Expr base = read(j[1], join_path(path, 1));
        if (!j[2].is_number_integer() || j[2].get<long long>() < 0 ||
            j[2].get<long long>() > 1'000'000) {
          throw SchemaError(key, join_path(path, 2),
                            "exponent must be a non-negative integer");
        }
        return Expr::make(kind, {base}, j[2].get<int>());
      }
      default: {
        std::vector<Expr> children;
        for (std::size_t i = 1; i < j.size(); ++i) {
          children.push_back(read(j[i], join_path(path, i)));
        }
        return Expr::make(kind, std::move(children));
      }
    }
  }
};

std::vector<Expr> expr_list_from_json(const json& j, const std::string& key,
                                      const ExprReader& base) {
  if (!j.is_array()) throw key_error(key, "expected an array of expressions");
  ExprReader r = base;
  r.key = key;
  std::vector<Expr> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(r.read(j[i], key + "[" + std::to_string(i) + "]"));
  }
  return out;
}

json expr_list_to_json(const VectorFunction& fn) {
  json a = json::array();
  for (const auto& e : fn.outputs()) a.push_back(expr_to_json(e));
  return a;
}

const json& require(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw key_error(key, "missing required key");
  return *it;
}

}  // namespace

SchemaError::SchemaError(std::string key, std::string path,
                         const std::string& why)
    : std::runtime_error(
          (key.empty() ? std::string("problem file")
                       : "key '" + key + "'") +
          (path.empty() || path == key ? std::string() : " at " + path) +
          ": " + why),
      key_(std::move(key)),
      path_(std::move(path)) {}

VectorXd ProblemFile::start() const {
  if (x0) return *x0;
  VectorXd s = VectorXd::Zero(problem.n);
  return s.cwiseMax(problem.lbw).cwiseMin(problem.ubw);
}

ProblemFile parse_problem(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SchemaError("", "", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("", "", "top level must be an object");
  for (const auto& [k, v] : doc.items()) {
    if (!known_keys().count(k)) throw key_error(k, "unknown key");
  }

  const json& jname = require(doc, "name");
  if (!jname.is_string()) throw key_error("name", "expected a string");
  const json& jn = require(doc, "n");
  if (!jn.is_number_integer() || jn.get<long long>() < 0) {
    throw key_error("n", "expected a non-negative integer");
  }
  const int n = jn.get<int>();

  const json& jpn = require(doc, "p_names");
  if (!jpn.is_array()) throw key_error("p_names", "expected an array of strings");
  std::vector<std::string> p_names;
  for (const auto& s : jpn) {
    if (!s.is_string()) throw key_error("p_names", "expected an array of strings");
    p_names.push_back(s.get<std::string>());
  }
  VectorXd p_val = vector_from_json(require(doc, "p_val"), "p_val",
                                    static_cast<Eigen::Index>(p_names.size()));

  VectorXd lbw = vector_from_json(require(doc, "lbw"), "lbw", n);
  VectorXd ubw = vector_from_json(require(doc, "ubw"), "ubw", n);

  ExprReader reader;
  reader.n = n;
  reader.n_params = static_cast<int>(p_val.size());
  reader.key = "f";
  Expr f = reader.read(require(doc, "f"), "f");

  auto g = expr_list_from_json(require(doc, "g"), "g", reader);
  VectorXd lbg = vector_from_json(require(doc, "lbg"), "lbg",
                                  static_cast<Eigen::Index>(g.size()));
  VectorXd ubg = vector_from_json(require(doc, "ubg"), "ubg",
                                  static_cast<Eigen::Index>(g.size()));
  auto G = expr_list_from_json(require(doc, "G"), "G", reader);
  auto H = expr_list_from_json(require(doc, "H"), "H", reader);
  if (G.size() != H.size()) {
    throw key_error("H", "length " + std::to_string(H.size()) +
                             ", expected len(G) = " + std::to_string(G.size()));
  }

  const json& jocp = require(doc, "is_ocp");
  if (!jocp.is_boolean()) throw key_error("is_ocp", "expected true or false");

  ProblemFile out;
  try {
    out.problem = make_problem(jname.get<std::string>(), n, f, g, lbg, ubg,
                               lbw, ubw, G, H, p_val, p_names);
  } catch (const std::invalid_argument& e) {
    throw SchemaError("", "", e.what());
  }
  out.is_ocp = jocp.get<bool>();
  if (auto it = doc.find("x0"); it != doc.end()) {
    out.x0 = vector_from_json(*it, "x0", n);
  }
  if (auto it = doc.find("best_known_objective"); it != doc.end()) {
    out.best_known_objective =
        number_from_json(*it, "best_known_objective", "best_known_objective");
  }
  return out;
}

std::string serialize_problem(const ProblemFile& file) {
  const MpccProblem& p = file.problem;
  json doc;
  doc["name"] = p.name;
  doc["n"] = p.n;
  doc["lbw"] = vector_to_json(p.lbw);
  doc["ubw"] = vector_to_json(p.ubw);
  doc["f"] = expr_to_json(p.f.output(0));
  doc["g"] = expr_list_to_json(p.g);
  doc["lbg"] = vector_to_json(p.lbg);
  doc["ubg"] = vector_to_json(p.ubg);
  doc["G"] = expr_list_to_json(p.G);
  doc["H"] = expr_list_to_json(p.H);
  doc["p_names"] = p.p_names;
  doc["p_val"] = vector_to_json(p.p);
  if (file.x0) doc["x0"] = vector_to_json(*file.x0);
  if (file.best_known_objective) {
    doc["best_known_objective"] = number_to_json(*file.best_known_objective);
  }
  doc["is_ocp"] = file.is_ocp;
  return doc.dump(1) + "\n";
}

ProblemFile load_problem(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("", "", "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str());
}

void save_problem(const ProblemFile& file, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << serialize_problem(file);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<ProblemFile> load_problem_dir(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<ProblemFile> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(load_problem(f));
  return out;
}

ProblemFile to_problem_file(const CorpusEntry& entry) {
  ProblemFile f;
  f.problem = entry.problem;
  f.x0 = entry.x0;
  f.best_known_objective = entry.best_known_objective;
  f.is_ocp = entry.is_ocp;
  return f;
}

std::vector<ProblemFile> corpus_problem_files() {
  std::vector<ProblemFile> out;
  for (const auto& e : corpus()) out.push_back(to_problem_file(e));
  return out;
}

}  // namespace mpcckit
