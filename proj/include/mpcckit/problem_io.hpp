#ifndef MPCCKIT_PROBLEM_IO_HPP
#define MPCCKIT_PROBLEM_IO_HPP

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mpcckit/corpus.hpp"
#include "mpcckit/mpcc.hpp"

namespace mpcckit {

// A problem together with the run metadata carried by problem files.
struct ProblemFile {
  MpccProblem problem;
  std::optional<VectorXd> x0;
  std::optional<double> best_known_objective;
  bool is_ocp = true;

  // x0 if present, otherwise the origin clipped into the bounds.
  VectorXd start() const;
};

// Raised for anything that does not match the file schema. key() names the
// offending top-level key ("" when the document itself is malformed) and
// path() locates the node inside an expression, e.g. "g[1]/2/1".
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string key, std::string path, const std::string& why);
  const std::string& key() const { return key_; }
  const std::string& path() const { return path_; }

 private:
  std::string key_;
  std::string path_;
};

ProblemFile parse_problem(std::string_view json_text);
std::string serialize_problem(const ProblemFile& file);

ProblemFile load_problem(const std::filesystem::path& path);
void save_problem(const ProblemFile& file, const std::filesystem::path& path);
// Every *.json file of a directory, ordered by file name.
std::vector<ProblemFile> load_problem_dir(const std::filesystem::path& dir);

ProblemFile to_problem_file(const CorpusEntry& entry);
std::vector<ProblemFile> corpus_problem_files();

}  // namespace mpcckit

#endif  // MPCCKIT_PROBLEM_IO_HPP
