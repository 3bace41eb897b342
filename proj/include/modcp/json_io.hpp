#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "modcp/cpcalc.hpp"

namespace modcp {

// All descriptors use one wire convention: complex numbers are [re, im]
// pairs, matrices are row-major arrays of rows. Parsing throws InvalidInput
// with the offending path in the message; nothing is ever half-built.
using Json = nlohmann::ordered_json;

Json matrix_to_json(const Matrix& m);
Matrix json_to_matrix(const Json& j, const std::string& where);

Json algebra_to_json(const MultiMatrixAlgebra& a);
MultiMatrixAlgebra json_to_algebra(const Json& j, const std::string& where);

// {"algebra": "A", "data": [block, ...]}; the algebra field is optional on
// input when the owning context fixes it, and must then agree if present.
Json element_to_json(const AlgebraElement& x, const std::string& algebra_name);
AlgebraElement json_to_element(const Json& j, const MultiMatrixAlgebra& alg,
                               const std::string& where);

// A problem file names its ingredients once and refers to them by name.
struct ProblemFile {
  int version = 1;
  std::map<std::string, MultiMatrixAlgebra> algebras;
  std::map<std::string, CentralAction> actions;
  std::map<std::string, BlockLinearMap> maps;
  std::map<std::string, std::string> map_source, map_target;  // name references
  std::map<std::string, std::pair<std::string, std::string>> action_algebras;
  std::string task;  // empty when the file leaves it to the subcommand
  Json task_params = Json::object();
};

ProblemFile parse_problem_file(const Json& j);
ProblemFile load_problem_file(const std::string& path);

// Everything a run reports: echoed task, outcome, named residuals, matrix
// witnesses, wall time, and the seed that reproduces it. Serialization is
// deterministic apart from timing_ms.
struct Certificate {
  std::string task;
  std::string status = "ok";  // ok | stalled | failed | invalid
  std::vector<std::pair<std::string, double>> residuals;
  std::vector<std::pair<std::string, Matrix>> witnesses;
  double timing_ms = 0;
  std::uint64_t seed = 0;
  std::string error;  // empty unless the run aborted

  Json to_json() const;
};

}  // namespace modcp
