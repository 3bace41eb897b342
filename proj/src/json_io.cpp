#include "modcp/json_io.hpp"

#include <fstream>

#include "modcp/actions.hpp"
#include "modcp/errors.hpp"

namespace modcp {

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& why) {
  throw InvalidInput(where + ": " + why);
}

double number_at(const Json& j, const std::string& where) {
  if (!j.is_number()) bad(where, "expected a number");
  return j.get<double>();
}

Complex complex_at(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) bad(where, "expected [re, im]");
  return Complex(number_at(j[0], where), number_at(j[1], where));
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back(Json::array({m(i, j).real(), m(i, j).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix json_to_matrix(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) bad(where, "expected a non-empty array of rows");
  const std::size_t nrows = j.size();
  if (!j[0].is_array() || j[0].empty()) bad(where, "rows must be non-empty arrays");
  const std::size_t ncols = j[0].size();
  Matrix m(nrows, ncols);
  for (std::size_t r = 0; r < nrows; ++r) {
    if (!j[r].is_array() || j[r].size() != ncols) bad(where, "ragged rows");
    for (std::size_t c = 0; c < ncols; ++c) m(r, c) = complex_at(j[r][c], where);
  }
  return m;
}

Json algebra_to_json(const MultiMatrixAlgebra& a) {
  return Json{{"blocks", a.blocks}};
}

MultiMatrixAlgebra json_to_algebra(const Json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("blocks")) bad(where, "expected {\"blocks\": [...]}");
  const Json& bl = j["blocks"];
  if (!bl.is_array() || bl.empty()) bad(where, "blocks must be a non-empty array");
  std::vector<int> blocks;
  for (const Json& b : bl) {
    if (!b.is_number_integer() || b.get<int>() <= 0) bad(where, "block sizes must be positive integers");
    blocks.push_back(b.get<int>());
  }
  return make_algebra(blocks);
}

Json element_to_json(const AlgebraElement& x, const std::string& algebra_name) {
  Json data = Json::array();
  for (const Matrix& blockm : x.data) data.push_back(matrix_to_json(blockm));
  Json out = Json::object();
  if (!algebra_name.empty()) out["algebra"] = algebra_name;
  out["data"] = std::move(data);
  return out;
}

AlgebraElement json_to_element(const Json& j, const MultiMatrixAlgebra& alg,
                               const std::string& where) {
  if (!j.is_object() || !j.contains("data")) bad(where, "expected {\"data\": [...]}");
  const Json& data = j["data"];
  if (!data.is_array() || static_cast<int>(data.size()) != alg.num_blocks())
    bad(where, "data must list one matrix per block");
  std::vector<Matrix> blocks;
  for (std::size_t k = 0; k < data.size(); ++k) {
    Matrix m = json_to_matrix(data[k], where + ".data[" + std::to_string(k) + "]");
    if (m.rows() != alg.blocks[k] || m.cols() != alg.blocks[k])
      bad(where, "block " + std::to_string(k) + " has the wrong shape");
    blocks.push_back(std::move(m));
  }
  return make_element(alg, blocks);
}

namespace {

const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) bad(where, std::string("missing field \"") + key + "\"");
  return j[key];
}

std::string string_at(const Json& j, const std::string& where) {
  if (!j.is_string()) bad(where, "expected a string");
  return j.get<std::string>();
}

}  // namespace

ProblemFile parse_problem_file(const Json& j) {
  ProblemFile pf;
  if (!j.is_object()) bad("problem", "top level must be an object");
  const Json& ver = field(j, "version", "problem");
  if (!ver.is_number_integer() || ver.get<int>() != 1) bad("problem.version", "must be 1");
  pf.version = 1;

  if (j.contains("algebras")) {
    if (!j["algebras"].is_object()) bad("problem.algebras", "must be an object");
    for (auto it = j["algebras"].begin(); it != j["algebras"].end(); ++it)
      pf.algebras.emplace(it.key(), json_to_algebra(it.value(), "algebras." + it.key()));
  }

  auto find_algebra = [&](const std::string& name, const std::string& where) -> const MultiMatrixAlgebra& {
    auto it = pf.algebras.find(name);
    if (it == pf.algebras.end()) bad(where, "unknown algebra \"" + name + "\"");
    return it->second;
  };

  if (j.contains("actions")) {
    if (!j["actions"].is_object()) bad("problem.actions", "must be an object");
    for (auto it = j["actions"].begin(); it != j["actions"].end(); ++it) {
      const std::string where = "actions." + it.key();
      const Json& d = it.value();
      std::string sname = string_at(field(d, "source", where), where + ".source");
      std::string tname = string_at(field(d, "target", where), where + ".target");
      const MultiMatrixAlgebra& src = find_algebra(sname, where + ".source");
      const MultiMatrixAlgebra& tgt = find_algebra(tname, where + ".target");
      const Json& rj = field(d, "rho", where);
      if (!rj.is_array() || static_cast<int>(rj.size()) != src.dim())
        bad(where + ".rho", "must list one target element per source coordinate");
      std::vector<AlgebraElement> rho;
      for (std::size_t w = 0; w < rj.size(); ++w) {
        const Json& ej = rj[w];
        if (ej.is_object() && ej.contains("algebra") &&
            string_at(ej["algebra"], where + ".rho") != tname)
          bad(where + ".rho", "element names a different algebra");
        rho.push_back(json_to_element(ej, tgt, where + ".rho[" + std::to_string(w) + "]"));
      }
      bool unital = d.contains("unital") ? d["unital"].get<bool>() : true;
      try {
        pf.actions.emplace(it.key(), make_action(src, tgt, std::move(rho), unital));
      } catch (const Error& e) {
        bad(where, e.what());
      }
      pf.action_algebras.emplace(it.key(), std::make_pair(sname, tname));
    }
  }

  if (j.contains("maps")) {
    if (!j["maps"].is_object()) bad("problem.maps", "must be an object");
    for (auto it = j["maps"].begin(); it != j["maps"].end(); ++it) {
      const std::string where = "maps." + it.key();
      const Json& d = it.value();
      std::string sname = string_at(field(d, "source", where), where + ".source");
      std::string tname = string_at(field(d, "target", where), where + ".target");
      const MultiMatrixAlgebra& src = find_algebra(sname, where + ".source");
      const MultiMatrixAlgebra& tgt = find_algebra(tname, where + ".target");
      BlockLinearMap f;
      try {
        if (d.contains("superop")) {
          Matrix s = json_to_matrix(d["superop"], where + ".superop");
          f = make_map(src, tgt, std::move(s));
        } else if (d.contains("choi")) {
          Matrix c = json_to_matrix(d["choi"], where + ".choi");
          f = from_choi(c, src, tgt);
        } else {
          bad(where, "needs either \"superop\" or \"choi\"");
        }
      } catch (const InvalidInput&) {
        throw;
      } catch (const Error& e) {
        bad(where, e.what());
      }
      pf.maps.emplace(it.key(), std::move(f));
      pf.map_source.emplace(it.key(), sname);
      pf.map_target.emplace(it.key(), tname);
    }
  }

  if (j.contains("task")) {
    pf.task = string_at(j["task"], "problem.task");
    static const char* known[] = {"check", "dilate", "extend", "unitize", "cbnorm", "verify"};
    bool ok = false;
    for (const char* k : known) ok = ok || pf.task == k;
    if (!ok) bad("problem.task", "unknown task \"" + pf.task + "\"");
  }
  if (j.contains("task_params")) {
    if (!j["task_params"].is_object()) bad("problem.task_params", "must be an object");
    pf.task_params = j["task_params"];
  }
  return pf;
}

ProblemFile load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const std::exception& e) {
    throw InvalidInput(path + ": " + e.what());
  }
  return parse_problem_file(j);
}

Json Certificate::to_json() const {
  Json j = Json::object();
  j["task"] = task;
  j["status"] = status;
  Json res = Json::object();
  for (const auto& [name, value] : residuals) res[name] = value;
  j["residuals"] = std::move(res);
  Json wit = Json::object();
  for (const auto& [name, m] : witnesses) wit[name] = matrix_to_json(m);
  j["witnesses"] = std::move(wit);
  j["timing_ms"] = timing_ms;
  j["seed"] = seed;
  if (!error.empty()) j["error"] = error;
  return j;
}

}  // namespace modcp
