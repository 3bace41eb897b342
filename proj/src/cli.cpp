#include "modcp/cli.hpp"

#include <chrono>
#include <iostream>

#include <CLI11.hpp>

#include "modcp/constructions.hpp"
#include "modcp/dilation.hpp"
#include "modcp/errors.hpp"
#include "modcp/extension.hpp"
#include "modcp/feasibility.hpp"
#include "modcp/json_io.hpp"
#include "modcp/verify_suites.hpp"

namespace modcp {

namespace {

constexpr int kOk = 0, kStalled = 2, kInvalid = 3, kFailed = 4;

int status_code(const std::string& status) {
  if (status == "ok") return kOk;
  if (status == "stalled") return kStalled;
  if (status == "failed") return kFailed;
  return kInvalid;
}

const BlockLinearMap& pick_map(const ProblemFile& pf, const Json& params, const char* key) {
  if (params.contains(key)) {
    std::string name = params[key].get<std::string>();
    auto it = pf.maps.find(name);
    if (it == pf.maps.end()) throw InvalidInput("task_params." + std::string(key) +
                                                ": unknown map \"" + name + "\"");
    return it->second;
  }
  if (std::string(key) == "map" && pf.maps.size() == 1) return pf.maps.begin()->second;
  throw InvalidInput("task_params: missing \"" + std::string(key) + "\"");
}

const CentralAction& pick_action(const ProblemFile& pf, const Json& params, const char* key) {
  if (!params.contains(key)) throw InvalidInput("task_params: missing \"" + std::string(key) + "\"");
  std::string name = params[key].get<std::string>();
  auto it = pf.actions.find(name);
  if (it == pf.actions.end())
    throw InvalidInput("task_params." + std::string(key) + ": unknown action \"" + name + "\"");
  return it->second;
}

std::vector<AlgebraElement> pick_elements(const Json& params, const char* key,
                                          const MultiMatrixAlgebra& alg) {
  if (!params.contains(key) || !params[key].is_array())
    throw InvalidInput("task_params: missing element list \"" + std::string(key) + "\"");
  std::vector<AlgebraElement> out;
  int idx = 0;
  for (const Json& e : params[key])
    out.push_back(json_to_element(e, alg, "task_params." + std::string(key) + "[" +
                                              std::to_string(idx++) + "]"));
  return out;
}

void run_check(const ProblemFile& pf, const Json& params, Certificate& cert) {
  const BlockLinearMap& f = pick_map(pf, params, "map");
  MapClass mc;
  if (params.contains("source_action") || params.contains("target_action"))
    mc = classify(f, pick_action(pf, params, "source_action"),
                  pick_action(pf, params, "target_action"));
  else
    mc = classify(f);
  cert.residuals.emplace_back("hermitian", mc.hermitian ? 1 : 0);
  cert.residuals.emplace_back("positive", mc.positive ? 1 : 0);
  cert.residuals.emplace_back("cp", mc.cp ? 1 : 0);
  cert.residuals.emplace_back("unital", mc.unital ? 1 : 0);
  cert.residuals.emplace_back("contractive", mc.contractive ? 1 : 0);
  cert.residuals.emplace_back("module", mc.module ? 1 : 0);
  for (const auto& [name, v] : mc.witnesses) cert.residuals.emplace_back(name, v);
}

void run_dilate(const ProblemFile& pf, const Json& params, Certificate& cert) {
  const BlockLinearMap& theta = pick_map(pf, params, "map");
  BimoduleStructure bimod;
  bimod.left = params.contains("left") ? pick_action(pf, params, "left")
                                       : trivial_action(theta.source);
  bimod.right = params.contains("right") ? pick_action(pf, params, "right")
                                         : trivial_action(theta.source);
  BimoduleHilbert h;
  if (params.contains("hilbert")) {
    const Json& hj = params["hilbert"];
    if (!hj.is_object() || !hj.contains("dim")) throw InvalidInput("task_params.hilbert: malformed");
    int dim = hj["dim"].get<int>();
    auto algebra_of = [&](const char* key) -> MultiMatrixAlgebra {
      if (!hj.contains(key)) return make_algebra({1});
      auto it = pf.algebras.find(hj[key].get<std::string>());
      if (it == pf.algebras.end()) throw InvalidInput("task_params.hilbert: unknown algebra");
      return it->second;
    };
    MultiMatrixAlgebra la = algebra_of("left_alg"), ra = algebra_of("right_alg");
    std::vector<Matrix> rl, rr;
    for (const Json& m : hj.value("rep_left", Json::array()))
      rl.push_back(json_to_matrix(m, "task_params.hilbert.rep_left"));
    for (const Json& m : hj.value("rep_right_op", Json::array()))
      rr.push_back(json_to_matrix(m, "task_params.hilbert.rep_right_op"));
    h = make_bimodule_hilbert(dim, la, ra, std::move(rl), std::move(rr));
  } else {
    if (theta.target.num_blocks() != 1)
      throw InvalidInput("dilate: default Hilbert space needs a single-block target");
    h = trivial_bimodule_hilbert(theta.target.blocks[0]);
  }
  Dilation d = stinespring_module(theta, bimod, h);
  DilationReport rep = verify_dilation(d, theta, bimod, h);
  cert.residuals.emplace_back("k_dim", d.K_dim);
  cert.residuals.emplace_back("reconstruction", rep.reconstruction);
  cert.residuals.emplace_back("hom", rep.hom_residual);
  cert.residuals.emplace_back("pi_bimodule", rep.pi_bimodule);
  cert.residuals.emplace_back("v_bimodule", rep.v_bimodule);
  cert.residuals.emplace_back("isometry_defect", rep.isometry_defect);
  cert.witnesses.emplace_back("pi_superop", d.pi.superop);
  cert.witnesses.emplace_back("V", d.V);
  if (!rep.pass) cert.status = "failed";
}

void run_extend(const ProblemFile& pf, const Json& params, const std::string& mode,
                Certificate& cert) {
  if (mode == "arveson") {
    const CentralAction& action = pick_action(pf, params, "action");
    const CentralAction& target_action = pick_action(pf, params, "target_action");
    auto basis = pick_elements(params, "system", action.target);
    auto values = pick_elements(params, "values", target_action.target);
    auto sys = make_operator_system(action.target, basis, action);
    auto psi = make_partial_map(sys, values, target_action);
    bool ucp = params.value("flavor", std::string("ccp")) == "ucp";
    auto out = arveson_extend_report(psi, ucp ? ExtendMode::Ucp : ExtendMode::Ccp);
    if (!out.map.has_value()) {
      cert.status = "stalled";
      cert.residuals.emplace_back("gap", out.report.affine_residual);
      return;
    }
    const BlockLinearMap& ext = *out.map;
    double agree = 0;
    for (std::size_t j = 0; j < values.size(); ++j)
      agree = std::max(agree, hs_norm(apply(ext, basis[j]) - values[j]));
    cert.residuals.emplace_back("agreement", agree);
    cert.residuals.emplace_back("choi_min_eig", choi_min_eig(ext));
    cert.residuals.emplace_back("module", module_residual(ext, action, target_action));
    if (ucp) cert.residuals.emplace_back("unit_defect", unit_defect(ext));
    cert.witnesses.emplace_back("extension_superop", ext.superop);
  } else if (mode == "wittstock") {
    const BlockLinearMap& theta0 = pick_map(pf, params, "theta0");
    const BlockLinearMap& incl = pick_map(pf, params, "inclusion");
    BimoduleStructure amb{pick_action(pf, params, "left"), pick_action(pf, params, "right")};
    BimoduleStructure bimodB{pick_action(pf, params, "left_b"), pick_action(pf, params, "right_b")};
    auto sub = make_sub_bimodule(incl, amb);
    auto theta = wittstock_extend(theta0, sub, bimodB);
    double agree = 0;
    for (int u = 0; u < theta0.source.dim(); ++u) {
      auto e = basis_element(theta0.source, u);
      agree = std::max(agree, hs_norm(apply(theta, apply(incl, e)) - apply(theta0, e)));
    }
    cert.residuals.emplace_back("agreement", agree);
    cert.residuals.emplace_back("bimodule", bimodule_residual(theta, amb, bimodB));
    cert.witnesses.emplace_back("extension_superop", theta.superop);
  } else if (mode == "expectation") {
    const CentralAction& action = pick_action(pf, params, "action");
    auto sub_basis = pick_elements(params, "sub_basis", action.target);
    auto e = injectivity_expectation(action.target, sub_basis, action);
    double restrict_resid = 0;
    for (const auto& b : sub_basis)
      restrict_resid = std::max(restrict_resid, hs_norm(apply(e, b) - b));
    cert.residuals.emplace_back("idempotent", map_distance(compose(e, e), e));
    cert.residuals.emplace_back("restriction", restrict_resid);
    cert.residuals.emplace_back("choi_min_eig", choi_min_eig(e));
    cert.residuals.emplace_back("unit_defect", unit_defect(e));
    cert.residuals.emplace_back("module", module_residual(e, action, action));
    cert.witnesses.emplace_back("expectation_superop", e.superop);
  } else {
    throw InvalidInput("extend: unknown mode \"" + mode + "\"");
  }
}

void run_unitize(const ProblemFile& pf, const Json& params, Certificate& cert) {
  const BlockLinearMap& theta = pick_map(pf, params, "map");
  const CentralAction& actA = pick_action(pf, params, "source_action");
  const CentralAction& actB = pick_action(pf, params, "target_action");
  std::string mode = params.value("mode", std::string("unital-target"));
  if (mode != "unital-target" && mode != "general")
    throw InvalidInput("unitize: unknown mode \"" + mode + "\"");
  auto ext = extend_to_unitization(theta, actA, actB,
                                   mode == "general" ? UnitizationMode::General
                                                     : UnitizationMode::UnitalTarget);
  auto uA = unitize(actA);
  cert.residuals.emplace_back("unit_defect", unit_defect(ext));
  cert.residuals.emplace_back("choi_min_eig", choi_min_eig(ext));
  if (mode == "unital-target")
    cert.residuals.emplace_back("module", module_residual(ext, uA.action_tilde, actB));
  double resid = 0;
  for (int v = 0; v < theta.source.dim(); ++v) {
    auto e = basis_element(theta.source, v);
    auto val = apply(ext, apply(uA.iota_A, e));
    std::vector<Matrix> head(val.data.begin(),
                             val.data.begin() + theta.target.num_blocks());
    resid = std::max(resid, hs_norm(make_element(theta.target, head) - apply(theta, e)));
  }
  cert.residuals.emplace_back("restriction", resid);
  cert.witnesses.emplace_back("unitized_superop", ext.superop);
}

void run_cbnorm(const ProblemFile& pf, const Json& params, double tol, std::uint64_t seed,
                Certificate& cert) {
  const BlockLinearMap& f = pick_map(pf, params, "map");
  double v = cb_norm(f, tol);
  double lb = cb_lower_bound(f, 80, 3, seed);
  cert.residuals.emplace_back("cb_norm", v);
  cert.residuals.emplace_back("cb_lower", lb);
}

void merge_suite(const SuiteResult& r, const std::string& prefix, Certificate& cert) {
  for (const auto& [name, v] : r.residuals)
    cert.residuals.emplace_back(prefix + name, v);
  if (r.status == "failed")
    cert.status = "failed";
  else if (r.status == "stalled" && cert.status == "ok")
    cert.status = "stalled";
}

void run_verify(const std::string& suite, std::uint64_t seed, int instances, Certificate& cert) {
  if (suite == "all") {
    for (const std::string& name : suite_names())
      merge_suite(run_suite(name, seed, instances), name + ".", cert);
  } else {
    merge_suite(run_suite(suite, seed, instances), "", cert);
  }
}

void run_selftest(Certificate& cert) {
  // the closed-form 2x2 pair: trace one with a pinned off-diagonal; 0.4 has
  // the witness [[0.5, 0.4], [0.4, 0.5]], 0.6 exceeds max a(1-a) = 1/4
  {
    AffineBuilder builder({2});
    builder.add_term(0, 0, 0, 1.0);
    builder.add_term(0, 1, 1, 1.0);
    builder.finish(1.0);
    builder.pin(0, 0, 1, 0.4);
    auto rep = dykstra_solve(builder.take({0}));
    if (rep.status != SolveStatus::Feasible || rep.affine_residual > 1e-7)
      cert.status = "failed";
    cert.residuals.emplace_back("feasible_residual", rep.affine_residual);
  }
  {
    AffineBuilder builder({2});
    builder.add_term(0, 0, 0, 1.0);
    builder.add_term(0, 1, 1, 1.0);
    builder.finish(1.0);
    builder.pin(0, 0, 1, 0.6);
    auto rep = dykstra_solve(builder.take({0}));
    if (rep.status != SolveStatus::Stalled || rep.affine_residual <= 1e-6)
      cert.status = "failed";
    cert.residuals.emplace_back("infeasible_gap", rep.affine_residual);
  }
  auto m2 = make_algebra({2});
  double cb_id = cb_norm(identity_map(m2), 1e-6);
  cert.residuals.emplace_back("cb_identity", cb_id);
  if (std::abs(cb_id - 1.0) > 1e-6) cert.status = "failed";
  for (const char* name : {"cp1", "cp2", "exp", "expectation"})
    merge_suite(run_suite(name, 1, 2), std::string(name) + ".", cert);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"module map calculus over multi-matrix algebras"};
  app.require_subcommand(1);

  std::string file, mode, suite, sizes_json;
  double tol = 1e-4;
  std::uint64_t seed = 1;

  CLI::App* c_check = app.add_subcommand("check", "classify a map");
  c_check->add_option("file", file)->required();
  CLI::App* c_dilate = app.add_subcommand("dilate", "module Stinespring dilation");
  c_dilate->add_option("file", file)->required();
  CLI::App* c_extend = app.add_subcommand("extend", "extension theorems");
  c_extend->add_option("--mode", mode, "arveson|wittstock|expectation")->required();
  c_extend->add_option("file", file)->required();
  CLI::App* c_unitize = app.add_subcommand("unitize", "extend to the unitization");
  c_unitize->add_option("file", file)->required();
  CLI::App* c_cbnorm = app.add_subcommand("cbnorm", "completely bounded norm");
  c_cbnorm->add_option("file", file)->required();
  c_cbnorm->add_option("--tol", tol, "bisection resolution");
  CLI::App* c_verify = app.add_subcommand("verify", "randomized lemma harnesses");
  c_verify->add_option("--suite", suite, "suite name or all")->required();
  c_verify->add_option("--seed", seed, "rng seed");
  c_verify->add_option("--sizes", sizes_json, "sizes json, e.g. {\"instances\": 5}");
  CLI::App* c_selftest = app.add_subcommand("selftest", "fast built-in checks");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kInvalid;
  }

  Certificate cert;
  cert.seed = seed;
  auto t0 = std::chrono::steady_clock::now();
  int code = kOk;
  try {
    if (c_selftest->parsed()) {
      cert.task = "selftest";
      run_selftest(cert);
    } else if (c_verify->parsed()) {
      cert.task = "verify";
      int instances = 0;
      if (!sizes_json.empty()) {
        Json sj = Json::parse(sizes_json, nullptr, false);
        if (sj.is_discarded() || !sj.is_object())
          throw InvalidInput("--sizes: not a json object");
        instances = sj.value("instances", 0);
      }
      run_verify(suite, seed, instances, cert);
    } else {
      ProblemFile pf = load_problem_file(file);
      const Json& params = pf.task_params;
      if (params.contains("seed")) cert.seed = seed = params["seed"].get<std::uint64_t>();
      std::string task;
      if (c_check->parsed()) task = "check";
      if (c_dilate->parsed()) task = "dilate";
      if (c_extend->parsed()) task = "extend";
      if (c_unitize->parsed()) task = "unitize";
      if (c_cbnorm->parsed()) task = "cbnorm";
      if (!pf.task.empty() && pf.task != task)
        throw InvalidInput("file task \"" + pf.task + "\" does not match subcommand " + task);
      cert.task = task;
      if (task == "check") run_check(pf, params, cert);
      if (task == "dilate") run_dilate(pf, params, cert);
      if (task == "extend") run_extend(pf, params, mode, cert);
      if (task == "unitize") run_unitize(pf, params, cert);
      if (task == "cbnorm") run_cbnorm(pf, params, tol, seed, cert);
    }
    code = status_code(cert.status);
  } catch (const SolverStall& e) {
    cert.status = "stalled";
    cert.error = e.what();
    code = kStalled;
  } catch (const std::exception& e) {
    cert.status = "invalid";
    cert.error = e.what();
    code = kInvalid;
  }
  cert.timing_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  out << cert.to_json().dump(2) << "\n";
  return code;
}

int run(int argc, char** argv) {
  return run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}

}  // namespace modcp
