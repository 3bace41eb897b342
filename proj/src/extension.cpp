#include "modcp/extension.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace modcp {

namespace {

Matrix span_matrix(const std::vector<AlgebraElement>& basis) {
  if (basis.empty()) throw NotOperatorSystem("empty spanning list");
  Matrix b(coords(basis[0]).size(), basis.size());
  for (std::size_t j = 0; j < basis.size(); ++j) {
    if (basis[j].algebra != basis[0].algebra)
      throw AlgebraMismatch("spanning list mixes algebras");
    b.col(j) = coords(basis[j]);
  }
  return b;
}

CVector expand(const Matrix& b, const AlgebraElement& x, double* residual) {
  CVector rhs = coords(x);
  if (rhs.size() != b.rows()) throw AlgebraMismatch("expansion target mismatch");
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(b);
  CVector c = cod.solve(rhs);
  if (residual) *residual = (b * c - rhs).norm();
  return c;
}

// One generalized module row family: theta(m . e_u) = image . theta(e_u)
// (left) or theta(e_u . m) = theta(e_u) . image (right). Central actions use
// a single left family; the 2x2 doubled actions need the non-central form.
struct ModulePair {
  AlgebraElement mult;
  AlgebraElement image;
  bool left = true;
};

struct CoreSpec {
  MultiMatrixAlgebra A, B;
  std::vector<std::pair<AlgebraElement, AlgebraElement>> agree;
  std::vector<ModulePair> pairs;
  ExtendMode mode = ExtendMode::Ucp;
  double unital_slack = 0;  // widens the unitality rows (Ucp only)
  const std::vector<AlgebraElement>* range_span = nullptr;
  double tol = 1e-7;
  const BlockLinearMap* start_map = nullptr;
};

ExtendOutcome extend_core(const CoreSpec& spec) {
  const MultiMatrixAlgebra& A = spec.A;
  const MultiMatrixAlgebra& B = spec.B;
  int da = A.dim();
  int nt = B.num_blocks();

  std::vector<int> dims = partial_choi_dims(A, B);
  int pc_count = static_cast<int>(dims.size());

  // extra variable blocks: the ccp slack 1 - theta(1), or the interval
  // gadgets p - q (p + q = 1, both psd scalars) that widen unitality rows
  std::vector<int> slack_block(nt, -1);
  struct Gadget {
    int s, k, l;
    int p_re, q_re;
    int p_im = -1, q_im = -1;
  };
  std::vector<Gadget> gadgets;
  auto scalar_var = [&dims] {
    dims.push_back(1);
    return static_cast<int>(dims.size()) - 1;
  };
  if (spec.mode == ExtendMode::Ccp) {
    for (int s = 0; s < nt; ++s) {
      slack_block[s] = static_cast<int>(dims.size());
      dims.push_back(B.blocks[s]);
    }
  } else if (spec.unital_slack > 0) {
    for (int s = 0; s < nt; ++s)
      for (int k = 0; k < B.blocks[s]; ++k)
        for (int l = k; l < B.blocks[s]; ++l) {
          Gadget g{s, k, l, scalar_var(), scalar_var()};
          if (k != l) {
            g.p_im = scalar_var();
            g.q_im = scalar_var();
          }
          gadgets.push_back(g);
        }
  }

  AffineBuilder builder(dims);
  auto add_entry = [&](int u, int s, int k, int l, Complex coeff) {
    BasisIndex bi = basis_index(A, u);
    int es = B.blocks[s];
    builder.add_term(bi.block * nt + s, bi.row * es + k, bi.col * es + l, coeff);
  };
  auto add_unit_image = [&](int s, int k, int l, Complex coeff) {
    for (int r = 0; r < A.num_blocks(); ++r)
      for (int i = 0; i < A.blocks[r]; ++i) add_entry(flat_index(A, r, i, i), s, k, l, coeff);
  };

  for (const auto& [elem, value] : spec.agree) {
    if (elem.algebra != A || value.algebra != B)
      throw AlgebraMismatch("extension constraint in the wrong algebra");
    CVector c = coords(elem);
    for (int s = 0; s < nt; ++s)
      for (int k = 0; k < B.blocks[s]; ++k)
        for (int l = 0; l < B.blocks[s]; ++l) {
          for (int u = 0; u < da; ++u)
            if (std::abs(c(u)) > 1e-14) add_entry(u, s, k, l, c(u));
          builder.finish(value.data[s](k, l));
        }
  }

  for (const ModulePair& mp : spec.pairs) {
    Matrix mult = mp.left ? left_mult_superop(mp.mult) : right_mult_superop(mp.mult);
    for (int u = 0; u < da; ++u)
      for (int s = 0; s < nt; ++s)
        for (int k = 0; k < B.blocks[s]; ++k)
          for (int l = 0; l < B.blocks[s]; ++l) {
            for (int v = 0; v < da; ++v)
              if (std::abs(mult(v, u)) > 1e-14) add_entry(v, s, k, l, mult(v, u));
            if (mp.left) {
              for (int j = 0; j < B.blocks[s]; ++j) {
                Complex w = mp.image.data[s](k, j);
                if (std::abs(w) > 1e-14) add_entry(u, s, j, l, -w);
              }
            } else {
              for (int j = 0; j < B.blocks[s]; ++j) {
                Complex w = mp.image.data[s](j, l);
                if (std::abs(w) > 1e-14) add_entry(u, s, k, j, -w);
              }
            }
            builder.finish(0);
          }
  }

  if (spec.mode == ExtendMode::Ucp) {
    if (spec.unital_slack > 0) {
      // theta(1)(k,l) = delta_kl + eps (p_re - q_re) + i eps (p_im - q_im),
      // each pair pinned to p + q = 1 so the deviation stays in [-eps, eps]
      double eps = spec.unital_slack;
      for (const Gadget& g : gadgets) {
        add_unit_image(g.s, g.k, g.l, 1);
        builder.add_term(g.p_re, 0, 0, -eps);
        builder.add_term(g.q_re, 0, 0, eps);
        if (g.p_im >= 0) {
          builder.add_term(g.p_im, 0, 0, Complex(0, -eps));
          builder.add_term(g.q_im, 0, 0, Complex(0, eps));
        }
        builder.finish(g.k == g.l ? 1 : 0);
        builder.add_term(g.p_re, 0, 0, 1);
        builder.add_term(g.q_re, 0, 0, 1);
        builder.finish(1);
        if (g.p_im >= 0) {
          builder.add_term(g.p_im, 0, 0, 1);
          builder.add_term(g.q_im, 0, 0, 1);
          builder.finish(1);
        }
      }
    } else {
      for (int s = 0; s < nt; ++s)
        for (int k = 0; k < B.blocks[s]; ++k)
          for (int l = 0; l < B.blocks[s]; ++l) {
            add_unit_image(s, k, l, 1);
            builder.finish(k == l ? 1 : 0);
          }
    }
  } else {
    for (int s = 0; s < nt; ++s)
      for (int k = 0; k < B.blocks[s]; ++k)
        for (int l = 0; l < B.blocks[s]; ++l) {
          add_unit_image(s, k, l, 1);
          builder.add_term(slack_block[s], k, l, 1);
          builder.finish(k == l ? 1 : 0);
        }
  }

  if (spec.range_span) {
    Matrix sp = span_matrix(*spec.range_span);
    if (sp.rows() != B.dim()) throw AlgebraMismatch("range span is not in the target");
    Eigen::ColPivHouseholderQR<Matrix> qr(sp);
    int rank = static_cast<int>(qr.rank());
    Matrix q = qr.householderQ();
    for (int m = rank; m < q.cols(); ++m) {
      CVector cm = q.col(m);
      for (int u = 0; u < da; ++u) {
        for (int v = 0; v < B.dim(); ++v) {
          if (std::abs(cm(v)) <= 1e-14) continue;
          BasisIndex bv = basis_index(B, v);
          add_entry(u, bv.block, bv.row, bv.col, std::conj(cm(v)));
        }
        builder.finish(0);
      }
    }
  }

  std::vector<int> psd(dims.size());
  for (std::size_t j = 0; j < dims.size(); ++j) psd[j] = static_cast<int>(j);
  FeasibilityProblem prob = builder.take(std::move(psd), std::min(spec.tol, 1e-8));

  std::vector<Matrix> start;
  start.reserve(dims.size());
  if (spec.start_map) {
    start = partial_choi(*spec.start_map);
  } else {
    for (int j = 0; j < pc_count; ++j) start.push_back(Matrix::Zero(dims[j], dims[j]));
  }
  for (std::size_t j = start.size(); j < dims.size(); ++j)
    start.push_back(0.5 * Matrix::Identity(dims[j], dims[j]));

  ExtendOutcome out;
  out.report = dykstra_solve(prob, &start);
  if (out.report.status == SolveStatus::Feasible) {
    std::vector<Matrix> pc(out.report.point.begin(), out.report.point.begin() + pc_count);
    out.map = map_from_partial_choi(A, B, pc);
  }
  return out;
}

// tracial unital start a -> (tr a / N) 1, cp for any pair of algebras
BlockLinearMap tracial_start(const MultiMatrixAlgebra& A, const MultiMatrixAlgebra& B) {
  double n = A.ambient_dim();
  return map_from_function(A, B, [&](const AlgebraElement& x) {
    Complex t = 0;
    for (const Matrix& m : x.data) t += m.trace();
    return (t / n) * unit(B);
  });
}

}  // namespace

CVector span_coefficients(const std::vector<AlgebraElement>& basis, const AlgebraElement& x,
                          double* residual) {
  return expand(span_matrix(basis), x, residual);
}

CVector system_coefficients(const OperatorSystem& sys, const AlgebraElement& x,
                            double* residual) {
  return span_coefficients(sys.basis, x, residual);
}

OperatorSystem make_operator_system(const MultiMatrixAlgebra& ambient,
                                    std::vector<AlgebraElement> basis,
                                    const CentralAction& action, double tol) {
  if (basis.empty()) throw NotOperatorSystem("no spanning elements");
  for (const AlgebraElement& e : basis)
    if (e.algebra != ambient) throw AlgebraMismatch("system element outside the ambient algebra");
  if (action.target != ambient) throw AlgebraMismatch("action does not act on the ambient algebra");

  Matrix sp = span_matrix(basis);
  auto in_span = [&](const AlgebraElement& x, const char* what) {
    double resid = 0;
    expand(sp, x, &resid);
    if (resid > tol * std::max(1.0, hs_norm(x))) throw NotOperatorSystem(what);
  };
  in_span(unit(ambient), "system does not contain the unit");
  for (const AlgebraElement& e : basis) in_span(adjoint(e), "system is not adjoint closed");
  for (int w = 0; w < action.source.dim(); ++w) {
    AlgebraElement f = basis_element(action.source, w);
    for (const AlgebraElement& e : basis)
      in_span(act(action, f, e), "system is not closed under the action");
  }
  return {ambient, std::move(basis), action};
}

PartialMap make_partial_map(OperatorSystem system, std::vector<AlgebraElement> values,
                            const CentralAction& target_action, double tol) {
  if (values.size() != system.basis.size())
    throw SizeMismatch("one value per system basis element");
  const MultiMatrixAlgebra& target = target_action.target;
  for (const AlgebraElement& v : values)
    if (v.algebra != target) throw AlgebraMismatch("value outside the target algebra");
  if (target_action.source != system.action.source)
    throw AlgebraMismatch("acting algebras differ between system and target");

  Matrix sp = span_matrix(system.basis);
  for (std::size_t j = 0; j < values.size(); ++j) {
    CVector c = expand(sp, adjoint(system.basis[j]), nullptr);
    AlgebraElement lifted = zero_element(target);
    for (std::size_t k = 0; k < values.size(); ++k)
      if (std::abs(c(k)) > 1e-14) lifted = lifted + c(k) * values[k];
    if (hs_norm(lifted - adjoint(values[j])) >
        tol * std::max(1.0, hs_norm(values[j])))
      throw NotHermitianPreserving("partial map is not adjoint compatible");
  }
  return {std::move(system), std::move(values), target, target_action};
}

AlgebraElement partial_apply(const PartialMap& psi, const AlgebraElement& x) {
  double resid = 0;
  CVector c = span_coefficients(psi.system.basis, x, &resid);
  if (resid > 1e-8 * std::max(1.0, hs_norm(x)))
    throw IllDefined("partial_apply: element is not in the system");
  AlgebraElement out = zero_element(psi.target);
  for (std::size_t j = 0; j < psi.values.size(); ++j)
    if (std::abs(c(j)) > 1e-15) out = out + c(j) * psi.values[j];
  return out;
}

PartialMap restrict_map(const BlockLinearMap& theta, const OperatorSystem& sys,
                        const CentralAction& target_action, double tol) {
  if (theta.source != sys.ambient) throw SourceMismatch("restrict_map");
  if (theta.target != target_action.target)
    throw AlgebraMismatch("restrict_map: target action acts elsewhere");
  std::vector<AlgebraElement> values;
  values.reserve(sys.basis.size());
  for (const AlgebraElement& e : sys.basis) values.push_back(apply(theta, e));
  return make_partial_map(sys, std::move(values), target_action, tol);
}

ExtendOutcome arveson_extend_report(const PartialMap& psi, ExtendMode mode, double tol) {
  CoreSpec spec;
  spec.A = psi.system.ambient;
  spec.B = psi.target;
  spec.mode = mode;
  spec.tol = tol;
  for (std::size_t j = 0; j < psi.values.size(); ++j)
    spec.agree.emplace_back(psi.system.basis[j], psi.values[j]);
  for (int w = 0; w < psi.system.action.source.dim(); ++w) {
    AlgebraElement f = basis_element(psi.system.action.source, w);
    spec.pairs.push_back(
        {apply_action(psi.system.action, f), apply_action(psi.target_action, f), true});
  }
  BlockLinearMap start = tracial_start(spec.A, spec.B);
  spec.start_map = &start;
  return extend_core(spec);
}

BlockLinearMap arveson_extend(const PartialMap& psi, ExtendMode mode, double tol) {
  ExtendOutcome out = arveson_extend_report(psi, mode, tol);
  if (!out.map) throw SolverStall("arveson_extend");
  return *out.map;
}

SubBimodule make_sub_bimodule(const BlockLinearMap& inclusion,
                              const BimoduleStructure& ambient, double tol) {
  const MultiMatrixAlgebra& sub = inclusion.source;
  const MultiMatrixAlgebra& amb = inclusion.target;
  if (ambient.left.target != amb || ambient.right.target != amb)
    throw AlgebraMismatch("ambient actions act elsewhere");

  for (int u = 0; u < sub.dim(); ++u) {
    AlgebraElement eu = basis_element(sub, u);
    if (hs_norm(apply(inclusion, adjoint(eu)) - adjoint(apply(inclusion, eu))) > tol)
      throw NotStarHom("inclusion does not respect adjoints");
    for (int v = 0; v < sub.dim(); ++v) {
      AlgebraElement ev = basis_element(sub, v);
      if (hs_norm(apply(inclusion, eu * ev) - apply(inclusion, eu) * apply(inclusion, ev)) >
          tol)
        throw NotStarHom("inclusion is not multiplicative");
    }
  }
  Eigen::JacobiSVD<Matrix> svd(inclusion.superop);
  if (svd.singularValues().size() == 0 ||
      svd.singularValues().minCoeff() <= 1e-10 * std::max(1.0, svd.singularValues()(0)))
    throw NotSubalgebra("inclusion is not injective");

  AlgebraElement p = apply(inclusion, unit(sub));
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(inclusion.superop);
  auto induce = [&](const CentralAction& act, const char* side) {
    std::vector<AlgebraElement> rho;
    for (int w = 0; w < act.source.dim(); ++w) {
      AlgebraElement y = apply_action(act, basis_element(act.source, w)) * p;
      CVector c = cod.solve(coords(y));
      if ((inclusion.superop * c - coords(y)).norm() >
          std::max(tol, 1e-9) * std::max(1.0, hs_norm(y)))
        throw NotSubalgebra(std::string(side) + " action does not preserve the subalgebra");
      rho.push_back(from_coords(sub, c));
    }
    return make_action(act.source, sub, std::move(rho), act.unital, std::max(tol, 1e-8));
  };
  SubBimodule out;
  out.inclusion = inclusion;
  out.ambient = ambient;
  out.induced = make_bimodule(induce(ambient.left, "left"), induce(ambient.right, "right"));
  return out;
}

AlgebraElement sub_preimage(const SubBimodule& sub, const AlgebraElement& x, double tol) {
  if (x.algebra != sub.inclusion.target) throw AlgebraMismatch("sub_preimage");
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(sub.inclusion.superop);
  CVector c = cod.solve(coords(x));
  if ((sub.inclusion.superop * c - coords(x)).norm() > tol * std::max(1.0, hs_norm(x)))
    throw IllDefined("sub_preimage: element is not in the subalgebra");
  return from_coords(sub.inclusion.source, c);
}

namespace {

void wittstock_validate(const BlockLinearMap& theta0, const SubBimodule& sub,
                        const BimoduleStructure& bimodB) {
  if (theta0.source != sub.inclusion.source) throw SourceMismatch("wittstock_extend");
  if (bimodB.left.target != theta0.target || bimodB.right.target != theta0.target)
    throw AlgebraMismatch("target actions act elsewhere");
  if (bimodB.left.source != sub.ambient.left.source ||
      bimodB.right.source != sub.ambient.right.source)
    throw AlgebraMismatch("acting algebras differ between source and target");
  if (bimodule_residual(theta0, sub.induced, bimodB) > 1e-7)
    throw NotBimoduleMap("wittstock_extend: theta0 is not a bimodule map");
}

// the spanning pairs of the 2x2 system stage for a given normalization
std::vector<std::pair<AlgebraElement, AlgebraElement>> stage_pairs(
    const BlockLinearMap& theta_n, const SubBimodule& sub, const BimoduleStructure& bimodB) {
  std::vector<std::pair<AlgebraElement, AlgebraElement>> agree;
  const CentralAction& la = sub.ambient.left;
  const CentralAction& ra = sub.ambient.right;
  for (int w = 0; w < la.source.dim(); ++w) {
    AlgebraElement f = basis_element(la.source, w);
    agree.emplace_back(amp_embed(apply_action(la, f), 2, 0, 0),
                       amp_embed(apply_action(bimodB.left, f), 2, 0, 0));
  }
  for (int w = 0; w < ra.source.dim(); ++w) {
    AlgebraElement g = basis_element(ra.source, w);
    agree.emplace_back(amp_embed(apply_action(ra, g), 2, 1, 1),
                       amp_embed(apply_action(bimodB.right, g), 2, 1, 1));
  }
  for (int u = 0; u < theta_n.source.dim(); ++u) {
    AlgebraElement e = basis_element(theta_n.source, u);
    AlgebraElement a = apply(sub.inclusion, e);
    AlgebraElement v = apply(theta_n, e);
    agree.emplace_back(amp_embed(a, 2, 0, 1), amp_embed(v, 2, 0, 1));
    agree.emplace_back(amp_embed(adjoint(a), 2, 1, 0), amp_embed(adjoint(v), 2, 1, 0));
  }
  return agree;
}

}  // namespace

std::vector<std::pair<AlgebraElement, AlgebraElement>> wittstock_system(
    const BlockLinearMap& theta0, const SubBimodule& sub, const BimoduleStructure& bimodB) {
  wittstock_validate(theta0, sub, bimodB);
  double c = cb_norm(theta0, 1e-5);
  if (c < 1e-12) return stage_pairs(zero_map(theta0.source, theta0.target), sub, bimodB);
  return stage_pairs((Complex(1.0 / c)) * theta0, sub, bimodB);
}

BlockLinearMap wittstock_extend(const BlockLinearMap& theta0, const SubBimodule& sub,
                                const BimoduleStructure& bimodB, double tol) {
  wittstock_validate(theta0, sub, bimodB);
  const MultiMatrixAlgebra& A = sub.inclusion.target;
  const MultiMatrixAlgebra& B = theta0.target;
  double c = cb_norm(theta0, 1e-5);
  if (c < 1e-12) return zero_map(A, B);
  BlockLinearMap theta_n = Complex(1.0 / c) * theta0;

  CoreSpec spec;
  spec.A = amplify_algebra(A, 2);
  spec.B = amplify_algebra(B, 2);
  spec.mode = ExtendMode::Ucp;
  spec.unital_slack = 1e-6;
  spec.tol = tol;
  spec.agree = stage_pairs(theta_n, sub, bimodB);
  auto doubled = [&](const CentralAction& src, const CentralAction& tgt, bool left) {
    for (int w = 0; w < src.source.dim(); ++w) {
      AlgebraElement f = basis_element(src.source, w);
      for (int pos = 0; pos < 2; ++pos)
        spec.pairs.push_back({amp_embed(apply_action(src, f), 2, pos, pos),
                              amp_embed(apply_action(tgt, f), 2, pos, pos), left});
    }
  };
  doubled(sub.ambient.left, bimodB.left, true);
  doubled(sub.ambient.right, bimodB.right, false);

  // diagonal tracial start: ucp and cp, repaired toward the rows by the solver
  BlockLinearMap tau = tracial_start(A, B);
  BlockLinearMap start = map_from_function(spec.A, spec.B, [&](const AlgebraElement& x) {
    AlgebraElement out = zero_element(spec.B);
    for (int p = 0; p < 2; ++p)
      out = out + amp_embed(apply(tau, amp_entry(x, A, 2, p, p)), 2, p, p);
    return out;
  });
  spec.start_map = &start;

  ExtendOutcome out = extend_core(spec);
  if (!out.map) throw SolverStall("wittstock_extend");
  const BlockLinearMap big = *out.map;
  return map_from_function(A, B, [&](const AlgebraElement& x) {
    return Complex(c) * amp_entry(apply(big, amp_embed(x, 2, 0, 1)), B, 2, 0, 1);
  });
}

PositiveExtensionReport positive_extension_audit(const PartialMap& psi,
                                                 const BlockLinearMap& extension,
                                                 double tol, int samples,
                                                 std::uint64_t seed) {
  const MultiMatrixAlgebra& A = psi.system.ambient;
  if (extension.source != A || extension.target != psi.target)
    throw NotExtension("audit: extension maps between the wrong algebras");
  for (std::size_t j = 0; j < psi.values.size(); ++j)
    if (hs_norm(apply(extension, psi.system.basis[j]) - psi.values[j]) >
        std::max(tol, 1e-7) * std::max(1.0, hs_norm(psi.values[j])))
      throw NotExtension("audit: the map does not restrict to the partial map");

  PositiveExtensionReport rep;
  rep.samples = samples;
  rep.psi_unit_norm = op_norm(partial_apply(psi, unit(A)));
  double slack = std::max(tol, 1e-6) * std::max(1.0, rep.psi_unit_norm);

  Rng rng(seed);
  int m = static_cast<int>(psi.system.basis.size());
  auto random_in_span = [&](bool hermitian) {
    AlgebraElement x = zero_element(A);
    for (int j = 0; j < m; ++j) x = x + rng.cnormal() * psi.system.basis[j];
    if (hermitian) x = Complex(0.5) * (x + adjoint(x));
    return x;
  };

  int probes = std::max(20, samples / 5);
  for (int t = 0; t < probes; ++t) {
    AlgebraElement h = random_in_span(true);
    AlgebraElement pos = h - std::min(0.0, min_eig(h)) * unit(A);
    if (min_eig(partial_apply(psi, pos)) < -tol * std::max(1.0, op_norm(pos)))
      rep.psi_positive = false;

    AlgebraElement x = random_in_span(false);
    double nx = op_norm(x);
    if (nx > 1e-9 && op_norm(partial_apply(psi, x)) > rep.psi_unit_norm * nx + slack * nx)
      rep.norm_attained_at_unit = false;
  }

  auto probe_norm = [&](const AlgebraElement& a) {
    double na = op_norm(a);
    if (na < 1e-9) return;
    rep.extension_norm = std::max(rep.extension_norm, op_norm(apply(extension, a)) / na);
  };
  probe_norm(unit(A));
  for (int u = 0; u < A.dim(); ++u) probe_norm(basis_element(A, u));
  for (int t = 0; t < probes; ++t) probe_norm(random_element(A, rng));
  rep.norm_preserving = rep.extension_norm <= rep.psi_unit_norm + slack;

  for (int t = 0; t < samples; ++t) {
    AlgebraElement a = random_positive(A, rng);
    double margin = min_eig(apply(extension, a)) / std::max(1.0, op_norm(a));
    rep.worst_positivity = std::min(rep.worst_positivity, margin);
    if (margin < -std::max(tol, 1e-8) && !rep.counterexample) {
      rep.positive = false;
      rep.counterexample = a;
    }
  }
  return rep;
}

BlockLinearMap injectivity_expectation(const MultiMatrixAlgebra& ambient,
                                       const std::vector<AlgebraElement>& sub_basis,
                                       const CentralAction& action, double tol) {
  BlockLinearMap hs = conditional_expectation(ambient, sub_basis);
  OperatorSystem sys = make_operator_system(ambient, sub_basis, action, 1e-9);

  CoreSpec spec;
  spec.A = ambient;
  spec.B = ambient;
  spec.mode = ExtendMode::Ucp;
  spec.tol = tol;
  for (const AlgebraElement& b : sub_basis) spec.agree.emplace_back(b, b);
  for (int w = 0; w < action.source.dim(); ++w) {
    AlgebraElement f = basis_element(action.source, w);
    AlgebraElement img = apply_action(action, f);
    spec.pairs.push_back({img, img, true});
  }
  spec.range_span = &sub_basis;
  spec.start_map = &hs;

  ExtendOutcome out = extend_core(spec);
  if (!out.map) throw SolverStall("injectivity_expectation");
  const BlockLinearMap& e = *out.map;

  double loose = std::max(10 * tol, 1e-6);
  if (map_distance(compose(e, e), e) > loose ||
      choi_min_eig(e) < -std::max(tol, 1e-7) ||
      module_residual(e, action, action) > loose)
    throw SolverStall("injectivity_expectation: residuals above tolerance");
  return e;
}

}  // namespace modcp
