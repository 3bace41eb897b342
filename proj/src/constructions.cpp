#include "modcp/constructions.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace modcp {

namespace {

std::pair<AlgebraElement, AlgebraElement> split_sum(const MultiMatrixAlgebra& a,
                                                    const MultiMatrixAlgebra& b,
                                                    const AlgebraElement& x) {
  if (x.algebra.num_blocks() != a.num_blocks() + b.num_blocks()) throw ShapeMismatch();
  std::vector<Matrix> da(x.data.begin(), x.data.begin() + a.num_blocks());
  std::vector<Matrix> db(x.data.begin() + a.num_blocks(), x.data.end());
  return {make_element(a, std::move(da)), make_element(b, std::move(db))};
}

void require_ccp_module(const BlockLinearMap& f, const CentralAction& src,
                        const CentralAction& tgt, double tol) {
  double slack = std::max(tol, 1e-8);
  if (!is_cp(f, slack)) throw NotCCP("not completely positive");
  if (op_norm(apply(f, unit(f.source))) > 1 + slack) throw NotCCP("not contractive");
  if (module_residual(f, src, tgt) > std::max(10 * tol, 1e-7)) throw NotModuleMap();
}

AlgebraElement blockwise(const AlgebraElement& a, Matrix (*fn)(const Matrix&)) {
  std::vector<Matrix> data;
  data.reserve(a.data.size());
  for (const Matrix& m : a.data) data.push_back(fn(m));
  return make_element(a.algebra, std::move(data));
}

AlgebraElement elem_sqrt(const AlgebraElement& a) { return blockwise(a, &herm_sqrt); }

AlgebraElement elem_pinv_sqrt(const AlgebraElement& a) {
  std::vector<Matrix> data;
  data.reserve(a.data.size());
  for (const Matrix& m : a.data) data.push_back(pinv_sqrt(m));
  return make_element(a.algebra, std::move(data));
}

}  // namespace

MultiMatrixAlgebra direct_sum(const MultiMatrixAlgebra& a, const MultiMatrixAlgebra& b) {
  std::vector<int> blocks = a.blocks;
  blocks.insert(blocks.end(), b.blocks.begin(), b.blocks.end());
  return make_algebra(std::move(blocks));
}

AlgebraElement direct_sum(const AlgebraElement& a, const AlgebraElement& b) {
  std::vector<Matrix> data = a.data;
  data.insert(data.end(), b.data.begin(), b.data.end());
  return make_element(direct_sum(a.algebra, b.algebra), std::move(data));
}

UnitizationResult unitize(const CentralAction& action) {
  const MultiMatrixAlgebra& A = action.target;
  const MultiMatrixAlgebra& F = action.source;
  if (hs_norm(apply_action(action, unit(F)) - unit(A)) > 1e-9) throw NonUnitalAction();

  UnitizationResult out;
  out.action = action;
  out.algebra_tilde = direct_sum(A, F);
  out.algebra_tilde.label = A.label + "~";

  std::vector<AlgebraElement> rho;
  rho.reserve(F.dim());
  for (int w = 0; w < F.dim(); ++w) {
    AlgebraElement f = basis_element(F, w);
    rho.push_back(direct_sum(apply_action(action, f), f));
  }
  out.action_tilde = make_action(F, out.algebra_tilde, std::move(rho));

  out.iota_A = map_from_function(A, out.algebra_tilde, [&](const AlgebraElement& a) {
    return direct_sum(a, zero_element(F));
  });
  out.iota_unit = direct_sum(apply_action(action, unit(F)), unit(F));
  out.iso = map_from_function(out.algebra_tilde, out.algebra_tilde,
                              [&](const AlgebraElement& x) {
                                auto [a, alpha] = split_sum(A, F, x);
                                return direct_sum(a + apply_action(action, alpha), alpha);
                              });
  return out;
}

std::pair<AlgebraElement, AlgebraElement> iso_inverse(const UnitizationResult& u,
                                                      const AlgebraElement& x) {
  auto [a, alpha] = split_sum(u.action.target, u.action.source, x);
  return {a - apply_action(u.action, alpha), alpha};
}

double unitization_seminorm(const UnitizationResult& u, const AlgebraElement& a,
                            const AlgebraElement& alpha) {
  return op_norm(a + apply_action(u.action, alpha));
}

BlockLinearMap extend_to_unitization(const BlockLinearMap& theta, const CentralAction& actA,
                                     const CentralAction& actB, UnitizationMode mode,
                                     double tol) {
  if (theta.source != actA.target || theta.target != actB.target) throw ShapeMismatch();
  require_ccp_module(theta, actA, actB, tol);
  UnitizationResult uA = unitize(actA);

  if (mode == UnitizationMode::UnitalTarget) {
    if (hs_norm(apply_action(actB, unit(actB.source)) - unit(actB.target)) > 1e-9)
      throw NonUnitalAction();
    return map_from_function(uA.algebra_tilde, actB.target, [&](const AlgebraElement& x) {
      auto [a, alpha] = iso_inverse(uA, x);
      return apply(theta, a) + apply_action(actB, alpha);
    });
  }

  UnitizationResult uB = unitize(actB);
  return map_from_function(uA.algebra_tilde, uB.algebra_tilde, [&](const AlgebraElement& x) {
    auto [a, alpha] = iso_inverse(uA, x);
    return direct_sum(apply(theta, a) + apply_action(actB, alpha), alpha);
  });
}

BlockLinearMap extend_direct_sum(const BlockLinearMap& theta, const CentralAction& actA,
                                 const CentralAction& actB, double tol) {
  if (theta.source != actA.target || theta.target != actB.target) throw ShapeMismatch();
  require_ccp_module(theta, actA, actB, tol);

  AlgebraElement one = apply(theta, unit(theta.source));
  AlgebraElement defect = one - one * one;  // Schwarz defect of the unit
  double trace = 0;
  for (const Matrix& m : defect.data) trace += m.real().trace();
  if (trace > std::max(tol, 1e-9) * (1 + theta.target.ambient_dim()))
    throw UnitNotInMultiplicativeDomain();

  const MultiMatrixAlgebra& A = actA.target;
  const MultiMatrixAlgebra& F = actA.source;
  AlgebraElement corr = unit(actB.target) - one;
  return map_from_function(direct_sum(A, F), actB.target, [&](const AlgebraElement& x) {
    auto [a, alpha] = split_sum(A, F, x);
    return apply(theta, a) + apply_action(actB, alpha) * corr;
  });
}

FactorizationReport verify_factorization(const BlockLinearMap& theta,
                                         const FactorizationWitness& w, double tol) {
  if (w.E != w.actE.target || w.actA.source != w.actE.source ||
      w.actA.source != w.actB.source)
    throw AlgebraMismatch();
  if (theta.source != w.actA.target || theta.target != w.actB.target) throw ShapeMismatch();

  FactorizationReport report;
  for (std::size_t n = 0; n < w.stages.size(); ++n) {
    const FactorizationStage& st = w.stages[n];
    CentralAction actEk = amplify_action(w.actE, st.k);
    MultiMatrixAlgebra Mk = amplify_algebra(w.E, st.k);
    if (st.phi.source != theta.source || st.phi.target != Mk || st.psi.source != Mk ||
        st.psi.target != theta.target)
      throw ShapeMismatch();

    StageReport sr;
    sr.phi_class = classify(st.phi, w.actA, actEk, tol);
    sr.psi_class = classify(st.psi, actEk, w.actB, tol);
    for (const MapClass* c : {&sr.phi_class, &sr.psi_class})
      if (!(c->cp && c->contractive && c->module))
        throw StageNotCCP("stage " + std::to_string(n));

    for (const AlgebraElement& p : w.probe_set)
      sr.gap = std::max(sr.gap, op_norm(apply(st.psi, apply(st.phi, p)) - apply(theta, p)));
    if (!report.stages.empty())
      report.monotone = report.monotone && sr.gap <= report.stages.back().gap + 1e-9;
    report.stages.push_back(std::move(sr));
  }
  if (!report.stages.empty()) report.final_gap = report.stages.back().gap;
  return report;
}

FactorizationWitness lift_nuclearity_witness(const BlockLinearMap& theta,
                                             const FactorizationWitness& w, double tol) {
  verify_factorization(theta, w, tol);
  require_ccp_module(theta, w.actA, w.actB, tol);

  UnitizationResult uA = unitize(w.actA);
  UnitizationResult uE = unitize(w.actE);
  UnitizationResult uB = unitize(w.actB);
  const MultiMatrixAlgebra& F = w.actA.source;

  FactorizationWitness out;
  out.E = uE.algebra_tilde;
  out.actA = uA.action_tilde;
  out.actE = uE.action_tilde;
  out.actB = uB.action_tilde;
  for (const AlgebraElement& p : w.probe_set) out.probe_set.push_back(apply(uA.iota_A, p));

  std::vector<FactorizationStage> stages = w.stages;
  if (stages.empty())
    stages.push_back({1, zero_map(w.actA.target, w.E), zero_map(w.E, w.actB.target)});

  for (const FactorizationStage& st : stages) {
    CentralAction actEk = amplify_action(w.actE, st.k);
    BlockLinearMap phie = extend_to_unitization(st.phi, w.actA, actEk, UnitizationMode::General, tol);
    BlockLinearMap psie = extend_to_unitization(st.psi, actEk, w.actB, UnitizationMode::General, tol);

    // M_k(E) ⊕ 𝔄 sits inside M_k(E⊕𝔄) with the 𝔄 summand placed as
    // I_k ⊗ α; averaging the outer factor back out is a left inverse, so the
    // lifted composition telescopes to the original one.
    MultiMatrixAlgebra model = direct_sum(st.phi.target, F);
    MultiMatrixAlgebra ampEt = amplify_algebra(uE.algebra_tilde, st.k);
    int mE = w.E.num_blocks();
    int k = st.k;

    BlockLinearMap iota =
        map_from_function(model, ampEt, [&](const AlgebraElement& x) {
          auto [y, alpha] = split_sum(st.phi.target, F, x);
          std::vector<Matrix> data = y.data;
          for (int j = 0; j < F.num_blocks(); ++j)
            data.push_back(kron(Matrix::Identity(k, k), alpha.data[j]));
          return make_element(ampEt, std::move(data));
        });
    BlockLinearMap proj =
        map_from_function(ampEt, model, [&](const AlgebraElement& z) {
          std::vector<Matrix> ydata(z.data.begin(), z.data.begin() + mE);
          AlgebraElement alpha = zero_element(F);
          for (int j = 0; j < F.num_blocks(); ++j) {
            int d = F.blocks[j];
            const Matrix& zj = z.data[mE + j];
            for (int p = 0; p < k; ++p)
              alpha.data[j] += zj.block(p * d, p * d, d, d) / static_cast<double>(k);
          }
          return direct_sum(make_element(st.phi.target, std::move(ydata)), alpha);
        });

    out.stages.push_back({st.k, compose(iota, phie), compose(psie, proj)});
  }
  return out;
}

RescaleResult ucp_rescale(const BlockLinearMap& phi_tilde, const CentralAction& actA,
                          const CentralAction& actM, double tol) {
  if (phi_tilde.source != actA.target || phi_tilde.target != actM.target ||
      actA.source != actM.source)
    throw ShapeMismatch();
  double slack = std::max(tol, 1e-8);
  if (!is_cp(phi_tilde, slack)) throw NotCP();
  if (module_residual(phi_tilde, actA, actM) > std::max(10 * tol, 1e-7)) throw NotModuleMap();

  RescaleResult out;
  out.u = apply(phi_tilde, unit(phi_tilde.source));

  if (min_eig(out.u) > 1e-8 * op_norm(out.u)) {
    AlgebraElement s = elem_pinv_sqrt(out.u);
    out.phi = map_from_function(phi_tilde.source, phi_tilde.target,
                                [&](const AlgebraElement& a) {
                                  return s * apply(phi_tilde, a) * s;
                                });
    return out;
  }

  // Singular unit image: solve for φ directly. Variables are the partial
  // Choi blocks of φ; rows pin unitality, the module law, and the
  // compression u^{1/2} φ(·) u^{1/2} = φ̃ on the basis.
  const MultiMatrixAlgebra& A = phi_tilde.source;
  const MultiMatrixAlgebra& M = phi_tilde.target;
  const MultiMatrixAlgebra& F = actA.source;
  int nt = M.num_blocks();
  AffineBuilder builder(partial_choi_dims(A, M));
  auto add_entry = [&](int u, int s, int k, int l, Complex coeff) {
    BasisIndex bi = basis_index(A, u);
    int es = M.blocks[s];
    builder.add_term(bi.block * nt + s, bi.row * es + k, bi.col * es + l, coeff);
  };

  for (int s = 0; s < nt; ++s)
    for (int k = 0; k < M.blocks[s]; ++k)
      for (int l = 0; l < M.blocks[s]; ++l) {
        for (int r = 0; r < A.num_blocks(); ++r)
          for (int i = 0; i < A.blocks[r]; ++i)
            add_entry(flat_index(A, r, i, i), s, k, l, 1);
        builder.finish(k == l ? 1 : 0);
      }

  for (int w = 0; w < F.dim(); ++w) {
    AlgebraElement f = basis_element(F, w);
    Matrix L = left_mult_superop(apply_action(actA, f));
    AlgebraElement mw = apply_action(actM, f);
    for (int u = 0; u < A.dim(); ++u)
      for (int s = 0; s < nt; ++s) {
        Complex lam = mw.data[s](0, 0);
        for (int k = 0; k < M.blocks[s]; ++k)
          for (int l = 0; l < M.blocks[s]; ++l) {
            for (int v = 0; v < A.dim(); ++v)
              if (std::abs(L(v, u)) > 0) add_entry(v, s, k, l, L(v, u));
            add_entry(u, s, k, l, -lam);
            builder.finish(0);
          }
      }
  }

  AlgebraElement us = elem_sqrt(out.u);
  for (int u = 0; u < A.dim(); ++u) {
    AlgebraElement rhs = apply(phi_tilde, basis_element(A, u));
    for (int s = 0; s < nt; ++s) {
      int es = M.blocks[s];
      for (int k = 0; k < es; ++k)
        for (int l = 0; l < es; ++l) {
          for (int m = 0; m < es; ++m)
            for (int m2 = 0; m2 < es; ++m2) {
              Complex coeff = us.data[s](k, m) * us.data[s](m2, l);
              if (std::abs(coeff) > 0) add_entry(u, s, m, m2, coeff);
            }
          builder.finish(rhs.data[s](k, l));
        }
    }
  }

  int pc_blocks = A.num_blocks() * nt;
  std::vector<int> psd(pc_blocks);
  for (int j = 0; j < pc_blocks; ++j) psd[j] = j;
  FeasibilityProblem prob = builder.take(std::move(psd), 1e-8);

  AlgebraElement si = elem_pinv_sqrt(out.u);
  std::vector<Matrix> start = partial_choi(map_from_function(
      A, M, [&](const AlgebraElement& a) { return si * apply(phi_tilde, a) * si; }));
  SolveReport rep = dykstra_solve(prob, &start);
  if (rep.status != SolveStatus::Feasible) throw SolverStall("ucp_rescale");
  out.phi = map_from_partial_choi(A, M, rep.point);
  return out;
}

FactorizationWitness unitalize_factorization(const BlockLinearMap& theta,
                                             const FactorizationWitness& w, double tol) {
  verify_factorization(theta, w, tol);
  FactorizationWitness out = w;
  for (FactorizationStage& st : out.stages) {
    CentralAction actEk = amplify_action(w.actE, st.k);
    RescaleResult first = ucp_rescale(st.phi, w.actA, actEk, tol);
    AlgebraElement us = elem_sqrt(first.u);
    BlockLinearMap inner = map_from_function(
        st.psi.source, st.psi.target,
        [&](const AlgebraElement& x) { return apply(st.psi, us * x * us); });
    RescaleResult second = ucp_rescale(inner, actEk, w.actB, tol);
    st.phi = first.phi;
    st.psi = second.phi;
  }
  return out;
}

BlockLinearMap cp1_correspond(Direction dir, const BlockLinearMap& input,
                              const CentralAction& action) {
  const MultiMatrixAlgebra& F = action.source;
  const MultiMatrixAlgebra& A = action.target;

  if (dir == Direction::Forward) {
    if (input.source.num_blocks() != 1 || input.target != A) throw ShapeMismatch();
    if (!is_cp(input, 1e-8)) throw NotCP();
    int n = input.source.blocks[0];
    std::vector<AlgebraElement> images;
    images.reserve(n * n);
    for (int u = 0; u < n * n; ++u) images.push_back(apply(input, basis_element(input.source, u)));
    MultiMatrixAlgebra MnF = amplify_algebra(F, n);
    return map_from_function(MnF, A, [&, n](const AlgebraElement& x) {
      AlgebraElement out = zero_element(A);
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
          out = out + act(action, amp_entry(x, F, n, p, q), images[p * n + q]);
      return out;
    });
  }

  if (input.target != A || input.source.num_blocks() != F.num_blocks()) throw ShapeMismatch();
  int n = 0;
  for (int j = 0; j < F.num_blocks(); ++j) {
    if (input.source.blocks[j] % F.blocks[j] != 0) throw ShapeMismatch();
    int ratio = input.source.blocks[j] / F.blocks[j];
    if (j == 0) n = ratio;
    if (ratio != n) throw ShapeMismatch();
  }
  MultiMatrixAlgebra Mn = make_algebra({n});
  return map_from_function(Mn, A, [&, n](const AlgebraElement& x) {
    return apply(input, amp_outer(F, n, x.data[0]));
  });
}

AlgebraElement cp1_choi_element(const BlockLinearMap& theta) {
  if (theta.source.num_blocks() != 1) throw ShapeMismatch();
  int n = theta.source.blocks[0];
  AlgebraElement out = zero_element(amplify_algebra(theta.target, n));
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      out = out + amp_embed(apply(theta, basis_element(theta.source, p * n + q)), n, p, q);
  return out;
}

BlockLinearMap cp2_correspond(Direction dir, const BlockLinearMap& input, int n) {
  if (n < 1) throw ShapeMismatch();

  auto deamplify = [n](const MultiMatrixAlgebra& amp) {
    std::vector<int> blocks;
    for (int b : amp.blocks) {
      if (b % n != 0) throw ShapeMismatch();
      blocks.push_back(b / n);
    }
    return make_algebra(std::move(blocks));
  };

  if (dir == Direction::Forward) {
    const MultiMatrixAlgebra& A = input.source;
    MultiMatrixAlgebra F = deamplify(input.target);
    return map_from_function(amplify_algebra(A, n), F, [&, n](const AlgebraElement& x) {
      AlgebraElement out = zero_element(F);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          out = out + amp_entry(apply(input, amp_entry(x, A, n, i, j)), F, n, i, j);
      return out;
    });
  }

  MultiMatrixAlgebra A = deamplify(input.source);
  const MultiMatrixAlgebra& F = input.target;
  return map_from_function(A, amplify_algebra(F, n), [&, n](const AlgebraElement& a) {
    AlgebraElement out = zero_element(amplify_algebra(F, n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        out = out + amp_embed(apply(input, amp_embed(a, n, i, j)), n, i, j);
    return out;
  });
}

BlockLinearMap assemble_2x2(const BlockLinearMap& t1, const BlockLinearMap& t2,
                            const BlockLinearMap& t3, const BlockLinearMap& t4) {
  const BlockLinearMap* corners[2][2] = {{&t1, &t2}, {&t3, &t4}};
  for (const BlockLinearMap* t : {&t2, &t3, &t4})
    if (t->source != t1.source || t->target != t1.target) throw ShapeMismatch();
  const MultiMatrixAlgebra& A = t1.source;
  return map_from_function(amplify_algebra(A, 2), amplify_algebra(t1.target, 2),
                           [&](const AlgebraElement& x) {
                             AlgebraElement out = zero_element(amplify_algebra(t1.target, 2));
                             for (int p = 0; p < 2; ++p)
                               for (int q = 0; q < 2; ++q)
                                 out = out + amp_embed(apply(*corners[p][q],
                                                             amp_entry(x, A, 2, p, q)),
                                                       2, p, q);
                             return out;
                           });
}

TwoByTwoReport verify_2x2(const BlockLinearMap& Theta, const BimoduleStructure& bimodA,
                          const BimoduleStructure& bimodB, double tol, int trials,
                          std::uint64_t seed) {
  const MultiMatrixAlgebra& A = bimodA.left.target;
  const MultiMatrixAlgebra& B = bimodB.left.target;
  if (Theta.source != amplify_algebra(A, 2) || Theta.target != amplify_algebra(B, 2))
    throw ShapeMismatch();
  double slack = std::max(tol, 1e-8);
  if (!is_cp(Theta, slack)) throw NotCP();

  BlockLinearMap t[4];
  for (int p = 0; p < 2; ++p)
    for (int q = 0; q < 2; ++q)
      t[2 * p + q] = map_from_function(A, B, [&, p, q](const AlgebraElement& a) {
        return amp_entry(apply(Theta, amp_embed(a, 2, p, q)), B, 2, p, q);
      });

  TwoByTwoReport report;
  Rng rng(seed);

  // (i) doubled actions: α1⊕α2 acts as diag(rho(α1), rho(α2)).
  const MultiMatrixAlgebra& FL = bimodA.left.source;
  const MultiMatrixAlgebra& FR = bimodA.right.source;
  double resid = 0;
  for (int trial = 0; trial < std::max(1, trials / 2); ++trial) {
    AlgebraElement x = random_element(Theta.source, rng);
    AlgebraElement tx = apply(Theta, x);
    double scale = 1 + op_norm(x);
    for (int w = 0; w < FL.dim(); ++w)
      for (int i = 0; i < 2; ++i) {
        AlgebraElement l = amp_embed(apply_action(bimodA.left, basis_element(FL, w)), 2, i, i);
        AlgebraElement lb = amp_embed(apply_action(bimodB.left, basis_element(FL, w)), 2, i, i);
        resid = std::max(resid, op_norm(apply(Theta, l * x) - lb * tx) / scale);
      }
    for (int w = 0; w < FR.dim(); ++w)
      for (int j = 0; j < 2; ++j) {
        AlgebraElement r = amp_embed(apply_action(bimodA.right, basis_element(FR, w)), 2, j, j);
        AlgebraElement rb = amp_embed(apply_action(bimodB.right, basis_element(FR, w)), 2, j, j);
        resid = std::max(resid, op_norm(apply(Theta, x * r) - tx * rb) / scale);
      }
  }
  report.bimodule = resid <= slack;

  report.corners = is_cp(t[0], slack) && is_cp(t[3], slack) &&
                   is_bimodule_map(t[0], bimodA, bimodB, slack) &&
                   is_bimodule_map(t[3], bimodA, bimodB, slack);

  double flip = 0;
  for (int u = 0; u < A.dim(); ++u) {
    AlgebraElement e = basis_element(A, u);
    flip = std::max(flip, hs_norm(apply(t[1], e) - adjoint(apply(t[2], adjoint(e)))));
  }
  report.adjoint_flip = flip <= slack;

  report.cb_Theta = op_norm(apply(Theta, unit(Theta.source)));  // Θ is CP
  report.cb_theta2 = cb_norm(t[1], 1e-4);
  report.cb_dominated = report.cb_theta2 <= report.cb_Theta + 1e-3;

  bool offdiag = true;
  for (int trial = 0; trial < trials; ++trial) {
    AlgebraElement x = random_positive(A, rng);
    AlgebraElement h = 0.5 * (apply(t[0], x) + apply(t[3], x));
    double scale = 1 + op_norm(x);
    for (Complex lam : {Complex(1, 0), Complex(0, 1)}) {
      AlgebraElement m = lam * apply(t[1], x);
      AlgebraElement re = 0.5 * (m + adjoint(m));
      offdiag = offdiag && min_eig(h - re) >= -slack * scale && min_eig(h + re) >= -slack * scale;
    }
  }
  report.offdiag_dominated = offdiag;

  bool schwarz = true;
  for (int n = 1; n <= 3; ++n) {
    BlockLinearMap t1n = amplify_map(t[0], n);
    BlockLinearMap t4n = amplify_map(t[3], n);
    BlockLinearMap t2n = amplify_map(t[1], n);
    MultiMatrixAlgebra An = amplify_algebra(A, n);
    for (int trial = 0; trial < std::max(1, trials / 2); ++trial) {
      AlgebraElement x = random_element(An, rng);
      AlgebraElement y = apply(t2n, x);
      AlgebraElement rhs = y * adjoint(y);
      double scale = std::max(1.0, report.cb_Theta) * (1 + op_norm(x)) * (1 + op_norm(x));
      for (const BlockLinearMap* ti : {&t1n, &t4n}) {
        AlgebraElement lhs = report.cb_Theta * apply(*ti, x * adjoint(x));
        schwarz = schwarz && min_eig(lhs - rhs) >= -std::max(slack, 1e-7) * scale;
      }
    }
  }
  report.schwarz = schwarz;
  return report;
}

}  // namespace modcp
