#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "modcp/extension.hpp"

using namespace modcp;

namespace {

AlgebraElement block_unit(const MultiMatrixAlgebra& a, int block, int row, int col) {
  return basis_element(a, flat_index(a, block, row, col));
}

AlgebraElement elem_sqrt(const AlgebraElement& a) {
  AlgebraElement out = a;
  for (Matrix& m : out.data) m = herm_sqrt(m);
  return out;
}

// {1, p0, offdiagonal hermitian pair in block 0} inside M_2 (+) M_1 -- a
// three-dimensional system closed under the block partition action
struct SmallSystem {
  MultiMatrixAlgebra A = make_algebra({2, 1});
  CentralAction actA = partition_action(A, {{0}, {1}});
  OperatorSystem sys;
  SmallSystem() {
    AlgebraElement p0 = apply_action(actA, basis_element(actA.source, 0));
    AlgebraElement h = block_unit(A, 0, 0, 1) + block_unit(A, 0, 1, 0);
    sys = make_operator_system(A, {unit(A), p0, h}, actA);
  }
};

BlockLinearMap normalize_ccp(const BlockLinearMap& f) {
  double n = op_norm(apply(f, unit(f.source)));
  return n > 1 ? Complex(1.0 / n) * f : f;
}

// block-trace state map {2,1} -> C^2, a module map for the partition action
BlockLinearMap block_state(const MultiMatrixAlgebra& A, const MultiMatrixAlgebra& C2) {
  return map_from_function(A, C2, [&](const AlgebraElement& x) {
    AlgebraElement out = zero_element(C2);
    out.data[0](0, 0) = x.data[0].trace() / double(x.data[0].rows());
    out.data[1](0, 0) = x.data[1].trace() / double(x.data[1].rows());
    return out;
  });
}

}  // namespace

TEST_CASE("operator systems validate their closure properties") {
  auto m2 = make_algebra({2});
  auto triv = trivial_action(m2);
  AlgebraElement e12 = block_unit(m2, 0, 0, 1);
  AlgebraElement e21 = block_unit(m2, 0, 1, 0);

  CHECK_NOTHROW(make_operator_system(m2, {unit(m2), e12, e21}, triv));
  CHECK_THROWS_AS(make_operator_system(m2, {e12, e21}, triv), NotOperatorSystem);
  CHECK_THROWS_AS(make_operator_system(m2, {unit(m2), e12}, triv), NotOperatorSystem);

  // the partition action breaks closure when the projections are missing
  SmallSystem s;
  AlgebraElement h = block_unit(s.A, 0, 0, 1) + block_unit(s.A, 0, 1, 0);
  CHECK_THROWS_AS(make_operator_system(s.A, {unit(s.A), h}, s.actA), NotOperatorSystem);
  CHECK(s.sys.basis.size() == 3);
}

TEST_CASE("partial maps must be adjoint compatible") {
  auto m2 = make_algebra({2});
  auto triv = trivial_action(m2);
  AlgebraElement e12 = block_unit(m2, 0, 0, 1);
  AlgebraElement e21 = block_unit(m2, 0, 1, 0);
  auto sys = make_operator_system(m2, {unit(m2), e12, e21}, triv);

  CHECK_NOTHROW(make_partial_map(sys, {unit(m2), Complex(2) * e12, Complex(2) * e21}, triv));
  CHECK_THROWS_AS(make_partial_map(sys, {unit(m2), Complex(2) * e12, Complex(3) * e21}, triv),
                  NotHermitianPreserving);

  auto pm = make_partial_map(sys, {unit(m2), Complex(2) * e12, Complex(2) * e21}, triv);
  AlgebraElement x = unit(m2) + Complex(0.25) * e12;
  CHECK(hs_norm(partial_apply(pm, x) - (unit(m2) + Complex(0.5) * e12)) < 1e-12);
  CHECK_THROWS_AS(partial_apply(pm, block_unit(m2, 0, 0, 0)), IllDefined);
}

TEST_CASE("restrictions of ccp module maps extend back") {
  SmallSystem s;
  auto theta0 = normalize_ccp(random_cp_module_map(s.actA, s.actA, 2, 17));
  auto psi = restrict_map(theta0, s.sys, s.actA);

  auto ext = arveson_extend(psi, ExtendMode::Ccp);
  for (std::size_t j = 0; j < psi.values.size(); ++j)
    CHECK(hs_norm(apply(ext, psi.system.basis[j]) - psi.values[j]) < 1e-7);
  CHECK(choi_min_eig(ext) > -1e-7);
  CHECK(module_residual(ext, s.actA, s.actA) < 1e-7);
  CHECK(min_eig(unit(s.A) - apply(ext, unit(s.A))) > -1e-7);
}

TEST_CASE("the unit alone extends to a unital cp module map") {
  auto m2 = make_algebra({2});
  auto triv = trivial_action(m2);
  auto sys = make_operator_system(m2, {unit(m2)}, triv);
  auto psi = make_partial_map(sys, {unit(m2)}, triv);

  auto ext = arveson_extend(psi, ExtendMode::Ucp);
  CHECK(unit_defect(ext) < 1e-7);
  CHECK(choi_min_eig(ext) > -1e-7);
}

TEST_CASE("norm-violating partial data stalls with a positive terminal gap") {
  auto m2 = make_algebra({2});
  auto triv = trivial_action(m2);
  AlgebraElement e12 = block_unit(m2, 0, 0, 1);
  AlgebraElement e21 = block_unit(m2, 0, 1, 0);
  auto sys = make_operator_system(m2, {unit(m2), e12, e21}, triv);
  auto psi = make_partial_map(sys, {unit(m2), Complex(2) * e12, Complex(2) * e21}, triv);

  auto out = arveson_extend_report(psi, ExtendMode::Ucp);
  CHECK(out.report.status == SolveStatus::Stalled);
  CHECK_FALSE(out.map.has_value());
  CHECK(out.report.affine_residual > 1e-6);
  CHECK_THROWS_AS(arveson_extend(psi, ExtendMode::Ucp), SolverStall);
}

TEST_CASE("contradictory agreement rows are rejected") {
  auto m2 = make_algebra({2});
  auto triv = trivial_action(m2);
  AlgebraElement h = block_unit(m2, 0, 0, 1) + block_unit(m2, 0, 1, 0);
  auto sys = make_operator_system(m2, {unit(m2), h, h}, triv);
  PartialMap pm{sys, {unit(m2), h, Complex(2) * h}, m2, triv};
  CHECK_THROWS_AS(arveson_extend(pm, ExtendMode::Ucp), InconsistentConstraints);
}

TEST_CASE("restriction-extension round trips across random instances") {
  Rng rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    SmallSystem s;
    bool ucp_mode = trial % 2 == 0;
    auto theta0 = random_cp_module_map(s.actA, s.actA, 1 + trial % 3, 100 + trial);
    theta0 = normalize_ccp(theta0);
    auto psi = restrict_map(theta0, s.sys, s.actA);
    auto out = arveson_extend_report(psi, ExtendMode::Ccp);
    REQUIRE(out.map.has_value());
    const BlockLinearMap& ext = *out.map;
    for (std::size_t j = 0; j < psi.values.size(); ++j)
      CHECK(hs_norm(apply(ext, psi.system.basis[j]) - psi.values[j]) < 1e-7);
    CHECK(choi_min_eig(ext) > -1e-7);
    CHECK(module_residual(ext, s.actA, s.actA) < 1e-7);
    (void)ucp_mode;
  }
}

TEST_CASE("subbimodules validate and induce actions") {
  auto A = make_algebra({2, 2});
  auto A0 = make_algebra({2, 1});
  auto incl = map_from_function(A0, A, [&](const AlgebraElement& x) {
    AlgebraElement out = zero_element(A);
    out.data[0] = x.data[0];
    out.data[1] = x.data[1](0, 0) * Matrix::Identity(2, 2);
    return out;
  });
  BimoduleStructure amb;
  amb.left = partition_action(A, {{0}, {1}});
  amb.right = trivial_action(A);

  auto sub = make_sub_bimodule(incl, amb);
  CHECK(sub.induced.left.source.dim() == 2);
  AlgebraElement z0 = apply_action(sub.induced.left, basis_element(amb.left.source, 0));
  CHECK(hs_norm(apply(incl, z0) -
                apply_action(amb.left, basis_element(amb.left.source, 0))) < 1e-10);

  Rng rng3(3);
  AlgebraElement inside = apply(incl, random_element(A0, rng3));
  CHECK(hs_norm(apply(incl, sub_preimage(sub, inside)) - inside) < 1e-10);
  CHECK_THROWS_AS(sub_preimage(sub, block_unit(A, 1, 0, 1)), IllDefined);

  // the doubled copy of M_2 is not invariant under the partition action
  auto m2 = make_algebra({2});
  auto twin = map_from_function(m2, A, [&](const AlgebraElement& x) {
    return make_element(A, {x.data[0], x.data[0]});
  });
  CHECK_THROWS_AS(make_sub_bimodule(twin, amb), NotSubalgebra);

  auto skew = make_map(m2, m2, Complex(2) * identity_map(m2).superop);
  BimoduleStructure triv2{trivial_action(m2), trivial_action(m2)};
  CHECK_THROWS_AS(make_sub_bimodule(skew, triv2), NotStarHom);
}

TEST_CASE("wittstock extension of the diagonal inclusion has cb norm one") {
  auto m2 = make_algebra({2});
  auto c2 = make_algebra({1, 1});
  auto incl = map_from_function(c2, m2, [&](const AlgebraElement& x) {
    AlgebraElement out = zero_element(m2);
    out.data[0](0, 0) = x.data[0](0, 0);
    out.data[0](1, 1) = x.data[1](0, 0);
    return out;
  });
  BimoduleStructure triv{trivial_action(m2), trivial_action(m2)};
  auto sub = make_sub_bimodule(incl, triv);
  BimoduleStructure trivB{trivial_action(m2), trivial_action(m2)};

  auto theta = wittstock_extend(incl, sub, trivB);
  for (int w = 0; w < c2.dim(); ++w) {
    AlgebraElement e = basis_element(c2, w);
    CHECK(hs_norm(apply(theta, apply(incl, e)) - apply(incl, e)) < 1e-6);
  }
  CHECK(bimodule_residual(theta, sub.ambient, trivB) < 1e-7);
  CHECK(cb_norm(theta, 1e-4) < 1.0 + 1e-3);
}

TEST_CASE("wittstock extension is pinned when the subalgebra is everything") {
  auto m2 = make_algebra({2});
  BimoduleStructure triv{trivial_action(m2), trivial_action(m2)};
  auto sub = make_sub_bimodule(identity_map(m2), triv);

  auto theta = wittstock_extend(transpose_map(m2), sub, triv);
  CHECK(map_distance(theta, transpose_map(m2)) < 1e-5);

  auto zero = wittstock_extend(zero_map(m2, m2), sub, triv);
  CHECK(map_distance(zero, zero_map(m2, m2)) < 1e-12);
}

TEST_CASE("wittstock preserves the cb norm on random bimodule maps") {
  auto m2 = make_algebra({2});
  auto c2 = make_algebra({1, 1});
  auto incl = map_from_function(c2, m2, [&](const AlgebraElement& x) {
    AlgebraElement out = zero_element(m2);
    out.data[0](0, 0) = x.data[0](0, 0);
    out.data[0](1, 1) = x.data[1](0, 0);
    return out;
  });
  BimoduleStructure triv{trivial_action(m2), trivial_action(m2)};
  auto sub = make_sub_bimodule(incl, triv);

  Rng rng(41);
  for (int trial = 0; trial < 5; ++trial) {
    auto theta0 = random_module_map(trivial_action(c2), trivial_action(m2), 2, rng, false);
    double c = cb_norm(theta0, 1e-4);
    if (c < 1e-8) continue;
    auto theta = wittstock_extend(theta0, sub, triv);
    for (int w = 0; w < c2.dim(); ++w) {
      AlgebraElement e = basis_element(c2, w);
      CHECK(hs_norm(apply(theta, apply(incl, e)) - apply(theta0, e)) < 1e-5 * std::max(1.0, c));
    }
    CHECK(cb_norm(theta, 1e-4) < c + 1e-3);
  }
}

TEST_CASE("wittstock handles partitioned actions") {
  auto A = make_algebra({2, 2});
  auto A0 = make_algebra({2, 1});
  auto incl = map_from_function(A0, A, [&](const AlgebraElement& x) {
    AlgebraElement out = zero_element(A);
    out.data[0] = x.data[0];
    out.data[1] = x.data[1](0, 0) * Matrix::Identity(2, 2);
    return out;
  });
  BimoduleStructure amb{partition_action(A, {{0}, {1}}), trivial_action(A)};
  auto sub = make_sub_bimodule(incl, amb);
  auto B = make_algebra({2, 2});
  BimoduleStructure bimodB{partition_action(B, {{0}, {1}}), trivial_action(B)};

  Rng rng(47);
  auto theta0 = random_bimodule_map(sub.induced, bimodB, 2, rng, false);
  double c = cb_norm(theta0, 1e-4);
  auto theta = wittstock_extend(theta0, sub, bimodB);
  for (int u = 0; u < A0.dim(); ++u) {
    AlgebraElement e = basis_element(A0, u);
    CHECK(hs_norm(apply(theta, apply(incl, e)) - apply(theta0, e)) < 1e-5 * std::max(1.0, c));
  }
  CHECK(bimodule_residual(theta, amb, bimodB) < 1e-6);
  // the bisection oracle reads slow-converging steps as infeasible and biases
  // upward at this size, so certify no norm inflation from below instead
  CHECK(cb_lower_bound(theta, 60, 2, 7) < c + 1e-3);
}

TEST_CASE("the wittstock system stage is positive on factorized elements") {
  auto m2 = make_algebra({2});
  auto c2 = make_algebra({1, 1});
  auto incl = map_from_function(c2, m2, [&](const AlgebraElement& x) {
    AlgebraElement out = zero_element(m2);
    out.data[0](0, 0) = x.data[0](0, 0);
    out.data[0](1, 1) = x.data[1](0, 0);
    return out;
  });
  BimoduleStructure triv{trivial_action(m2), trivial_action(m2)};
  auto sub = make_sub_bimodule(incl, triv);

  auto pairs = wittstock_system(incl, sub, triv);
  CHECK(pairs.size() == 1 + 1 + 2 * c2.dim());
  std::vector<AlgebraElement> span_elems, span_images;
  for (const auto& [s, t] : pairs) {
    span_elems.push_back(s);
    span_images.push_back(t);
  }
  auto A2 = amplify_algebra(m2, 2);
  auto B2 = amplify_algebra(m2, 2);

  Rng rng(59);
  for (int n = 1; n <= 2; ++n) {
    auto Bn = amplify_algebra(B2, n);
    auto An = amplify_algebra(A2, n);
    for (int trial = 0; trial < 6; ++trial) {
      Matrix alpha = rng.psd(n), beta = rng.psd(n);
      auto c_sub = apply(amplify_map(incl, n), random_element(amplify_algebra(c2, n), rng));
      double nc = op_norm(c_sub);
      if (nc > 1) c_sub = Complex(1.0 / nc) * c_sub;
      auto ah = amp_outer(m2, n, alpha);
      auto bh = amp_outer(m2, n, beta);
      auto mid = elem_sqrt(ah) * c_sub * elem_sqrt(bh);

      AlgebraElement X = zero_element(An), Y = zero_element(Bn);
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
          AlgebraElement cell =
              amp_embed(Complex(alpha(p, q)) * unit(m2), 2, 0, 0) +
              amp_embed(amp_entry(mid, m2, n, p, q), 2, 0, 1) +
              amp_embed(amp_entry(adjoint(mid), m2, n, p, q), 2, 1, 0) +
              amp_embed(Complex(beta(p, q)) * unit(m2), 2, 1, 1);
          double resid = 0;
          CVector co = span_coefficients(span_elems, cell, &resid);
          REQUIRE(resid < 1e-9);
          AlgebraElement icell = zero_element(B2);
          for (int j = 0; j < co.size(); ++j)
            if (std::abs(co(j)) > 1e-14) icell = icell + co(j) * span_images[j];
          X = X + amp_embed(cell, n, p, q);
          Y = Y + amp_embed(icell, n, p, q);
        }
      CHECK(min_eig(X) > -1e-10);
      CHECK(min_eig(Y) > -1e-8);
    }
  }
}

TEST_CASE("positive partial maps audit cleanly against honest extensions") {
  auto A = make_algebra({2, 1});
  auto C2 = make_algebra({1, 1});
  auto actA = partition_action(A, {{0}, {1}});
  auto actC = partition_action(C2, {{0}, {1}});
  auto phi = block_state(A, C2);

  AlgebraElement p0 = apply_action(actA, basis_element(C2, 0));
  auto sys = make_operator_system(A, {unit(A), p0}, actA);
  auto psi = restrict_map(phi, sys, actC);

  auto rep = positive_extension_audit(psi, phi);
  CHECK(rep.pass());
  CHECK(rep.psi_unit_norm == doctest::Approx(1.0));

  CHECK_THROWS_AS(positive_extension_audit(psi, Complex(2) * phi), NotExtension);
}

TEST_CASE("norm inflation off the system is flagged") {
  auto A = make_algebra({2, 1});
  auto C2 = make_algebra({1, 1});
  auto actA = partition_action(A, {{0}, {1}});
  auto actC = partition_action(C2, {{0}, {1}});
  auto phi = block_state(A, C2);
  AlgebraElement p0 = apply_action(actA, basis_element(C2, 0));
  auto sys = make_operator_system(A, {unit(A), p0}, actA);
  auto psi = restrict_map(phi, sys, actC);

  // agrees on the system, but picks up a large off-system term
  auto inflated = map_from_function(A, C2, [&](const AlgebraElement& x) {
    AlgebraElement out = apply(phi, x);
    out.data[0](0, 0) -= 2.0 * x.data[0](0, 1);
    return out;
  });
  auto rep = positive_extension_audit(psi, inflated);
  CHECK_FALSE(rep.norm_preserving);
  CHECK(rep.extension_norm > 1.5);
  CHECK_FALSE(rep.positive);
  CHECK(rep.counterexample.has_value());
}

TEST_CASE("solver-built extensions of positive maps stay positive") {
  auto A = make_algebra({2, 1});
  auto C2 = make_algebra({1, 1});
  auto actA = partition_action(A, {{0}, {1}});
  auto actC = partition_action(C2, {{0}, {1}});
  auto phi = block_state(A, C2);
  AlgebraElement p0 = apply_action(actA, basis_element(C2, 0));
  auto sys = make_operator_system(A, {unit(A), p0}, actA);
  auto psi = restrict_map(phi, sys, actC);

  auto ext = arveson_extend(psi, ExtendMode::Ucp);
  auto rep = positive_extension_audit(psi, ext, 1e-7, 500, 5);
  CHECK(rep.pass());
  CHECK(rep.worst_positivity > -1e-8);
}

TEST_CASE("module expectations come out of the extension machinery") {
  auto m2 = make_algebra({2});
  auto triv = trivial_action(m2);
  std::vector<AlgebraElement> diag = {block_unit(m2, 0, 0, 0), block_unit(m2, 0, 1, 1)};

  auto e = injectivity_expectation(m2, diag, triv);
  CHECK(map_distance(e, conditional_expectation(m2, diag)) < 1e-6);

  std::vector<AlgebraElement> full;
  for (int u = 0; u < m2.dim(); ++u) full.push_back(basis_element(m2, u));
  CHECK(map_distance(injectivity_expectation(m2, full, triv), identity_map(m2)) < 1e-6);

  std::vector<AlgebraElement> scalars = {unit(m2)};
  auto tr = injectivity_expectation(m2, scalars, triv);
  auto tracial = map_from_function(m2, m2, [&](const AlgebraElement& x) {
    return Complex(x.data[0].trace() / 2.0) * unit(m2);
  });
  CHECK(map_distance(tr, tracial) < 1e-6);
}

TEST_CASE("module expectations respect partitioned actions") {
  auto A = make_algebra({2, 2});
  auto actA = partition_action(A, {{0}, {1}});
  std::vector<AlgebraElement> diag;
  for (int b = 0; b < 2; ++b)
    for (int i = 0; i < 2; ++i) diag.push_back(block_unit(A, b, i, i));

  auto e = injectivity_expectation(A, diag, actA);
  CHECK(module_residual(e, actA, actA) < 1e-6);
  CHECK(map_distance(e, conditional_expectation(A, diag)) < 1e-6);
  CHECK(choi_min_eig(e) > -1e-7);
  CHECK(unit_defect(e) < 1e-7);
}
