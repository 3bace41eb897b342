#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "modcp/cpcalc.hpp"

using namespace modcp;

namespace {

BlockLinearMap trace_map(const MultiMatrixAlgebra& m2) {
  // a -> tr(a)/2 * I on M_2
  return map_from_function(m2, m2, [&](const AlgebraElement& a) {
    return (a.data[0].trace() / 2.0) * unit(m2);
  });
}

BlockLinearMap dephasing(const MultiMatrixAlgebra& m2) {
  return map_from_function(m2, m2, [&](const AlgebraElement& a) {
    auto out = zero_element(m2);
    out.data[0](0, 0) = a.data[0](0, 0);
    out.data[0](1, 1) = a.data[0](1, 1);
    return out;
  });
}

}  // namespace

TEST_CASE("choi matrices of the standard maps") {
  auto m2 = make_algebra({2});

  auto cid = choi(identity_map(m2));
  auto eig_id = hermitian_eig(cid);
  CHECK(eig_id.values(0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(eig_id.values(1)) < 1e-12);
  CHECK(std::abs(eig_id.values(3)) < 1e-12);

  auto ct = choi(transpose_map(m2));
  auto eig_t = hermitian_eig(ct);
  CHECK(eig_t.values(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(eig_t.values(2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(eig_t.values(3) == doctest::Approx(-1.0).epsilon(1e-12));

  CHECK(choi(zero_map(m2, m2)).norm() == 0.0);
  CHECK((choi(trace_map(m2)) - 0.5 * Matrix::Identity(4, 4)).norm() < 1e-14);
}

TEST_CASE("from_choi inverts choi") {
  auto m2 = make_algebra({2});
  auto a = make_algebra({2, 1});
  auto id = identity_map(m2);
  CHECK(map_distance(from_choi(choi(id), m2, m2), id) == 0.0);

  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    auto f = make_map(a, m2, [&] {
      Matrix s(m2.dim(), a.dim());
      for (int i = 0; i < s.rows(); ++i)
        for (int j = 0; j < s.cols(); ++j) s(i, j) = rng.cnormal();
      return s;
    }());
    auto g = from_choi(choi(f), a, m2);
    CHECK(map_distance(f, g) < 1e-12);
    CHECK((choi(g) - choi(f)).norm() < 1e-12);
  }

  CHECK(map_distance(from_choi(Matrix::Zero(4, 4), m2, m2), zero_map(m2, m2)) == 0.0);
  CHECK_THROWS_AS(from_choi(Matrix::Zero(3, 3), m2, m2), SizeMismatch);
}

TEST_CASE("partial choi blocks round trip") {
  auto a = make_algebra({2, 1});
  auto b = make_algebra({1, 2});
  Rng rng(7);
  Matrix s(b.dim(), a.dim());
  for (int i = 0; i < s.rows(); ++i)
    for (int j = 0; j < s.cols(); ++j) s(i, j) = rng.cnormal();
  auto f = make_map(a, b, s);
  auto blocks = partial_choi(f);
  REQUIRE(blocks.size() == 4);
  CHECK(map_distance(map_from_partial_choi(a, b, blocks), f) < 1e-13);
}

TEST_CASE("classification of the standard maps") {
  auto m2 = make_algebra({2});
  auto cid = classify(identity_map(m2));
  CHECK(cid.cp);
  CHECK(cid.unital);
  CHECK(cid.contractive);
  CHECK(cid.hermitian);

  auto ct = classify(transpose_map(m2));
  CHECK(ct.positive);
  CHECK_FALSE(ct.cp);
  CHECK(ct.witnesses.at("choi_min_eig") == doctest::Approx(-1.0).epsilon(1e-9));

  auto ctr = classify(trace_map(m2));
  CHECK(ctr.cp);
  CHECK(ctr.unital);
}

TEST_CASE("composition calculus") {
  auto m2 = make_algebra({2});
  auto id = identity_map(m2);
  CHECK(map_distance(compose(id, id), id) == 0.0);
  CHECK(map_distance(amplify_map(trace_map(m2), 1), trace_map(m2)) < 1e-14);
  CHECK(map_distance(hs_adjoint(hs_adjoint(trace_map(m2))), trace_map(m2)) < 1e-14);
  CHECK(map_distance(compose(transpose_map(m2), transpose_map(m2)), id) < 1e-14);

  auto b = make_algebra({3});
  CHECK_THROWS_AS(compose(identity_map(b), id), SourceMismatch);

  // adjoint pairing over random elements
  Rng rng(12);
  auto f = trace_map(m2);
  for (int trial = 0; trial < 10; ++trial) {
    auto x = random_element(m2, rng);
    auto y = random_element(m2, rng);
    Complex lhs = hs_inner(apply(f, x), y);
    Complex rhs = hs_inner(x, apply(hs_adjoint(f), y));
    CHECK(std::abs(lhs - rhs) < 1e-12 * (1 + hs_norm(x) * hs_norm(y)));
  }
}

TEST_CASE("amplification preserves structure") {
  auto m2 = make_algebra({2});
  auto f = trace_map(m2);
  auto f2 = amplify_map(f, 2);
  CHECK(f2.source == amplify_algebra(m2, 2));
  CHECK(classify(f2).cp);
  // theta_n(E_pq (x) a) = E_pq (x) theta(a)
  Rng rng(3);
  auto a = random_element(m2, rng);
  auto lhs = apply(f2, amp_embed(a, 2, 0, 1));
  auto rhs = amp_embed(apply(f, a), 2, 0, 1);
  CHECK(hs_norm(lhs - rhs) < 1e-13);
}

TEST_CASE("choi positivity matches classification") {
  auto a = make_algebra({2, 1});
  auto b = make_algebra({2});
  auto dims = partial_choi_dims(a, b);
  Rng rng(100);
  for (int trial = 0; trial < 50; ++trial) {
    BlockLinearMap f = [&] {
      if (trial % 2 == 0) {
        // random Kraus sum, completely positive by construction
        return random_module_map(trivial_action(a), trivial_action(b), 2, rng);
      }
      // random Hermitian partial-Choi blocks with a forced negative eigenvalue
      std::vector<Matrix> blocks;
      for (int d : dims) blocks.push_back(rng.hermitian(d));
      double m = min_eig_herm(blocks[0]);
      blocks[0] -= (m + 0.5) * Matrix::Identity(dims[0], dims[0]);
      return map_from_partial_choi(a, b, blocks);
    }();
    bool psd = min_eig_herm(choi(f)) >= -1e-9;
    CHECK(psd == classify(f).cp);
  }
}

TEST_CASE("multiplicative domain") {
  auto m2 = make_algebra({2});
  // a *-homomorphism has everything multiplicative
  CHECK(multiplicative_domain(identity_map(m2)).size() == 4);
  // the normalized trace leaves only scalars
  auto dom_tr = multiplicative_domain(trace_map(m2));
  REQUIRE(dom_tr.size() == 1);
  auto v = dom_tr[0];
  CHECK(hs_norm(v * v.data[0](0, 0) - v * v) < 1e-9);
  // dephasing keeps the diagonal
  auto dom_d = multiplicative_domain(dephasing(m2));
  REQUIRE(dom_d.size() == 2);
  for (const auto& d : dom_d) {
    CHECK(std::abs(d.data[0](0, 1)) < 1e-9);
    CHECK(std::abs(d.data[0](1, 0)) < 1e-9);
  }
  // closed under products: re-expansion residual
  Matrix span(m2.dim(), dom_d.size());
  for (size_t j = 0; j < dom_d.size(); ++j) span.col(j) = coords(dom_d[j]);
  for (const auto& x : dom_d)
    for (const auto& y : dom_d) {
      CVector c = coords(x * y);
      CHECK((c - span * (span.adjoint() * c)).norm() < 1e-8);
    }

  CHECK_THROWS_AS(multiplicative_domain(transpose_map(m2)), NotUCP);
  CHECK_THROWS_AS(multiplicative_domain(0.5 * identity_map(m2)), NotUCP);
}

TEST_CASE("conditional expectation") {
  auto m2 = make_algebra({2});
  auto e11 = basis_element(m2, 0);
  auto e22 = basis_element(m2, 3);

  // full algebra: identity
  std::vector<AlgebraElement> full;
  for (int u = 0; u < 4; ++u) full.push_back(basis_element(m2, u));
  CHECK(map_distance(conditional_expectation(m2, full), identity_map(m2)) < 1e-13);

  // diagonal: dephasing
  auto ed = conditional_expectation(m2, {e11, e22});
  CHECK(map_distance(ed, dephasing(m2)) < 1e-13);
  CHECK(map_distance(compose(ed, ed), ed) < 1e-12);
  CHECK(choi_min_eig(ed) > -1e-10);
  CHECK(classify(ed).cp);
  CHECK(classify(ed).unital);

  // scalars: normalized trace
  auto es = conditional_expectation(m2, {unit(m2)});
  CHECK(map_distance(es, trace_map(m2)) < 1e-13);

  // bimodule identity over the subalgebra
  Rng rng(19);
  for (int trial = 0; trial < 10; ++trial) {
    auto x = random_element(m2, rng);
    auto b = rng.uniform() < 0.5 ? e11 : e11 - e22;
    auto bp = e22;
    CHECK(hs_norm(apply(ed, b * x * bp) - b * apply(ed, x) * bp) < 1e-10 * (1 + hs_norm(x)));
  }

  // not closed under adjoints: span{1, e12}
  CHECK_THROWS_AS(conditional_expectation(m2, {unit(m2), basis_element(m2, 1)}), NotSubalgebra);
  // unit missing: span{e11}
  CHECK_THROWS_AS(conditional_expectation(m2, {e11}), NotSubalgebra);
}

TEST_CASE("cb norm closed forms and bounds") {
  auto m2 = make_algebra({2});
  CHECK(cb_norm(identity_map(m2)) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(cb_norm(0.5 * identity_map(m2)) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(cb_norm(zero_map(m2, m2)) == doctest::Approx(0.0));

  // op-norm samples never exceed the cb norm
  Rng rng(8);
  auto t = transpose_map(m2);
  double cb = cb_norm(t, 1e-4);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = random_element(m2, rng);
    CHECK(op_norm(apply(t, x)) <= cb * op_norm(x) + 1e-6);
  }

  // submultiplicativity across a CP / non-CP pair
  auto f = random_cp_module_map(trivial_action(m2), trivial_action(m2), 2, 5);
  double lhs = cb_norm(compose(t, f), 1e-3);
  CHECK(lhs <= cb * cb_norm(f) + 1e-2);

  // ascent oracle agrees with the closed form for the identity
  CHECK(cb_lower_bound(identity_map(m2)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("hermitian and unit defects") {
  auto m2 = make_algebra({2});
  CHECK(hermitian_defect(identity_map(m2)) < 1e-14);
  CHECK(unit_defect(identity_map(m2)) < 1e-14);
  CHECK(is_unital_map(trace_map(m2)));

  auto skew = map_from_function(m2, m2, [&](const AlgebraElement& a) {
    return Complex(0, 1) * (a * basis_element(m2, 1));
  });
  CHECK(hermitian_defect(skew) > 0.5);
  CHECK_FALSE(is_hermitian_map(skew));
}

TEST_CASE("multiplication superops act on coordinates") {
  auto alg = make_algebra({2, 3});
  Rng rng(44);
  auto a = random_element(alg, rng);
  auto b = random_element(alg, rng);
  auto x = random_element(alg, rng);
  CHECK((left_mult_superop(a) * coords(x) - coords(a * x)).norm() < 1e-12);
  CHECK((right_mult_superop(b) * coords(x) - coords(x * b)).norm() < 1e-12);
  CHECK((left_mult_superop(a) * right_mult_superop(b) * coords(x) - coords(a * x * b)).norm() <
        1e-12);
}
