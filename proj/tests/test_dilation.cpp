#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "modcp/constructions.hpp"
#include "modcp/dilation.hpp"

using namespace modcp;

namespace {

BimoduleStructure trivial_bimod(const MultiMatrixAlgebra& a) {
  return make_bimodule(trivial_action(a), trivial_action(a));
}

BlockLinearMap trace_map(const MultiMatrixAlgebra& m2) {
  return map_from_function(m2, m2, [&](const AlgebraElement& x) {
    AlgebraElement out = zero_element(m2);
    out.data[0] = Complex(0.5) * x.data[0].trace() * Matrix::Identity(2, 2);
    return out;
  });
}

// A = M_2 (+) M_2 as a C^2-right-module over a two-dimensional Hilbert space
// whose left C^2 action separates the two coordinates.
struct TwoBlockSetup {
  MultiMatrixAlgebra A = make_algebra({2, 2});
  BimoduleStructure bimodA;
  BimoduleHilbert h;
  TwoBlockSetup() {
    bimodA.left = trivial_action(A);
    bimodA.right = partition_action(A, {{0}, {1}});
    Matrix p0 = Matrix::Zero(2, 2), p1 = Matrix::Zero(2, 2);
    p0(0, 0) = 1;
    p1(1, 1) = 1;
    h = make_bimodule_hilbert(2, bimodA.right.source, bimodA.left.source, {p0, p1},
                              {Matrix::Identity(2, 2)});
  }
};

Dilation pad_dilation(const Dilation& d) {
  Dilation out;
  out.K_dim = d.K_dim + 1;
  out.gram_rank_H_hat = d.gram_rank_H_hat;
  auto bk = make_algebra({out.K_dim});
  out.pi = map_from_function(d.pi.source, bk, [&](const AlgebraElement& x) {
    Matrix m = Matrix::Zero(out.K_dim, out.K_dim);
    m.topLeftCorner(d.K_dim, d.K_dim) = apply(d.pi, x).data[0];
    return make_element(bk, {m});
  });
  out.V = Matrix::Zero(out.K_dim, d.V.cols());
  out.V.topRows(d.K_dim) = d.V;
  std::vector<Matrix> rep_left, rep_right_op;
  auto pad = [&](const Matrix& m) {
    Matrix p = Matrix::Identity(out.K_dim, out.K_dim);
    p.topLeftCorner(d.K_dim, d.K_dim) = m;
    return p;
  };
  for (const Matrix& m : d.K_actions.rep_left) rep_left.push_back(pad(m));
  for (const Matrix& m : d.K_actions.rep_right_op) rep_right_op.push_back(pad(m));
  out.K_actions = make_bimodule_hilbert(out.K_dim, d.K_actions.left_alg, d.K_actions.right_alg,
                                        std::move(rep_left), std::move(rep_right_op));
  return out;
}

}  // namespace

TEST_CASE("a representation dilates to itself") {
  auto m2 = make_algebra({2});
  auto bimod = trivial_bimod(m2);
  auto h = trivial_bimodule_hilbert(2);

  auto d = stinespring_module(identity_map(m2), bimod, h);
  CHECK(d.gram_rank_H_hat == 2);
  CHECK(d.K_dim == 2);

  auto report = verify_dilation(d, identity_map(m2), bimod, h);
  CHECK(report.pass);
  CHECK(report.hom_residual < 1e-9);
  CHECK(report.reconstruction < 1e-9);
  CHECK(report.isometry_defect < 1e-10);
  CHECK((d.V * d.V.adjoint() - Matrix::Identity(2, 2)).norm() < 1e-10);

  // pi is the identity carried over by the unitary V
  for (int u = 0; u < m2.dim(); ++u) {
    auto e = basis_element(m2, u);
    Matrix diff = apply(d.pi, e).data[0] - d.V * e.data[0] * d.V.adjoint();
    CHECK(diff.norm() < 1e-9);
  }
}

TEST_CASE("the normalized trace dilates with an eight-dimensional K") {
  auto m2 = make_algebra({2});
  auto bimod = trivial_bimod(m2);
  auto h = trivial_bimodule_hilbert(2);
  auto theta = trace_map(m2);

  auto d = stinespring_module(theta, bimod, h);
  CHECK(d.K_dim <= 8);
  CHECK(d.K_dim == d.gram_rank_H_hat);
  auto report = verify_dilation(d, theta, bimod, h);
  CHECK(report.pass);
  CHECK(report.reconstruction < 1e-9);
  CHECK(report.isometry_defect < 1e-10);  // theta is unital

  auto dm = minimize_dilation(d);
  CHECK(dm.K_dim == d.K_dim);  // already minimal
  CHECK(verify_dilation(dm, theta, bimod, h).pass);
}

TEST_CASE("corner compressions dilate") {
  auto m2 = make_algebra({2});
  auto bimod = trivial_bimod(m2);
  auto h = trivial_bimodule_hilbert(2);
  auto q = zero_element(m2);
  q.data[0](0, 0) = 1;
  auto ad_q = map_from_function(m2, m2, [&](const AlgebraElement& x) { return q * x * q; });

  auto d = stinespring_module(ad_q, bimod, h);
  auto report = verify_dilation(d, ad_q, bimod, h);
  CHECK(report.pass);
  CHECK(report.reconstruction < 1e-9);
  CHECK(report.hom_residual < 1e-9);
}

TEST_CASE("the zero map yields an empty dilation") {
  auto m2 = make_algebra({2});
  auto bimod = trivial_bimod(m2);
  auto h = trivial_bimodule_hilbert(2);
  auto d = stinespring_module(zero_map(m2, m2), bimod, h);
  CHECK(d.K_dim == 0);
  CHECK(d.gram_rank_H_hat == 0);
  auto report = verify_dilation(d, zero_map(m2, m2), bimod, h);
  CHECK(report.pass);
  CHECK(report.reconstruction == 0.0);
}

TEST_CASE("stinespring_module rejects bad inputs") {
  auto m2 = make_algebra({2});
  auto bimod = trivial_bimod(m2);
  auto h = trivial_bimodule_hilbert(2);
  CHECK_THROWS_AS(stinespring_module(transpose_map(m2), bimod, h), NotCP);

  TwoBlockSetup s;
  // a cp map that ignores the module structure entirely
  auto bad = map_from_function(s.A, make_algebra({2}), [&](const AlgebraElement& x) {
    AlgebraElement out = zero_element(make_algebra({2}));
    out.data[0] = x.data[0];
    return out;
  });
  CHECK_THROWS_AS(stinespring_module(bad, s.bimodA, s.h), NotBimoduleMap);
}

TEST_CASE("balancing relations lie in the stage-one null space") {
  TwoBlockSetup s;
  Rng rng(71);
  auto theta = random_bh_bimodule_map(s.bimodA, s.h, 3, rng, true);
  for (int trial = 0; trial < 12; ++trial) {
    auto beta = random_element(s.bimodA.right.source, rng);
    auto a = random_element(s.A, rng);
    CVector xi(2);
    xi << rng.cnormal(), rng.cnormal();
    CHECK(balancing_seminorm(theta, s.bimodA, s.h, beta, a, xi) < 1e-9);
  }
}

TEST_CASE("random bimodule maps dilate within tolerance") {
  auto m2 = make_algebra({2});
  auto bimod2 = trivial_bimod(m2);
  auto h2 = trivial_bimodule_hilbert(2);
  TwoBlockSetup s;
  Rng rng(73);

  for (int trial = 0; trial < 100; ++trial) {
    BlockLinearMap theta = (trial % 2 == 0)
                               ? random_bh_bimodule_map(bimod2, h2, 1 + trial % 3, rng, true)
                               : random_bh_bimodule_map(s.bimodA, s.h, 1 + trial % 3, rng, true);
    const BimoduleStructure& bm = (trial % 2 == 0) ? bimod2 : s.bimodA;
    const BimoduleHilbert& hh = (trial % 2 == 0) ? h2 : s.h;
    const MultiMatrixAlgebra& src = (trial % 2 == 0) ? m2 : s.A;

    auto d = stinespring_module(theta, bm, hh);
    CHECK(d.K_dim <= src.dim() * src.dim() * hh.dim);
    auto report = verify_dilation(d, theta, bm, hh);
    CHECK(report.pass);

    if (trial % 10 == 0) {
      auto dm = minimize_dilation(d);
      CHECK(verify_dilation(dm, theta, bm, hh).pass);
      CHECK(dm.K_dim <= d.K_dim);
    }
  }
}

TEST_CASE("minimize_dilation strips padding") {
  auto m2 = make_algebra({2});
  auto bimod = trivial_bimod(m2);
  auto h = trivial_bimodule_hilbert(2);
  auto theta = trace_map(m2);
  auto d = stinespring_module(theta, bimod, h);
  auto padded = pad_dilation(d);
  CHECK(verify_dilation(padded, theta, bimod, h).pass);

  auto dm = minimize_dilation(padded);
  CHECK(dm.K_dim == d.K_dim);
  CHECK(verify_dilation(dm, theta, bimod, h).pass);
}

TEST_CASE("commutant_lift reproduces scalars and verifies the twisted identity") {
  auto m2 = make_algebra({2});
  auto bimod = trivial_bimod(m2);
  auto h = trivial_bimodule_hilbert(2);
  auto theta = trace_map(m2);
  auto d = minimize_dilation(stinespring_module(theta, bimod, h));

  Matrix id2 = Matrix::Identity(2, 2);
  Matrix rho_id = commutant_lift(d, theta, id2);
  CHECK((rho_id - Matrix::Identity(d.K_dim, d.K_dim)).norm() < 1e-8);

  Complex lam(0.3, -0.7);
  Matrix rho_lam = commutant_lift(d, theta, lam * id2);
  CHECK((rho_lam - lam * Matrix::Identity(d.K_dim, d.K_dim)).norm() < 1e-8);

  // the image of the trace map is scalar, so its commutant is everything
  Matrix x = Matrix::Zero(2, 2);
  x(0, 0) = 1;
  Matrix rho = commutant_lift(d, theta, x);
  for (int u = 0; u < m2.dim(); ++u) {
    auto e = basis_element(m2, u);
    Matrix lhs = apply(theta, e).data[0] * x;
    Matrix rhs = d.V.adjoint() * apply(d.pi, e).data[0] * rho * d.V;
    CHECK((lhs - rhs).norm() < 1e-8);
  }
}

TEST_CASE("commutant_lift is multiplicative on the commutant") {
  auto m2 = make_algebra({2});
  auto bimod = trivial_bimod(m2);
  auto h = trivial_bimodule_hilbert(2);
  auto theta = trace_map(m2);
  auto d = minimize_dilation(stinespring_module(theta, bimod, h));

  Rng rng(79);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix x = rng.ginibre(2, 2), y = rng.ginibre(2, 2);
    Matrix rx = commutant_lift(d, theta, x);
    Matrix ry = commutant_lift(d, theta, y);
    Matrix rxy = commutant_lift(d, theta, Matrix(x * y));
    CHECK((rxy - rx * ry).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("commutant_lift refuses bad inputs") {
  auto m2 = make_algebra({2});
  auto bimod = trivial_bimod(m2);
  auto h = trivial_bimodule_hilbert(2);

  // identity representation: commutant is scalar
  auto d_id = stinespring_module(identity_map(m2), bimod, h);
  Matrix e12 = Matrix::Zero(2, 2);
  e12(0, 1) = 1;
  CHECK_THROWS_AS(commutant_lift(d_id, identity_map(m2), e12), NotInCommutant);

  auto theta = trace_map(m2);
  auto padded = pad_dilation(stinespring_module(theta, bimod, h));
  CHECK_THROWS_AS(commutant_lift(padded, theta, Matrix(Matrix::Identity(2, 2))), NotMinimal);
}

TEST_CASE("dilation-built 2x2 assemblies pass verify_2x2") {
  Rng rng(83);
  for (int trial = 0; trial < 6; ++trial) {
    auto a = (trial % 2 == 0) ? make_algebra({2}) : make_algebra({2, 1});
    auto bimod = trivial_bimod(a);
    auto h = trivial_bimodule_hilbert(2);
    auto theta = random_bh_bimodule_map(bimod, h, 1 + trial % 2, rng, true);

    auto d = stinespring_module(theta, bimod, h);
    // reassemble theta as the compression of its dilation: Theta below is
    // ad_{V (+) V} of an amplified representation, hence cp by construction
    auto rec = map_from_function(a, theta.target, [&](const AlgebraElement& x) {
      AlgebraElement out = zero_element(theta.target);
      out.data[0] = d.V.adjoint() * apply(d.pi, x).data[0] * d.V;
      return out;
    });
    auto Theta = assemble_2x2(rec, rec, rec, rec);
    auto rep = verify_2x2(Theta, bimod, trivial_bimod(theta.target), 1e-7, 4, 11 + trial);
    CHECK(rep.all());
    CHECK(rep.cb_theta2 <= rep.cb_Theta + 1e-6);
  }
}

TEST_CASE("verify_dilation flags a corrupted isometry") {
  auto m2 = make_algebra({2});
  auto bimod = trivial_bimod(m2);
  auto h = trivial_bimodule_hilbert(2);
  auto d = stinespring_module(identity_map(m2), bimod, h);
  d.V(0, 0) += 0.1;
  auto report = verify_dilation(d, identity_map(m2), bimod, h);
  CHECK(report.reconstruction > 1e-3);
  CHECK_FALSE(report.pass);
}
