#include "modcp/dilation.hpp"

#include <Eigen/SVD>

namespace modcp {

namespace {

double mat_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

struct GramQuotient {
  int rank = 0;
  Matrix T;      // rank x N, maps a coefficient vector to quotient coordinates
  Matrix T_pinv; // N x rank, right inverse of T
};

// Quotient of C^N carrying the PSD form G by its null space, in coordinates
// where the form becomes standard: T = L^{1/2} U*, kept above 1e-10 |G|.
GramQuotient gram_quotient(const Matrix& g) {
  auto [evals, evecs] = hermitian_eig(g);
  double top = evals.size() ? evals.maxCoeff() : 0.0;
  double thresh = 1e-10 * top;
  GramQuotient q;
  if (top <= 0) return q;
  std::vector<int> keep;
  for (int i = 0; i < evals.size(); ++i)
    if (evals(i) > thresh) keep.push_back(i);
  q.rank = static_cast<int>(keep.size());
  q.T = Matrix::Zero(q.rank, g.rows());
  q.T_pinv = Matrix::Zero(g.rows(), q.rank);
  for (int i = 0; i < q.rank; ++i) {
    double root = std::sqrt(evals(keep[i]));
    q.T.row(i) = root * evecs.col(keep[i]).adjoint();
    q.T_pinv.col(i) = evecs.col(keep[i]) / root;
  }
  return q;
}

// Stage-one Gram matrix on A (x) H: the (u,v),(u',v') entry is
// theta(e_u* e_u')[v, v'].
Matrix stage1_gram(const BlockLinearMap& theta, int hd) {
  const MultiMatrixAlgebra& a = theta.source;
  int n = a.dim() * hd;
  Matrix g(n, n);
  for (int u = 0; u < a.dim(); ++u) {
    AlgebraElement eu_adj = adjoint(basis_element(a, u));
    for (int up = 0; up < a.dim(); ++up) {
      Matrix val = apply(theta, eu_adj * basis_element(a, up)).data[0];
      g.block(u * hd, up * hd, hd, hd) = val;
    }
  }
  return g;
}

Dilation degenerate_dilation(const MultiMatrixAlgebra& a, const BimoduleStructure& bimodA,
                             const BimoduleHilbert& h) {
  Dilation d;
  d.K_dim = 0;
  d.gram_rank_H_hat = 0;
  auto one = make_algebra({1});
  d.pi = zero_map(a, one);
  d.V = Matrix::Zero(1, h.dim);
  d.K_actions.dim = 1;
  d.K_actions.left_alg = bimodA.right.source;
  d.K_actions.right_alg = bimodA.left.source;
  d.K_actions.rep_left.assign(d.K_actions.left_alg.dim(), Matrix::Zero(1, 1));
  d.K_actions.rep_right_op.assign(d.K_actions.right_alg.dim(), Matrix::Zero(1, 1));
  return d;
}

void require_dilatable(const BlockLinearMap& theta, const BimoduleStructure& bimodA,
                       const BimoduleHilbert& h) {
  const MultiMatrixAlgebra& a = theta.source;
  if (bimodA.left.target != a || bimodA.right.target != a)
    throw AlgebraMismatch("stinespring_module: actions do not act on the source");
  if (bimodA.left.source != h.right_alg || bimodA.right.source != h.left_alg)
    throw AlgebraMismatch("stinespring_module: Hilbert actions carry the wrong algebras");
  if (theta.target.num_blocks() != 1 || theta.target.blocks[0] != h.dim)
    throw ShapeMismatch("stinespring_module: target must be the operators on h");
  if (!is_cp(theta, 1e-8)) throw NotCP("stinespring_module");
  if (bh_bimodule_residual(theta, bimodA, h) > 1e-10)
    throw NotBimoduleMap("stinespring_module");
}

}  // namespace

Dilation stinespring_module(const BlockLinearMap& theta, const BimoduleStructure& bimodA,
                            const BimoduleHilbert& h) {
  require_dilatable(theta, bimodA, h);
  const MultiMatrixAlgebra& a = theta.source;
  int da = a.dim();
  int hd = h.dim;

  GramQuotient q1 = gram_quotient(stage1_gram(theta, hd));
  if (q1.rank == 0) return degenerate_dilation(a, bimodA, h);
  int r1 = q1.rank;

  CVector unit_coords = coords(unit(a));
  auto pi_hat = [&](const AlgebraElement& x) {
    return Matrix(q1.T * kron(left_mult_superop(x), Matrix::Identity(hd, hd)) * q1.T_pinv);
  };
  Matrix w = q1.T * kron(unit_coords, Matrix::Identity(hd, hd));

  // Right action of the acting algebra survives to H_hat through the H leg.
  auto rhat = [&](const AlgebraElement& alpha) {
    return Matrix(q1.T * kron(Matrix::Identity(da, da), rep_right_apply(h, alpha)) * q1.T_pinv);
  };

  // Stage two: GNS of pi_hat over the opposite leg; the form pairs b against
  // b' through pi_hat(b'* b), which makes left multiplication adjointable and
  // recovers pi_hat under the unit embedding.
  Matrix g2(da * r1, da * r1);
  std::vector<AlgebraElement> basis;
  basis.reserve(da);
  for (int u = 0; u < da; ++u) basis.push_back(basis_element(a, u));
  for (int u = 0; u < da; ++u) {
    AlgebraElement eu_adj = adjoint(basis[u]);
    for (int up = 0; up < da; ++up)
      g2.block(u * r1, up * r1, r1, r1) = pi_hat(eu_adj * basis[up]);
  }
  GramQuotient q2 = gram_quotient(g2);
  int kd = q2.rank;

  Dilation d;
  d.K_dim = kd;
  d.gram_rank_H_hat = r1;
  auto bk = make_algebra({kd});
  d.pi = map_from_function(a, bk, [&](const AlgebraElement& x) {
    Matrix m = q2.T * kron(left_mult_superop(x), Matrix::Identity(r1, r1)) * q2.T_pinv;
    return make_element(bk, {m});
  });
  Matrix v2 = q2.T * kron(unit_coords, Matrix::Identity(r1, r1));
  d.V = v2 * w;

  const MultiMatrixAlgebra& frakB = bimodA.right.source;
  const MultiMatrixAlgebra& frakA = bimodA.left.source;
  std::vector<Matrix> rep_left, rep_right_op;
  for (int u = 0; u < frakB.dim(); ++u)
    rep_left.push_back(apply(d.pi, apply_action(bimodA.right, basis_element(frakB, u))).data[0]);
  for (int u = 0; u < frakA.dim(); ++u) {
    Matrix r = rhat(basis_element(frakA, u));
    rep_right_op.push_back(q2.T * kron(Matrix::Identity(da, da), r) * q2.T_pinv);
  }
  d.K_actions = make_bimodule_hilbert(kd, frakB, frakA, std::move(rep_left),
                                      std::move(rep_right_op), 1e-7);
  return d;
}

Dilation minimize_dilation(const Dilation& d) {
  if (d.K_dim == 0) return d;
  const MultiMatrixAlgebra& a = d.pi.source;
  int da = a.dim();
  int hd = static_cast<int>(d.V.cols());
  Matrix span(d.K_dim, da * hd);
  for (int u = 0; u < da; ++u)
    span.block(0, u * hd, d.K_dim, hd) = apply(d.pi, basis_element(a, u)).data[0] * d.V;

  Eigen::BDCSVD<Matrix> svd(span, Eigen::ComputeThinU);
  double top = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > 1e-10 * top) ++rank;
  if (rank == 0) {
    Dilation out;
    out.gram_rank_H_hat = d.gram_rank_H_hat;
    auto one = make_algebra({1});
    out.pi = zero_map(a, one);
    out.V = Matrix::Zero(1, hd);
    out.K_actions.dim = 1;
    out.K_actions.left_alg = d.K_actions.left_alg;
    out.K_actions.right_alg = d.K_actions.right_alg;
    out.K_actions.rep_left.assign(out.K_actions.left_alg.dim(), Matrix::Zero(1, 1));
    out.K_actions.rep_right_op.assign(out.K_actions.right_alg.dim(), Matrix::Zero(1, 1));
    return out;
  }
  if (rank == d.K_dim) return d;
  Matrix qb = svd.matrixU().leftCols(rank);

  Dilation out;
  out.K_dim = rank;
  out.gram_rank_H_hat = d.gram_rank_H_hat;
  auto bk = make_algebra({rank});
  out.pi = map_from_function(a, bk, [&](const AlgebraElement& x) {
    return make_element(bk, {Matrix(qb.adjoint() * apply(d.pi, x).data[0] * qb)});
  });
  out.V = qb.adjoint() * d.V;
  std::vector<Matrix> rep_left, rep_right_op;
  for (const Matrix& m : d.K_actions.rep_left) rep_left.push_back(qb.adjoint() * m * qb);
  for (const Matrix& m : d.K_actions.rep_right_op) rep_right_op.push_back(qb.adjoint() * m * qb);
  out.K_actions = make_bimodule_hilbert(rank, d.K_actions.left_alg, d.K_actions.right_alg,
                                        std::move(rep_left), std::move(rep_right_op), 1e-7);
  return out;
}

Matrix commutant_lift(const Dilation& d, const BlockLinearMap& theta, const Matrix& x) {
  const MultiMatrixAlgebra& a = theta.source;
  int da = a.dim();
  int hd = static_cast<int>(d.V.cols());
  if (x.rows() != hd || x.cols() != hd) throw ShapeMismatch("commutant_lift");

  double comm = 0;
  for (int u = 0; u < da; ++u) {
    Matrix tu = apply(theta, basis_element(a, u)).data[0];
    comm = std::max(comm, (x * tu - tu * x).cwiseAbs().maxCoeff());
  }
  double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
  if (comm > 1e-10 * scale) throw NotInCommutant("commutant_lift");

  if (d.K_dim == 0) return Matrix::Zero(1, 1);

  Matrix span(d.K_dim, da * hd), moved(d.K_dim, da * hd);
  for (int u = 0; u < da; ++u) {
    Matrix pv = apply(d.pi, basis_element(a, u)).data[0] * d.V;
    span.block(0, u * hd, d.K_dim, hd) = pv;
    moved.block(0, u * hd, d.K_dim, hd) = pv * x;
  }
  Eigen::BDCSVD<Matrix> svd(span, Eigen::ComputeThinU | Eigen::ComputeThinV);
  double top = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > 1e-10 * top) ++rank;
  if (rank < d.K_dim) throw NotMinimal("commutant_lift");

  // rho = moved * pinv(span), solved through the SVD
  Matrix rho = Matrix::Zero(d.K_dim, d.K_dim);
  for (int i = 0; i < rank; ++i)
    rho += (moved * svd.matrixV().col(i)) * svd.matrixU().col(i).adjoint() /
           svd.singularValues()(i);

  double ls = (rho * span - moved).cwiseAbs().maxCoeff();
  if (ls > 1e-8 * std::max(1.0, moved.cwiseAbs().maxCoeff()))
    throw IllDefined("commutant_lift: spanning relations are inconsistent");

  for (int u = 0; u < da; ++u) {
    Matrix pu = apply(d.pi, basis_element(a, u)).data[0];
    Matrix tu = apply(theta, basis_element(a, u)).data[0];
    if ((rho * pu - pu * rho).cwiseAbs().maxCoeff() > 1e-8 * scale ||
        (tu * x - d.V.adjoint() * pu * rho * d.V).cwiseAbs().maxCoeff() > 1e-8 * scale)
      throw IllDefined("commutant_lift: lifted operator fails the defining identities");
  }
  return rho;
}

DilationReport verify_dilation(const Dilation& d, const BlockLinearMap& theta,
                               const BimoduleStructure& bimodA, const BimoduleHilbert& h,
                               double tol) {
  DilationReport r;
  const MultiMatrixAlgebra& a = theta.source;
  int da = a.dim();

  std::vector<Matrix> pim;
  pim.reserve(da);
  for (int u = 0; u < da; ++u) pim.push_back(apply(d.pi, basis_element(a, u)).data[0]);
  for (int u = 0; u < da; ++u) {
    Matrix adj = apply(d.pi, adjoint(basis_element(a, u))).data[0];
    r.hom_residual = std::max(r.hom_residual, mat_norm(adj - Matrix(pim[u].adjoint())));
    for (int v = 0; v < da; ++v) {
      Matrix prod = apply(d.pi, basis_element(a, u) * basis_element(a, v)).data[0];
      r.hom_residual = std::max(r.hom_residual, mat_norm(prod - Matrix(pim[u] * pim[v])));
    }
    Matrix rec = d.V.adjoint() * pim[u] * d.V - apply(theta, basis_element(a, u)).data[0];
    r.reconstruction = std::max(r.reconstruction, mat_norm(rec));
  }

  r.pi_bimodule = bh_bimodule_residual(d.pi, bimodA, d.K_actions);

  for (int u = 0; u < h.left_alg.dim(); ++u) {
    auto b = basis_element(h.left_alg, u);
    Matrix diff = d.V * rep_left_apply(h, b) - rep_left_apply(d.K_actions, b) * d.V;
    r.v_bimodule = std::max(r.v_bimodule, mat_norm(diff));
  }
  for (int u = 0; u < h.right_alg.dim(); ++u) {
    auto al = basis_element(h.right_alg, u);
    Matrix diff = d.V * rep_right_apply(h, al) - rep_right_apply(d.K_actions, al) * d.V;
    r.v_bimodule = std::max(r.v_bimodule, mat_norm(diff));
  }

  r.isometry_defect =
      mat_norm(Matrix(d.V.adjoint() * d.V) - Matrix::Identity(h.dim, h.dim));
  r.pass = r.hom_residual <= tol && r.reconstruction <= tol && r.pi_bimodule <= tol &&
           r.v_bimodule <= tol;
  return r;
}

double balancing_seminorm(const BlockLinearMap& theta, const BimoduleStructure& bimodA,
                          const BimoduleHilbert& h, const AlgebraElement& beta,
                          const AlgebraElement& a, const CVector& xi) {
  Matrix g = stage1_gram(theta, h.dim);
  CVector left = kron(Matrix(coords(a * apply_action(bimodA.right, beta))), Matrix(xi));
  CVector right = kron(Matrix(coords(a)), Matrix(rep_left_apply(h, beta) * xi));
  CVector z = left - right;
  double val = std::real(Complex(z.adjoint() * g * z));
  return std::sqrt(std::max(0.0, val));
}

}  // namespace modcp
