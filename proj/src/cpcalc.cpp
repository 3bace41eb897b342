#include "modcp/cpcalc.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "modcp/feasibility.hpp"

namespace modcp {

namespace {

std::shared_ptr<const Matrix> build_choi(const MultiMatrixAlgebra& src,
                                         const MultiMatrixAlgebra& tgt, const Matrix& superop) {
  const int ns = src.ambient_dim();
  const int nt = tgt.ambient_dim();
  auto choi = std::make_shared<Matrix>(Matrix::Zero(ns * nt, ns * nt));
  for (int r = 0; r < src.num_blocks(); ++r) {
    const int d = src.blocks[r];
    const int aoff = src.ambient_offset(r);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        int u = src.coord_offset(r) + i * d + j;
        // ambient matrix of the image of e_u, placed at outer entry
        // (aoff + i, aoff + j)
        for (int s = 0; s < tgt.num_blocks(); ++s) {
          const int e = tgt.blocks[s];
          const int boff = tgt.ambient_offset(s);
          for (int k = 0; k < e; ++k)
            for (int l = 0; l < e; ++l) {
              Complex val = superop(tgt.coord_offset(s) + k * e + l, u);
              if (val != Complex(0))
                (*choi)((aoff + i) * nt + boff + k, (aoff + j) * nt + boff + l) = val;
            }
        }
      }
  }
  return choi;
}

}  // namespace

BlockLinearMap make_map(const MultiMatrixAlgebra& source, const MultiMatrixAlgebra& target,
                        Matrix superop) {
  if (superop.rows() != target.dim() || superop.cols() != source.dim())
    throw ShapeMismatch("make_map: superop must be dim(target) x dim(source)");
  BlockLinearMap f{source, target, std::move(superop), nullptr};
  f.choi = build_choi(source, target, f.superop);
  return f;
}

BlockLinearMap map_from_function(
    const MultiMatrixAlgebra& source, const MultiMatrixAlgebra& target,
    const std::function<AlgebraElement(const AlgebraElement&)>& f) {
  Matrix superop(target.dim(), source.dim());
  for (int u = 0; u < source.dim(); ++u) {
    AlgebraElement img = f(basis_element(source, u));
    if (img.algebra != target) throw AlgebraMismatch("map_from_function: image outside target");
    superop.col(u) = coords(img);
  }
  return make_map(source, target, std::move(superop));
}

BlockLinearMap identity_map(const MultiMatrixAlgebra& alg) {
  return make_map(alg, alg, Matrix::Identity(alg.dim(), alg.dim()));
}

BlockLinearMap zero_map(const MultiMatrixAlgebra& source, const MultiMatrixAlgebra& target) {
  return make_map(source, target, Matrix::Zero(target.dim(), source.dim()));
}

BlockLinearMap transpose_map(const MultiMatrixAlgebra& alg) {
  return map_from_function(alg, alg,
                           [](const AlgebraElement& a) { return transpose_blocks(a); });
}

AlgebraElement apply(const BlockLinearMap& f, const AlgebraElement& a) {
  if (a.algebra != f.source) throw AlgebraMismatch("apply: element outside source");
  return from_coords(f.target, f.superop * coords(a));
}

const Matrix& choi(const BlockLinearMap& f) {
  return *f.choi;
}

BlockLinearMap from_choi(const Matrix& c, const MultiMatrixAlgebra& source,
                         const MultiMatrixAlgebra& target) {
  const int ns = source.ambient_dim();
  const int nt = target.ambient_dim();
  if (c.rows() != ns * nt || c.cols() != ns * nt)
    throw SizeMismatch("from_choi: matrix must be (N_s N_t) square");
  Matrix superop(target.dim(), source.dim());
  for (int r = 0; r < source.num_blocks(); ++r) {
    const int d = source.blocks[r];
    const int aoff = source.ambient_offset(r);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        int u = source.coord_offset(r) + i * d + j;
        for (int s = 0; s < target.num_blocks(); ++s) {
          const int e = target.blocks[s];
          const int boff = target.ambient_offset(s);
          for (int k = 0; k < e; ++k)
            for (int l = 0; l < e; ++l)
              superop(target.coord_offset(s) + k * e + l, u) =
                  c((aoff + i) * nt + boff + k, (aoff + j) * nt + boff + l);
        }
      }
  }
  return make_map(source, target, std::move(superop));
}

std::vector<int> partial_choi_dims(const MultiMatrixAlgebra& source,
                                   const MultiMatrixAlgebra& target) {
  std::vector<int> dims;
  dims.reserve(source.num_blocks() * target.num_blocks());
  for (int r = 0; r < source.num_blocks(); ++r)
    for (int s = 0; s < target.num_blocks(); ++s)
      dims.push_back(source.blocks[r] * target.blocks[s]);
  return dims;
}

std::vector<Matrix> partial_choi(const BlockLinearMap& f) {
  std::vector<Matrix> out;
  out.reserve(f.source.num_blocks() * f.target.num_blocks());
  for (int r = 0; r < f.source.num_blocks(); ++r) {
    const int d = f.source.blocks[r];
    for (int s = 0; s < f.target.num_blocks(); ++s) {
      const int e = f.target.blocks[s];
      Matrix block(d * e, d * e);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          int u = f.source.coord_offset(r) + i * d + j;
          for (int k = 0; k < e; ++k)
            for (int l = 0; l < e; ++l)
              block(i * e + k, j * e + l) = f.superop(f.target.coord_offset(s) + k * e + l, u);
        }
      out.push_back(std::move(block));
    }
  }
  return out;
}

BlockLinearMap map_from_partial_choi(const MultiMatrixAlgebra& source,
                                     const MultiMatrixAlgebra& target,
                                     const std::vector<Matrix>& blocks) {
  auto dims = partial_choi_dims(source, target);
  if (blocks.size() != dims.size()) throw ShapeMismatch("map_from_partial_choi: block count");
  Matrix superop = Matrix::Zero(target.dim(), source.dim());
  int idx = 0;
  for (int r = 0; r < source.num_blocks(); ++r) {
    const int d = source.blocks[r];
    for (int s = 0; s < target.num_blocks(); ++s, ++idx) {
      const int e = target.blocks[s];
      if (blocks[idx].rows() != d * e || blocks[idx].cols() != d * e)
        throw ShapeMismatch("map_from_partial_choi: block size");
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          for (int k = 0; k < e; ++k)
            for (int l = 0; l < e; ++l)
              superop(target.coord_offset(s) + k * e + l, source.coord_offset(r) + i * d + j) =
                  blocks[idx](i * e + k, j * e + l);
    }
  }
  return make_map(source, target, std::move(superop));
}

BlockLinearMap compose(const BlockLinearMap& f, const BlockLinearMap& g) {
  if (f.source != g.target) throw SourceMismatch("compose: inner algebras differ");
  return make_map(g.source, f.target, f.superop * g.superop);
}

BlockLinearMap hs_adjoint(const BlockLinearMap& f) {
  return make_map(f.target, f.source, f.superop.adjoint());
}

BlockLinearMap amplify_map(const BlockLinearMap& f, int n) {
  MultiMatrixAlgebra amps = amplify_algebra(f.source, n);
  MultiMatrixAlgebra ampt = amplify_algebra(f.target, n);
  Matrix superop = Matrix::Zero(ampt.dim(), amps.dim());
  for (int r = 0; r < f.source.num_blocks(); ++r) {
    const int d = f.source.blocks[r];
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q)
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j) {
            int u = f.source.coord_offset(r) + i * d + j;
            int uamp = amps.coord_offset(r) + (p * d + i) * (n * d) + q * d + j;
            for (int s = 0; s < f.target.num_blocks(); ++s) {
              const int e = f.target.blocks[s];
              for (int k = 0; k < e; ++k)
                for (int l = 0; l < e; ++l) {
                  Complex val = f.superop(f.target.coord_offset(s) + k * e + l, u);
                  if (val != Complex(0))
                    superop(ampt.coord_offset(s) + (p * e + k) * (n * e) + q * e + l, uamp) = val;
                }
            }
          }
  }
  return make_map(amps, ampt, std::move(superop));
}

BlockLinearMap operator+(const BlockLinearMap& f, const BlockLinearMap& g) {
  if (f.source != g.source || f.target != g.target)
    throw AlgebraMismatch("map +: different spaces");
  return make_map(f.source, f.target, f.superop + g.superop);
}

BlockLinearMap operator-(const BlockLinearMap& f, const BlockLinearMap& g) {
  if (f.source != g.source || f.target != g.target)
    throw AlgebraMismatch("map -: different spaces");
  return make_map(f.source, f.target, f.superop - g.superop);
}

BlockLinearMap operator*(Complex s, const BlockLinearMap& f) {
  return make_map(f.source, f.target, s * f.superop);
}

double map_distance(const BlockLinearMap& f, const BlockLinearMap& g) {
  if (f.source != g.source || f.target != g.target)
    throw AlgebraMismatch("map_distance: different spaces");
  double best = 0;
  for (int u = 0; u < f.source.dim(); ++u)
    best = std::max(best, (f.superop.col(u) - g.superop.col(u)).norm());
  return best;
}

double hermitian_defect(const BlockLinearMap& f) {
  double best = 0;
  for (int u = 0; u < f.source.dim(); ++u) {
    BasisIndex ix = basis_index(f.source, u);
    int ustar = flat_index(f.source, ix.block, ix.col, ix.row);
    // f(e_u^*) versus f(e_u)^* in coordinates
    AlgebraElement img = from_coords(f.target, f.superop.col(ustar));
    AlgebraElement img2 = adjoint(from_coords(f.target, f.superop.col(u)));
    best = std::max(best, hs_norm(img - img2));
  }
  return best;
}

bool is_hermitian_map(const BlockLinearMap& f, double tol) {
  return hermitian_defect(f) <= tol;
}

double choi_min_eig(const BlockLinearMap& f) {
  double best = 0;
  bool first = true;
  for (const auto& block : partial_choi(f)) {
    double lam = min_eig_herm(block);
    if (first || lam < best) best = lam;
    first = false;
  }
  return best;
}

bool is_cp(const BlockLinearMap& f, double tol) {
  if (hermitian_defect(f) > tol) return false;
  return choi_min_eig(f) >= -tol;
}

double unit_defect(const BlockLinearMap& f) {
  return hs_norm(apply(f, unit(f.source)) - unit(f.target));
}

bool is_unital_map(const BlockLinearMap& f, double tol) {
  return unit_defect(f) <= tol;
}

Matrix left_mult_superop(const AlgebraElement& a) {
  const auto& alg = a.algebra;
  Matrix out = Matrix::Zero(alg.dim(), alg.dim());
  for (int k = 0; k < alg.num_blocks(); ++k) {
    int d = alg.blocks[k];
    int off = alg.coord_offset(k);
    // row-major coords: x -> a x is kron(a_k, I)
    out.block(off, off, d * d, d * d) = kron(a.data[k], Matrix::Identity(d, d));
  }
  return out;
}

Matrix right_mult_superop(const AlgebraElement& b) {
  const auto& alg = b.algebra;
  Matrix out = Matrix::Zero(alg.dim(), alg.dim());
  for (int k = 0; k < alg.num_blocks(); ++k) {
    int d = alg.blocks[k];
    int off = alg.coord_offset(k);
    // row-major coords: x -> x b is kron(I, b_k^T)
    out.block(off, off, d * d, d * d) = kron(Matrix::Identity(d, d), b.data[k].transpose());
  }
  return out;
}

double module_residual(const BlockLinearMap& f, const CentralAction& src,
                       const CentralAction& tgt) {
  if (src.target != f.source || tgt.target != f.target)
    throw AlgebraMismatch("module_residual: actions do not match the map");
  if (src.source != tgt.source)
    throw SourceMismatch("module_residual: acting algebras differ");
  double best = 0;
  for (int w = 0; w < src.source.dim(); ++w) {
    auto fw = basis_element(src.source, w);
    Matrix lhs = f.superop * left_mult_superop(apply_action(src, fw));
    Matrix rhs = left_mult_superop(apply_action(tgt, fw)) * f.superop;
    Matrix diff = lhs - rhs;
    for (int u = 0; u < f.source.dim(); ++u)
      best = std::max(best, diff.col(u).norm());
  }
  return best;
}

bool is_module_map(const BlockLinearMap& f, const CentralAction& src,
                   const CentralAction& tgt, double tol) {
  return module_residual(f, src, tgt) <= tol;
}

double bimodule_residual(const BlockLinearMap& f, const BimoduleStructure& src,
                         const BimoduleStructure& tgt) {
  double left = module_residual(f, src.left, tgt.left);
  // right action: f(x rho(beta)) = f(x) rho'(beta)
  double right = 0;
  for (int w = 0; w < src.right.source.dim(); ++w) {
    auto gw = basis_element(src.right.source, w);
    Matrix lhs = f.superop * right_mult_superop(apply_action(src.right, gw));
    Matrix rhs = right_mult_superop(apply_action(tgt.right, gw)) * f.superop;
    Matrix diff = lhs - rhs;
    for (int u = 0; u < f.source.dim(); ++u)
      right = std::max(right, diff.col(u).norm());
  }
  return std::max(left, right);
}

bool is_bimodule_map(const BlockLinearMap& f, const BimoduleStructure& src,
                     const BimoduleStructure& tgt, double tol) {
  return bimodule_residual(f, src, tgt) <= tol;
}

double bh_bimodule_residual(const BlockLinearMap& f, const BimoduleStructure& src,
                            const BimoduleHilbert& h) {
  if (src.left.target != f.source)
    throw AlgebraMismatch("bh_bimodule_residual: actions do not match the map");
  if (f.target.num_blocks() != 1 || f.target.blocks[0] != h.dim)
    throw AlgebraMismatch("bh_bimodule_residual: target is not B(H)");
  if (src.left.source != h.right_alg || src.right.source != h.left_alg)
    throw AlgebraMismatch("bh_bimodule_residual: acting algebras do not match H");
  double best = 0;
  auto value = [&](const AlgebraElement& a) { return apply(f, a).data[0]; };
  for (int u = 0; u < f.source.dim(); ++u) {
    auto eu = basis_element(f.source, u);
    Matrix fu = value(eu);
    for (int w = 0; w < h.right_alg.dim(); ++w) {
      auto alpha = basis_element(h.right_alg, w);
      Matrix lhs = value(act(src.left, alpha, eu));
      Matrix rhs = fu * rep_right_apply(h, alpha);
      best = std::max(best, (lhs - rhs).norm());
    }
    for (int w = 0; w < h.left_alg.dim(); ++w) {
      auto beta = basis_element(h.left_alg, w);
      Matrix lhs = value(eu * apply_action(src.right, beta));
      Matrix rhs = fu * rep_left_apply(h, beta);
      best = std::max(best, (lhs - rhs).norm());
    }
  }
  return best;
}

namespace {

MapClass classify_impl(const BlockLinearMap& f, const CentralAction* src,
                       const CentralAction* tgt, double tol) {
  MapClass out;
  double hdef = hermitian_defect(f);
  out.hermitian = hdef <= tol;
  out.witnesses["hermitian_defect"] = hdef;

  double cme = choi_min_eig(f);
  out.cp = out.hermitian && cme >= -tol;
  out.witnesses["choi_min_eig"] = cme;

  double udef = unit_defect(f);
  out.unital = udef <= tol;
  out.witnesses["unit_defect"] = udef;

  if (out.cp) {
    out.positive = true;
  } else if (out.hermitian) {
    // sampled positivity with a fixed internal stream
    Rng rng(0x9e3779b97f4a7c15ULL);
    double worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
      auto p = random_positive(f.source, rng);
      p = (1.0 / std::max(1.0, op_norm(p))) * p;
      worst = std::min(worst, min_eig(apply(f, p)));
    }
    out.positive = worst >= -tol * 10;
    out.witnesses["positivity_min_eig"] = worst;
  }

  double unorm = op_norm(apply(f, unit(f.source)));
  out.witnesses["unit_image_norm"] = unorm;
  if (out.cp) {
    out.contractive = min_eig(unit(f.target) - apply(f, unit(f.source))) >= -tol;
  } else {
    double slack = std::max(tol, 1e-3);
    double lb = cb_lower_bound(f, 40, 1, 2);
    if (lb > 1 + slack) {
      out.contractive = false;
      out.witnesses["cb_lower_bound"] = lb;
    } else {
      // a coarse bisection is enough to place the norm against 1
      double cb = cb_norm(f, 1e-4);
      out.witnesses["cb_norm"] = cb;
      out.contractive = cb <= 1 + slack;
    }
  }

  if (src && tgt) {
    double mres = module_residual(f, *src, *tgt);
    out.module = mres <= tol;
    out.witnesses["module_residual"] = mres;
  }
  return out;
}

}  // namespace

MapClass classify(const BlockLinearMap& f, double tol) {
  return classify_impl(f, nullptr, nullptr, tol);
}

MapClass classify(const BlockLinearMap& f, const CentralAction& src, const CentralAction& tgt,
                  double tol) {
  return classify_impl(f, &src, &tgt, tol);
}

namespace {

// Feasibility data for one diamond-norm probe: variables Z (the 2m x 2m
// arrow matrix), S0, S1 (partial trace slacks). The affine matrix does not
// depend on t, only the right-hand side does.
struct DiamondProgram {
  FeasibilityProblem base;        // rhs at t = 0
  RVector rhs_t;                  // rhs gradient in t
  std::vector<Matrix> start_z;    // polar start, t-independent part
  Matrix tr_y0, tr_y1;            // partial traces of the polar blocks
  int nt = 0;
  double t0 = 0;
};

DiamondProgram build_diamond(const BlockLinearMap& f) {
  const int ns = f.source.ambient_dim();
  const int nt = f.target.ambient_dim();
  const int m = ns * nt;
  const Matrix j = choi(hs_adjoint(f));  // on C^{nt} (x) C^{ns}

  DiamondProgram prog;
  prog.nt = nt;

  AffineBuilder builder({2 * m, nt, nt});
  // corner blocks of Z are pinned to -J
  for (int p = 0; p < m; ++p)
    for (int q = 0; q < m; ++q) builder.pin(0, p, m + q, -j(p, q));
  // tr_out Y_i + S_i = t I ; rows store the t = 0 system
  for (int side = 0; side < 2; ++side)
    for (int k = 0; k < nt; ++k)
      for (int kp = k; kp < nt; ++kp) {
        for (int i = 0; i < ns; ++i)
          builder.add_term(0, side * m + k * ns + i, side * m + kp * ns + i, 1.0);
        builder.add_term(1 + side, k, kp, 1.0);
        builder.finish(0.0);
      }
  prog.base = builder.take({0, 1, 2}, 1e-8);
  // bisection reads a stall as infeasible, so a tight budget only biases the
  // reported norm upward, never below the true value
  prog.base.max_iters = 15000;

  // rhs gradient: the diagonal partial-trace rows move with t
  prog.rhs_t = RVector::Zero(prog.base.rhs.size());
  {
    AffineBuilder probe({2 * m, nt, nt});
    for (int p = 0; p < m; ++p)
      for (int q = 0; q < m; ++q) probe.pin(0, p, m + q, -j(p, q));
    for (int side = 0; side < 2; ++side)
      for (int k = 0; k < nt; ++k)
        for (int kp = k; kp < nt; ++kp) {
          for (int i = 0; i < ns; ++i)
            probe.add_term(0, side * m + k * ns + i, side * m + kp * ns + i, 1.0);
          probe.add_term(1 + side, k, kp, 1.0);
          probe.finish(kp == k ? 1.0 : 0.0);
        }
    FeasibilityProblem at_one = probe.take({0, 1, 2}, 1e-8);
    prog.rhs_t = at_one.rhs - prog.base.rhs;
  }

  Eigen::JacobiSVD<Matrix> svd(j, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Matrix sig = svd.singularValues().asDiagonal().toDenseMatrix().cast<Complex>();
  Matrix y0 = svd.matrixU() * sig * svd.matrixU().adjoint();
  Matrix y1 = svd.matrixV() * sig * svd.matrixV().adjoint();
  Matrix z = Matrix::Zero(2 * m, 2 * m);
  z.topLeftCorner(m, m) = y0;
  z.bottomRightCorner(m, m) = y1;
  z.topRightCorner(m, m) = -j;
  z.bottomLeftCorner(m, m) = -j.adjoint();
  prog.start_z.push_back(std::move(z));

  auto tr_out = [&](const Matrix& y) {
    Matrix t = Matrix::Zero(nt, nt);
    for (int k = 0; k < nt; ++k)
      for (int kp = 0; kp < nt; ++kp)
        for (int i = 0; i < ns; ++i) t(k, kp) += y(k * ns + i, kp * ns + i);
    return t;
  };
  prog.tr_y0 = tr_out(y0);
  prog.tr_y1 = tr_out(y1);
  double lam0 = -min_eig_herm(-prog.tr_y0);  // largest eigenvalue
  double lam1 = -min_eig_herm(-prog.tr_y1);
  prog.t0 = std::max({lam0, lam1, 0.0});
  return prog;
}

}  // namespace

double cb_norm(const BlockLinearMap& f, double tol) {
  // completely positive maps attain the norm at the unit
  if (is_cp(f, 1e-9)) return op_norm(apply(f, unit(f.source)));

  DiamondProgram prog = build_diamond(f);
  if (prog.t0 <= tol) return 0.0;

  auto problem_at = [&](double t) {
    FeasibilityProblem p = prog.base;
    p.rhs = prog.base.rhs + t * prog.rhs_t;
    return p;
  };
  auto start_at = [&](double t) {
    std::vector<Matrix> s = prog.start_z;
    Matrix id = Matrix::Identity(prog.nt, prog.nt);
    s.push_back(t * id - prog.tr_y0);
    s.push_back(t * id - prog.tr_y1);
    return s;
  };

  double lo = 0, hi = prog.t0;
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    FeasibilityProblem p = problem_at(mid);
    std::vector<Matrix> s = start_at(mid);
    SolveReport rep = dykstra_solve(p, &s);
    if (rep.status == SolveStatus::Feasible)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

double cb_lower_bound(const BlockLinearMap& f, int iters, int restarts, std::uint64_t seed) {
  const int n = std::max(1, f.target.ambient_dim());
  BlockLinearMap fn = amplify_map(f, n);
  BlockLinearMap fn_adj = hs_adjoint(fn);
  Rng rng(seed);

  auto polar_unitary = [](AlgebraElement g) {
    for (auto& b : g.data) {
      Eigen::JacobiSVD<Matrix> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
      b = svd.matrixU() * svd.matrixV().adjoint();
    }
    return g;
  };

  double best = 0;
  for (int r = 0; r < restarts; ++r) {
    AlgebraElement x = zero_element(fn.source);
    for (size_t k = 0; k < x.data.size(); ++k) x.data[k] = rng.unitary(fn.source.blocks[k]);
    for (int it = 0; it < iters; ++it) {
      AlgebraElement y = apply(fn, x);
      // ascend along the top singular pair of the achieving block
      int kb = 0;
      double smax = -1;
      CVector u, v;
      for (size_t k = 0; k < y.data.size(); ++k) {
        Eigen::JacobiSVD<Matrix> svd(y.data[k], Eigen::ComputeFullU | Eigen::ComputeFullV);
        if (svd.singularValues()(0) > smax) {
          smax = svd.singularValues()(0);
          kb = static_cast<int>(k);
          u = svd.matrixU().col(0);
          v = svd.matrixV().col(0);
        }
      }
      best = std::max(best, smax);
      AlgebraElement grad = zero_element(fn.target);
      grad.data[kb] = u * v.adjoint();
      x = polar_unitary(apply(fn_adj, grad));
    }
    best = std::max(best, op_norm(apply(fn, x)));
  }
  return best;
}

std::vector<AlgebraElement> multiplicative_domain(const BlockLinearMap& f, double tol) {
  if (!is_unital_map(f, tol) || !is_cp(f, tol))
    throw NotUCP("multiplicative_domain: map must be unital completely positive");

  const int n = f.source.dim();
  auto tr = [&](const AlgebraElement& x) {
    Complex s = 0;
    for (const auto& b : x.data) s += b.trace();
    return s;
  };
  auto img = [&](int u) { return from_coords(f.target, f.superop.col(u)); };
  auto img_of = [&](const AlgebraElement& x) { return apply(f, x); };

  Matrix m1(n, n), m2(n, n);
  for (int u = 0; u < n; ++u) {
    auto eu = basis_element(f.source, u);
    for (int v = 0; v < n; ++v) {
      auto ev = basis_element(f.source, v);
      // Schwarz defect tr(f(x* y) - f(x)* f(y)) at (x, y) = (e_u, e_v)
      m1(u, v) = tr(img_of(adjoint(eu) * ev)) - hs_inner(img(u), img(v));
      // and at (x, y) = (e_v^*, e_u^*), giving the right-sided form
      m2(u, v) = tr(img_of(ev * adjoint(eu))) - hs_inner(img_of(adjoint(ev)), img_of(adjoint(eu)));
    }
  }
  auto eig = hermitian_eig(m1 + m2);
  double cut = 1e-10 * std::max(1.0, eig.values.size() ? eig.values(0) : 0.0);
  std::vector<AlgebraElement> out;
  for (int c = 0; c < eig.values.size(); ++c)
    if (std::abs(eig.values(c)) <= cut)
      out.push_back(from_coords(f.source, eig.vectors.col(c)));
  return out;
}

BlockLinearMap conditional_expectation(const MultiMatrixAlgebra& alg,
                                       const std::vector<AlgebraElement>& sub_basis,
                                       double tol) {
  if (sub_basis.empty()) throw EmptyBlocks("conditional_expectation: empty basis");
  for (const auto& b : sub_basis)
    if (b.algebra != alg) throw AlgebraMismatch("conditional_expectation: wrong algebra");

  Matrix c(alg.dim(), sub_basis.size());
  for (size_t j = 0; j < sub_basis.size(); ++j) c.col(j) = coords(sub_basis[j]);
  Eigen::JacobiSVD<Matrix> svd(c, Eigen::ComputeThinU);
  double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > 1e-10 * std::max(smax, 1.0)) ++rank;
  if (rank == 0) throw EmptyBlocks("conditional_expectation: zero span");
  Matrix q = svd.matrixU().leftCols(rank);
  Matrix proj = q * q.adjoint();

  auto in_span = [&](const AlgebraElement& x) {
    CVector v = coords(x);
    return (v - proj * v).norm() <= tol * std::max(1.0, v.norm());
  };
  if (!in_span(unit(alg)))
    throw NotSubalgebra("conditional_expectation: unit not in span");
  for (const auto& b : sub_basis) {
    if (!in_span(adjoint(b)))
      throw NotSubalgebra("conditional_expectation: span not closed under adjoints");
    for (const auto& b2 : sub_basis)
      if (!in_span(b * b2))
        throw NotSubalgebra("conditional_expectation: span not closed under products");
  }
  return make_map(alg, alg, std::move(proj));
}

namespace {

std::vector<Matrix> intertwiner_basis(const std::vector<std::pair<Matrix, Matrix>>& conds,
                                      int na, int nb) {
  const int nv = na * nb;
  Matrix m(static_cast<int>(conds.size()) * nv, nv);
  int row = 0;
  for (const auto& [l, r] : conds) {
    // vec (column-major) of L v - v R
    m.block(row, 0, nv, nv) = kron(Matrix::Identity(nb, nb), l) -
                              kron(r.transpose(), Matrix::Identity(na, na));
    row += nv;
  }
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
  double cut = 1e-10 * std::max(smax, 1.0);
  std::vector<Matrix> basis;
  for (int c = 0; c < nv; ++c) {
    bool in_null = c >= svd.singularValues().size() || svd.singularValues()(c) <= cut;
    if (!in_null) continue;
    Matrix v(na, nb);
    for (int j = 0; j < nb; ++j) v.col(j) = svd.matrixV().col(c).segment(j * na, na);
    basis.push_back(std::move(v));
  }
  return basis;
}

Matrix sample_from(const std::vector<Matrix>& basis, Rng& rng) {
  Matrix v = Matrix::Zero(basis.front().rows(), basis.front().cols());
  for (const auto& b : basis) v += rng.cnormal() * b;
  return v;
}

BlockLinearMap kraus_module_map(const MultiMatrixAlgebra& src_alg,
                                const MultiMatrixAlgebra& tgt_alg,
                                const std::vector<Matrix>& basis, int terms, Rng& rng,
                                bool cp) {
  if (basis.empty()) throw EmptyIntertwinerSpace("no intertwiners between the actions");
  std::vector<std::pair<Matrix, Matrix>> pairs;
  pairs.reserve(terms);
  for (int i = 0; i < terms; ++i) {
    Matrix v = sample_from(basis, rng);
    Matrix w = cp ? v : sample_from(basis, rng);
    pairs.emplace_back(std::move(v), std::move(w));
  }
  return map_from_function(src_alg, tgt_alg, [&](const AlgebraElement& a) {
    Matrix amb = ambient(a);
    Matrix img = Matrix::Zero(tgt_alg.ambient_dim(), tgt_alg.ambient_dim());
    for (const auto& [v, w] : pairs) img += v.adjoint() * amb * w;
    return from_ambient(tgt_alg, img);
  });
}

}  // namespace

BlockLinearMap random_module_map(const CentralAction& src, const CentralAction& tgt, int terms,
                                 Rng& rng, bool cp) {
  if (src.source != tgt.source)
    throw AlgebraMismatch("random_module_map: acting algebras differ");
  std::vector<std::pair<Matrix, Matrix>> conds;
  for (int w = 0; w < src.source.dim(); ++w) {
    auto fw = basis_element(src.source, w);
    conds.emplace_back(ambient(apply_action(src, fw)), ambient(apply_action(tgt, fw)));
  }
  auto basis = intertwiner_basis(conds, src.target.ambient_dim(), tgt.target.ambient_dim());
  return kraus_module_map(src.target, tgt.target, basis, terms, rng, cp);
}

BlockLinearMap random_cp_module_map(const CentralAction& src, const CentralAction& tgt, int rank,
                                    std::uint64_t seed) {
  Rng rng(seed);
  return random_module_map(src, tgt, rank, rng, true);
}

BlockLinearMap random_bimodule_map(const BimoduleStructure& src, const BimoduleStructure& tgt,
                                   int terms, Rng& rng, bool cp) {
  if (src.left.source != tgt.left.source || src.right.source != tgt.right.source)
    throw AlgebraMismatch("random_bimodule_map: acting algebras differ");
  std::vector<std::pair<Matrix, Matrix>> conds;
  for (int w = 0; w < src.left.source.dim(); ++w) {
    auto fw = basis_element(src.left.source, w);
    conds.emplace_back(ambient(apply_action(src.left, fw)), ambient(apply_action(tgt.left, fw)));
  }
  for (int w = 0; w < src.right.source.dim(); ++w) {
    auto gw = basis_element(src.right.source, w);
    conds.emplace_back(ambient(apply_action(src.right, gw)),
                       ambient(apply_action(tgt.right, gw)));
  }
  auto basis =
      intertwiner_basis(conds, src.left.target.ambient_dim(), tgt.left.target.ambient_dim());
  return kraus_module_map(src.left.target, tgt.left.target, basis, terms, rng, cp);
}

BlockLinearMap random_bh_bimodule_map(const BimoduleStructure& src, const BimoduleHilbert& h,
                                      int terms, Rng& rng, bool cp) {
  if (src.left.source != h.right_alg || src.right.source != h.left_alg)
    throw AlgebraMismatch("random_bh_bimodule_map: acting algebras do not match H");
  std::vector<std::pair<Matrix, Matrix>> conds;
  for (int w = 0; w < h.right_alg.dim(); ++w) {
    auto fw = basis_element(h.right_alg, w);
    conds.emplace_back(ambient(apply_action(src.left, fw)), rep_right_apply(h, fw));
  }
  for (int w = 0; w < h.left_alg.dim(); ++w) {
    auto gw = basis_element(h.left_alg, w);
    conds.emplace_back(ambient(apply_action(src.right, gw)), rep_left_apply(h, gw));
  }
  auto basis = intertwiner_basis(conds, src.left.target.ambient_dim(), h.dim);
  auto bh = make_algebra({h.dim}, "B(H)");
  return kraus_module_map(src.left.target, bh, basis, terms, rng, cp);
}

MatricialBoundReport matricial_bound_check(const BlockLinearMap& f,
                                           const BimoduleStructure& src,
                                           const BimoduleStructure& tgt, double bound,
                                           int trials, int n_max, std::uint64_t seed,
                                           double tol) {
  if (hermitian_defect(f) > 1e-8)
    throw NotHermitianPreserving("matricial_bound_check: map is not hermitian");
  if (bimodule_residual(f, src, tgt) > 1e-7)
    throw NotBimoduleMap("matricial_bound_check: map is not a bimodule map");

  const auto& scalars_l = src.left.source;
  const auto& scalars_r = src.right.source;
  Rng rng(seed);
  MatricialBoundReport report;
  report.trials = trials;
  report.worst_margin = std::numeric_limits<double>::infinity();

  auto elem_sqrt = [](const AlgebraElement& x) {
    AlgebraElement out = x;
    for (auto& b : out.data) b = herm_sqrt(b);
    return out;
  };

  for (int trial = 0; trial < trials; ++trial) {
    int n = rng.uniform_int(1, n_max);
    Matrix w = rng.unitary(n);
    auto ampsrc = amplify_algebra(f.source, n);
    auto amptgt = amplify_algebra(f.target, n);
    auto m_src = zero_element(ampsrc);
    auto m_tgt = zero_element(amptgt);
    for (int c = 0; c < n; ++c) {
      auto alpha = random_positive(scalars_l, rng) + 1e-6 * unit(scalars_l);
      auto beta = random_positive(scalars_r, rng) + 1e-6 * unit(scalars_r);
      Matrix pc = w.col(c) * w.col(c).adjoint();
      auto src_val = apply_action(src.left, alpha) * apply_action(src.right, beta);
      auto tgt_val = apply_action(tgt.left, alpha) * apply_action(tgt.right, beta);
      for (int k = 0; k < f.source.num_blocks(); ++k)
        m_src.data[k] += kron(pc, src_val.data[k]);
      for (int k = 0; k < f.target.num_blocks(); ++k)
        m_tgt.data[k] += kron(pc, tgt_val.data[k]);
    }

    auto x = random_hermitian(ampsrc, rng);
    x = (1.0 / std::max(1.0, op_norm(x))) * x;
    double c = 0.25 + 0.75 * rng.uniform();
    auto s = elem_sqrt(m_src);
    auto a = c * (s * x * s);

    auto fn = amplify_map(f, n);
    auto img = apply(fn, a);
    double scale = std::max(1.0, bound * op_norm(m_tgt));
    double up = min_eig(bound * m_tgt - img);
    double dn = min_eig(bound * m_tgt + img);
    double margin = std::min(up, dn) / scale;
    report.worst_margin = std::min(report.worst_margin, margin);
    if (margin < -tol) report.pass = false;
  }
  return report;
}

}  // namespace modcp
