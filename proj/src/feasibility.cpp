#include "modcp/feasibility.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include "modcp/errors.hpp"

namespace modcp {

VarLayout::VarLayout(const std::vector<int>& block_dims) : dims(block_dims) {
  offsets.reserve(dims.size());
  for (int d : dims) {
    if (d <= 0) throw NonPositiveBlock("VarLayout: block dimension must be positive");
    offsets.push_back(total);
    total += herm_vec_dim(d);
  }
}

RVector pack_blocks(const VarLayout& layout, const std::vector<Matrix>& blocks) {
  if (blocks.size() != layout.dims.size()) throw ShapeMismatch("pack_blocks: block count");
  RVector v(layout.total);
  for (size_t k = 0; k < blocks.size(); ++k)
    v.segment(layout.offsets[k], herm_vec_dim(layout.dims[k])) = herm_to_vec(blocks[k]);
  return v;
}

std::vector<Matrix> unpack_blocks(const VarLayout& layout, const RVector& v) {
  if (v.size() != layout.total) throw SizeMismatch("unpack_blocks: bad length");
  std::vector<Matrix> out;
  out.reserve(layout.dims.size());
  for (size_t k = 0; k < layout.dims.size(); ++k)
    out.push_back(
        vec_to_herm(v.segment(layout.offsets[k], herm_vec_dim(layout.dims[k])), layout.dims[k]));
  return out;
}

AffineBuilder::AffineBuilder(std::vector<int> variable_dims)
    : layout_(variable_dims) {}

void AffineBuilder::add_term(int block, int p, int q, Complex coeff) {
  int d = layout_.dims.at(block);
  if (p < 0 || p >= d || q < 0 || q >= d) throw SizeMismatch("add_term: entry out of range");
  auto it = terms_.find(block);
  if (it == terms_.end()) it = terms_.emplace(block, Matrix::Zero(d, d)).first;
  it->second(p, q) += coeff;
}

void AffineBuilder::finish(Complex rhs) {
  RVector row_re = RVector::Zero(layout_.total);
  RVector row_im = RVector::Zero(layout_.total);
  double im_norm = 0;
  for (const auto& [block, l] : terms_) {
    int d = layout_.dims[block];
    // functional sum l(p,q) X(p,q) on Hermitian X splits into
    // tr(F_re X) + i tr(F_im X) with the Hermitian matrices below
    Matrix f_re = (0.5 * (l + l.adjoint())).transpose();
    Matrix f_im = ((l - l.adjoint()) / Complex(0, 2)).transpose();
    row_re.segment(layout_.offsets[block], herm_vec_dim(d)) = herm_to_vec(f_re);
    row_im.segment(layout_.offsets[block], herm_vec_dim(d)) = herm_to_vec(f_im);
    im_norm += f_im.squaredNorm();
  }
  terms_.clear();
  rows_.push_back(std::move(row_re));
  rhs_.push_back(rhs.real());
  if (std::sqrt(im_norm) > 1e-14 || std::abs(rhs.imag()) > 1e-14) {
    rows_.push_back(std::move(row_im));
    rhs_.push_back(rhs.imag());
  }
}

void AffineBuilder::pin(int block, int p, int q, Complex value) {
  add_term(block, p, q, 1.0);
  finish(value);
}

FeasibilityProblem AffineBuilder::take(std::vector<int> psd_blocks, double tol) {
  FeasibilityProblem prob;
  prob.variable_dims = layout_.dims;
  prob.affine = RMatrix(rows_.size(), layout_.total);
  prob.rhs = RVector(rows_.size());
  for (size_t r = 0; r < rows_.size(); ++r) {
    prob.affine.row(r) = rows_[r];
    prob.rhs(r) = rhs_[r];
  }
  prob.psd_blocks = std::move(psd_blocks);
  prob.tol = tol;
  rows_.clear();
  rhs_.clear();
  return prob;
}

namespace {

struct ReducedAffine {
  RMatrix basis;  // r x n, orthonormal rows spanning the row space
  RVector shift;  // r entries; the set is { x : basis x = shift }
};

// Orthonormalizes the row system via the Gram matrix. Also certifies
// consistency: the least-squares residual of the original system at the
// projected origin must vanish.
ReducedAffine reduce_affine(const RMatrix& a, const RVector& b) {
  ReducedAffine out;
  const int n = static_cast<int>(a.cols());
  if (a.rows() == 0) {
    out.basis = RMatrix(0, n);
    out.shift = RVector(0);
    return out;
  }
  // a a^T and a^T a share their nonzero spectrum; eigendecompose the smaller
  const bool by_rows = a.rows() <= a.cols();
  RMatrix gram = by_rows ? RMatrix(a * a.transpose()) : RMatrix(a.transpose() * a);
  Eigen::SelfAdjointEigenSolver<RMatrix> es(gram);
  double lam_max = es.eigenvalues().maxCoeff();
  double cut = std::max(lam_max, 1.0) * 1e-13;
  std::vector<int> keep;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > cut) keep.push_back(i);
  const int r = static_cast<int>(keep.size());
  out.basis = RMatrix(r, n);
  out.shift = RVector(r);
  if (by_rows) {
    for (int i = 0; i < r; ++i) {
      double s = std::sqrt(es.eigenvalues()(keep[i]));
      out.basis.row(i) = es.eigenvectors().col(keep[i]).transpose() * a / s;
      out.shift(i) = es.eigenvectors().col(keep[i]).dot(b) / s;
    }
  } else {
    // columns of the eigenvector matrix are right singular vectors of a, and
    // those with nonzero singular value are an orthonormal row-space basis
    RVector atb = a.transpose() * b;
    for (int i = 0; i < r; ++i) {
      out.basis.row(i) = es.eigenvectors().col(keep[i]).transpose();
      out.shift(i) = es.eigenvectors().col(keep[i]).dot(atb) / es.eigenvalues()(keep[i]);
    }
  }
  RVector x0 = out.basis.transpose() * out.shift;
  double resid = (a * x0 - b).norm();
  if (resid > 1e-8 * std::max(1.0, b.norm()))
    throw InconsistentConstraints("affine system has no solution, residual " +
                                  std::to_string(resid));
  return out;
}

int max_iter_budget(int fallback) {
  if (const char* env = std::getenv("MODCP_MAX_ITERS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  return fallback;
}

}  // namespace

std::vector<Matrix> project_affine(const FeasibilityProblem& problem,
                                   const std::vector<Matrix>& x) {
  VarLayout layout(problem.variable_dims);
  if (problem.affine.cols() != layout.total)
    throw SizeMismatch("project_affine: affine width mismatch");
  ReducedAffine red = reduce_affine(problem.affine, problem.rhs);
  RVector v = pack_blocks(layout, x);
  if (red.basis.rows() > 0) v -= red.basis.transpose() * (red.basis * v - red.shift);
  return unpack_blocks(layout, v);
}

SolveReport dykstra_solve(const FeasibilityProblem& problem, const std::vector<Matrix>* start) {
  VarLayout layout(problem.variable_dims);
  if (problem.affine.cols() != layout.total)
    throw SizeMismatch("dykstra_solve: affine width mismatch");
  ReducedAffine red = reduce_affine(problem.affine, problem.rhs);

  std::vector<bool> conic(layout.dims.size(), false);
  for (int k : problem.psd_blocks) conic.at(k) = true;

  RVector x = start ? pack_blocks(layout, *start) : RVector::Zero(layout.total);
  RVector q = RVector::Zero(layout.total);

  auto affine_project = [&](const RVector& v) -> RVector {
    if (red.basis.rows() == 0) return v;
    return v - red.basis.transpose() * (red.basis * v - red.shift);
  };
  auto cone_project = [&](RVector v) -> RVector {
    for (size_t k = 0; k < layout.dims.size(); ++k) {
      if (!conic[k]) continue;
      int d = layout.dims[k];
      auto seg = v.segment(layout.offsets[k], herm_vec_dim(d));
      seg = herm_to_vec(project_psd(vec_to_herm(seg, d)));
    }
    return v;
  };
  auto affine_dist = [&](const RVector& v) -> double {
    if (red.basis.rows() == 0) return 0.0;
    return (red.basis * v - red.shift).norm();
  };
  auto psd_resid = [&](const RVector& v) -> double {
    double worst = 0;
    for (size_t k = 0; k < layout.dims.size(); ++k) {
      if (!conic[k]) continue;
      int d = layout.dims[k];
      worst = std::min(
          worst, min_eig_herm(vec_to_herm(v.segment(layout.offsets[k], herm_vec_dim(d)), d)));
    }
    return worst;
  };

  const int budget = max_iter_budget(problem.max_iters);
  const int window = std::max(200, std::min(2000, budget / 10));
  double best = std::numeric_limits<double>::infinity();
  double window_best = best;
  int window_start = 0;

  SolveReport report;
  for (int it = 1; it <= budget; ++it) {
    RVector y = affine_project(x);
    RVector z = y + q;
    RVector xn = cone_project(z);
    q = z - xn;
    double step = (xn - x).norm();
    x = xn;

    double resid = affine_dist(x);
    report.iters = it;
    if (resid < best) best = resid;
    if (resid <= problem.tol) {
      report.status = SolveStatus::Feasible;
      report.affine_residual = resid;
      report.psd_residual = psd_resid(x);
      report.point = unpack_blocks(layout, x);
      return report;
    }
    if (step <= 1e-14 * (1.0 + x.norm())) break;
    if (it - window_start >= window) {
      if (std::isfinite(window_best) && resid > 10 * problem.tol &&
          window_best - best <= 1e-3 * window_best)
        break;
      window_start = it;
      window_best = best;
    }
  }
  report.status = SolveStatus::Stalled;
  report.affine_residual = affine_dist(x);
  report.psd_residual = psd_resid(x);
  report.point = unpack_blocks(layout, x);
  return report;
}

double bisection_min(const std::function<FeasibilityProblem(double)>& make_problem, double lo,
                     double hi, double tol,
                     const std::function<std::vector<Matrix>(double)>& start_for) {
  if (hi < lo) throw SizeMismatch("bisection_min: empty bracket");
  auto feasible_at = [&](double t) {
    FeasibilityProblem p = make_problem(t);
    SolveReport rep;
    if (start_for) {
      std::vector<Matrix> s = start_for(t);
      rep = dykstra_solve(p, &s);
    } else {
      rep = dykstra_solve(p);
    }
    return rep.status == SolveStatus::Feasible;
  };

  if (!feasible_at(hi))
    throw UpperBoundInfeasible("bisection_min: upper endpoint infeasible");
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    if (feasible_at(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

}  // namespace modcp
