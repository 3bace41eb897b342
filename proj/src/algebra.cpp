#include "modcp/algebra.hpp"

#include <cmath>
#include <utility>

namespace modcp {

namespace {

void check_same(const MultiMatrixAlgebra& a, const MultiMatrixAlgebra& b, const char* who) {
  if (a != b) throw AlgebraMismatch(std::string(who) + ": algebras differ");
}

}  // namespace

int MultiMatrixAlgebra::ambient_dim() const {
  int n = 0;
  for (int d : blocks) n += d;
  return n;
}

int MultiMatrixAlgebra::dim() const {
  int n = 0;
  for (int d : blocks) n += d * d;
  return n;
}

int MultiMatrixAlgebra::ambient_offset(int k) const {
  int n = 0;
  for (int i = 0; i < k; ++i) n += blocks[i];
  return n;
}

int MultiMatrixAlgebra::coord_offset(int k) const {
  int n = 0;
  for (int i = 0; i < k; ++i) n += blocks[i] * blocks[i];
  return n;
}

MultiMatrixAlgebra make_algebra(std::vector<int> blocks, std::string label) {
  if (blocks.empty()) throw EmptyBlocks("make_algebra: no blocks");
  for (int d : blocks)
    if (d <= 0) throw NonPositiveBlock("make_algebra: block size must be positive");
  return MultiMatrixAlgebra{std::move(blocks), std::move(label)};
}

AlgebraElement make_element(const MultiMatrixAlgebra& alg, std::vector<Matrix> data) {
  if (static_cast<int>(data.size()) != alg.num_blocks())
    throw ShapeMismatch("make_element: wrong block count");
  for (int k = 0; k < alg.num_blocks(); ++k)
    if (data[k].rows() != alg.blocks[k] || data[k].cols() != alg.blocks[k])
      throw ShapeMismatch("make_element: block " + std::to_string(k) + " has wrong shape");
  return AlgebraElement{alg, std::move(data)};
}

AlgebraElement zero_element(const MultiMatrixAlgebra& alg) {
  std::vector<Matrix> data;
  data.reserve(alg.num_blocks());
  for (int d : alg.blocks) data.push_back(Matrix::Zero(d, d));
  return AlgebraElement{alg, std::move(data)};
}

AlgebraElement unit(const MultiMatrixAlgebra& alg) {
  std::vector<Matrix> data;
  data.reserve(alg.num_blocks());
  for (int d : alg.blocks) data.push_back(Matrix::Identity(d, d));
  return AlgebraElement{alg, std::move(data)};
}

AlgebraElement operator+(const AlgebraElement& a, const AlgebraElement& b) {
  check_same(a.algebra, b.algebra, "operator+");
  AlgebraElement out = a;
  for (size_t k = 0; k < out.data.size(); ++k) out.data[k] += b.data[k];
  return out;
}

AlgebraElement operator-(const AlgebraElement& a, const AlgebraElement& b) {
  check_same(a.algebra, b.algebra, "operator-");
  AlgebraElement out = a;
  for (size_t k = 0; k < out.data.size(); ++k) out.data[k] -= b.data[k];
  return out;
}

AlgebraElement operator-(const AlgebraElement& a) { return Complex(-1.0) * a; }

AlgebraElement operator*(const AlgebraElement& a, const AlgebraElement& b) {
  check_same(a.algebra, b.algebra, "operator*");
  AlgebraElement out = a;
  for (size_t k = 0; k < out.data.size(); ++k) out.data[k] = a.data[k] * b.data[k];
  return out;
}

AlgebraElement operator*(Complex s, const AlgebraElement& a) {
  AlgebraElement out = a;
  for (auto& m : out.data) m *= s;
  return out;
}

AlgebraElement operator*(const AlgebraElement& a, Complex s) { return s * a; }

AlgebraElement adjoint(const AlgebraElement& a) {
  AlgebraElement out = a;
  for (auto& m : out.data) m = m.adjoint().eval();
  return out;
}

AlgebraElement transpose_blocks(const AlgebraElement& a) {
  AlgebraElement out = a;
  for (auto& m : out.data) m.transposeInPlace();
  return out;
}

MultiMatrixAlgebra opposite_algebra(const MultiMatrixAlgebra& alg) {
  MultiMatrixAlgebra out = alg;
  out.label = alg.label.empty() ? "op" : alg.label + "^op";
  return out;
}

double op_norm(const AlgebraElement& a) {
  double best = 0.0;
  for (const auto& m : a.data) {
    if (m.rows() == 0) continue;
    Eigen::JacobiSVD<Matrix> svd(m);
    best = std::max(best, svd.singularValues()(0));
  }
  return best;
}

double hs_norm(const AlgebraElement& a) {
  double s = 0.0;
  for (const auto& m : a.data) s += m.squaredNorm();
  return std::sqrt(s);
}

Complex hs_inner(const AlgebraElement& a, const AlgebraElement& b) {
  check_same(a.algebra, b.algebra, "hs_inner");
  Complex s = 0.0;
  for (size_t k = 0; k < a.data.size(); ++k)
    s += (a.data[k].adjoint() * b.data[k]).trace();
  return s;
}

double min_eig(const AlgebraElement& a) {
  double best = 0.0;
  bool first = true;
  for (const auto& m : a.data) {
    double lam = min_eig_herm(m);
    if (first || lam < best) best = lam;
    first = false;
  }
  return best;
}

bool is_hermitian(const AlgebraElement& a, double tol) {
  for (const auto& m : a.data)
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tol) return false;
  return true;
}

bool is_positive(const AlgebraElement& a, double tol) {
  if (!is_hermitian(a, tol)) return false;
  return min_eig(a) >= -tol;
}

BasisIndex basis_index(const MultiMatrixAlgebra& alg, int u) {
  if (u < 0 || u >= alg.dim()) throw SizeMismatch("basis_index: out of range");
  for (int k = 0; k < alg.num_blocks(); ++k) {
    int d = alg.blocks[k];
    int off = alg.coord_offset(k);
    if (u < off + d * d) {
      int local = u - off;
      return BasisIndex{k, local / d, local % d};
    }
  }
  throw SizeMismatch("basis_index: unreachable");
}

int flat_index(const MultiMatrixAlgebra& alg, int block, int row, int col) {
  int d = alg.blocks.at(block);
  if (row < 0 || row >= d || col < 0 || col >= d)
    throw SizeMismatch("flat_index: entry out of range");
  return alg.coord_offset(block) + row * d + col;
}

AlgebraElement basis_element(const MultiMatrixAlgebra& alg, int u) {
  BasisIndex ix = basis_index(alg, u);
  AlgebraElement out = zero_element(alg);
  out.data[ix.block](ix.row, ix.col) = 1.0;
  return out;
}

CVector coords(const AlgebraElement& a) {
  CVector v(a.algebra.dim());
  int idx = 0;
  for (const auto& m : a.data)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) v(idx++) = m(i, j);
  return v;
}

AlgebraElement from_coords(const MultiMatrixAlgebra& alg, const CVector& v) {
  if (v.size() != alg.dim()) throw SizeMismatch("from_coords: bad length");
  AlgebraElement out = zero_element(alg);
  int idx = 0;
  for (auto& m : out.data)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = v(idx++);
  return out;
}

std::vector<AlgebraElement> center_basis(const MultiMatrixAlgebra& alg) {
  std::vector<AlgebraElement> out;
  out.reserve(alg.num_blocks());
  for (int k = 0; k < alg.num_blocks(); ++k) {
    AlgebraElement p = zero_element(alg);
    p.data[k] = Matrix::Identity(alg.blocks[k], alg.blocks[k]);
    out.push_back(std::move(p));
  }
  return out;
}

Matrix ambient(const AlgebraElement& a) {
  int n = a.algebra.ambient_dim();
  Matrix out = Matrix::Zero(n, n);
  for (int k = 0; k < a.algebra.num_blocks(); ++k) {
    int off = a.algebra.ambient_offset(k);
    int d = a.algebra.blocks[k];
    out.block(off, off, d, d) = a.data[k];
  }
  return out;
}

AlgebraElement from_ambient(const MultiMatrixAlgebra& alg, const Matrix& m) {
  int n = alg.ambient_dim();
  if (m.rows() != n || m.cols() != n) throw ShapeMismatch("from_ambient: bad shape");
  AlgebraElement out = zero_element(alg);
  for (int k = 0; k < alg.num_blocks(); ++k) {
    int off = alg.ambient_offset(k);
    int d = alg.blocks[k];
    out.data[k] = m.block(off, off, d, d);
  }
  return out;
}

MultiMatrixAlgebra amplify_algebra(const MultiMatrixAlgebra& alg, int n) {
  if (n <= 0) throw NonPositiveBlock("amplify_algebra: n must be positive");
  MultiMatrixAlgebra out = alg;
  for (int& d : out.blocks) d *= n;
  if (!alg.label.empty()) out.label = "M" + std::to_string(n) + "(" + alg.label + ")";
  return out;
}

AlgebraElement amp_embed(const AlgebraElement& a, int n, int p, int q) {
  if (p < 0 || p >= n || q < 0 || q >= n) throw SizeMismatch("amp_embed: bad outer entry");
  Matrix outer = Matrix::Zero(n, n);
  outer(p, q) = 1.0;
  MultiMatrixAlgebra amp = amplify_algebra(a.algebra, n);
  AlgebraElement out = zero_element(amp);
  for (size_t k = 0; k < a.data.size(); ++k) out.data[k] = kron(outer, a.data[k]);
  return out;
}

AlgebraElement amp_outer(const MultiMatrixAlgebra& alg, int n, const Matrix& outer) {
  if (outer.rows() != n || outer.cols() != n) throw ShapeMismatch("amp_outer: bad shape");
  MultiMatrixAlgebra amp = amplify_algebra(alg, n);
  AlgebraElement out = zero_element(amp);
  for (int k = 0; k < alg.num_blocks(); ++k)
    out.data[k] = kron(outer, Matrix::Identity(alg.blocks[k], alg.blocks[k]));
  return out;
}

AlgebraElement amp_entry(const AlgebraElement& x, const MultiMatrixAlgebra& inner, int n,
                         int p, int q) {
  if (x.algebra != amplify_algebra(inner, n))
    throw AlgebraMismatch("amp_entry: element does not live in the amplification");
  if (p < 0 || p >= n || q < 0 || q >= n) throw SizeMismatch("amp_entry: bad outer entry");
  AlgebraElement out = zero_element(inner);
  for (int k = 0; k < inner.num_blocks(); ++k) {
    int d = inner.blocks[k];
    out.data[k] = x.data[k].block(p * d, q * d, d, d);
  }
  return out;
}

AlgebraElement random_element(const MultiMatrixAlgebra& alg, Rng& rng) {
  AlgebraElement out = zero_element(alg);
  for (int k = 0; k < alg.num_blocks(); ++k) out.data[k] = rng.ginibre(alg.blocks[k], alg.blocks[k]);
  return out;
}

AlgebraElement random_hermitian(const MultiMatrixAlgebra& alg, Rng& rng) {
  AlgebraElement out = zero_element(alg);
  for (int k = 0; k < alg.num_blocks(); ++k) out.data[k] = rng.hermitian(alg.blocks[k]);
  return out;
}

AlgebraElement random_positive(const MultiMatrixAlgebra& alg, Rng& rng) {
  AlgebraElement out = zero_element(alg);
  for (int k = 0; k < alg.num_blocks(); ++k) out.data[k] = rng.psd(alg.blocks[k]);
  return out;
}

}  // namespace modcp
