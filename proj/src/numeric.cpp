#include "modcp/numeric.hpp"

#include <cmath>

#include "modcp/errors.hpp"

namespace modcp {

HermitianEig hermitian_eig(const Matrix& x) {
  if (x.rows() != x.cols()) throw ShapeMismatch("hermitian_eig: square matrix required");
  const int d = static_cast<int>(x.rows());
  HermitianEig out;
  if (d == 0) {
    out.values = RVector(0);
    out.vectors = Matrix(0, 0);
    return out;
  }
  Matrix xs = 0.5 * (x + x.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(xs);
  out.values = RVector(d);
  out.vectors = Matrix(d, d);
  for (int c = 0; c < d; ++c) {
    out.values(c) = es.eigenvalues()(d - 1 - c);
    out.vectors.col(c) = es.eigenvectors().col(d - 1 - c);
  }
  for (int c = 0; c < d; ++c) {
    int arg = 0;
    double best = -1.0;
    for (int r = 0; r < d; ++r) {
      double m = std::abs(out.vectors(r, c));
      if (m > best) {  // strict: first maximum wins on ties
        best = m;
        arg = r;
      }
    }
    Complex top = out.vectors(arg, c);
    if (std::abs(top) > 0) out.vectors.col(c) *= std::conj(top) / std::abs(top);
  }
  return out;
}

double min_eig_herm(const Matrix& x) {
  if (x.rows() == 0) return 0.0;
  auto eig = hermitian_eig(x);
  return eig.values(eig.values.size() - 1);
}

Matrix project_psd(const Matrix& x) {
  auto eig = hermitian_eig(x);
  const int d = static_cast<int>(x.rows());
  Matrix out = Matrix::Zero(d, d);
  for (int c = 0; c < d; ++c) {
    double lam = eig.values(c);
    if (lam <= 0) break;  // descending order
    out.noalias() += lam * eig.vectors.col(c) * eig.vectors.col(c).adjoint();
  }
  return 0.5 * (out + out.adjoint());
}

Matrix herm_sqrt(const Matrix& x) {
  auto eig = hermitian_eig(x);
  const int d = static_cast<int>(x.rows());
  Matrix out = Matrix::Zero(d, d);
  for (int c = 0; c < d; ++c) {
    double lam = eig.values(c);
    if (lam <= 0) break;
    out.noalias() += std::sqrt(lam) * eig.vectors.col(c) * eig.vectors.col(c).adjoint();
  }
  return 0.5 * (out + out.adjoint());
}

Matrix pinv_sqrt(const Matrix& x, double rel_tol) {
  auto eig = hermitian_eig(x);
  const int d = static_cast<int>(x.rows());
  Matrix out = Matrix::Zero(d, d);
  if (d == 0) return out;
  double cut = rel_tol * std::max(eig.values(0), 0.0);
  for (int c = 0; c < d; ++c) {
    double lam = eig.values(c);
    if (lam <= cut || lam <= 0) break;
    out.noalias() += (1.0 / std::sqrt(lam)) * eig.vectors.col(c) * eig.vectors.col(c).adjoint();
  }
  return 0.5 * (out + out.adjoint());
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

int herm_vec_dim(int d) { return d * d; }

RVector herm_to_vec(const Matrix& x) {
  const int d = static_cast<int>(x.rows());
  const double s = std::sqrt(2.0);
  RVector v(herm_vec_dim(d));
  int idx = 0;
  for (int i = 0; i < d; ++i) v(idx++) = x(i, i).real();
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      Complex z = 0.5 * (x(i, j) + std::conj(x(j, i)));
      v(idx++) = s * z.real();
      v(idx++) = s * z.imag();
    }
  return v;
}

Matrix vec_to_herm(const RVector& v, int d) {
  if (v.size() != herm_vec_dim(d)) throw SizeMismatch("vec_to_herm: bad length");
  const double s = 1.0 / std::sqrt(2.0);
  Matrix x(d, d);
  int idx = 0;
  for (int i = 0; i < d; ++i) x(i, i) = v(idx++);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      Complex z(v(idx) * s, v(idx + 1) * s);
      idx += 2;
      x(i, j) = z;
      x(j, i) = std::conj(z);
    }
  return x;
}

double Rng::uniform() {
  return ((eng_() >> 11) + 0.5) * 0x1p-53;
}

double Rng::normal() {
  double u1 = uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Complex Rng::cnormal() {
  const double s = std::sqrt(0.5);
  double re = normal();
  double im = normal();
  return Complex(s * re, s * im);
}

int Rng::uniform_int(int lo, int hi) {
  if (hi < lo) throw SizeMismatch("uniform_int: empty range");
  std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(eng_() % span);
}

Matrix Rng::ginibre(int rows, int cols) {
  Matrix g(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) g(i, j) = cnormal();
  return g;
}

Matrix Rng::hermitian(int d) {
  Matrix g = ginibre(d, d);
  return 0.5 * (g + g.adjoint());
}

Matrix Rng::psd(int d) {
  Matrix g = ginibre(d, d);
  return g * g.adjoint();
}

Matrix Rng::unitary(int d) {
  Matrix g = ginibre(d, d);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int c = 0; c < d; ++c) {
    Complex diag = r(c, c);
    double m = std::abs(diag);
    if (m > 0) q.col(c) *= diag / m;
  }
  return q;
}

}  // namespace modcp
