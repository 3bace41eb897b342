#pragma once

#include <complex>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace modcp {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

// Eigendecomposition of the Hermitian part of X, eigenvalues descending.
// Each eigenvector's phase is fixed so its largest-magnitude entry is real
// positive (first such entry on ties), making the output a deterministic
// function of the input bits.
struct HermitianEig {
  RVector values;
  Matrix vectors;  // columns
};
HermitianEig hermitian_eig(const Matrix& x);

double min_eig_herm(const Matrix& x);

// Nearest PSD matrix in Frobenius norm (eigenvalue clipping).
Matrix project_psd(const Matrix& x);

// Square root of the PSD part (negative eigenvalues clipped to zero).
Matrix herm_sqrt(const Matrix& x);

// x^{-1/2} on the support of x; eigenvalues below rel_tol * max are treated
// as zero.
Matrix pinv_sqrt(const Matrix& x, double rel_tol = 1e-10);

Matrix kron(const Matrix& a, const Matrix& b);

// Real coordinates of a Hermitian d x d matrix: d diagonal entries, then for
// each i < j the pair sqrt(2)*Re x(i,j), sqrt(2)*Im x(i,j). The scaling makes
// the map a Euclidean isometry for the Hilbert-Schmidt norm.
int herm_vec_dim(int d);
RVector herm_to_vec(const Matrix& x);
Matrix vec_to_herm(const RVector& v, int d);

// Deterministic random source. Gaussians use an explicit Box-Muller transform
// on the raw 64-bit stream so sequences do not depend on the standard
// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  double uniform();                  // [0, 1)
  double normal();
  Complex cnormal();                 // E|z|^2 = 1
  int uniform_int(int lo, int hi);   // inclusive range

  Matrix ginibre(int rows, int cols);
  Matrix hermitian(int d);
  Matrix psd(int d);          // g g^* for Ginibre g
  Matrix unitary(int d);      // Haar via phase-fixed QR

 private:
  std::mt19937_64 eng_;
};

}  // namespace modcp
