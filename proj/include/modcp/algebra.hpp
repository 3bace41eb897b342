#pragma once

#include <string>
#include <vector>

#include "modcp/errors.hpp"
#include "modcp/numeric.hpp"

namespace modcp {

// Finite dimensional C*-algebra: a direct sum of full matrix blocks
// M_{d_1} + ... + M_{d_m}, stored per block. Equality compares block shapes
// only; labels are cosmetic.
struct MultiMatrixAlgebra {
  std::vector<int> blocks;
  std::string label;

  int num_blocks() const { return static_cast<int>(blocks.size()); }
  int ambient_dim() const;  // sum of d_k
  int dim() const;          // sum of d_k^2
  int ambient_offset(int k) const;
  int coord_offset(int k) const;

  friend bool operator==(const MultiMatrixAlgebra& a, const MultiMatrixAlgebra& b) {
    return a.blocks == b.blocks;
  }
  friend bool operator!=(const MultiMatrixAlgebra& a, const MultiMatrixAlgebra& b) {
    return !(a == b);
  }
};

MultiMatrixAlgebra make_algebra(std::vector<int> blocks, std::string label = "");

struct AlgebraElement {
  MultiMatrixAlgebra algebra;
  std::vector<Matrix> data;  // one matrix per block
};

AlgebraElement make_element(const MultiMatrixAlgebra& alg, std::vector<Matrix> data);
AlgebraElement zero_element(const MultiMatrixAlgebra& alg);
AlgebraElement unit(const MultiMatrixAlgebra& alg);

AlgebraElement operator+(const AlgebraElement& a, const AlgebraElement& b);
AlgebraElement operator-(const AlgebraElement& a, const AlgebraElement& b);
AlgebraElement operator-(const AlgebraElement& a);
AlgebraElement operator*(const AlgebraElement& a, const AlgebraElement& b);
AlgebraElement operator*(Complex s, const AlgebraElement& a);
AlgebraElement operator*(const AlgebraElement& a, Complex s);

AlgebraElement adjoint(const AlgebraElement& a);

// Blockwise transpose; together with opposite_algebra this realizes the
// canonical anti-isomorphism A -> A^op.
AlgebraElement transpose_blocks(const AlgebraElement& a);
MultiMatrixAlgebra opposite_algebra(const MultiMatrixAlgebra& alg);

double op_norm(const AlgebraElement& a);
double hs_norm(const AlgebraElement& a);
Complex hs_inner(const AlgebraElement& a, const AlgebraElement& b);  // conjugate linear in a
double min_eig(const AlgebraElement& a);
bool is_hermitian(const AlgebraElement& a, double tol = 1e-9);
bool is_positive(const AlgebraElement& a, double tol = 1e-9);

// The matrix-unit basis e_u, Hilbert-Schmidt orthonormal. Flat index
// u = coord_offset(k) + i * d_k + j for entry (i, j) of block k; coords are
// exactly the block entries read in that order.
struct BasisIndex {
  int block, row, col;
};
BasisIndex basis_index(const MultiMatrixAlgebra& alg, int u);
int flat_index(const MultiMatrixAlgebra& alg, int block, int row, int col);
AlgebraElement basis_element(const MultiMatrixAlgebra& alg, int u);
CVector coords(const AlgebraElement& a);
AlgebraElement from_coords(const MultiMatrixAlgebra& alg, const CVector& v);

// Orthogonal projections onto the blocks; these span the center.
std::vector<AlgebraElement> center_basis(const MultiMatrixAlgebra& alg);

// Block-diagonal picture inside M_N, N = ambient_dim.
Matrix ambient(const AlgebraElement& a);
AlgebraElement from_ambient(const MultiMatrixAlgebra& alg, const Matrix& m);

// M_n(A): block sizes n * d_k. The element with outer matrix unit E_pq and
// inner entry a has block k equal to kron(E_pq, a_k).
MultiMatrixAlgebra amplify_algebra(const MultiMatrixAlgebra& alg, int n);
AlgebraElement amp_embed(const AlgebraElement& a, int n, int p, int q);
AlgebraElement amp_outer(const MultiMatrixAlgebra& alg, int n, const Matrix& outer);
AlgebraElement amp_entry(const AlgebraElement& x, const MultiMatrixAlgebra& inner, int n,
                         int p, int q);

AlgebraElement random_element(const MultiMatrixAlgebra& alg, Rng& rng);
AlgebraElement random_hermitian(const MultiMatrixAlgebra& alg, Rng& rng);
AlgebraElement random_positive(const MultiMatrixAlgebra& alg, Rng& rng);

}  // namespace modcp
