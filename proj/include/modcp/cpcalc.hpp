#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "modcp/actions.hpp"
#include "modcp/algebra.hpp"

namespace modcp {

// Linear map between multi-matrix algebras. superop is the dim(target) x
// dim(source) matrix over the matrix-unit bases; since those bases are
// Hilbert-Schmidt orthonormal, hs_adjoint is the conjugate transpose and
// composition is the matrix product. choi caches the ambient Choi matrix of
// the compression-extension of the map through M_{N_s} -> M_{N_t}, indexed by
// (source ambient, target ambient) pairs with the source factor outer.
struct BlockLinearMap {
  MultiMatrixAlgebra source;
  MultiMatrixAlgebra target;
  Matrix superop;
  std::shared_ptr<const Matrix> choi;
};

BlockLinearMap make_map(const MultiMatrixAlgebra& source, const MultiMatrixAlgebra& target,
                        Matrix superop);
BlockLinearMap map_from_function(const MultiMatrixAlgebra& source,
                                 const MultiMatrixAlgebra& target,
                                 const std::function<AlgebraElement(const AlgebraElement&)>& f);
BlockLinearMap identity_map(const MultiMatrixAlgebra& alg);
BlockLinearMap zero_map(const MultiMatrixAlgebra& source, const MultiMatrixAlgebra& target);
BlockLinearMap transpose_map(const MultiMatrixAlgebra& alg);  // blockwise transpose

AlgebraElement apply(const BlockLinearMap& f, const AlgebraElement& a);

// Ambient Choi matrix of the compression-extension through M_{N_s} -> M_{N_t};
// the map is completely positive iff this matrix is PSD. from_choi reads a map
// back off such a matrix (entries outside the algebra support are ignored), so
// choi(from_choi(C)) = C whenever C is supported correctly.
const Matrix& choi(const BlockLinearMap& f);
BlockLinearMap from_choi(const Matrix& c, const MultiMatrixAlgebra& source,
                         const MultiMatrixAlgebra& target);

// Per source-target block pair (r, s), flattened s-fastest: the d_r e_s sized
// matrix with entries f(e^{(r)}_{ij})^{(s)}(k, l) at ((i,k),(j,l)). The map is
// completely positive iff all these blocks are PSD; they are the ambient Choi
// with its automatic zero rows removed.
std::vector<Matrix> partial_choi(const BlockLinearMap& f);
BlockLinearMap map_from_partial_choi(const MultiMatrixAlgebra& source,
                                     const MultiMatrixAlgebra& target,
                                     const std::vector<Matrix>& blocks);
std::vector<int> partial_choi_dims(const MultiMatrixAlgebra& source,
                                   const MultiMatrixAlgebra& target);

BlockLinearMap compose(const BlockLinearMap& f, const BlockLinearMap& g);  // f after g
BlockLinearMap hs_adjoint(const BlockLinearMap& f);
BlockLinearMap amplify_map(const BlockLinearMap& f, int n);

BlockLinearMap operator+(const BlockLinearMap& f, const BlockLinearMap& g);
BlockLinearMap operator-(const BlockLinearMap& f, const BlockLinearMap& g);
BlockLinearMap operator*(Complex s, const BlockLinearMap& f);

// max over basis elements u of the HS norm of (f - g)(e_u)
double map_distance(const BlockLinearMap& f, const BlockLinearMap& g);

double hermitian_defect(const BlockLinearMap& f);  // sup over basis of |f(x*)* - f(x)|
bool is_hermitian_map(const BlockLinearMap& f, double tol = 1e-9);
double choi_min_eig(const BlockLinearMap& f);
bool is_cp(const BlockLinearMap& f, double tol = 1e-9);
double unit_defect(const BlockLinearMap& f);
bool is_unital_map(const BlockLinearMap& f, double tol = 1e-9);

// Multiplication operators in coordinates: the matrix of x -> a x
// (resp. x -> x b) acting on coords.
Matrix left_mult_superop(const AlgebraElement& a);
Matrix right_mult_superop(const AlgebraElement& b);

struct MapClass {
  bool hermitian = false;
  bool positive = false;
  bool cp = false;
  bool unital = false;
  bool contractive = false;
  bool module = true;
  std::map<std::string, double> witnesses;
};

MapClass classify(const BlockLinearMap& f, double tol = 1e-9);
MapClass classify(const BlockLinearMap& f, const CentralAction& src, const CentralAction& tgt,
                  double tol = 1e-9);

// Completely bounded norm through the dual diamond-norm feasibility program:
// t is admissible iff [[Y0, -J], [-J*, Y1]] is PSD with the partial traces of
// Y0, Y1 over the output factor dominated by t. A polar-decomposition start is
// exactly feasible at the bracket top, so the reported value is always
// certified from above; the default probe resolution is tol.
double cb_norm(const BlockLinearMap& f, double tol = 1e-6);

// Certified lower bound: projected ascent of |f_n(x)| over op-norm
// contractions x at amplification level n = ambient target dimension (where
// the cb norm of a map into matrices is attained). Restarted from random
// unitaries; never exceeds cb_norm beyond roundoff.
double cb_lower_bound(const BlockLinearMap& f, int iters = 80, int restarts = 3,
                      std::uint64_t seed = 1);

// Orthonormal basis of the largest subspace on which a unital CP map is
// multiplicative from both sides (joint kernel of the two Schwarz defect
// forms). Throws NotUCP when f is not unital completely positive.
std::vector<AlgebraElement> multiplicative_domain(const BlockLinearMap& f, double tol = 1e-9);

// Hilbert-Schmidt conditional expectation onto the *-subalgebra spanned by
// sub_basis; the span must contain the unit and be closed under products and
// adjoints (NotSubalgebra otherwise).
BlockLinearMap conditional_expectation(const MultiMatrixAlgebra& alg,
                                       const std::vector<AlgebraElement>& sub_basis,
                                       double tol = 1e-9);

// Random CP (or merely bounded, with cp = false) module maps obtained from
// Kraus terms sampled in the space of ambient intertwiners of the two
// actions; EmptyIntertwinerSpace if the actions admit none.
BlockLinearMap random_module_map(const CentralAction& src, const CentralAction& tgt, int terms,
                                 Rng& rng, bool cp = true);
BlockLinearMap random_cp_module_map(const CentralAction& src, const CentralAction& tgt, int rank,
                                    std::uint64_t seed);
BlockLinearMap random_bimodule_map(const BimoduleStructure& src, const BimoduleStructure& tgt,
                                   int terms, Rng& rng, bool cp = true);
// Target are the operators on h; the map lands in the full matrix algebra of
// size h.dim and satisfies the operator-bimodule law of bh_bimodule_residual.
BlockLinearMap random_bh_bimodule_map(const BimoduleStructure& src, const BimoduleHilbert& h,
                                      int terms, Rng& rng, bool cp = true);

// Checks the matricial order bound: for sampled jointly diagonalizable
// positive alpha, beta and contractions a with -m <= a <= m for
// m = alpha . 1 . beta at level n, verifies -k m' <= f_n(a) <= k m' for the
// corresponding m' downstairs. Margins below -tol * max(1, k |m'|) fail.
struct MatricialBoundReport {
  bool pass = true;
  double worst_margin = 0;  // most negative eigenvalue margin seen
  int trials = 0;
};
MatricialBoundReport matricial_bound_check(const BlockLinearMap& f,
                                           const BimoduleStructure& src,
                                           const BimoduleStructure& tgt, double bound,
                                           int trials, int n_max, std::uint64_t seed,
                                           double tol = 1e-9);

}  // namespace modcp
