#pragma once

#include <vector>

#include "modcp/algebra.hpp"

namespace modcp {

struct BlockLinearMap;  // full definition in cpcalc.hpp

// Central module action: a *-homomorphism rho from the acting algebra into
// the center of the target, stored by its values on the matrix-unit basis of
// the source. The action is s . a = rho(s) a = a rho(s).
struct CentralAction {
  MultiMatrixAlgebra source;
  MultiMatrixAlgebra target;
  std::vector<AlgebraElement> rho;
  bool unital = true;
};

// Validates multiplicativity and *-compatibility on basis pairs (NotStarHom),
// block-scalar values (NotCentral) and, when the flag is set, rho(1) = 1
// (NotUnital).
CentralAction make_action(const MultiMatrixAlgebra& source, const MultiMatrixAlgebra& target,
                          std::vector<AlgebraElement> rho, bool unital = true,
                          double tol = 1e-9);

AlgebraElement apply_action(const CentralAction& act, const AlgebraElement& alpha);
AlgebraElement act(const CentralAction& act, const AlgebraElement& alpha,
                   const AlgebraElement& a);

// C acting by scalars.
CentralAction trivial_action(const MultiMatrixAlgebra& target);

// C^m acting through a partition of the target blocks: character w is sent to
// the sum of the central projections of the blocks in parts[w]. Every part
// must be nonempty and the parts must tile the block list.
CentralAction partition_action(const MultiMatrixAlgebra& target,
                               const std::vector<std::vector<int>>& parts);

// Same action on the amplification M_n(A).
CentralAction amplify_action(const CentralAction& act, int n);

// Two commuting central actions on one algebra make it a bimodule:
// alpha . a . beta = rho_left(alpha) a rho_right(beta).
struct BimoduleStructure {
  CentralAction left;
  CentralAction right;
};

BimoduleStructure make_bimodule(CentralAction left, CentralAction right);

// Hilbert space carrying commuting unital representations: rep_left of the
// left algebra and rep_right_op of the opposite of the right algebra, i.e.
// rep_right_op(a b) = rep_right_op(b) rep_right_op(a). Operators on it form a
// bimodule via (alpha . T . beta) xi = T (beta . xi . alpha).
struct BimoduleHilbert {
  int dim = 0;
  MultiMatrixAlgebra left_alg;   // acts on vectors from the left
  MultiMatrixAlgebra right_alg;  // acts on vectors from the right
  std::vector<Matrix> rep_left;
  std::vector<Matrix> rep_right_op;
};

BimoduleHilbert make_bimodule_hilbert(int dim, const MultiMatrixAlgebra& left_alg,
                                      const MultiMatrixAlgebra& right_alg,
                                      std::vector<Matrix> rep_left,
                                      std::vector<Matrix> rep_right_op,
                                      double tol = 1e-9);

Matrix rep_left_apply(const BimoduleHilbert& h, const AlgebraElement& beta);
Matrix rep_right_apply(const BimoduleHilbert& h, const AlgebraElement& alpha);

// H with both algebras C, acting by scalars.
BimoduleHilbert trivial_bimodule_hilbert(int dim);

// Module and bimodule residuals for linear maps; definitions in cpcalc.cpp.
double module_residual(const BlockLinearMap& f, const CentralAction& src,
                       const CentralAction& tgt);
bool is_module_map(const BlockLinearMap& f, const CentralAction& src,
                   const CentralAction& tgt, double tol = 1e-9);
double bimodule_residual(const BlockLinearMap& f, const BimoduleStructure& src,
                         const BimoduleStructure& tgt);
bool is_bimodule_map(const BlockLinearMap& f, const BimoduleStructure& src,
                     const BimoduleStructure& tgt, double tol = 1e-9);

// Residual of the bimodule-map law for maps into operators on h, where both
// module actions act by composition on the vector side: the law reads
// f(rho_left(alpha) a) = f(a) rep_right_op(alpha) and
// f(a rho_right(beta)) = f(a) rep_left(beta).
double bh_bimodule_residual(const BlockLinearMap& f, const BimoduleStructure& src,
                            const BimoduleHilbert& h);

}  // namespace modcp
