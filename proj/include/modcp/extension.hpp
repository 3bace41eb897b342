#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "modcp/cpcalc.hpp"
#include "modcp/feasibility.hpp"

namespace modcp {

// Self-adjoint unital subspace of a multi-matrix algebra, closed under a
// central action. Maps defined only on such a span are handled by feasibility:
// complete positivity of a partial map *means* it admits a cp extension, and
// every multi-matrix target is injective (finite-dimensional C*-algebras are
// injective operator systems), so the search space is never the obstruction.
struct OperatorSystem {
  MultiMatrixAlgebra ambient;
  std::vector<AlgebraElement> basis;
  CentralAction action;  // coefficients acting centrally on the ambient
};

// Validates membership, that the span contains the unit, and closure under
// adjoints and under the action (re-expansion residual <= tol for each).
OperatorSystem make_operator_system(const MultiMatrixAlgebra& ambient,
                                    std::vector<AlgebraElement> basis,
                                    const CentralAction& action, double tol = 1e-12);

// Least-squares coordinates of x over a spanning list; writes the expansion
// residual if asked.
CVector span_coefficients(const std::vector<AlgebraElement>& basis, const AlgebraElement& x,
                          double* residual = nullptr);
CVector system_coefficients(const OperatorSystem& sys, const AlgebraElement& x,
                            double* residual = nullptr);

// A map given only on a system, by one value per basis element. Well defined
// as a linear map on the span; adjoint compatibility value(e*) = value(e)*
// is validated through re-expansion.
struct PartialMap {
  OperatorSystem system;
  std::vector<AlgebraElement> values;
  MultiMatrixAlgebra target;
  CentralAction target_action;
};

PartialMap make_partial_map(OperatorSystem system, std::vector<AlgebraElement> values,
                            const CentralAction& target_action, double tol = 1e-10);

// The linear extension on the span; IllDefined when x is not in it.
AlgebraElement partial_apply(const PartialMap& psi, const AlgebraElement& x);

// Restriction of a globally defined map to a system.
PartialMap restrict_map(const BlockLinearMap& theta, const OperatorSystem& sys,
                        const CentralAction& target_action, double tol = 1e-10);

enum class ExtendMode { Ccp, Ucp };

// Completely positive module extension of a partial map, found as a
// feasibility problem over the partial Choi blocks of the extension: rows pin
// agreement on the system basis and the module identities on the action
// basis, plus unitality (Ucp) or a positive contraction slack 1 - theta(1)
// (Ccp). Contradictory agreement rows raise InconsistentConstraints; a
// genuinely infeasible or budget-starved instance raises SolverStall.
BlockLinearMap arveson_extend(const PartialMap& psi, ExtendMode mode, double tol = 1e-7);

// Same computation, returning the solver report instead of throwing on a
// stall; map is present exactly when the run was feasible. The stalled
// iterate's distance to the affine set is the terminal gap, positive for
// genuinely infeasible data.
struct ExtendOutcome {
  std::optional<BlockLinearMap> map;
  SolveReport report;
};
ExtendOutcome arveson_extend_report(const PartialMap& psi, ExtendMode mode, double tol = 1e-7);

// A *-monomorphism onto a subalgebra that the ambient bimodule actions
// preserve, together with the actions it inherits.
struct SubBimodule {
  BlockLinearMap inclusion;   // subalgebra -> ambient
  BimoduleStructure ambient;  // actions on the ambient algebra
  BimoduleStructure induced;  // the same actions carried down the inclusion
};

// Validates the *-homomorphism (NotStarHom), injectivity and invariance of
// the image under both actions (NotSubalgebra), and computes the induced
// central actions.
SubBimodule make_sub_bimodule(const BlockLinearMap& inclusion,
                              const BimoduleStructure& ambient, double tol = 1e-9);

// Least-squares preimage under the inclusion; IllDefined when the element is
// not in the subalgebra's image.
AlgebraElement sub_preimage(const SubBimodule& sub, const AlgebraElement& x,
                            double tol = 1e-8);

// Completely bounded bimodule maps extend from a subbimodule with the same
// cb norm. Algorithm, following the classical 2x2 trick: normalize theta0 to
// cb norm one; pin a unital map on the operator system spanned inside the
// 2x2 amplification by the action images on the diagonal and the subalgebra
// in the corners; extend it by feasibility with the doubled-action module
// rows; read the extension off the upper-right corner and restore the scale.
// The unitality rows carry a small slack so the feasible set keeps interior.
BlockLinearMap wittstock_extend(const BlockLinearMap& theta0, const SubBimodule& sub,
                                const BimoduleStructure& bimodB, double tol = 1e-7);

// The spanning elements of that 2x2 system, paired with their pinned images
// (computed from theta0 normalized to cb norm one). Exposed so the
// positivity of the system-stage map can be examined directly.
std::vector<std::pair<AlgebraElement, AlgebraElement>> wittstock_system(
    const BlockLinearMap& theta0, const SubBimodule& sub, const BimoduleStructure& bimodB);

// Audit of the norm-through-positivity mechanism: a positive partial map
// attains its norm at the unit, and any norm-preserving module extension of
// it stays positive. The audit samples all three statements; a failed
// restriction check throws NotExtension, everything else is reported.
struct PositiveExtensionReport {
  bool psi_positive = true;           // sampled positivity of the partial map
  bool norm_attained_at_unit = true;  // sampled |psi(x)| <= |psi(1)| |x|
  bool norm_preserving = true;        // sampled extension norm <= |psi(1)|
  bool positive = true;               // sampled positivity of the extension
  double psi_unit_norm = 0;
  double extension_norm = 0;     // largest sampled ratio |ext(a)| / |a|
  double worst_positivity = 0;   // most negative eigenvalue seen, scaled
  std::optional<AlgebraElement> counterexample;
  int samples = 0;

  bool pass() const {
    return psi_positive && norm_attained_at_unit && norm_preserving && positive;
  }
};

PositiveExtensionReport positive_extension_audit(const PartialMap& psi,
                                                 const BlockLinearMap& extension,
                                                 double tol = 1e-7, int samples = 500,
                                                 std::uint64_t seed = 1);

// Module conditional expectation onto an action-invariant unital
// *-subalgebra, built by extending the identity of the subalgebra to a
// unital cp module map of the ambient algebra with range pinned inside the
// span. Idempotence then comes for free and is verified along with the
// restriction, complete positivity, and the module law.
BlockLinearMap injectivity_expectation(const MultiMatrixAlgebra& ambient,
                                       const std::vector<AlgebraElement>& sub_basis,
                                       const CentralAction& action, double tol = 1e-7);

}  // namespace modcp
