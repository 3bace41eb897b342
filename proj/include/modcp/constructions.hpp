#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "modcp/cpcalc.hpp"
#include "modcp/feasibility.hpp"

namespace modcp {

// Concatenation of block lists / block data; the C*-direct sum.
MultiMatrixAlgebra direct_sum(const MultiMatrixAlgebra& a, const MultiMatrixAlgebra& b);
AlgebraElement direct_sum(const AlgebraElement& a, const AlgebraElement& b);

// Unitization of a module with unital central action rho: 𝔄 -> A. Pairs
// (a, α) carry the twisted product (a,α)(b,β) = (ab + α·b + β·a, αβ); the
// model realizes it on the plain direct sum A⊕𝔄 through the *-isomorphism
// iso(a, α) = (a + rho(α)) ⊕ α.
struct UnitizationResult {
  CentralAction action;              // the unitized action
  MultiMatrixAlgebra algebra_tilde;  // A ⊕ 𝔄
  CentralAction action_tilde;        // α ↦ rho(α) ⊕ α
  BlockLinearMap iota_A;             // a ↦ iso(a, 0) = a ⊕ 0
  AlgebraElement iota_unit;          // iso(0, 1) = rho(1) ⊕ 1, the unit
  BlockLinearMap iso;                // pair coordinates -> model coordinates
};

UnitizationResult unitize(const CentralAction& action);

// The pair a model point represents: α is the 𝔄 section, a the A section
// minus rho(α).
std::pair<AlgebraElement, AlgebraElement> iso_inverse(const UnitizationResult& u,
                                                      const AlgebraElement& x);

// sup{‖ab + α·b‖ : ‖b‖ = 1} = ‖a + rho(α)‖; a seminorm only — it kills
// (-1, 1) — so the model norm on A⊕𝔄 is the one used everywhere else.
double unitization_seminorm(const UnitizationResult& u, const AlgebraElement& a,
                            const AlgebraElement& alpha);

// θ̃ on the unitization of the source. UnitalTarget lands in B itself via
// θ̃(a, α) = θ(a) + rho_B(α); General lands in B̃ via θ̃(a, α) = (θ(a), α).
// Either way the result is a u.c.p. module map restricting to θ on iota_A.
enum class UnitizationMode { UnitalTarget, General };

BlockLinearMap extend_to_unitization(const BlockLinearMap& theta, const CentralAction& actA,
                                     const CentralAction& actB, UnitizationMode mode,
                                     double tol = 1e-9);

// θ̃(a ⊕ α) = θ(a) + rho_B(α)(1 - θ(1)) on the plain direct sum A⊕𝔄;
// u.c.p. exactly when 1_A lies in the multiplicative domain of θ, which is
// checked through the Schwarz defect of the unit (UnitNotInMultiplicativeDomain).
BlockLinearMap extend_direct_sum(const BlockLinearMap& theta, const CentralAction& actA,
                                 const CentralAction& actB, double tol = 1e-9);

// A factorization of θ: A -> B through matrix algebras over E: per stage
// c.c.p. module maps φ: A -> M_k(E) and ψ: M_k(E) -> B whose composition
// approaches θ on the probe set. The actions share one acting algebra 𝔄.
struct FactorizationStage {
  int k = 1;
  BlockLinearMap phi;
  BlockLinearMap psi;
};

struct FactorizationWitness {
  MultiMatrixAlgebra E;
  CentralAction actA;
  CentralAction actE;
  CentralAction actB;
  std::vector<FactorizationStage> stages;
  std::vector<AlgebraElement> probe_set;
};

struct StageReport {
  MapClass phi_class;
  MapClass psi_class;
  double gap = 0;  // max over probes of ‖ψ(φ(a)) - θ(a)‖
};

struct FactorizationReport {
  std::vector<StageReport> stages;
  double final_gap = 0;
  bool monotone = true;  // gaps non-increasing along the stage list
};

// Classifies every stage (StageNotCCP when one is not a c.c.p. module map)
// and reports the composition gaps over the probe set.
FactorizationReport verify_factorization(const BlockLinearMap& theta,
                                         const FactorizationWitness& w, double tol = 1e-9);

// Witness for θ̃ through M_k(E⊕𝔄): each stage is extended to the
// unitizations and routed through the embedding M_k(E)⊕𝔄 -> M_k(E⊕𝔄) and
// its trace-averaging left inverse, so every lifted stage is u.c.p. and the
// composed gap telescopes to the original one.
FactorizationWitness lift_nuclearity_witness(const BlockLinearMap& theta,
                                             const FactorizationWitness& w, double tol = 1e-9);

// u = φ̃(1) and a u.c.p. module map φ with u^{1/2} φ(·) u^{1/2} = φ̃.
// Invertible u gives the closed form u^{-1/2} φ̃(·) u^{-1/2}; singular u is
// solved as a feasibility problem over the partial Choi blocks (Choi PSD,
// unital, module, compression rows), SolverStall when the budget runs out.
struct RescaleResult {
  AlgebraElement u;
  BlockLinearMap phi;
};

RescaleResult ucp_rescale(const BlockLinearMap& phi_tilde, const CentralAction& actA,
                          const CentralAction& actM, double tol = 1e-9);

// Rescales every stage to u.c.p.: φ_n from ucp_rescale, then
// ψ_n(x) = c^{-1/2} ψ̃_n(u^{1/2} x u^{1/2}) c^{-1/2} with c = ψ̃_n(φ̃_n(1)),
// solved by the same rescale machinery when c is singular.
FactorizationWitness unitalize_factorization(const BlockLinearMap& theta,
                                             const FactorizationWitness& w, double tol = 1e-9);

// Correspondence CP(M_n(C), A) <-> CP_𝔄(M_n(𝔄), A): forward sends θ to
// θ̃(Σ α_ij ⊗ e_ij) = Σ α_ij · θ(e_ij); backward restricts along
// x ↦ 1_𝔄 ⊗ x. Forward input must be completely positive (NotCP).
enum class Direction { Forward, Backward };

BlockLinearMap cp1_correspond(Direction dir, const BlockLinearMap& input,
                              const CentralAction& act);

// The Choi element [θ(e_ij)] of θ: M_n(C) -> A as an element of M_n(A);
// positive exactly when θ is completely positive.
AlgebraElement cp1_choi_element(const BlockLinearMap& theta);

// Correspondence CP_𝔄(A, M_n(𝔄)) <-> CP_𝔄(M_n(A), 𝔄): forward is
// φ̂([a_ij]) = Σ_ij φ(a_ij)_ij, backward is φ(a)_ij = φ̂(e_ij ⊗ a).
BlockLinearMap cp2_correspond(Direction dir, const BlockLinearMap& input, int n);

// Θ(E_pq ⊗ a) = E_pq ⊗ θ_{pq}(a) between the 2x2 amplifications, corners
// ordered (θ1, θ2; θ3, θ4) = ((0,0), (0,1); (1,0), (1,1)).
BlockLinearMap assemble_2x2(const BlockLinearMap& t1, const BlockLinearMap& t2,
                            const BlockLinearMap& t3, const BlockLinearMap& t4);

// Consequences of complete positivity for an assembled Θ (NotCP when it is
// not): bimodule law for the doubled actions, CP bimodule corners, the
// adjoint flip θ2 = θ3(·*)* with cb(θ2) ≤ cb(Θ), domination of the
// off-diagonal real parts, and sampled Schwarz inequalities at levels ≤ 3.
struct TwoByTwoReport {
  bool bimodule = false;
  bool corners = false;
  bool adjoint_flip = false;
  bool cb_dominated = false;
  double cb_theta2 = 0;
  double cb_Theta = 0;
  bool offdiag_dominated = false;
  bool schwarz = false;

  bool all() const {
    return bimodule && corners && adjoint_flip && cb_dominated && offdiag_dominated && schwarz;
  }
};

TwoByTwoReport verify_2x2(const BlockLinearMap& Theta, const BimoduleStructure& bimodA,
                          const BimoduleStructure& bimodB, double tol = 1e-9, int trials = 8,
                          std::uint64_t seed = 1);

}  // namespace modcp
