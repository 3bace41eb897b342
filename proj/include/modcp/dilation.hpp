#pragma once

#include "modcp/cpcalc.hpp"

namespace modcp {

// Stinespring dilation of a c.p. bimodule map theta: A -> B(H), built in two
// GNS stages: H_hat = A (x)_B H carries a representation pi_hat of A with
// theta = W* pi_hat W, then K is the GNS space of pi_hat over the A^op leg,
// giving a representation pi that is also a bimodule map for the induced
// actions on K. V is the composite W followed by the stage-two embedding.
//
// A rank-zero theta produces K_dim = 0; the representation is then carried on
// a one-dimensional zero rep (pi = 0 into the 1x1 algebra, V = 0) so every
// field stays well-formed. K_dim is the authoritative dimension.
struct Dilation {
  int K_dim = 0;
  BlockLinearMap pi;          // A -> full matrix algebra on C^{K_dim}
  Matrix V;                   // K_dim x H_dim
  BimoduleHilbert K_actions;  // left B-rep and right A-rep on C^{K_dim}
  int gram_rank_H_hat = 0;    // dimension of the intermediate space H_hat
};

// bimodA gives A's two central actions (left of the algebra acting on the
// right of H, and vice versa); h must be a Hilbert bimodule over the same
// pair in the opposite order. theta must be c.p. and satisfy the operator
// bimodule law for (bimodA, h) within 1e-10.
Dilation stinespring_module(const BlockLinearMap& theta, const BimoduleStructure& bimodA,
                            const BimoduleHilbert& h);

// Compress K to the span of pi(A) V H (singular-value threshold 1e-10
// relative); the span is invariant under pi and both K_actions, so every
// dilation invariant survives the compression.
Dilation minimize_dilation(const Dilation& d);

// For x commuting with theta(A), the operator rho(x) determined on the
// spanning set by rho(x) pi(a) V xi = pi(a) V x xi. Requires d minimal;
// verifies [rho(x), pi(a)] and theta(a) x = V* pi(a) rho(x) V before
// returning.
Matrix commutant_lift(const Dilation& d, const BlockLinearMap& theta, const Matrix& x);

struct DilationReport {
  double hom_residual = 0;      // multiplicativity and star of pi on bases
  double reconstruction = 0;    // V* pi(a) V against theta(a)
  double pi_bimodule = 0;       // operator bimodule law for pi
  double v_bimodule = 0;        // V intertwines both Hilbert actions
  double isometry_defect = 0;   // ||V*V - 1||, diagnostic only
  bool pass = true;             // the four residuals above within tol
};

DilationReport verify_dilation(const Dilation& d, const BlockLinearMap& theta,
                               const BimoduleStructure& bimodA, const BimoduleHilbert& h,
                               double tol = 1e-8);

// Seminorm of (a . beta) (x) xi - a (x) (beta . xi) in the stage-one Gram
// form; vanishes because theta is a right-module map.
double balancing_seminorm(const BlockLinearMap& theta, const BimoduleStructure& bimodA,
                          const BimoduleHilbert& h, const AlgebraElement& beta,
                          const AlgebraElement& a, const CVector& xi);

}  // namespace modcp
