#pragma once

#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "modcp/numeric.hpp"

namespace modcp {

// Affine-conic feasibility: find Hermitian blocks X_1 .. X_r with
// A vec(X) = b and X_j PSD for every j listed in psd_blocks, where vec is the
// blockwise herm_to_vec coordinate map.
struct FeasibilityProblem {
  std::vector<int> variable_dims;
  RMatrix affine;     // rows x total herm coordinates
  RVector rhs;
  std::vector<int> psd_blocks;
  double tol = 1e-7;
  int max_iters = 50000;  // MODCP_MAX_ITERS environment variable overrides
};

enum class SolveStatus { Feasible, Stalled };

struct SolveReport {
  SolveStatus status = SolveStatus::Stalled;
  std::vector<Matrix> point;   // PSD-respecting iterate
  double affine_residual = 0;  // Euclidean distance from point to the affine set
  double psd_residual = 0;     // most negative eigenvalue over the conic blocks
  int iters = 0;
};

// Coordinate bookkeeping for a list of Hermitian variable blocks.
struct VarLayout {
  std::vector<int> dims;
  std::vector<int> offsets;
  int total = 0;

  explicit VarLayout(const std::vector<int>& block_dims);
  int offset(int block) const { return offsets.at(block); }
};

RVector pack_blocks(const VarLayout& layout, const std::vector<Matrix>& blocks);
std::vector<Matrix> unpack_blocks(const VarLayout& layout, const RVector& v);

// Builds affine rows. Each constraint is entered as a complex-linear
// functional of the variable entries, sum of coeff * X_block(p, q); finishing
// emits the real-part row and, when the functional is not already Hermitian,
// the imaginary-part row.
class AffineBuilder {
 public:
  explicit AffineBuilder(std::vector<int> variable_dims);

  void add_term(int block, int p, int q, Complex coeff);
  void finish(Complex rhs);

  // single-entry constraint X_block(p, q) = value
  void pin(int block, int p, int q, Complex value);

  FeasibilityProblem take(std::vector<int> psd_blocks, double tol = 1e-7);
  int rows() const { return static_cast<int>(rows_.size()); }
  const VarLayout& layout() const { return layout_; }

 private:
  VarLayout layout_;
  std::map<int, Matrix> terms_;
  std::vector<RVector> rows_;
  std::vector<double> rhs_;
};

// Orthogonal projection of the blocks onto the affine solution set of the
// problem's rows; InconsistentConstraints when the system has no solution.
std::vector<Matrix> project_affine(const FeasibilityProblem& problem,
                                   const std::vector<Matrix>& x);

// Dykstra's alternating projections between the affine set and the PSD
// product cone, with the correction memory on the cone side only. The affine
// set is reduced once to an orthonormal row system; inconsistent rows raise
// InconsistentConstraints.
SolveReport dykstra_solve(const FeasibilityProblem& problem,
                          const std::vector<Matrix>* start = nullptr);

// Smallest t in [lo, hi] whose instance is feasible, located by bisection.
// make_problem(t) must be monotone: feasible instances stay feasible as t
// grows. hi must be feasible (UpperBoundInfeasible otherwise); the returned
// value is certified by an actual solver run at some t <= returned + tol.
double bisection_min(const std::function<FeasibilityProblem(double)>& make_problem, double lo,
                     double hi, double tol,
                     const std::function<std::vector<Matrix>(double)>& start_for = nullptr);

}  // namespace modcp
