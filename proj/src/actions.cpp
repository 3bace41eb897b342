#include "modcp/actions.hpp"

#include <cmath>
#include <utility>

namespace modcp {

namespace {

AlgebraElement apply_linear(const MultiMatrixAlgebra& source,
                            const std::vector<AlgebraElement>& values,
                            const AlgebraElement& x) {
  AlgebraElement out = zero_element(values.front().algebra);
  CVector c = coords(x);
  for (int u = 0; u < source.dim(); ++u)
    if (c(u) != Complex(0)) out = out + c(u) * values[u];
  return out;
}

}  // namespace

CentralAction make_action(const MultiMatrixAlgebra& source, const MultiMatrixAlgebra& target,
                          std::vector<AlgebraElement> rho, bool unital, double tol) {
  if (static_cast<int>(rho.size()) != source.dim())
    throw ShapeMismatch("make_action: one value per source basis element required");
  for (const auto& v : rho)
    if (v.algebra != target) throw AlgebraMismatch("make_action: value outside target");

  // values must be block scalars, i.e. lie in the center
  for (const auto& v : rho)
    for (const auto& m : v.data) {
      int d = static_cast<int>(m.rows());
      Complex mean = m.trace() / static_cast<double>(d);
      if ((m - mean * Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > tol)
        throw NotCentral("make_action: value is not central");
    }

  CentralAction out{source, target, std::move(rho), unital};
  for (int u = 0; u < source.dim(); ++u) {
    auto eu = basis_element(source, u);
    if (hs_norm(apply_action(out, adjoint(eu)) - adjoint(out.rho[u])) > tol)
      throw NotStarHom("make_action: rho(x*) != rho(x)*");
    for (int v = 0; v < source.dim(); ++v) {
      auto ev = basis_element(source, v);
      if (hs_norm(apply_action(out, eu * ev) - out.rho[u] * out.rho[v]) > tol)
        throw NotStarHom("make_action: rho is not multiplicative");
    }
  }
  if (unital && hs_norm(apply_action(out, unit(source)) - unit(target)) > tol)
    throw NotUnital("make_action: rho(1) != 1");
  return out;
}

AlgebraElement apply_action(const CentralAction& act, const AlgebraElement& alpha) {
  if (alpha.algebra != act.source) throw AlgebraMismatch("apply_action: wrong source");
  return apply_linear(act.source, act.rho, alpha);
}

AlgebraElement act(const CentralAction& action, const AlgebraElement& alpha,
                   const AlgebraElement& a) {
  if (a.algebra != action.target) throw AlgebraMismatch("act: wrong target element");
  return apply_action(action, alpha) * a;
}

CentralAction trivial_action(const MultiMatrixAlgebra& target) {
  auto scalars = make_algebra({1}, "C");
  return make_action(scalars, target, {unit(target)});
}

CentralAction partition_action(const MultiMatrixAlgebra& target,
                               const std::vector<std::vector<int>>& parts) {
  int m = static_cast<int>(parts.size());
  if (m == 0) throw EmptyBlocks("partition_action: empty partition");
  std::vector<int> seen(target.num_blocks(), 0);
  for (const auto& p : parts) {
    if (p.empty()) throw EmptyBlocks("partition_action: empty part");
    for (int k : p) {
      if (k < 0 || k >= target.num_blocks())
        throw SizeMismatch("partition_action: block index out of range");
      seen[k]++;
    }
  }
  for (int c : seen)
    if (c != 1) throw ShapeMismatch("partition_action: parts must tile the blocks");

  auto scalars = make_algebra(std::vector<int>(m, 1));
  auto zs = center_basis(target);
  std::vector<AlgebraElement> rho;
  rho.reserve(m);
  for (const auto& p : parts) {
    auto v = zero_element(target);
    for (int k : p) v = v + zs[k];
    rho.push_back(std::move(v));
  }
  return make_action(scalars, target, std::move(rho));
}

CentralAction amplify_action(const CentralAction& action, int n) {
  std::vector<AlgebraElement> rho;
  rho.reserve(action.rho.size());
  for (const auto& v : action.rho) {
    auto amp = zero_element(amplify_algebra(action.target, n));
    for (size_t k = 0; k < v.data.size(); ++k)
      amp.data[k] = kron(Matrix::Identity(n, n), v.data[k]);
    rho.push_back(std::move(amp));
  }
  return make_action(action.source, amplify_algebra(action.target, n), std::move(rho),
                     action.unital);
}

BimoduleStructure make_bimodule(CentralAction left, CentralAction right) {
  if (left.target != right.target)
    throw AlgebraMismatch("make_bimodule: actions on different algebras");
  // central ranges commute automatically; nothing further to check
  return BimoduleStructure{std::move(left), std::move(right)};
}

BimoduleHilbert make_bimodule_hilbert(int dim, const MultiMatrixAlgebra& left_alg,
                                      const MultiMatrixAlgebra& right_alg,
                                      std::vector<Matrix> rep_left,
                                      std::vector<Matrix> rep_right_op, double tol) {
  if (dim <= 0) throw NonPositiveBlock("make_bimodule_hilbert: dim must be positive");
  if (static_cast<int>(rep_left.size()) != left_alg.dim() ||
      static_cast<int>(rep_right_op.size()) != right_alg.dim())
    throw ShapeMismatch("make_bimodule_hilbert: one operator per basis element required");
  for (const auto& m : rep_left)
    if (m.rows() != dim || m.cols() != dim)
      throw ShapeMismatch("make_bimodule_hilbert: operator size mismatch");
  for (const auto& m : rep_right_op)
    if (m.rows() != dim || m.cols() != dim)
      throw ShapeMismatch("make_bimodule_hilbert: operator size mismatch");

  BimoduleHilbert h{dim, left_alg, right_alg, std::move(rep_left), std::move(rep_right_op)};

  auto check_rep = [&](const MultiMatrixAlgebra& alg,
                       auto&& eval, bool anti, const char* who) {
    for (int u = 0; u < alg.dim(); ++u) {
      auto eu = basis_element(alg, u);
      if ((eval(adjoint(eu)) - eval(eu).adjoint()).cwiseAbs().maxCoeff() > tol)
        throw NotStarHom(std::string(who) + ": star is not preserved");
      for (int v = 0; v < alg.dim(); ++v) {
        auto ev = basis_element(alg, v);
        Matrix lhs = eval(eu * ev);
        Matrix rhs = anti ? eval(ev) * eval(eu) : eval(eu) * eval(ev);
        if ((lhs - rhs).cwiseAbs().maxCoeff() > tol)
          throw NotStarHom(std::string(who) + (anti ? ": not anti-multiplicative"
                                                    : ": not multiplicative"));
      }
    }
    if ((eval(unit(alg)) - Matrix::Identity(h.dim, h.dim)).cwiseAbs().maxCoeff() > tol)
      throw NotUnital(std::string(who) + ": unit is not preserved");
  };
  check_rep(h.left_alg, [&](const AlgebraElement& b) { return rep_left_apply(h, b); },
            false, "rep_left");
  check_rep(h.right_alg, [&](const AlgebraElement& a) { return rep_right_apply(h, a); },
            true, "rep_right_op");

  for (const auto& l : h.rep_left)
    for (const auto& r : h.rep_right_op)
      if ((l * r - r * l).cwiseAbs().maxCoeff() > tol)
        throw NotStarHom("make_bimodule_hilbert: representations do not commute");
  return h;
}

Matrix rep_left_apply(const BimoduleHilbert& h, const AlgebraElement& beta) {
  if (beta.algebra != h.left_alg) throw AlgebraMismatch("rep_left_apply: wrong algebra");
  Matrix out = Matrix::Zero(h.dim, h.dim);
  CVector c = coords(beta);
  for (int u = 0; u < h.left_alg.dim(); ++u) out += c(u) * h.rep_left[u];
  return out;
}

Matrix rep_right_apply(const BimoduleHilbert& h, const AlgebraElement& alpha) {
  if (alpha.algebra != h.right_alg) throw AlgebraMismatch("rep_right_apply: wrong algebra");
  Matrix out = Matrix::Zero(h.dim, h.dim);
  CVector c = coords(alpha);
  for (int u = 0; u < h.right_alg.dim(); ++u) out += c(u) * h.rep_right_op[u];
  return out;
}

BimoduleHilbert trivial_bimodule_hilbert(int dim) {
  auto scalars = make_algebra({1}, "C");
  return make_bimodule_hilbert(dim, scalars, scalars, {Matrix::Identity(dim, dim)},
                               {Matrix::Identity(dim, dim)});
}

}  // namespace modcp
