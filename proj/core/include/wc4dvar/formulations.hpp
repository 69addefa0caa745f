// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "wc4dvar/operators.hpp"
#include "wc4dvar/problem.hpp"
#include "wc4dvar/types.hpp"

namespace wc4dvar {

/// Misfit vectors of a linearization point x_k:
///   b = (x_b - x^(0), c_1, ..., c_Nsw) with c_j = M_j(x^(j-1)) - x^(j),
///   d_j = y_j - H_j x^(j).
/// With these signs q_st(0) = J(x_k) and grad q_st(0) = grad J(x_k).
struct Misfits {
  Vector b;
  Vector d;
};

Misfits compute_misfits(const NonlinearProblem &problem, const Vector &x,
                        OpCounts *counts = nullptr);

/// One Gauss-Newton subproblem
///
///   min q_st(dx) = 1/2 ||L dx - b||^2_{D^-1} + 1/2 ||H dx - d||^2_{R^-1}
///
/// together with the approximation Ltilde used by the preconditioners.
/// Immutable once built.
struct GNSubproblem {
  BlockBidiagonal L;
  BlockBidiagonal Ltilde;
  SelectionObservation H;
  BlockDiagonalSPD D;
  BlockDiagonalSPD R;
  Vector b;
  Vector d;
  /// By-products of the misfit weighting, reused for right-hand sides.
  Vector Dinv_b;
  Vector Rinv_d;
  /// q_st(0).
  double q0 = 0.0;

  const BlockLayout &state_layout() const { return L.layout(); }
  const BlockLayout &obs_layout() const { return H.obs_layout(); }
};

/// Linearizes the problem at x. Ltilde uses the requested model
/// approximation (exact reuses the tangent-linear blocks of L); D^{-1} is
/// realized per dinv.
GNSubproblem linearize(const NonlinearProblem &problem, const Vector &x, ModelApprox approx,
                       InverseMode dinv = InverseMode::exact(), OpCounts *counts = nullptr);

/// q_st(dx); one application each of L, D^{-1}, H and R^{-1}.
double eval_qst(const GNSubproblem &sub, const Vector &dx, OpCounts *counts = nullptr);

/// grad q_st(dx) = L^T D^{-1}(L dx - b) + H^T R^{-1}(H dx - d).
Vector qst_gradient(const GNSubproblem &sub, const Vector &dx);

/// Layout of saddle vectors (dlambda, dmu, dx) of length 2s + m.
struct SaddleLayout {
  Index s = 0;
  Index m = 0;

  explicit SaddleLayout(const GNSubproblem &sub)
      : s(sub.state_layout().total()), m(sub.obs_layout().total()) {}
  SaddleLayout(Index s_, Index m_) : s(s_), m(m_) {}

  Index total() const { return 2 * s + m; }
  auto lambda(Vector &v) const { return v.segment(0, s); }
  auto lambda(const Vector &v) const { return v.segment(0, s); }
  auto mu(Vector &v) const { return v.segment(s, m); }
  auto mu(const Vector &v) const { return v.segment(s, m); }
  auto x(Vector &v) const { return v.segment(s + m, s); }
  auto x(const Vector &v) const { return v.segment(s + m, s); }

  Vector assemble(const Vector &lambda, const Vector &mu, const Vector &x) const;
  void check(const Vector &v, const char *what) const;
};

/// (D dl + L dx, R dmu + H dx, L^T dl + H^T dmu).
Vector saddle_matvec(const GNSubproblem &sub, const Vector &v, OpCounts *counts = nullptr);

/// Right-hand side (b, d, 0) of the saddle system.
Vector saddle_rhs(const GNSubproblem &sub);

/// S^{-1} v = Ltilde^{-1} D Ltilde^{-T} v.
Vector apply_Sinv(const GNSubproblem &sub, const Vector &v, OpCounts *counts = nullptr);

/// Inverses of the saddle preconditioners
///
///   P_M = [D 0 Lt; 0 R 0; Lt^T 0 0],  P_B = diag(D, R, -S),
///   P_T = [D 0 Lt; 0 R H; 0 0 S].
Vector apply_PM_inverse(const GNSubproblem &sub, const Vector &r, OpCounts *counts = nullptr);
Vector apply_PB_inverse(const GNSubproblem &sub, const Vector &r, OpCounts *counts = nullptr);
Vector apply_PT_inverse(const GNSubproblem &sub, const Vector &r, OpCounts *counts = nullptr);

struct LinearSystem {
  LinearMap matvec;
  Vector rhs;
  LinearMap precond;
};

/// Normal equations (L^T D^{-1} L + H^T R^{-1} H) dx = L^T D^{-1} b + H^T R^{-1} d
/// with preconditioner S^{-1}, applied directly.
LinearSystem state_system(const GNSubproblem &sub, OpCounts *counts = nullptr);

/// Forcing system (D^{-1} + L^{-T} H^T R^{-1} H L^{-1}) dp = D^{-1} b + L^{-T} H^T R^{-1} d
/// with preconditioner D, applied directly.
LinearSystem forcing_system(const GNSubproblem &sub, OpCounts *counts = nullptr);

/// D^{-1} b + L^{-T} H^T R^{-1} d.
Vector forcing_rhs(const GNSubproblem &sub, OpCounts *counts = nullptr);

}  // namespace wc4dvar
