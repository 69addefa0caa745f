// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "wc4dvar/operators.hpp"
#include "wc4dvar/types.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace wc4dvar {

enum class TerminationReason { none, tolerance, quadratic_decrease, full_accuracy, iteration_cap };

const char *to_string(TerminationReason r);

struct SolverControls {
  int max_iterations = 50;
  /// Relative residual threshold used by residual-based stopping rules.
  double residual_tolerance = 1e-6;
  /// GMRES only: stop once the monitored residual norm drops below
  /// residual_tolerance times its initial value.
  bool use_residual_tolerance = false;
  /// A solve counts as "full accuracy" once the solver's residual norm has
  /// dropped below this fraction of its initial value.
  double full_accuracy_tolerance = 1e-12;
  /// The stop probe is consulted when mod(j, check_period) == 0.
  int check_period = 1;

  void validate() const;
};

struct InnerTrace {
  /// Entry 0 is the initial residual norm, entry j the norm after iteration j.
  std::vector<double> residual_norms;
  /// Model value per iteration when known, NaN otherwise (entry j-1 for iteration j).
  std::vector<double> q_values;
  TerminationReason reason = TerminationReason::none;
  int iterations = 0;
};

/// What a stop probe reports back: stop with a reason, and optionally the
/// model value it computed so it lands in the trace.
struct ProbeResult {
  std::optional<TerminationReason> stop;
  double q = std::numeric_limits<double>::quiet_NaN();
};

using GmresProbe = std::function<ProbeResult(int iteration, const Vector &solution)>;

struct GmresResult {
  Vector solution;
  InnerTrace trace;
};

/// GMRES on the left-preconditioned system P^{-1} A x = P^{-1} b from x = 0.
///
/// Modified Gram-Schmidt Arnoldi with a second pass when the first leaves
/// more than 1e-8 relative overlap with the basis; no restarts. The residual
/// norms recorded are those of the preconditioned system. When a probe is
/// given, the current iterate is formed every check_period iterations and
/// passed to it.
GmresResult gmres_left_preconditioned(const LinearMap &matvec, const LinearMap &precond_inverse,
                                      const Vector &rhs, const SolverControls &controls,
                                      const GmresProbe &probe = {});

/// State of a FOM iteration handed to the stop probe.
struct FomProgress {
  int iteration = 0;
  double q = 0.0;      // q(x) = 1/2 x^T A x - b^T x at the current iterate
  double gamma = 0.0;  // ||A x - b||_M
  const std::vector<Vector> *basis = nullptr;
  const Vector *coefficients = nullptr;

  /// The current iterate (U y, or P y for the forcing variant).
  Vector solution() const;
};

using FomProbe = std::function<std::optional<TerminationReason>(const FomProgress &)>;

struct FomResult {
  Vector solution;
  InnerTrace trace;
  /// Bases kept for inspection: U and Q (Q holds the M^{-1}-images of U).
  std::vector<Vector> u_basis;
  std::vector<Vector> q_basis;
};

/// Left-preconditioned FOM for M A x = M b with SPD A and SPD M, working in
/// the M^{-1} inner product. M is only ever applied directly.
///
/// Tracks q_k = q(U y) and gamma_k = ||grad q||_M at every iteration.
/// Throws NumericalError on loss of positivity (w^T v < 0), which signals
/// that A or M is not SPD.
FomResult fom_left_preconditioned(const LinearMap &matvec, const LinearMap &precond,
                                  const Vector &rhs, const SolverControls &controls,
                                  const FomProbe &probe = {});

/// FOM specialized to the forcing formulation
///
///   (D^{-1} + L^{-T} H^T R^{-1} H L^{-1}) dp = r,  preconditioned by D,
///
/// which recurs P = L^{-1} U alongside the basis and returns dx = P y, so the
/// final back-solve dx = L^{-1} dp is never needed. One L^{-1} and one L^{-T}
/// per iteration; D^{-1} is never applied.
FomResult fom_forcing(const BlockBidiagonal &L, const BlockDiagonalSPD &D,
                      const SelectionObservation &H, const BlockDiagonalSPD &R, const Vector &r,
                      const SolverControls &controls, const FomProbe &probe = {},
                      OpCounts *counts = nullptr);

/// Exactly `iterations` unpreconditioned CG steps from zero; stops early only
/// when the residual is exactly zero. Throws NumericalError if p^T A p <= 0.
Vector cg(const LinearMap &matvec, const Vector &rhs, int iterations);

}  // namespace wc4dvar
