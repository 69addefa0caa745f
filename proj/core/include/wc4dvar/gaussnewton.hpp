// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "wc4dvar/formulations.hpp"
#include "wc4dvar/krylov.hpp"
#include "wc4dvar/problem.hpp"

#include <string>
#include <vector>

namespace wc4dvar {

enum class Formulation { saddle, state, forcing };
enum class PreconditionerType { none, M, T, B, S, D };

/// An algorithmic variant named AAQl-P-M, e.g. SAQ15-M-0, STQ1-S-I, FOQ50-D,
/// SAQ1-n. SAQ0-P-M is the original saddle method with its residual-only
/// stopping rule.
struct VariantSpec {
  Formulation formulation = Formulation::saddle;
  int check_period = 1;  // l; 0 only for SAQ0
  PreconditionerType preconditioner = PreconditionerType::M;
  ModelApprox approx = ModelApprox::zero;  // ignored for FO and for 'n'

  /// Throws ParameterError on malformed or illegal names.
  static VariantSpec parse(const std::string &name);
  std::string name() const;
  /// Throws ParameterError for combinations outside the naming table.
  void validate() const;

  bool uses_model_approx() const {
    return formulation != Formulation::forcing && preconditioner != PreconditionerType::none;
  }
  bool operator==(const VariantSpec &) const = default;
};

/// The 36 variants SAQl-{n,M-0,M-I,M-M}, STQl-{n,S-0,S-I,S-M}, FOQl-D for
/// l in {1, 15, 25, 50}.
std::vector<VariantSpec> default_variant_list();

struct LinesearchControls {
  double sufficient_decrease = 1e-4;
  double shrink = 0.5;
  int max_backtracks = 30;
};

struct GNControls {
  int max_outer = 10;
  /// n_inner: the inner budget of SAQ0 and the horizon of the theta schedule.
  int n_inner = 50;
  /// SAQ0 stops GMRES once the preconditioned residual norm it monitors has
  /// dropped below eps_r times its initial value ||P^{-1} (b, d, 0)||.
  double eps_r = 1e-5;
  double eps_q = 0.01;
  LinesearchControls linesearch;
  /// Hard cap on inner iterations for the globalized variants.
  int max_inner = 400;
  /// Relative residual reduction regarded as solving the system exactly.
  double full_accuracy_tolerance = 1e-12;
  /// Replace the q-decrease test by a full-accuracy solve.
  bool full_accuracy_inner = false;
  InverseMode dinv = InverseMode::exact();
  double gradient_tolerance = 1e-10;
  /// Stop once |J_k - J_{k+1}| <= stagnation_tolerance * J_k (0 disables).
  double stagnation_tolerance = 0.0;
  /// Evaluate q_st at every SAQ0 inner iteration for the trace. Not counted.
  bool trace_saq0_q = true;
  /// Evaluate J(x_k + dx_j) at every inner iteration for the trace. Not counted.
  bool trace_inner_J = false;
  /// Compare the subproblem against an independent J / gradient evaluation.
  bool check_consistency = true;

  void validate() const;
};

enum class RunStatus { completed, converged, stagnated, non_descent, failed };

const char *to_string(RunStatus s);

struct InnerRecord {
  int outer = 0;  // 0-based outer iteration
  int inner = 0;  // 1-based inner iteration
  double residual_norm = 0.0;
  double q_st = 0.0;  // NaN when not evaluated
  double J = 0.0;     // NaN unless trace_inner_J
};

struct OuterRecord {
  int outer = 0;
  double J = 0.0;          // J(x_k)
  double grad_norm = 0.0;  // ||g_k||
  double q0 = 0.0;         // q_st(0) of the subproblem
  double q_final = 0.0;    // q_st(dx_k), NaN if not evaluated
  double step_norm = 0.0;  // ||dx_k||
  double gtdx = 0.0;       // g_k^T dx_k
  double alpha = 0.0;
  double J_next = 0.0;
  int inner_iterations = 0;
  int q_evaluations = 0;
  int linesearch_evaluations = 0;
  TerminationReason inner_reason = TerminationReason::none;
  double kappa1 = 0.0;  // -g^T dx / ||g||^2
  double kappa2 = 0.0;  // ||dx|| / ||g||
  double q_consistency = 0.0;     // |q_st(0) - J| / |J|
  double grad_consistency = 0.0;  // ||grad q_st(0) - g|| / ||g||
  OpCounts counts;
};

struct RunTrace {
  std::string variant;
  RunStatus status = RunStatus::completed;
  std::string message;
  double J_initial = 0.0;
  double J_final = 0.0;
  Vector x_final;
  std::vector<OuterRecord> outer;
  std::vector<InnerRecord> inner;

  int n_outer() const { return static_cast<int>(outer.size()); }
  int total_inner() const;
  int total_q_evaluations() const;
  OpCounts total_counts() const;
};

struct JAndGradient {
  double J = 0.0;
  Vector g;
};

/// J(x) evaluated term by term.
double evaluate_J(const NonlinearProblem &problem, const Vector &x);

/// J(x) and its gradient by a direct adjoint sweep over the three terms.
JAndGradient evaluate_J_and_gradient(const NonlinearProblem &problem, const Vector &x,
                                     OpCounts *counts = nullptr);

/// max(0, (q0/2)^max(1, n_inner/j) - 1).
double theta_schedule(int j, int n_inner, double q0);

/// q0 - q >= max(eps_q min(1, ||g||^2), theta).
bool inner_termination(double q0, double q, double g_norm, double eps_q, double theta);

struct LinesearchResult {
  double alpha = 0.0;
  double J = 0.0;
  Vector x;
  int evaluations = 0;
  bool accepted = false;
  bool armijo = false;
};

/// Backtracking on J along dx from x. Throws ParameterError if g^T dx >= 0.
LinesearchResult backtracking_linesearch(const std::function<double(const Vector &)> &J,
                                         const Vector &x, const Vector &dx, double J_x,
                                         const Vector &g, const LinesearchControls &controls);

/// Gauss-Newton from x0 with the given variant.
RunTrace run_variant(const NonlinearProblem &problem, const Vector &x0, const VariantSpec &variant,
                     const GNControls &controls);

/// One inner solve on a prepared subproblem; exposed for testing.
struct InnerSolve {
  Vector dx;
  InnerTrace trace;
  int q_evaluations = 0;
  double q_final = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> q_values;  // q_st per inner iteration, NaN if unknown
};

InnerSolve solve_subproblem(const GNSubproblem &sub, const VariantSpec &variant,
                            const GNControls &controls, double g_norm, OpCounts *counts = nullptr);

}  // namespace wc4dvar
