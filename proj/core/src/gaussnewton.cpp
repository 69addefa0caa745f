// SPDX-License-Identifier: Apache-2.0

#include "wc4dvar/gaussnewton.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <regex>

namespace wc4dvar {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

char precond_letter(PreconditionerType p) {
  switch (p) {
    case PreconditionerType::none: return 'n';
    case PreconditionerType::M: return 'M';
    case PreconditionerType::T: return 'T';
    case PreconditionerType::B: return 'B';
    case PreconditionerType::S: return 'S';
    case PreconditionerType::D: return 'D';
  }
  return '?';
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

// ---------------------------------------------------------------------------
// Variant names

VariantSpec VariantSpec::parse(const std::string &name) {
  static const std::regex re(R"(^(SA|ST|FO)Q(\d+)-(n|M|T|B|S|D)(?:-(0|I|M))?$)");
  std::smatch m;
  if (!std::regex_match(name, m, re)) {
    throw ParameterError("unrecognized variant name '" + name + "'");
  }
  VariantSpec v;
  const std::string form = m[1];
  v.formulation = form == "SA" ? Formulation::saddle
                  : form == "ST" ? Formulation::state
                                 : Formulation::forcing;
  v.check_period = std::stoi(m[2]);
  switch (m.str(3)[0]) {
    case 'n': v.preconditioner = PreconditionerType::none; break;
    case 'M': v.preconditioner = PreconditionerType::M; break;
    case 'T': v.preconditioner = PreconditionerType::T; break;
    case 'B': v.preconditioner = PreconditionerType::B; break;
    case 'S': v.preconditioner = PreconditionerType::S; break;
    default: v.preconditioner = PreconditionerType::D; break;
  }
  const bool has_approx = m[4].matched;
  if (has_approx) {
    const char a = m.str(4)[0];
    v.approx = a == '0' ? ModelApprox::zero : a == 'I' ? ModelApprox::identity : ModelApprox::exact;
  }
  if (has_approx != v.uses_model_approx()) {
    throw ParameterError("variant '" + name + "': model approximation suffix " +
                         (has_approx ? "not allowed" : "required"));
  }
  v.validate();
  return v;
}

std::string VariantSpec::name() const {
  std::string s = formulation == Formulation::saddle  ? "SA"
                  : formulation == Formulation::state ? "ST"
                                                      : "FO";
  s += "Q" + std::to_string(check_period) + "-" + precond_letter(preconditioner);
  if (uses_model_approx()) s += std::string("-") + to_string(approx);
  return s;
}

void VariantSpec::validate() const {
  if (check_period < 0) throw ParameterError("variant: check period must be >= 0");
  const PreconditionerType p = preconditioner;
  switch (formulation) {
    case Formulation::saddle:
      if (p != PreconditionerType::none && p != PreconditionerType::M &&
          p != PreconditionerType::T && p != PreconditionerType::B) {
        throw ParameterError("variant: SA takes preconditioner M, T, B or n");
      }
      break;
    case Formulation::state:
      if (p != PreconditionerType::none && p != PreconditionerType::S) {
        throw ParameterError("variant: ST takes preconditioner S or n");
      }
      break;
    case Formulation::forcing:
      if (p != PreconditionerType::none && p != PreconditionerType::D) {
        throw ParameterError("variant: FO takes preconditioner D or n");
      }
      break;
  }
  if (check_period == 0 && formulation != Formulation::saddle) {
    throw ParameterError("variant: Q0 exists only for the saddle formulation");
  }
}

std::vector<VariantSpec> default_variant_list() {
  std::vector<VariantSpec> out;
  const ModelApprox approx[] = {ModelApprox::zero, ModelApprox::identity, ModelApprox::exact};
  for (Formulation f : {Formulation::saddle, Formulation::state, Formulation::forcing}) {
    for (int l : {1, 15, 25, 50}) {
      if (f == Formulation::forcing) {
        out.push_back({f, l, PreconditionerType::D, ModelApprox::zero});
        continue;
      }
      out.push_back({f, l, PreconditionerType::none, ModelApprox::zero});
      const auto p = f == Formulation::saddle ? PreconditionerType::M : PreconditionerType::S;
      for (ModelApprox a : approx) out.push_back({f, l, p, a});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void GNControls::validate() const {
  if (max_outer < 1) throw ParameterError("GNControls: max_outer must be >= 1");
  if (n_inner < 1) throw ParameterError("GNControls: n_inner must be >= 1");
  if (!(eps_r > 0.0 && eps_r < 1.0)) throw ParameterError("GNControls: eps_r must be in (0,1)");
  if (!(eps_q > 0.0 && eps_q < 1.0)) throw ParameterError("GNControls: eps_q must be in (0,1)");
  if (max_inner < 1) throw ParameterError("GNControls: max_inner must be >= 1");
  if (!(linesearch.shrink > 0.0 && linesearch.shrink < 1.0)) {
    throw ParameterError("GNControls: linesearch shrink must be in (0,1)");
  }
  if (!(linesearch.sufficient_decrease > 0.0 && linesearch.sufficient_decrease < 1.0)) {
    throw ParameterError("GNControls: sufficient decrease constant must be in (0,1)");
  }
  if (linesearch.max_backtracks < 0) throw ParameterError("GNControls: max_backtracks < 0");
}

const char *to_string(RunStatus s) {
  switch (s) {
    case RunStatus::completed: return "completed";
    case RunStatus::converged: return "converged";
    case RunStatus::stagnated: return "stagnated";
    case RunStatus::non_descent: return "non_descent";
    case RunStatus::failed: return "failed";
  }
  return "?";
}

int RunTrace::total_inner() const {
  int n = 0;
  for (const auto &o : outer) n += o.inner_iterations;
  return n;
}

int RunTrace::total_q_evaluations() const {
  int n = 0;
  for (const auto &o : outer) n += o.q_evaluations;
  return n;
}

OpCounts RunTrace::total_counts() const {
  OpCounts c;
  for (const auto &o : outer) c += o.counts;
  return c;
}

// ---------------------------------------------------------------------------
// Objective

double evaluate_J(const NonlinearProblem &problem, const Vector &x) {
  const BlockLayout layout = problem.state_layout();
  layout.check(x, "evaluate_J");
  const BlockDiagonalSPD &D = problem.state_covariance();
  const BlockDiagonalSPD &R = problem.obs_covariance();
  const SelectionObservation &H = problem.observation_operator();
  const BlockLayout &ol = H.obs_layout();
  const Vector y = problem.observations();
  const Vector hx = H.apply(x);

  auto weighted = [](const Matrix &cov, const Vector &r) {
    return r.dot(cov.llt().solve(r));
  };

  double J = weighted(D.block(0), layout.block(x, 0) - problem.background());
  for (Index j = 1; j <= problem.num_subwindows(); ++j) {
    const Vector e = layout.block(x, j) - problem.propagate(j, layout.block(x, j - 1));
    J += weighted(D.block(j), e);
  }
  for (Index j = 0; j < ol.num_blocks(); ++j) {
    if (ol.size(j) == 0) continue;
    J += weighted(R.block(j), ol.block(hx, j) - ol.block(y, j));
  }
  return 0.5 * J;
}

JAndGradient evaluate_J_and_gradient(const NonlinearProblem &problem, const Vector &x,
                                     OpCounts *counts) {
  const BlockLayout layout = problem.state_layout();
  layout.check(x, "evaluate_J_and_gradient");
  const Index nsw = problem.num_subwindows();
  const BlockDiagonalSPD &D = problem.state_covariance();
  const BlockDiagonalSPD &R = problem.obs_covariance();
  const SelectionObservation &H = problem.observation_operator();
  const BlockLayout &ol = H.obs_layout();
  const Vector &y = problem.observations();

  JAndGradient out;
  out.g = Vector::Zero(layout.total());
  double J = 0.0;

  const Vector e0 = layout.block(x, 0) - problem.background();
  const Vector w0 = D.block(0).llt().solve(e0);
  J += e0.dot(w0);
  layout.block(out.g, 0) += w0;

  for (Index j = 1; j <= nsw; ++j) {
    auto [mx, tlm] = problem.linearize(j, layout.block(x, j - 1));
    const Vector e = layout.block(x, j) - mx;
    const Vector w = D.block(j).llt().solve(e);
    J += e.dot(w);
    layout.block(out.g, j) += w;
    layout.block(out.g, j - 1) -= tlm->apply_transpose(w);
  }

  const Vector hx = H.apply(x);
  Vector obs_weighted = Vector::Zero(ol.total());
  for (Index j = 0; j < ol.num_blocks(); ++j) {
    if (ol.size(j) == 0) continue;
    const Vector r = ol.block(hx, j) - ol.block(y, j);
    const Vector w = R.block(j).llt().solve(r);
    J += r.dot(w);
    ol.block(obs_weighted, j) = w;
  }
  out.g += H.apply_transpose(obs_weighted);
  out.J = 0.5 * J;

  if (counts) {
    ++counts->model;
    ++counts->obs_nonlinear;
    ++counts->LT;
    ++counts->D_inv;
    ++counts->HT;
    ++counts->R_inv;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inner termination and linesearch

double theta_schedule(int j, int n_inner, double q0) {
  if (j < 1 || n_inner < 1) throw ParameterError("theta_schedule: j and n_inner must be >= 1");
  const double exponent = std::max(1.0, static_cast<double>(n_inner) / j);
  const double t = std::pow(0.5 * q0, exponent) - 1.0;
  return std::max(0.0, t);
}

bool inner_termination(double q0, double q, double g_norm, double eps_q, double theta) {
  const double threshold = std::max(eps_q * std::min(1.0, g_norm * g_norm), theta);
  return q0 - q >= threshold;
}

LinesearchResult backtracking_linesearch(const std::function<double(const Vector &)> &J,
                                         const Vector &x, const Vector &dx, double J_x,
                                         const Vector &g, const LinesearchControls &controls) {
  const double slope = g.dot(dx);
  if (!(slope < 0.0)) {
    throw ParameterError("backtracking_linesearch: direction is not a descent direction");
  }
  LinesearchResult out;
  double alpha = 1.0;
  double best_alpha = 0.0;
  double best_J = J_x;
  for (int i = 0; i <= controls.max_backtracks; ++i) {
    const double Jt = J(x + alpha * dx);
    ++out.evaluations;
    if (std::isfinite(Jt) && Jt <= J_x + controls.sufficient_decrease * alpha * slope) {
      out.alpha = alpha;
      out.J = Jt;
      out.x = x + alpha * dx;
      out.accepted = true;
      out.armijo = true;
      return out;
    }
    if (std::isfinite(Jt) && Jt < best_J) {
      best_J = Jt;
      best_alpha = alpha;
    }
    alpha *= controls.shrink;
  }
  if (best_alpha > 0.0) {
    out.alpha = best_alpha;
    out.J = best_J;
    out.x = x + best_alpha * dx;
    out.accepted = true;
    return out;
  }
  out.alpha = 0.0;
  out.J = J_x;
  out.x = x;
  return out;
}

// ---------------------------------------------------------------------------
// Inner solves

InnerSolve solve_subproblem(const GNSubproblem &sub, const VariantSpec &variant,
                            const GNControls &controls, double g_norm, OpCounts *counts) {
  variant.validate();
  InnerSolve out;
  const double q0 = sub.q0;
  const int l = variant.check_period;

  SolverControls sc;
  sc.full_accuracy_tolerance = controls.full_accuracy_tolerance;
  sc.max_iterations = l == 0 ? controls.n_inner : controls.max_inner;
  sc.check_period = std::max(1, l);

  auto q_test = [&](int j, double q) {
    if (controls.full_accuracy_inner) return false;
    return inner_termination(q0, q, g_norm, controls.eps_q,
                             theta_schedule(j, controls.n_inner, q0));
  };

  if (variant.formulation == Formulation::saddle) {
    const SaddleLayout sl(sub);
    const LinearMap K = [&sub, counts](const Vector &v) { return saddle_matvec(sub, v, counts); };
    LinearMap P;
    switch (variant.preconditioner) {
      case PreconditionerType::M:
        P = [&sub, counts](const Vector &v) { return apply_PM_inverse(sub, v, counts); };
        break;
      case PreconditionerType::T:
        P = [&sub, counts](const Vector &v) { return apply_PT_inverse(sub, v, counts); };
        break;
      case PreconditionerType::B:
        P = [&sub, counts](const Vector &v) { return apply_PB_inverse(sub, v, counts); };
        break;
      default: P = [](const Vector &v) { return v; }; break;
    }
    const Vector rhs = saddle_rhs(sub);

    GmresProbe probe;
    if (l == 0) {
      sc.check_period = 1;
      sc.use_residual_tolerance = true;
      sc.residual_tolerance = controls.eps_r;
      if (controls.trace_saq0_q) {
        probe = [&](int, const Vector &v) {
          ProbeResult pr;
          pr.q = eval_qst(sub, sl.x(v));
          return pr;
        };
      }
    } else {
      probe = [&](int j, const Vector &v) {
        ProbeResult pr;
        pr.q = eval_qst(sub, sl.x(v), counts);
        ++out.q_evaluations;
        if (q_test(j, pr.q)) pr.stop = TerminationReason::quadratic_decrease;
        return pr;
      };
    }
    GmresResult res = gmres_left_preconditioned(K, P, rhs, sc, probe);
    out.dx = sl.x(res.solution);
    out.trace = std::move(res.trace);
    out.q_values = out.trace.q_values;
    out.q_values.resize(static_cast<std::size_t>(out.trace.iterations), kNaN);
    if (!out.q_values.empty()) out.q_final = out.q_values.back();
    return out;
  }

  // FOM-based variants: q_st(dx) = q0 + q_k.
  FomProbe probe = [&](const FomProgress &p) -> std::optional<TerminationReason> {
    if (q_test(p.iteration, q0 + p.q)) return TerminationReason::quadratic_decrease;
    return std::nullopt;
  };

  FomResult res;
  if (variant.formulation == Formulation::state) {
    const LinearSystem sys = state_system(sub, counts);
    const LinearMap P = variant.preconditioner == PreconditionerType::S
                            ? sys.precond
                            : LinearMap([](const Vector &v) { return v; });
    res = fom_left_preconditioned(sys.matvec, P, sys.rhs, sc, probe);
    out.dx = res.solution;
  } else if (variant.preconditioner == PreconditionerType::D) {
    const Vector r = forcing_rhs(sub, counts);
    res = fom_forcing(sub.L, sub.D, sub.H, sub.R, r, sc, probe, counts);
    out.dx = res.solution;
  } else {
    const LinearSystem sys = forcing_system(sub, counts);
    res = fom_left_preconditioned(sys.matvec, [](const Vector &v) { return v; }, sys.rhs, sc,
                                  probe);
    out.dx = sub.L.solve(res.solution, Direction::forward);
    bump(counts, &OpCounts::L_inv);
  }
  out.trace = std::move(res.trace);
  out.q_values.reserve(out.trace.q_values.size());
  for (double q : out.trace.q_values) out.q_values.push_back(q0 + q);
  out.q_final = out.q_values.empty() ? q0 : out.q_values.back();
  return out;
}

// ---------------------------------------------------------------------------
// Outer loop

RunTrace run_variant(const NonlinearProblem &problem, const Vector &x0, const VariantSpec &variant,
                     const GNControls &controls) {
  variant.validate();
  controls.validate();
  const BlockLayout layout = problem.state_layout();
  layout.check(x0, "run_variant");

  RunTrace trace;
  trace.variant = variant.name();
  Vector x = x0;
  const bool globalized = variant.check_period > 0;
  const ModelApprox approx =
      variant.uses_model_approx() ? variant.approx : ModelApprox::zero;
  auto J_of = [&problem](const Vector &v) { return evaluate_J(problem, v); };

  try {
    for (int k = 0; k < controls.max_outer; ++k) {
      OuterRecord rec;
      rec.outer = k;
      const JAndGradient jg = evaluate_J_and_gradient(problem, x, &rec.counts);
      rec.J = jg.J;
      rec.grad_norm = jg.g.norm();
      if (k == 0) trace.J_initial = jg.J;
      if (rec.grad_norm <= controls.gradient_tolerance) {
        trace.status = RunStatus::converged;
        trace.J_final = jg.J;
        break;
      }

      const GNSubproblem sub = linearize(problem, x, approx, controls.dinv);
      rec.q0 = sub.q0;
      if (controls.check_consistency) {
        rec.q_consistency = rel(sub.q0, jg.J);
        const Vector gq = qst_gradient(sub, Vector::Zero(layout.total()));
        rec.grad_consistency = (gq - jg.g).norm() / std::max(rec.grad_norm, 1e-300);
      }

      InnerSolve inner = solve_subproblem(sub, variant, controls, rec.grad_norm, &rec.counts);
      rec.inner_iterations = inner.trace.iterations;
      rec.inner_reason = inner.trace.reason;
      rec.q_evaluations = inner.q_evaluations;
      rec.q_final = inner.q_final;
      rec.step_norm = inner.dx.norm();
      rec.gtdx = jg.g.dot(inner.dx);
      rec.kappa1 = -rec.gtdx / (rec.grad_norm * rec.grad_norm);
      rec.kappa2 = rec.step_norm / rec.grad_norm;

      for (int j = 1; j <= inner.trace.iterations; ++j) {
        InnerRecord ir;
        ir.outer = k;
        ir.inner = j;
        ir.residual_norm = inner.trace.residual_norms[static_cast<std::size_t>(j)];
        ir.q_st = inner.q_values[static_cast<std::size_t>(j - 1)];
        ir.J = kNaN;
        trace.inner.push_back(ir);
      }
      if (controls.trace_inner_J && !trace.inner.empty()) {
        // Only the final iterate is known for every solver; record J there.
        trace.inner.back().J = evaluate_J(problem, x + inner.dx);
      }

      if (!globalized) {
        x += inner.dx;
        rec.alpha = 1.0;
        rec.J_next = evaluate_J(problem, x);
        trace.outer.push_back(rec);
        continue;
      }

      if (!(rec.gtdx < 0.0)) {
        rec.J_next = rec.J;
        trace.outer.push_back(rec);
        trace.status = RunStatus::non_descent;
        trace.message = "inner solve returned a non-descent direction at outer iteration " +
                        std::to_string(k);
        break;
      }
      const LinesearchResult ls =
          backtracking_linesearch(J_of, x, inner.dx, jg.J, jg.g, controls.linesearch);
      rec.alpha = ls.alpha;
      rec.J_next = ls.J;
      rec.linesearch_evaluations = ls.evaluations;
      trace.outer.push_back(rec);
      if (!ls.accepted) {
        trace.status = RunStatus::stagnated;
        trace.message = "linesearch found no decrease at outer iteration " + std::to_string(k);
        break;
      }
      x = ls.x;
      if (controls.stagnation_tolerance > 0.0 &&
          rec.J - ls.J <= controls.stagnation_tolerance * std::abs(rec.J)) {
        trace.status = RunStatus::converged;
        break;
      }
    }
  } catch (const std::exception &e) {
    trace.status = RunStatus::failed;
    trace.message = e.what();
  }

  trace.x_final = x;
  if (!trace.outer.empty()) {
    trace.J_final = trace.outer.back().J_next;
  } else if (trace.status != RunStatus::converged) {
    trace.J_final = evaluate_J(problem, x);
  }
  return trace;
}

}  // namespace wc4dvar
