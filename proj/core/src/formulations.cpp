// SPDX-License-Identifier: Apache-2.0

#include "wc4dvar/formulations.hpp"

namespace wc4dvar {

Misfits compute_misfits(const NonlinearProblem &problem, const Vector &x, OpCounts *counts) {
  const BlockLayout layout = problem.state_layout();
  layout.check(x, "compute_misfits");
  const SelectionObservation &H = problem.observation_operator();

  Misfits m;
  m.b.resize(layout.total());
  layout.block(m.b, 0) = problem.background() - layout.block(x, 0);
  for (Index j = 1; j <= problem.num_subwindows(); ++j) {
    layout.block(m.b, j) =
        problem.propagate(j, layout.block(x, j - 1)) - layout.block(x, j);
  }
  bump(counts, &OpCounts::model);
  m.d = problem.observations() - H.apply(x);
  bump(counts, &OpCounts::obs_nonlinear);
  return m;
}

GNSubproblem linearize(const NonlinearProblem &problem, const Vector &x, ModelApprox approx,
                       InverseMode dinv, OpCounts *counts) {
  const BlockLayout layout = problem.state_layout();
  layout.check(x, "linearize");
  const Index n = problem.state_size();
  const Index nsw = problem.num_subwindows();

  GNSubproblem sub;
  sub.H = problem.observation_operator();
  sub.D = problem.state_covariance().with_inverse_mode(dinv);
  sub.R = problem.obs_covariance();

  sub.b.resize(layout.total());
  layout.block(sub.b, 0) = problem.background() - layout.block(x, 0);
  std::vector<std::shared_ptr<const LinearBlock>> tlm;
  tlm.reserve(static_cast<std::size_t>(nsw));
  for (Index j = 1; j <= nsw; ++j) {
    auto [xj, block] = problem.linearize(j, layout.block(x, j - 1));
    layout.block(sub.b, j) = xj - layout.block(x, j);
    tlm.push_back(std::move(block));
  }
  bump(counts, &OpCounts::model);
  sub.d = problem.observations() - sub.H.apply(x);
  bump(counts, &OpCounts::obs_nonlinear);

  sub.L = BlockBidiagonal(n, tlm, ModelApprox::exact);
  switch (approx) {
    case ModelApprox::zero: sub.Ltilde = BlockBidiagonal::zero(n, nsw); break;
    case ModelApprox::identity: sub.Ltilde = BlockBidiagonal::identity(n, nsw); break;
    case ModelApprox::exact: sub.Ltilde = sub.L; break;
  }

  sub.Dinv_b = sub.D.apply_inverse(sub.b);
  bump(counts, &OpCounts::D_inv);
  sub.Rinv_d = sub.R.apply_inverse(sub.d);
  bump(counts, &OpCounts::R_inv);
  sub.q0 = 0.5 * sub.b.dot(sub.Dinv_b) + 0.5 * sub.d.dot(sub.Rinv_d);
  return sub;
}

double eval_qst(const GNSubproblem &sub, const Vector &dx, OpCounts *counts) {
  sub.state_layout().check(dx, "eval_qst");
  const Vector rb = sub.L.apply(dx, Direction::forward) - sub.b;
  bump(counts, &OpCounts::L);
  const Vector rd = sub.H.apply(dx) - sub.d;
  bump(counts, &OpCounts::H);
  const double tb = rb.dot(sub.D.apply_inverse(rb));
  bump(counts, &OpCounts::D_inv);
  const double td = rd.dot(sub.R.apply_inverse(rd));
  bump(counts, &OpCounts::R_inv);
  return 0.5 * tb + 0.5 * td;
}

Vector qst_gradient(const GNSubproblem &sub, const Vector &dx) {
  sub.state_layout().check(dx, "qst_gradient");
  const Vector rb = sub.L.apply(dx, Direction::forward) - sub.b;
  const Vector rd = sub.H.apply(dx) - sub.d;
  return sub.L.apply(sub.D.apply_inverse(rb), Direction::transpose) +
         sub.H.apply_transpose(sub.R.apply_inverse(rd));
}

// ---------------------------------------------------------------------------

Vector SaddleLayout::assemble(const Vector &lambda_part, const Vector &mu_part,
                              const Vector &x_part) const {
  if (lambda_part.size() != s || mu_part.size() != m || x_part.size() != s) {
    throw DimensionError("SaddleLayout::assemble: block length mismatch");
  }
  Vector v(total());
  v << lambda_part, mu_part, x_part;
  return v;
}

void SaddleLayout::check(const Vector &v, const char *what) const {
  if (v.size() != total()) {
    throw DimensionError(std::string(what) + ": saddle vector has wrong length");
  }
}

Vector saddle_matvec(const GNSubproblem &sub, const Vector &v, OpCounts *counts) {
  const SaddleLayout sl(sub);
  sl.check(v, "saddle_matvec");
  const Vector dl = sl.lambda(v);
  const Vector dm = sl.mu(v);
  const Vector dx = sl.x(v);

  Vector out(sl.total());
  sl.lambda(out) = sub.D.apply(dl) + sub.L.apply(dx, Direction::forward);
  sl.mu(out) = sub.R.apply(dm) + sub.H.apply(dx);
  sl.x(out) = sub.L.apply(dl, Direction::transpose) + sub.H.apply_transpose(dm);
  if (counts) {
    ++counts->D;
    ++counts->L;
    ++counts->R;
    ++counts->H;
    ++counts->LT;
    ++counts->HT;
  }
  return out;
}

Vector saddle_rhs(const GNSubproblem &sub) {
  const SaddleLayout sl(sub);
  return sl.assemble(sub.b, sub.d, Vector::Zero(sl.s));
}

Vector apply_Sinv(const GNSubproblem &sub, const Vector &v, OpCounts *counts) {
  Vector t = sub.Ltilde.solve(v, Direction::transpose);
  t = sub.D.apply(t);
  t = sub.Ltilde.solve(t, Direction::forward);
  if (counts) {
    ++counts->Ltilde_invT;
    ++counts->D;
    ++counts->Ltilde_inv;
  }
  return t;
}

Vector apply_PM_inverse(const GNSubproblem &sub, const Vector &r, OpCounts *counts) {
  const SaddleLayout sl(sub);
  sl.check(r, "apply_PM_inverse");
  Vector out(sl.total());
  const Vector dl = sub.Ltilde.solve(sl.x(r), Direction::transpose);
  sl.lambda(out) = dl;
  sl.mu(out) = sub.R.apply_inverse(sl.mu(r));
  sl.x(out) = sub.Ltilde.solve(sl.lambda(r) - sub.D.apply(dl), Direction::forward);
  if (counts) {
    ++counts->Ltilde_invT;
    ++counts->R_inv;
    ++counts->D;
    ++counts->Ltilde_inv;
  }
  return out;
}

Vector apply_PB_inverse(const GNSubproblem &sub, const Vector &r, OpCounts *counts) {
  const SaddleLayout sl(sub);
  sl.check(r, "apply_PB_inverse");
  Vector out(sl.total());
  sl.lambda(out) = sub.D.apply_inverse(sl.lambda(r));
  sl.mu(out) = sub.R.apply_inverse(sl.mu(r));
  sl.x(out) = -apply_Sinv(sub, sl.x(r), counts);
  if (counts) {
    ++counts->D_inv;
    ++counts->R_inv;
  }
  return out;
}

Vector apply_PT_inverse(const GNSubproblem &sub, const Vector &r, OpCounts *counts) {
  const SaddleLayout sl(sub);
  sl.check(r, "apply_PT_inverse");
  Vector out(sl.total());
  const Vector dx = apply_Sinv(sub, sl.x(r), counts);
  sl.x(out) = dx;
  sl.mu(out) = sub.R.apply_inverse(sl.mu(r) - sub.H.apply(dx));
  sl.lambda(out) =
      sub.D.apply_inverse(sl.lambda(r) - sub.Ltilde.apply(dx, Direction::forward));
  if (counts) {
    ++counts->H;
    ++counts->R_inv;
    ++counts->D_inv;
  }
  return out;
}

// ---------------------------------------------------------------------------

LinearSystem state_system(const GNSubproblem &sub, OpCounts *counts) {
  LinearSystem sys;
  sys.matvec = [&sub, counts](const Vector &v) -> Vector {
    const Vector lv = sub.L.apply(v, Direction::forward);
    const Vector hv = sub.H.apply(v);
    Vector out = sub.L.apply(sub.D.apply_inverse(lv), Direction::transpose) +
                 sub.H.apply_transpose(sub.R.apply_inverse(hv));
    if (counts) {
      ++counts->L;
      ++counts->D_inv;
      ++counts->LT;
      ++counts->H;
      ++counts->R_inv;
      ++counts->HT;
    }
    return out;
  };
  sys.rhs = sub.L.apply(sub.Dinv_b, Direction::transpose) + sub.H.apply_transpose(sub.Rinv_d);
  if (counts) {
    ++counts->LT;
    ++counts->HT;
  }
  sys.precond = [&sub, counts](const Vector &v) -> Vector { return apply_Sinv(sub, v, counts); };
  return sys;
}

Vector forcing_rhs(const GNSubproblem &sub, OpCounts *counts) {
  Vector t = sub.H.apply_transpose(sub.Rinv_d);
  t = sub.L.solve(t, Direction::transpose);
  if (counts) {
    ++counts->HT;
    ++counts->L_invT;
  }
  return sub.Dinv_b + t;
}

LinearSystem forcing_system(const GNSubproblem &sub, OpCounts *counts) {
  LinearSystem sys;
  sys.matvec = [&sub, counts](const Vector &v) -> Vector {
    Vector t = sub.L.solve(v, Direction::forward);
    t = sub.H.apply_transpose(sub.R.apply_inverse(sub.H.apply(t)));
    t = sub.L.solve(t, Direction::transpose);
    if (counts) {
      ++counts->L_inv;
      ++counts->H;
      ++counts->R_inv;
      ++counts->HT;
      ++counts->L_invT;
      ++counts->D_inv;
    }
    return sub.D.apply_inverse(v) + t;
  };
  sys.rhs = forcing_rhs(sub, counts);
  sys.precond = [&sub, counts](const Vector &v) -> Vector {
    if (counts) ++counts->D;
    return sub.D.apply(v);
  };
  return sys;
}

}  // namespace wc4dvar
