// SPDX-License-Identifier: Apache-2.0

#include "wc4dvar/krylov.hpp"

#include <algorithm>
#include <cmath>

namespace wc4dvar {

namespace {

// Incremental QR factorization of an upper Hessenberg matrix by Givens
// rotations. Serves both GMRES (least-squares solve) and FOM (square solve of
// the leading k x k block).
class HessenbergQR {
 public:
  explicit HessenbergQR(double beta) { g_.push_back(beta); }

  int size() const { return static_cast<int>(cs_.size()); }

  // Appends column k (0-based) with entries h_{0..k+1}.
  void add_column(std::vector<double> col) {
    const std::size_t k = cs_.size();
    for (std::size_t i = 0; i < k; ++i) {
      const double a = col[i];
      const double b = col[i + 1];
      col[i] = cs_[i] * a + sn_[i] * b;
      col[i + 1] = -sn_[i] * a + cs_[i] * b;
    }
    // The square k+1 system uses the diagonal before the new rotation.
    fom_diag_ = col[k];
    fom_rhs_last_ = g_[k];

    const double a = col[k];
    const double b = col[k + 1];
    double c = 1.0;
    double s = 0.0;
    if (b != 0.0) {
      const double r = std::hypot(a, b);
      c = a / r;
      s = b / r;
    }
    col[k] = c * a + s * b;
    col[k + 1] = 0.0;
    cs_.push_back(c);
    sn_.push_back(s);
    g_.push_back(-s * g_[k]);
    g_[k] = c * g_[k];
    col.resize(k + 1);
    r_.push_back(std::move(col));
  }

  // |residual| of the least-squares problem min ||beta e1 - H y||.
  double gmres_residual() const { return std::abs(g_.back()); }

  Vector gmres_solve() const {
    const int k = size();
    Vector y(k);
    for (int i = k - 1; i >= 0; --i) {
      double s = g_[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < k; ++j) s -= r_[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] * y[j];
      const double d = r_[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
      if (d == 0.0) throw NumericalError("GMRES: singular Hessenberg factor");
      y[i] = s / d;
    }
    return y;
  }

  // Solves H_{1:k,1:k} y = beta e1 for the current k.
  Vector fom_solve() const {
    const int k = size();
    Vector y(k);
    for (int i = k - 1; i >= 0; --i) {
      const bool last = (i == k - 1);
      double s = last ? fom_rhs_last_ : g_[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < k; ++j) s -= r_[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] * y[j];
      const double d = last ? fom_diag_ : r_[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
      if (d == 0.0) throw NumericalError("FOM: singular Hessenberg block");
      y[i] = s / d;
    }
    return y;
  }

 private:
  std::vector<double> cs_;
  std::vector<double> sn_;
  std::vector<double> g_;
  std::vector<std::vector<double>> r_;  // columns of R
  double fom_diag_ = 0.0;
  double fom_rhs_last_ = 0.0;
};

Vector combine(const std::vector<Vector> &basis, const Vector &y) {
  Vector x = Vector::Zero(basis.front().size());
  for (Index i = 0; i < y.size(); ++i) x.noalias() += y[i] * basis[static_cast<std::size_t>(i)];
  return x;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// sqrt(w^T v) for the M^{-1}-norm normalization, scale = ||w|| ||v|| before
// orthogonalization. Returns 0 for a (round-off) breakdown and throws on
// genuine loss of positivity. Once the residual has dropped to
// sqrt(eps) of its initial value the Krylov space is invariant to working
// precision and any sign of w^T v is noise.
double positive_root(double wv, double scale, const char *who, double rel_residual = 1.0) {
  if (wv > 0.0) return std::sqrt(wv);
  if (std::abs(wv) <= 1e-8 * scale) return 0.0;
  if (rel_residual <= std::sqrt(std::numeric_limits<double>::epsilon())) return 0.0;
  throw NumericalError(std::string(who) +
                       ": loss of positivity (w^T v < 0); operator or preconditioner is not SPD");
}

}  // namespace

const char *to_string(TerminationReason r) {
  switch (r) {
    case TerminationReason::none: return "none";
    case TerminationReason::tolerance: return "tolerance";
    case TerminationReason::quadratic_decrease: return "quadratic_decrease";
    case TerminationReason::full_accuracy: return "full_accuracy";
    case TerminationReason::iteration_cap: return "iteration_cap";
  }
  return "?";
}

void SolverControls::validate() const {
  if (max_iterations < 1) throw ParameterError("SolverControls: max_iterations must be >= 1");
  if (!(residual_tolerance > 0.0)) throw ParameterError("SolverControls: residual_tolerance must be > 0");
  if (!(full_accuracy_tolerance > 0.0)) {
    throw ParameterError("SolverControls: full_accuracy_tolerance must be > 0");
  }
  if (check_period < 1) throw ParameterError("SolverControls: check_period must be >= 1");
}

Vector FomProgress::solution() const {
  if (!basis || !coefficients) throw StateError("FomProgress: no basis attached");
  return combine(*basis, *coefficients);
}

// ---------------------------------------------------------------------------

GmresResult gmres_left_preconditioned(const LinearMap &matvec, const LinearMap &precond_inverse,
                                      const Vector &rhs, const SolverControls &controls,
                                      const GmresProbe &probe) {
  controls.validate();
  GmresResult result;
  InnerTrace &trace = result.trace;

  Vector r0 = precond_inverse(rhs);
  if (r0.size() != rhs.size()) throw DimensionError("GMRES: preconditioner changed vector length");
  const double beta = r0.norm();
  trace.residual_norms.push_back(beta);
  if (beta == 0.0) {
    result.solution = Vector::Zero(rhs.size());
    trace.reason = TerminationReason::full_accuracy;
    return result;
  }

  std::vector<Vector> basis;
  basis.push_back(r0 / beta);
  HessenbergQR qr(beta);

  for (int j = 1;; ++j) {
    Vector w = precond_inverse(matvec(basis.back()));
    const double w_norm0 = w.norm();
    std::vector<double> h(basis.size() + 1, 0.0);
    for (std::size_t i = 0; i < basis.size(); ++i) {
      h[i] = basis[i].dot(w);
      w.noalias() -= h[i] * basis[i];
    }
    // Second Gram-Schmidt pass if orthogonality was visibly lost.
    {
      std::vector<double> c(basis.size());
      double worst = 0.0;
      for (std::size_t i = 0; i < basis.size(); ++i) {
        c[i] = basis[i].dot(w);
        worst = std::max(worst, std::abs(c[i]));
      }
      if (worst > 1e-8 * w.norm()) {
        for (std::size_t i = 0; i < basis.size(); ++i) {
          w.noalias() -= c[i] * basis[i];
          h[i] += c[i];
        }
      }
    }
    const double h_next = w.norm();
    const bool breakdown = h_next <= 1e-14 * w_norm0;
    h.back() = breakdown ? 0.0 : h_next;
    qr.add_column(std::move(h));
    trace.iterations = j;
    const double res = qr.gmres_residual();
    trace.residual_norms.push_back(res);
    trace.q_values.push_back(kNaN);

    const bool full = res <= controls.full_accuracy_tolerance * beta;
    if (breakdown && !full) {
      throw NumericalError("GMRES: Arnoldi breakdown with nonzero residual");
    }

    std::optional<TerminationReason> stop;
    Vector x;
    bool have_x = false;
    auto form = [&]() {
      if (!have_x) {
        x = combine(basis, qr.gmres_solve());
        have_x = true;
      }
    };

    if (probe && j % controls.check_period == 0) {
      form();
      ProbeResult pr = probe(j, x);
      trace.q_values.back() = pr.q;
      if (pr.stop) stop = pr.stop;
    }
    if (!stop && controls.use_residual_tolerance && res <= controls.residual_tolerance * beta) {
      stop = TerminationReason::tolerance;
    }
    if (!stop && full) stop = TerminationReason::full_accuracy;
    if (!stop && j >= controls.max_iterations) stop = TerminationReason::iteration_cap;

    if (stop) {
      form();
      result.solution = std::move(x);
      trace.reason = *stop;
      return result;
    }
    basis.push_back(w / h_next);
  }
}

// ---------------------------------------------------------------------------

FomResult fom_left_preconditioned(const LinearMap &matvec, const LinearMap &precond,
                                  const Vector &rhs, const SolverControls &controls,
                                  const FomProbe &probe) {
  controls.validate();
  FomResult result;
  InnerTrace &trace = result.trace;
  const Vector &b = rhs;

  // 1.1 - 1.5
  Vector w = precond(b);
  if (w.size() != b.size()) throw DimensionError("FOM: preconditioner changed vector length");
  const double bw = b.dot(w);
  if (bw == 0.0) {
    result.solution = Vector::Zero(b.size());
    trace.residual_norms.push_back(0.0);
    trace.reason = TerminationReason::full_accuracy;
    return result;
  }
  const double beta = positive_root(bw, bw, "FOM");
  trace.residual_norms.push_back(beta);

  std::vector<Vector> &U = result.u_basis;
  std::vector<Vector> &Q = result.q_basis;
  U.push_back(w / beta);
  Q.push_back(b / beta);
  std::vector<double> z{U[0].dot(b)};
  HessenbergQR qr(beta);

  for (int k = 1;; ++k) {
    // 2.1 - 2.3
    w = matvec(U.back());
    Vector v = precond(w);
    const double scale = w.norm() * v.norm();
    std::vector<double> h(U.size() + 1, 0.0);
    for (std::size_t j = 0; j < U.size(); ++j) {
      h[j] = Q[j].dot(v);
      v.noalias() -= h[j] * U[j];
      w.noalias() -= h[j] * Q[j];
    }
    // 2.4
    const double h_next = positive_root(w.dot(v), scale, "FOM",
                                       trace.residual_norms.back() / beta);
    h.back() = h_next;
    qr.add_column(std::move(h));

    // 2.5 - 2.7
    const Vector y = qr.fom_solve();
    const double gamma = std::abs(h_next * y[y.size() - 1]);
    double q = 0.0;
    for (Index i = 0; i < y.size(); ++i) q -= 0.5 * z[static_cast<std::size_t>(i)] * y[i];

    trace.iterations = k;
    trace.residual_norms.push_back(gamma);
    trace.q_values.push_back(q);

    // 2.8
    std::optional<TerminationReason> stop;
    if (probe && k % controls.check_period == 0) {
      FomProgress progress{k, q, gamma, &U, &y};
      stop = probe(progress);
    }
    if (!stop && (h_next == 0.0 || gamma <= controls.full_accuracy_tolerance * beta)) {
      stop = TerminationReason::full_accuracy;
    }
    if (!stop && k >= controls.max_iterations) stop = TerminationReason::iteration_cap;
    if (stop) {
      result.solution = combine(U, y);
      trace.reason = *stop;
      return result;
    }

    // 2.9 - 2.11
    U.push_back(v / h_next);
    Q.push_back(w / h_next);
    z.push_back(U.back().dot(b));
  }
}

// ---------------------------------------------------------------------------

FomResult fom_forcing(const BlockBidiagonal &L, const BlockDiagonalSPD &D,
                      const SelectionObservation &H, const BlockDiagonalSPD &R, const Vector &r,
                      const SolverControls &controls, const FomProbe &probe, OpCounts *counts) {
  controls.validate();
  L.layout().check(r, "fom_forcing");
  FomResult result;
  InnerTrace &trace = result.trace;

  // 1.1 - 1.5
  Vector w = D.apply(r);
  bump(counts, &OpCounts::D);
  const double wr = w.dot(r);
  if (wr == 0.0) {
    result.solution = Vector::Zero(r.size());
    trace.residual_norms.push_back(0.0);
    trace.reason = TerminationReason::full_accuracy;
    return result;
  }
  const double beta = positive_root(wr, wr, "forcing FOM");
  trace.residual_norms.push_back(beta);

  std::vector<Vector> &U = result.u_basis;
  std::vector<Vector> &Q = result.q_basis;
  std::vector<Vector> P;
  U.push_back(w / beta);
  Q.push_back(r / beta);
  std::vector<double> z{U[0].dot(r)};
  HessenbergQR qr(beta);

  for (int k = 1;; ++k) {
    // 2.1
    P.push_back(L.solve(U.back(), Direction::forward));
    bump(counts, &OpCounts::L_inv);
    // 2.2
    Vector v = H.apply(P.back());
    bump(counts, &OpCounts::H);
    v = R.apply_inverse(v);
    bump(counts, &OpCounts::R_inv);
    v = H.apply_transpose(v);
    bump(counts, &OpCounts::HT);
    v = L.solve(v, Direction::transpose);
    bump(counts, &OpCounts::L_invT);
    // 2.3 - 2.4
    w = Q.back() + v;
    v = U.back() + D.apply(v);
    bump(counts, &OpCounts::D);
    const double scale = w.norm() * v.norm();
    // 2.5 - 2.6
    std::vector<double> t(U.size() + 1, 0.0);
    for (std::size_t j = 0; j < U.size(); ++j) {
      t[j] = Q[j].dot(v);
      v.noalias() -= t[j] * U[j];
      w.noalias() -= t[j] * Q[j];
    }
    // 2.7
    const double t_next = positive_root(w.dot(v), scale, "forcing FOM",
                                       trace.residual_norms.back() / beta);
    t.back() = t_next;
    qr.add_column(std::move(t));

    // 2.8 - 2.10
    const Vector y = qr.fom_solve();
    const double gamma = std::abs(t_next * y[y.size() - 1]);
    double q = 0.0;
    for (Index i = 0; i < y.size(); ++i) q -= 0.5 * z[static_cast<std::size_t>(i)] * y[i];

    trace.iterations = k;
    trace.residual_norms.push_back(gamma);
    trace.q_values.push_back(q);

    // 2.11
    std::optional<TerminationReason> stop;
    if (probe && k % controls.check_period == 0) {
      FomProgress progress{k, q, gamma, &P, &y};
      stop = probe(progress);
    }
    if (!stop && (t_next == 0.0 || gamma <= controls.full_accuracy_tolerance * beta)) {
      stop = TerminationReason::full_accuracy;
    }
    if (!stop && k >= controls.max_iterations) stop = TerminationReason::iteration_cap;
    if (stop) {
      result.solution = combine(P, y);
      trace.reason = *stop;
      return result;
    }

    // 2.12 - 2.14
    U.push_back(v / t_next);
    Q.push_back(w / t_next);
    z.push_back(U.back().dot(r));
  }
}

// ---------------------------------------------------------------------------

Vector cg(const LinearMap &matvec, const Vector &rhs, int iterations) {
  if (iterations < 1) throw ParameterError("cg: iterations must be >= 1");
  Vector x = Vector::Zero(rhs.size());
  Vector r = rhs;
  double rr = r.squaredNorm();
  Vector p = r;
  for (int it = 0; it < iterations && rr > 0.0; ++it) {
    const Vector ap = matvec(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) throw NumericalError("cg: nonpositive curvature (operator not SPD)");
    const double alpha = rr / pap;
    x.noalias() += alpha * p;
    r.noalias() -= alpha * ap;
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  return x;
}

}  // namespace wc4dvar
