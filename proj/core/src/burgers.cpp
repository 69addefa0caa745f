// SPDX-License-Identifier: Apache-2.0

#include "wc4dvar/burgers.hpp"

#include "wc4dvar/rng.hpp"

#include <cmath>
#include <numbers>

namespace wc4dvar {

namespace {

constexpr double kPi = std::numbers::pi;

// Coefficients of the advection and diffusion parts of the stencil.
struct Stencil {
  double c;  // dt / (2 dx)
  double d;  // nu dt / dx^2
};

Stencil stencil(const BurgersConfig &cfg) {
  return {cfg.dt / (2.0 * cfg.dx), cfg.nu * cfg.dt / (cfg.dx * cfg.dx)};
}

void check_base(const std::vector<Vector> &base, Index n) {
  if (base.size() < 2) throw StateError("Burgers TLM: no stored trajectory");
  for (const auto &u : base) {
    if (u.size() != n) throw DimensionError("Burgers TLM: trajectory state has wrong length");
  }
}

}  // namespace

void BurgersConfig::validate() const {
  if (n < 1 || num_subwindows < 1 || steps_per_subwindow < 1) {
    throw ParameterError("BurgersConfig: sizes must be positive");
  }
  if (!(dx > 0 && dt > 0 && nu >= 0 && T > 0)) {
    throw ParameterError("BurgersConfig: dx, dt, T must be positive and nu non-negative");
  }
  if (!(sigma_m2 > 0 && sigma_o2 > 0 && sigma_b2 > 0)) {
    throw ParameterError("BurgersConfig: variances must be positive");
  }
  if (obs_per_subwindow < 0 || obs_per_subwindow > n) {
    throw ParameterError("BurgersConfig: obs_per_subwindow must be in [0, n]");
  }
  const double span = static_cast<double>(num_subwindows * steps_per_subwindow) * dt;
  if (std::abs(span - T) > 1e-9 * T) {
    throw ParameterError("BurgersConfig: T must equal num_subwindows * steps_per_subwindow * dt");
  }
  if (!(R_min > 0 && R_max >= R_min)) throw ParameterError("BurgersConfig: bad R range");
}

double burgers_forcing(double x, double t, double k, double nu) {
  const double s = t + 1.0;
  const double a = kPi * x * s;
  const double b = kPi * (1.0 - x) * s;
  const double t1 = kPi * k * (x + k * s * std::sin(b)) * std::cos(a) * std::sin(b);
  const double t2 = kPi * k * (1.0 - x - k * s * std::sin(a)) * std::sin(a) * std::cos(b);
  const double t3 = 2.0 * nu * k * k * kPi * kPi * s * s *
                    (std::sin(a) * std::sin(b) + std::cos(a) * std::cos(b));
  return t1 + t2 + t3;
}

Vector burgers_grid(const BurgersConfig &config) {
  Vector x(config.n);
  for (Index i = 0; i < config.n; ++i) x[i] = static_cast<double>(i + 1) * config.dx;
  return x;
}

Vector burgers_step(const Vector &u, Index step, const BurgersConfig &config) {
  const Index n = config.n;
  if (u.size() != n) throw DimensionError("burgers_step: state has wrong length");
  const auto [c, d] = stencil(config);
  const double t = static_cast<double>(step) * config.dt;
  Vector out(n);
  for (Index i = 0; i < n; ++i) {
    const double um = i > 0 ? u[i - 1] : 0.0;
    const double up = i + 1 < n ? u[i + 1] : 0.0;
    double v = u[i] - c * u[i] * (up - um) + d * (up - 2.0 * u[i] + um);
    if (config.forcing) {
      v += config.dt * burgers_forcing(static_cast<double>(i + 1) * config.dx, t, config.k,
                                       config.nu);
    }
    out[i] = v;
  }
  if (!out.allFinite()) throw NumericalError("burgers_step: non-finite state (instability)");
  return out;
}

std::vector<Vector> burgers_trajectory(const Vector &u, Index first_step, Index nsteps,
                                       const BurgersConfig &config) {
  std::vector<Vector> traj;
  traj.reserve(static_cast<std::size_t>(nsteps + 1));
  traj.push_back(u);
  for (Index s = 0; s < nsteps; ++s) traj.push_back(burgers_step(traj.back(), first_step + s, config));
  return traj;
}

Vector burgers_tlm(const std::vector<Vector> &base, const Vector &v, const BurgersConfig &config) {
  const Index n = config.n;
  check_base(base, n);
  if (v.size() != n) throw DimensionError("burgers_tlm: perturbation has wrong length");
  const auto [c, d] = stencil(config);
  Vector dv = v;
  Vector next(n);
  for (std::size_t s = 0; s + 1 < base.size(); ++s) {
    const Vector &u = base[s];
    for (Index i = 0; i < n; ++i) {
      const double um = i > 0 ? u[i - 1] : 0.0;
      const double up = i + 1 < n ? u[i + 1] : 0.0;
      const double vm = i > 0 ? dv[i - 1] : 0.0;
      const double vp = i + 1 < n ? dv[i + 1] : 0.0;
      next[i] = dv[i] - c * (dv[i] * (up - um) + u[i] * (vp - vm)) +
                d * (vp - 2.0 * dv[i] + vm);
    }
    dv.swap(next);
  }
  return dv;
}

Vector burgers_adjoint(const std::vector<Vector> &base, const Vector &w,
                       const BurgersConfig &config) {
  const Index n = config.n;
  check_base(base, n);
  if (w.size() != n) throw DimensionError("burgers_adjoint: vector has wrong length");
  const auto [c, d] = stencil(config);
  Vector a = w;
  Vector next(n);
  for (std::size_t s = base.size() - 1; s-- > 0;) {
    const Vector &u = base[s];
    // Transpose of the tridiagonal step matrix A with
    //   A(i,i) = 1 - c (u_{i+1} - u_{i-1}) - 2d, A(i,i+1) = d - c u_i, A(i,i-1) = d + c u_i.
    for (Index i = 0; i < n; ++i) {
      const double um = i > 0 ? u[i - 1] : 0.0;
      const double up = i + 1 < n ? u[i + 1] : 0.0;
      double r = (1.0 - c * (up - um) - 2.0 * d) * a[i];
      if (i > 0) r += (d - c * u[i - 1]) * a[i - 1];
      if (i + 1 < n) r += (d + c * u[i + 1]) * a[i + 1];
      next[i] = r;
    }
    a.swap(next);
  }
  return a;
}

Matrix burgers_tlm_matrix(const std::vector<Vector> &base, const BurgersConfig &config) {
  const Index n = config.n;
  check_base(base, n);
  const auto [c, d] = stencil(config);
  Matrix X = Matrix::Identity(n, n);
  Matrix Y(n, n);
  for (std::size_t s = 0; s + 1 < base.size(); ++s) {
    const Vector &u = base[s];
    for (Index i = 0; i < n; ++i) {
      const double um = i > 0 ? u[i - 1] : 0.0;
      const double up = i + 1 < n ? u[i + 1] : 0.0;
      Y.row(i) = (1.0 - c * (up - um) - 2.0 * d) * X.row(i);
      if (i > 0) Y.row(i) += (d + c * u[i]) * X.row(i - 1);
      if (i + 1 < n) Y.row(i) += (d - c * u[i]) * X.row(i + 1);
    }
    X.swap(Y);
  }
  return X;
}

// ---------------------------------------------------------------------------

BurgersProblem::BurgersProblem(BurgersConfig config, Data data)
    : config_(std::move(config)), data_(std::move(data)) {
  config_.validate();
  const BlockLayout layout = state_layout();
  if (data_.background.size() != config_.n) {
    throw DimensionError("BurgersProblem: background has wrong length");
  }
  if (!(data_.D.layout() == layout)) throw DimensionError("BurgersProblem: D layout mismatch");
  if (!(data_.H.state_layout() == layout)) throw DimensionError("BurgersProblem: H layout mismatch");
  if (!(data_.R.layout() == data_.H.obs_layout())) {
    throw DimensionError("BurgersProblem: R layout mismatch");
  }
  data_.H.obs_layout().check(data_.observations, "BurgersProblem: observations");
}

std::vector<Vector> BurgersProblem::subwindow_trajectory(Index j, const Vector &x_prev) const {
  if (j < 1 || j > config_.num_subwindows) throw DimensionError("subwindow index out of range");
  return burgers_trajectory(x_prev, (j - 1) * config_.steps_per_subwindow,
                            config_.steps_per_subwindow, config_);
}

Vector BurgersProblem::propagate(Index j, const Vector &x_prev) const {
  return subwindow_trajectory(j, x_prev).back();
}

std::pair<Vector, std::shared_ptr<const LinearBlock>> BurgersProblem::linearize(
    Index j, const Vector &x_prev) const {
  const auto traj = subwindow_trajectory(j, x_prev);
  return {traj.back(), std::make_shared<DenseBlock>(burgers_tlm_matrix(traj, config_))};
}

// ---------------------------------------------------------------------------

BurgersProblem generate_problem(const BurgersConfig &cfg) {
  cfg.validate();
  const Index n = cfg.n;
  const Index nsw = cfg.num_subwindows;
  const BlockLayout layout = BlockLayout::uniform(n, nsw + 1);
  const double noise = cfg.add_noise ? 1.0 : 0.0;

  Rng model_rng(cfg.seed, Stream::model_noise);
  Rng obs_rng(cfg.seed, Stream::observation_noise);
  Rng bg_rng(cfg.seed, Stream::background_noise);
  Rng idx_rng(cfg.seed, Stream::index_selection);
  Rng fg_rng(cfg.seed, Stream::first_guess_noise);
  const double sm = std::sqrt(cfg.sigma_m2) * noise;
  const double so = std::sqrt(cfg.sigma_o2) * noise;
  const double sb = std::sqrt(cfg.sigma_b2) * noise;

  auto step_window = [&](Index j, const Vector &x) {
    return burgers_trajectory(x, (j - 1) * cfg.steps_per_subwindow, cfg.steps_per_subwindow, cfg)
        .back();
  };

  BurgersProblem::Data data;
  const Vector grid = burgers_grid(cfg);
  data.truth.resize(layout.total());
  layout.block(data.truth, 0) = cfg.k * (2.0 * kPi * grid.array()).sin().matrix();
  for (Index j = 1; j <= nsw; ++j) {
    layout.block(data.truth, j) =
        step_window(j, layout.block(data.truth, j - 1)) + model_rng.normal_vector(n, sm);
  }

  std::vector<std::vector<Index>> indices(static_cast<std::size_t>(nsw + 1));
  for (Index j = 1; j <= nsw; ++j) {
    indices[static_cast<std::size_t>(j)] = idx_rng.sample_without_replacement(n, cfg.obs_per_subwindow);
  }
  data.H = SelectionObservation(n, indices);
  const Vector clean = data.H.apply(data.truth);
  data.observations = clean;
  for (Index i = 0; i < clean.size(); ++i) data.observations[i] += so * obs_rng.normal();

  data.background = layout.block(data.truth, 0) + bg_rng.normal_vector(n, sb);

  data.first_guess.resize(layout.total());
  layout.block(data.first_guess, 0) = data.background;
  for (Index j = 1; j <= nsw; ++j) {
    layout.block(data.first_guess, j) =
        step_window(j, layout.block(data.first_guess, j - 1)) + fg_rng.normal_vector(n, sm);
  }

  auto B = std::make_shared<const BlockDiagonalSPD::Block>(build_sqexp_covariance(
      n, cfg.sigma_b2, cfg.B_length, cfg.B_alpha, cfg.dx, cfg.kernel_width_factor));
  auto Q = std::make_shared<const BlockDiagonalSPD::Block>(build_sqexp_covariance(
      n, cfg.sigma_m2, cfg.Q_length, cfg.Q_alpha, cfg.dx, cfg.kernel_width_factor));
  std::vector<std::shared_ptr<const BlockDiagonalSPD::Block>> dblocks{B};
  for (Index j = 1; j <= nsw; ++j) dblocks.push_back(Q);
  data.D = BlockDiagonalSPD(dblocks);

  auto R0 = std::make_shared<const BlockDiagonalSPD::Block>(Matrix(0, 0));
  auto Rj = std::make_shared<const BlockDiagonalSPD::Block>(
      log_spaced_diagonal(cfg.obs_per_subwindow, cfg.R_min, cfg.R_max));
  std::vector<std::shared_ptr<const BlockDiagonalSPD::Block>> rblocks{R0};
  for (Index j = 1; j <= nsw; ++j) rblocks.push_back(Rj);
  data.R = BlockDiagonalSPD(rblocks);

  return BurgersProblem(cfg, std::move(data));
}

}  // namespace wc4dvar
