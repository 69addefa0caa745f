// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "wc4dvar/operators.hpp"
#include "wc4dvar/problem.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace wc4dvar {

/// Viscous Burgers equation u_t + u u_x - nu u_xx = g on [0, T] x [0, 1]
/// with homogeneous Dirichlet conditions. The state holds the n interior
/// values u_i = u(i dx), i = 1..n; the ghost values u_0 and u_{n+1} are 0.
struct BurgersConfig {
  Index n = 100;
  double dx = 0.01;
  double dt = 1e-5;
  double nu = 0.25;
  double T = 0.03;
  Index num_subwindows = 50;
  Index steps_per_subwindow = 60;
  double k = 0.1;
  Index obs_per_subwindow = 20;

  double sigma_m2 = 1e-4 * 0.03 / 50;
  double sigma_o2 = 1e-3;
  double sigma_b2 = 1e-2;
  double B_length = 0.25;
  double B_alpha = 0.001;
  double Q_length = 0.05;
  double Q_alpha = 0.01;
  /// Kernel exp(-d^2 / (w L^2)); see the README for the choice of w.
  double kernel_width_factor = 4.0;
  double R_min = 1e-3;
  double R_max = 1.0;

  bool forcing = true;
  /// When false the truth, observations and background are noise free
  /// (covariances are unchanged).
  bool add_noise = true;
  std::uint64_t seed = 20170301;

  /// Checks positivity and T = Nsw * steps * dt.
  void validate() const;
};

/// The forcing term g(x, t).
double burgers_forcing(double x, double t, double k, double nu);

/// One explicit step from time step index `step` (time step * dt).
/// Throws NumericalError if the result is not finite.
Vector burgers_step(const Vector &u, Index step, const BurgersConfig &config);

/// States u^0..u^nsteps starting from u at time step index first_step.
std::vector<Vector> burgers_trajectory(const Vector &u, Index first_step, Index nsteps,
                                       const BurgersConfig &config);

/// Tangent-linear and adjoint models along a stored trajectory; base[s] is
/// the state at the start of step s (only the first base.size()-1 entries
/// are used, the last one being the final state). Throws StateError when
/// base holds fewer than two states.
Vector burgers_tlm(const std::vector<Vector> &base, const Vector &v, const BurgersConfig &config);
Vector burgers_adjoint(const std::vector<Vector> &base, const Vector &w,
                       const BurgersConfig &config);
/// The composed tangent-linear operator as a dense n x n matrix.
Matrix burgers_tlm_matrix(const std::vector<Vector> &base, const BurgersConfig &config);

/// Grid coordinates x_i = i dx, i = 1..n.
Vector burgers_grid(const BurgersConfig &config);

class BurgersProblem final : public NonlinearProblem {
 public:
  struct Data {
    Vector background;
    Vector observations;
    SelectionObservation H;
    BlockDiagonalSPD D;
    BlockDiagonalSPD R;
    Vector truth;        // truth at subwindow ends, state layout
    Vector first_guess;  // initial Gauss-Newton iterate, state layout
  };

  BurgersProblem(BurgersConfig config, Data data);

  Index state_size() const override { return config_.n; }
  Index num_subwindows() const override { return config_.num_subwindows; }
  const Vector &background() const override { return data_.background; }
  const Vector &observations() const override { return data_.observations; }
  const SelectionObservation &observation_operator() const override { return data_.H; }
  const BlockDiagonalSPD &state_covariance() const override { return data_.D; }
  const BlockDiagonalSPD &obs_covariance() const override { return data_.R; }

  Vector propagate(Index j, const Vector &x_prev) const override;
  std::pair<Vector, std::shared_ptr<const LinearBlock>> linearize(
      Index j, const Vector &x_prev) const override;

  /// Stored trajectory of subwindow j started from x_prev (steps + 1 states).
  std::vector<Vector> subwindow_trajectory(Index j, const Vector &x_prev) const;

  const BurgersConfig &config() const { return config_; }
  const Vector &truth() const { return data_.truth; }
  const Vector &first_guess() const { return data_.first_guess; }

 private:
  BurgersConfig config_;
  Data data_;
};

/// Builds the assimilation problem deterministically from config.seed:
/// a noisy truth run from u(x, 0) = k sin(2 pi x), m_j random observations at
/// each subwindow end, a perturbed background, and a first guess obtained by
/// integrating from the background with fresh model-error draws at each
/// subwindow end.
BurgersProblem generate_problem(const BurgersConfig &config);

}  // namespace wc4dvar
