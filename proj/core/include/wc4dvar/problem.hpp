// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "wc4dvar/operators.hpp"
#include "wc4dvar/types.hpp"

#include <memory>
#include <utility>

namespace wc4dvar {

/// A weak-constraint assimilation problem
///
///   J(x) = 1/2 ||x^(0) - x_b||^2_{B^-1}
///        + 1/2 sum_j ||H_j x^(j) - y_j||^2_{R_j^-1}
///        + 1/2 sum_j ||x^(j) - M_j(x^(j-1))||^2_{Q_j^-1}
///
/// over x = (x^(0), ..., x^(Nsw)). Observation operators are linear
/// selections; the model M_j is nonlinear and supplies its tangent-linear
/// block on request.
class NonlinearProblem {
 public:
  virtual ~NonlinearProblem() = default;

  virtual Index state_size() const = 0;
  virtual Index num_subwindows() const = 0;

  virtual const Vector &background() const = 0;
  /// Observations y_0..y_Nsw in the layout of observation_operator().obs_layout().
  virtual const Vector &observations() const = 0;
  virtual const SelectionObservation &observation_operator() const = 0;
  /// D = diag(B, Q_1, ..., Q_Nsw).
  virtual const BlockDiagonalSPD &state_covariance() const = 0;
  /// R = diag(R_0, ..., R_Nsw); blocks may be empty.
  virtual const BlockDiagonalSPD &obs_covariance() const = 0;

  /// M_j(x_prev), j in 1..Nsw.
  virtual Vector propagate(Index j, const Vector &x_prev) const = 0;
  /// M_j(x_prev) together with the tangent-linear block at x_prev.
  virtual std::pair<Vector, std::shared_ptr<const LinearBlock>> linearize(
      Index j, const Vector &x_prev) const = 0;

  BlockLayout state_layout() const {
    return BlockLayout::uniform(state_size(), num_subwindows() + 1);
  }
};

}  // namespace wc4dvar
