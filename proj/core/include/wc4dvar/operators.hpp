// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "wc4dvar/types.hpp"

#include <Eigen/Cholesky>

#include <memory>
#include <vector>

namespace wc4dvar {

/// A square linear operator acting on one state block, R^n -> R^n.
class LinearBlock {
 public:
  virtual ~LinearBlock() = default;
  virtual Index dim() const = 0;
  virtual Vector apply(const Vector &v) const = 0;
  virtual Vector apply_transpose(const Vector &v) const = 0;
};

class DenseBlock final : public LinearBlock {
 public:
  explicit DenseBlock(Matrix m);
  Index dim() const override { return m_.rows(); }
  Vector apply(const Vector &v) const override { return m_ * v; }
  Vector apply_transpose(const Vector &v) const override { return m_.transpose() * v; }
  const Matrix &matrix() const { return m_; }

 private:
  Matrix m_;
};

class IdentityBlock final : public LinearBlock {
 public:
  explicit IdentityBlock(Index n) : n_(n) {}
  Index dim() const override { return n_; }
  Vector apply(const Vector &v) const override { return v; }
  Vector apply_transpose(const Vector &v) const override { return v; }

 private:
  Index n_;
};

/// Choice of the subwindow blocks inside a bidiagonal operator.
enum class ModelApprox { zero, identity, exact };

const char *to_string(ModelApprox m);

/// The block lower-bidiagonal operator
///
///     [  I              ]
///     [ -M_1   I        ]
///     [      -M_2   I   ]
///     [           ...   ]
///
/// acting on state vectors with Nsw+1 blocks of length n. Products with the
/// operator parallelize over subwindows; solves are sequential recurrences.
class BlockBidiagonal {
 public:
  BlockBidiagonal() = default;

  /// All M_j = 0; the operator is the identity.
  static BlockBidiagonal zero(Index n, Index num_subwindows);
  /// All M_j = I.
  static BlockBidiagonal identity(Index n, Index num_subwindows);
  /// Arbitrary model blocks M_1..M_Nsw; kind is recorded for reporting.
  BlockBidiagonal(Index n, std::vector<std::shared_ptr<const LinearBlock>> blocks,
                  ModelApprox kind = ModelApprox::exact);

  Index block_size() const { return n_; }
  Index num_subwindows() const { return nsw_; }
  const BlockLayout &layout() const { return layout_; }
  ModelApprox kind() const { return kind_; }
  const LinearBlock &model_block(Index j) const;  // j in 1..Nsw

  /// forward: (Lv)_0 = v_0, (Lv)_j = v_j - M_j v_{j-1}.
  /// transpose: (L^T v)_j = v_j - M_{j+1}^T v_{j+1}, last block unchanged.
  Vector apply(const Vector &v, Direction dir) const;

  /// forward: u_0 = v_0, u_j = v_j + M_j u_{j-1}.
  /// transpose: u_Nsw = v_Nsw, u_j = v_j + M_{j+1}^T u_{j+1}.
  Vector solve(const Vector &v, Direction dir) const;

 private:
  Index n_ = 0;
  Index nsw_ = 0;
  BlockLayout layout_;
  ModelApprox kind_ = ModelApprox::zero;
  std::vector<std::shared_ptr<const LinearBlock>> blocks_;  // size Nsw, nullptr for zero
};

/// How BlockDiagonalSPD::apply_inverse is realized.
struct InverseMode {
  enum class Kind { exact, cg };
  Kind kind = Kind::exact;
  int iterations = 0;

  static InverseMode exact() { return {}; }
  static InverseMode cg(int k);
  bool operator==(const InverseMode &) const = default;
};

/// Block-diagonal symmetric positive-definite operator, e.g.
/// D = diag(B, Q_1, ..., Q_Nsw) or R = diag(R_0, ..., R_Nsw).
///
/// Blocks are dense with a cached Cholesky factor. Identical blocks may be
/// shared between positions (all Q_j are usually the same matrix).
class BlockDiagonalSPD {
 public:
  struct Block {
    explicit Block(Matrix m);
    Matrix matrix;
    Eigen::LLT<Matrix> llt;
  };

  BlockDiagonalSPD() = default;
  BlockDiagonalSPD(std::vector<std::shared_ptr<const Block>> blocks,
                   InverseMode mode = InverseMode::exact());
  /// Convenience: factorize each matrix separately.
  static BlockDiagonalSPD from_matrices(const std::vector<Matrix> &blocks,
                                        InverseMode mode = InverseMode::exact());

  const BlockLayout &layout() const { return layout_; }
  Index num_blocks() const { return layout_.num_blocks(); }
  const Matrix &block(Index j) const { return blocks_[static_cast<std::size_t>(j)]->matrix; }
  InverseMode inverse_mode() const { return mode_; }

  /// Same blocks, different inverse realization.
  BlockDiagonalSPD with_inverse_mode(InverseMode mode) const;

  Vector apply(const Vector &v) const;
  Vector apply_inverse(const Vector &v) const;

 private:
  std::vector<std::shared_ptr<const Block>> blocks_;
  BlockLayout layout_;
  InverseMode mode_;
};

/// Linear observation operator selecting m_j components of each state block.
class SelectionObservation {
 public:
  SelectionObservation() = default;
  /// indices[j] lists the observed components of state block j (0..Nsw).
  SelectionObservation(Index n, std::vector<std::vector<Index>> indices);

  const BlockLayout &state_layout() const { return state_layout_; }
  const BlockLayout &obs_layout() const { return obs_layout_; }
  const std::vector<Index> &indices(Index j) const {
    return indices_[static_cast<std::size_t>(j)];
  }

  Vector apply(const Vector &x) const;
  Vector apply_transpose(const Vector &y) const;

 private:
  std::vector<std::vector<Index>> indices_;
  BlockLayout state_layout_;
  BlockLayout obs_layout_;
};

/// sigma2 * (alpha I + (1 - alpha) Btilde), Btilde_ij = exp(-d_ij^2 / (width_factor L^2))
/// with d_ij = |i - j| dx on a 1-D grid (no periodic wrap).
Matrix build_sqexp_covariance(Index n, double sigma2, double length_scale, double alpha,
                              double dx, double width_factor = 1.0);

/// Diagonal with entries logarithmically spaced from min_value to max_value
/// in index order (condition number max_value / min_value).
Matrix log_spaced_diagonal(Index m, double min_value, double max_value);

/// Ratio of extreme eigenvalues of a symmetric matrix.
double spd_condition_number(const Matrix &a);

}  // namespace wc4dvar
