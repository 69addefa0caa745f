// SPDX-License-Identifier: Apache-2.0

#include "wc4dvar/operators.hpp"

#include "wc4dvar/krylov.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wc4dvar {

DenseBlock::DenseBlock(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) throw DimensionError("DenseBlock: matrix must be square");
}

const char *to_string(ModelApprox m) {
  switch (m) {
    case ModelApprox::zero: return "0";
    case ModelApprox::identity: return "I";
    case ModelApprox::exact: return "M";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// BlockBidiagonal

BlockBidiagonal BlockBidiagonal::zero(Index n, Index num_subwindows) {
  BlockBidiagonal op;
  op.n_ = n;
  op.nsw_ = num_subwindows;
  op.layout_ = BlockLayout::uniform(n, num_subwindows + 1);
  op.kind_ = ModelApprox::zero;
  op.blocks_.assign(static_cast<std::size_t>(num_subwindows), nullptr);
  return op;
}

BlockBidiagonal BlockBidiagonal::identity(Index n, Index num_subwindows) {
  auto id = std::make_shared<IdentityBlock>(n);
  BlockBidiagonal op(n, std::vector<std::shared_ptr<const LinearBlock>>(
                            static_cast<std::size_t>(num_subwindows), id),
                     ModelApprox::identity);
  return op;
}

BlockBidiagonal::BlockBidiagonal(Index n,
                                 std::vector<std::shared_ptr<const LinearBlock>> blocks,
                                 ModelApprox kind)
    : n_(n),
      nsw_(static_cast<Index>(blocks.size())),
      layout_(BlockLayout::uniform(n, static_cast<Index>(blocks.size()) + 1)),
      kind_(kind),
      blocks_(std::move(blocks)) {
  for (const auto &b : blocks_) {
    if (b && b->dim() != n) throw DimensionError("BlockBidiagonal: model block has wrong size");
  }
}

const LinearBlock &BlockBidiagonal::model_block(Index j) const {
  if (j < 1 || j > nsw_) throw DimensionError("BlockBidiagonal: block index out of range");
  const auto &b = blocks_[static_cast<std::size_t>(j - 1)];
  if (!b) throw StateError("BlockBidiagonal: zero block has no operator");
  return *b;
}

Vector BlockBidiagonal::apply(const Vector &v, Direction dir) const {
  layout_.check(v, "BlockBidiagonal::apply");
  Vector out = v;
  if (kind_ == ModelApprox::zero) return out;
  for (Index j = 1; j <= nsw_; ++j) {
    const auto &m = blocks_[static_cast<std::size_t>(j - 1)];
    if (!m) continue;
    if (dir == Direction::forward) {
      layout_.block(out, j) -= m->apply(layout_.block(v, j - 1));
    } else {
      layout_.block(out, j - 1) -= m->apply_transpose(layout_.block(v, j));
    }
  }
  return out;
}

Vector BlockBidiagonal::solve(const Vector &v, Direction dir) const {
  layout_.check(v, "BlockBidiagonal::solve");
  Vector u = v;
  if (kind_ == ModelApprox::zero) return u;
  if (dir == Direction::forward) {
    for (Index j = 1; j <= nsw_; ++j) {
      const auto &m = blocks_[static_cast<std::size_t>(j - 1)];
      if (m) layout_.block(u, j) += m->apply(layout_.block(u, j - 1));
    }
  } else {
    for (Index j = nsw_; j >= 1; --j) {
      const auto &m = blocks_[static_cast<std::size_t>(j - 1)];
      if (m) layout_.block(u, j - 1) += m->apply_transpose(layout_.block(u, j));
    }
  }
  return u;
}

// ---------------------------------------------------------------------------
// BlockDiagonalSPD

InverseMode InverseMode::cg(int k) {
  if (k < 1) throw ParameterError("InverseMode::cg: iteration count must be >= 1");
  return {Kind::cg, k};
}

BlockDiagonalSPD::Block::Block(Matrix m) : matrix(std::move(m)) {
  if (matrix.rows() != matrix.cols()) throw DimensionError("covariance block must be square");
  if (matrix.rows() > 0) {
    llt.compute(matrix);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("covariance block is not positive definite (Cholesky failed)");
    }
  }
}

BlockDiagonalSPD::BlockDiagonalSPD(std::vector<std::shared_ptr<const Block>> blocks,
                                   InverseMode mode)
    : blocks_(std::move(blocks)), mode_(mode) {
  std::vector<Index> sizes;
  sizes.reserve(blocks_.size());
  for (const auto &b : blocks_) {
    if (!b) throw ParameterError("BlockDiagonalSPD: null block");
    sizes.push_back(b->matrix.rows());
  }
  layout_ = BlockLayout(std::move(sizes));
}

BlockDiagonalSPD BlockDiagonalSPD::from_matrices(const std::vector<Matrix> &blocks,
                                                 InverseMode mode) {
  std::vector<std::shared_ptr<const Block>> bs;
  bs.reserve(blocks.size());
  for (const auto &m : blocks) bs.push_back(std::make_shared<const Block>(m));
  return BlockDiagonalSPD(std::move(bs), mode);
}

BlockDiagonalSPD BlockDiagonalSPD::with_inverse_mode(InverseMode mode) const {
  BlockDiagonalSPD copy = *this;
  copy.mode_ = mode;
  return copy;
}

Vector BlockDiagonalSPD::apply(const Vector &v) const {
  layout_.check(v, "BlockDiagonalSPD::apply");
  Vector out(v.size());
  for (Index j = 0; j < num_blocks(); ++j) {
    if (layout_.size(j) == 0) continue;
    layout_.block(out, j).noalias() = block(j) * layout_.block(v, j);
  }
  return out;
}

Vector BlockDiagonalSPD::apply_inverse(const Vector &v) const {
  layout_.check(v, "BlockDiagonalSPD::apply_inverse");
  Vector out(v.size());
  for (Index j = 0; j < num_blocks(); ++j) {
    if (layout_.size(j) == 0) continue;
    const auto &blk = *blocks_[static_cast<std::size_t>(j)];
    Vector rhs = layout_.block(v, j);
    if (mode_.kind == InverseMode::Kind::exact) {
      layout_.block(out, j) = blk.llt.solve(rhs);
    } else {
      const Matrix &m = blk.matrix;
      layout_.block(out, j) =
          cg([&m](const Vector &x) -> Vector { return m * x; }, rhs, mode_.iterations);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SelectionObservation

SelectionObservation::SelectionObservation(Index n, std::vector<std::vector<Index>> indices)
    : indices_(std::move(indices)) {
  std::vector<Index> sizes;
  sizes.reserve(indices_.size());
  for (const auto &idx : indices_) {
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (idx[k] < 0 || idx[k] >= n) {
        throw ParameterError("SelectionObservation: index out of range");
      }
      if (k > 0 && idx[k] <= idx[k - 1]) {
        throw ParameterError("SelectionObservation: indices must be sorted and distinct");
      }
    }
    sizes.push_back(static_cast<Index>(idx.size()));
  }
  state_layout_ = BlockLayout::uniform(n, static_cast<Index>(indices_.size()));
  obs_layout_ = BlockLayout(std::move(sizes));
}

Vector SelectionObservation::apply(const Vector &x) const {
  state_layout_.check(x, "SelectionObservation::apply");
  Vector y(obs_layout_.total());
  for (Index j = 0; j < obs_layout_.num_blocks(); ++j) {
    const auto &idx = indices_[static_cast<std::size_t>(j)];
    const Index xo = state_layout_.offset(j);
    const Index yo = obs_layout_.offset(j);
    for (std::size_t k = 0; k < idx.size(); ++k) y[yo + static_cast<Index>(k)] = x[xo + idx[k]];
  }
  return y;
}

Vector SelectionObservation::apply_transpose(const Vector &y) const {
  obs_layout_.check(y, "SelectionObservation::apply_transpose");
  Vector x = Vector::Zero(state_layout_.total());
  for (Index j = 0; j < obs_layout_.num_blocks(); ++j) {
    const auto &idx = indices_[static_cast<std::size_t>(j)];
    const Index xo = state_layout_.offset(j);
    const Index yo = obs_layout_.offset(j);
    for (std::size_t k = 0; k < idx.size(); ++k) x[xo + idx[k]] = y[yo + static_cast<Index>(k)];
  }
  return x;
}

// ---------------------------------------------------------------------------
// Covariance construction

Matrix build_sqexp_covariance(Index n, double sigma2, double length_scale, double alpha,
                              double dx, double width_factor) {
  if (!(sigma2 > 0.0)) throw ParameterError("build_sqexp_covariance: sigma2 must be > 0");
  if (!(length_scale > 0.0)) {
    throw ParameterError("build_sqexp_covariance: length_scale must be > 0");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ParameterError("build_sqexp_covariance: alpha must lie in [0, 1]");
  }
  if (!(width_factor > 0.0)) {
    throw ParameterError("build_sqexp_covariance: width_factor must be > 0");
  }
  if (n < 1) throw ParameterError("build_sqexp_covariance: n must be >= 1");

  const double denom = width_factor * length_scale * length_scale;
  Matrix b(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i; j < n; ++j) {
      const double d = static_cast<double>(j - i) * dx;
      const double corr = (i == j ? alpha : 0.0) + (1.0 - alpha) * std::exp(-d * d / denom);
      b(i, j) = sigma2 * corr;
      b(j, i) = b(i, j);
    }
  }
  return b;
}

Matrix log_spaced_diagonal(Index m, double min_value, double max_value) {
  if (!(min_value > 0.0 && max_value >= min_value)) {
    throw ParameterError("log_spaced_diagonal: need 0 < min_value <= max_value");
  }
  Matrix r = Matrix::Zero(m, m);
  if (m == 1) {
    r(0, 0) = max_value;
    return r;
  }
  const double lo = std::log10(min_value);
  const double hi = std::log10(max_value);
  for (Index i = 0; i < m; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(m - 1);
    r(i, i) = std::pow(10.0, lo + t * (hi - lo));
  }
  // Endpoints exactly, so the condition number is exact by construction.
  r(0, 0) = min_value;
  r(m - 1, m - 1) = max_value;
  return r;
}

double spd_condition_number(const Matrix &a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigenvalue computation failed");
  const auto &ev = es.eigenvalues();
  if (ev.minCoeff() <= 0.0) throw NumericalError("matrix is not positive definite");
  return ev.maxCoeff() / ev.minCoeff();
}

}  // namespace wc4dvar
