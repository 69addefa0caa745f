// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wc4dvar {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A linear map between flat vectors. Operators are passed to the Krylov
/// solvers in this form.
using LinearMap = std::function<Vector(const Vector &)>;

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Partition of a flat vector into consecutive blocks.
///
/// State vectors x = (x^(0), ..., x^(Nsw)) use a uniform layout of Nsw+1
/// blocks of length n; observation-space vectors use one block of length m_j
/// per subwindow boundary (m_j may be zero).
class BlockLayout {
 public:
  BlockLayout() = default;
  explicit BlockLayout(std::vector<Index> sizes);

  static BlockLayout uniform(Index block_size, Index num_blocks);

  Index num_blocks() const { return static_cast<Index>(sizes_.size()); }
  Index size(Index j) const { return sizes_[static_cast<std::size_t>(j)]; }
  Index offset(Index j) const { return offsets_[static_cast<std::size_t>(j)]; }
  Index total() const { return total_; }
  const std::vector<Index> &sizes() const { return sizes_; }

  auto block(Vector &v, Index j) const { return v.segment(offset(j), size(j)); }
  auto block(const Vector &v, Index j) const { return v.segment(offset(j), size(j)); }

  /// Throws DimensionError when v does not have total() entries.
  void check(const Vector &v, const char *what) const;

  bool operator==(const BlockLayout &other) const { return sizes_ == other.sizes_; }

 private:
  std::vector<Index> sizes_;
  std::vector<Index> offsets_;
  Index total_ = 0;
};

enum class Direction { forward, transpose };

/// Counts of operator applications, used for trace output.
struct OpCounts {
  std::int64_t model = 0;        // nonlinear model over the whole window
  std::int64_t obs_nonlinear = 0;
  std::int64_t L = 0;
  std::int64_t LT = 0;
  std::int64_t L_inv = 0;
  std::int64_t L_invT = 0;
  std::int64_t Ltilde_inv = 0;
  std::int64_t Ltilde_invT = 0;
  std::int64_t D = 0;
  std::int64_t D_inv = 0;
  std::int64_t R = 0;
  std::int64_t R_inv = 0;
  std::int64_t H = 0;
  std::int64_t HT = 0;

  OpCounts &operator+=(const OpCounts &o);
};

inline void bump(OpCounts *c, std::int64_t OpCounts::*field) {
  if (c) ++(c->*field);
}

double dot(const Vector &a, const Vector &b);

}  // namespace wc4dvar
