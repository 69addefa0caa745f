// SPDX-License-Identifier: Apache-2.0
//
// Small dense test problems and dense oracles built without the library's
// structured operators.

#pragma once

#include "wc4dvar/formulations.hpp"
#include "wc4dvar/operators.hpp"
#include "wc4dvar/problem.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <vector>

namespace wc4dvar::testing {

inline Matrix random_matrix(std::mt19937_64 &gen, Index r, Index c) {
  std::normal_distribution<double> N(0.0, 1.0);
  Matrix m(r, c);
  for (Index j = 0; j < c; ++j)
    for (Index i = 0; i < r; ++i) m(i, j) = N(gen);
  return m;
}

inline Vector random_vector(std::mt19937_64 &gen, Index n) { return random_matrix(gen, n, 1); }

/// Well-conditioned SPD matrix: G G^T / n + shift I.
inline Matrix random_spd(std::mt19937_64 &gen, Index n, double shift = 0.5) {
  const Matrix g = random_matrix(gen, n, n);
  return g * g.transpose() / static_cast<double>(n) + shift * Matrix::Identity(n, n);
}

/// M_j(x) = A_j x + eps sin(x) componentwise. eps = 0 gives a linear model.
class SmallProblem final : public NonlinearProblem {
 public:
  SmallProblem(Index n, Index nsw, std::uint64_t seed, double eps = 0.1,
               std::vector<Index> m = {})
      : n_(n), nsw_(nsw), eps_(eps) {
    std::mt19937_64 gen(seed);
    for (Index j = 0; j < nsw; ++j) A_.push_back(0.6 * random_matrix(gen, n, n) / std::sqrt(n));
    std::vector<Matrix> dblocks;
    for (Index j = 0; j <= nsw; ++j) dblocks.push_back(random_spd(gen, n));
    D_ = BlockDiagonalSPD::from_matrices(dblocks);

    if (m.empty()) m.assign(static_cast<std::size_t>(nsw + 1), std::min<Index>(2, n));
    std::vector<std::vector<Index>> idx;
    std::vector<Matrix> rblocks;
    for (Index j = 0; j <= nsw; ++j) {
      std::vector<Index> all(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
      std::shuffle(all.begin(), all.end(), gen);
      all.resize(static_cast<std::size_t>(m[static_cast<std::size_t>(j)]));
      std::sort(all.begin(), all.end());
      idx.push_back(all);
      rblocks.push_back(random_spd(gen, static_cast<Index>(all.size())));
    }
    H_ = SelectionObservation(n, idx);
    R_ = BlockDiagonalSPD::from_matrices(rblocks);
    xb_ = random_vector(gen, n);
    y_ = random_vector(gen, H_.obs_layout().total());
  }

  /// Makes background and observations exactly consistent with the model
  /// trajectory started at x0, so J(trajectory) = 0.
  Vector make_consistent(const Vector &x0) {
    Vector x(state_layout().total());
    const auto lay = state_layout();
    lay.block(x, 0) = x0;
    for (Index j = 1; j <= nsw_; ++j) lay.block(x, j) = propagate(j, lay.block(x, j - 1));
    xb_ = x0;
    y_ = H_.apply(x);
    return x;
  }

  Index state_size() const override { return n_; }
  Index num_subwindows() const override { return nsw_; }
  const Vector &background() const override { return xb_; }
  const Vector &observations() const override { return y_; }
  const SelectionObservation &observation_operator() const override { return H_; }
  const BlockDiagonalSPD &state_covariance() const override { return D_; }
  const BlockDiagonalSPD &obs_covariance() const override { return R_; }

  Vector propagate(Index j, const Vector &x) const override {
    return A(j) * x + eps_ * x.array().sin().matrix();
  }
  std::pair<Vector, std::shared_ptr<const LinearBlock>> linearize(Index j,
                                                                  const Vector &x) const override {
    Matrix T = A(j);
    T.diagonal() += eps_ * x.array().cos().matrix();
    return {propagate(j, x), std::make_shared<DenseBlock>(T)};
  }

  const Matrix &A(Index j) const { return A_[static_cast<std::size_t>(j - 1)]; }

 private:
  Index n_, nsw_;
  double eps_;
  std::vector<Matrix> A_;
  BlockDiagonalSPD D_, R_;
  SelectionObservation H_;
  Vector xb_, y_;
};

/// Dense matrices of one subproblem, assembled entry by entry.
struct DenseSubproblem {
  Matrix L, Lt, D, R, H;
  Vector b, d;

  Matrix state_matrix() const {
    return L.transpose() * D.inverse() * L + H.transpose() * R.inverse() * H;
  }
  Vector state_rhs() const {
    return L.transpose() * D.inverse() * b + H.transpose() * R.inverse() * d;
  }
  Matrix saddle_matrix() const {
    const Index s = L.rows(), m = H.rows();
    Matrix K = Matrix::Zero(2 * s + m, 2 * s + m);
    K.block(0, 0, s, s) = D;
    K.block(0, s + m, s, s) = L;
    K.block(s, s, m, m) = R;
    K.block(s, s + m, m, s) = H;
    K.block(s + m, 0, s, s) = L.transpose();
    K.block(s + m, s, s, m) = H.transpose();
    return K;
  }
  Matrix S_inverse() const { return Lt.inverse() * D * Lt.inverse().transpose(); }
  Matrix PM() const {
    const Index s = L.rows(), m = H.rows();
    Matrix P = Matrix::Zero(2 * s + m, 2 * s + m);
    P.block(0, 0, s, s) = D;
    P.block(0, s + m, s, s) = Lt;
    P.block(s, s, m, m) = R;
    P.block(s + m, 0, s, s) = Lt.transpose();
    return P;
  }
  Matrix PB() const {
    const Index s = L.rows(), m = H.rows();
    Matrix P = Matrix::Zero(2 * s + m, 2 * s + m);
    P.block(0, 0, s, s) = D;
    P.block(s, s, m, m) = R;
    P.block(s + m, s + m, s, s) = -S_inverse().inverse();
    return P;
  }
  Matrix PT() const {
    const Index s = L.rows(), m = H.rows();
    Matrix P = Matrix::Zero(2 * s + m, 2 * s + m);
    P.block(0, 0, s, s) = D;
    P.block(0, s + m, s, s) = Lt;
    P.block(s, s, m, m) = R;
    P.block(s, s + m, m, s) = H;
    P.block(s + m, s + m, s, s) = S_inverse().inverse();
    return P;
  }
};

/// Dense bidiagonal matrix with -M_j below the identity diagonal.
inline Matrix dense_bidiagonal(Index n, const std::vector<Matrix> &M) {
  const Index nsw = static_cast<Index>(M.size());
  Matrix L = Matrix::Identity(n * (nsw + 1), n * (nsw + 1));
  for (Index j = 1; j <= nsw; ++j) L.block(j * n, (j - 1) * n, n, n) = -M[static_cast<std::size_t>(j - 1)];
  return L;
}

/// Dense oracle for the subproblem of a SmallProblem at x, independent of
/// linearize(): tangent blocks from SmallProblem::A and cos(x).
inline DenseSubproblem dense_subproblem(const SmallProblem &p, const Vector &x, double eps,
                                        ModelApprox approx) {
  const Index n = p.state_size(), nsw = p.num_subwindows();
  const auto lay = p.state_layout();
  std::vector<Matrix> M, Mt;
  for (Index j = 1; j <= nsw; ++j) {
    Matrix T = p.A(j);
    T.diagonal() += eps * lay.block(x, j - 1).array().cos().matrix();
    M.push_back(T);
    switch (approx) {
      case ModelApprox::zero: Mt.push_back(Matrix::Zero(n, n)); break;
      case ModelApprox::identity: Mt.push_back(Matrix::Identity(n, n)); break;
      case ModelApprox::exact: Mt.push_back(T); break;
    }
  }
  DenseSubproblem s;
  s.L = dense_bidiagonal(n, M);
  s.Lt = dense_bidiagonal(n, Mt);
  const Index N = n * (nsw + 1);
  s.D = Matrix::Zero(N, N);
  for (Index j = 0; j <= nsw; ++j) s.D.block(j * n, j * n, n, n) = p.state_covariance().block(j);
  const auto &H = p.observation_operator();
  const Index m = H.obs_layout().total();
  s.R = Matrix::Zero(m, m);
  s.H = Matrix::Zero(m, N);
  Index row = 0;
  for (Index j = 0; j <= nsw; ++j) {
    const Index mj = H.obs_layout().size(j);
    s.R.block(row, row, mj, mj) = p.obs_covariance().block(j);
    for (Index i = 0; i < mj; ++i) {
      s.H(row + i, j * n + H.indices(j)[static_cast<std::size_t>(i)]) = 1.0;
    }
    row += mj;
  }
  s.b = Vector(N);
  s.b.segment(0, n) = p.background() - lay.block(x, 0);
  for (Index j = 1; j <= nsw; ++j) {
    s.b.segment(j * n, n) = p.propagate(j, lay.block(x, j - 1)) - lay.block(x, j);
  }
  s.d = p.observations() - s.H * x;
  return s;
}

/// J(x) from dense matrices.
inline double dense_J(const SmallProblem &p, const Vector &x) {
  const DenseSubproblem s = dense_subproblem(p, x, 0.0, ModelApprox::zero);
  return 0.5 * s.b.dot(s.D.llt().solve(s.b)) + 0.5 * s.d.dot(s.R.llt().solve(s.d));
}

}  // namespace wc4dvar::testing
