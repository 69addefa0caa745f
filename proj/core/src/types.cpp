// SPDX-License-Identifier: Apache-2.0

#include "wc4dvar/types.hpp"

#include <sstream>

namespace wc4dvar {

BlockLayout::BlockLayout(std::vector<Index> sizes) : sizes_(std::move(sizes)) {
  offsets_.reserve(sizes_.size());
  for (Index s : sizes_) {
    if (s < 0) throw DimensionError("BlockLayout: negative block size");
    offsets_.push_back(total_);
    total_ += s;
  }
}

BlockLayout BlockLayout::uniform(Index block_size, Index num_blocks) {
  return BlockLayout(std::vector<Index>(static_cast<std::size_t>(num_blocks), block_size));
}

void BlockLayout::check(const Vector &v, const char *what) const {
  if (v.size() != total_) {
    std::ostringstream msg;
    msg << what << ": expected vector of length " << total_ << " (" << num_blocks()
        << " blocks), got " << v.size();
    throw DimensionError(msg.str());
  }
}

OpCounts &OpCounts::operator+=(const OpCounts &o) {
  model += o.model;
  obs_nonlinear += o.obs_nonlinear;
  L += o.L;
  LT += o.LT;
  L_inv += o.L_inv;
  L_invT += o.L_invT;
  Ltilde_inv += o.Ltilde_inv;
  Ltilde_invT += o.Ltilde_invT;
  D += o.D;
  D_inv += o.D_inv;
  R += o.R;
  R_inv += o.R_inv;
  H += o.H;
  HT += o.HT;
  return *this;
}

double dot(const Vector &a, const Vector &b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  return a.dot(b);
}

}  // namespace wc4dvar
