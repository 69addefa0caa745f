// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "wc4dvar/types.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace wc4dvar {

/// Independent random streams for problem generation. Each stream is a
/// std::mt19937_64 seeded with splitmix64(seed ^ stream-tag), so regenerating
/// one component never depends on how many draws another one made.
enum class Stream : std::uint64_t {
  model_noise = 1,
  observation_noise = 2,
  background_noise = 3,
  index_selection = 4,
  first_guess_noise = 5,
};

std::uint64_t splitmix64(std::uint64_t x);

class Rng {
 public:
  Rng(std::uint64_t seed, Stream stream);

  /// Uniform in [0, 1) from the top 53 bits.
  double uniform();
  /// Standard normal by the Box-Muller transform; portable across standard
  /// libraries, unlike std::normal_distribution.
  double normal();
  Vector normal_vector(Index n, double stddev);
  /// k distinct values from [0, n), sorted (partial Fisher-Yates).
  std::vector<Index> sample_without_replacement(Index n, Index k);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace wc4dvar
