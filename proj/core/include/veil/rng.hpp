//
// Copyright 2026 The VEIL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VEIL_RNG_HPP_
#define VEIL_RNG_HPP_

#include <array>
#include <cstdint>
#include <cstddef>
#include <vector>

namespace veil {

/// xoshiro256** seeded through splitmix64. Identical seeds produce identical
/// draw streams across runs and platforms; distributions below are implemented
/// here rather than with <random> adapters, whose outputs are not portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 bits of precision.
  double uniform();
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller (second draw cached).
  double normal();
  double normal(double mean, double stddev);

  /// Uniform integer in [0, n); rejection sampling, no modulo bias.
  std::uint64_t index(std::uint64_t n);

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

  /// Identity permutation of n, shuffled.
  std::vector<std::size_t> permutation(std::size_t n);

  void fill_bytes(std::uint8_t* out, std::size_t n);

  /// Independent child stream; distinct labels give distinct streams.
  Rng fork(std::uint64_t label);

 private:
  std::array<std::uint64_t, 4> state_{};
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace veil

#endif  // VEIL_RNG_HPP_
