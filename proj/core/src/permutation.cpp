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

#include <stdexcept>

#include "veil/attacks.hpp"

namespace veil::attacks {

namespace {

double add_one_estimate(double observed,
                        const std::function<double(std::size_t)>& null_sampler,
                        std::size_t count) {
  std::size_t at_least = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (null_sampler(i) >= observed) ++at_least;
  }
  return static_cast<double>(1 + at_least) / static_cast<double>(1 + count);
}

}  // namespace

PermutationOutcome permutation_p_value(
    double observed, const std::function<double(std::size_t)>& null_sampler,
    const PermutationTest& test) {
  if (test.initial_permutations == 0) {
    throw std::invalid_argument("permutation_p_value: need at least one permutation");
  }
  PermutationOutcome outcome;
  outcome.permutations_used = test.initial_permutations;
  outcome.p_value = add_one_estimate(observed, null_sampler, test.initial_permutations);
  const bool in_gray_zone =
      outcome.p_value >= test.gray_zone_low && outcome.p_value <= test.gray_zone_high;
  if (test.escalate && in_gray_zone &&
      test.max_permutations > test.initial_permutations) {
    outcome.permutations_used = test.max_permutations;
    outcome.p_value = add_one_estimate(observed, null_sampler, test.max_permutations);
  }
  return outcome;
}

}  // namespace veil::attacks
