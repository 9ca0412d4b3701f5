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

#ifndef VEIL_STATS_HPP_
#define VEIL_STATS_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace veil::stats {

double mean(std::span<const double> v);
/// Unbiased (N-1) variance; 0 for fewer than two values.
double variance(std::span<const double> v);
double stddev(std::span<const double> v);

/// Linear-interpolation quantile of an ascending-sorted sample, p in [0, 1].
double quantile_sorted(std::span<const double> sorted, double p);

/// Ranks starting at 1 with ties replaced by their average rank.
std::vector<double> average_ranks(std::span<const double> v);

double pearson(std::span<const double> a, std::span<const double> b);

/// Spearman rank correlation (average-rank tie handling). Undefined (returns
/// false) when either list has zero rank variance.
bool spearman(std::span<const double> a, std::span<const double> b, double* rho);

/// Mann-Whitney AUC of scores for the positive class, ties counted half.
double auc(std::span<const double> scores, std::span<const int> labels);

}  // namespace veil::stats

#endif  // VEIL_STATS_HPP_
