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

#ifndef VEIL_DIAGNOSTICS_HPP_
#define VEIL_DIAGNOSTICS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "veil/matrix.hpp"

namespace veil::diag {

struct SpearmanResult {
  double rho = 0.0;
  bool defined = false;   // false when either distance list has no variance
  std::size_t pairs_used = 0;
  bool sampled = false;
};

/// Spearman rank correlation between pairwise latent distances and pairwise
/// target distances. Enumerates all pairs up to `max_pairs`, then switches to
/// a seeded uniform sample of that many pairs. Average-rank tie handling.
SpearmanResult spearman_latent_target(const Matrix& psi, const Matrix& y,
                                      std::size_t max_pairs = 100000,
                                      std::uint64_t seed = 0);

struct KnnR2Result {
  std::vector<double> fold_r2;
  std::vector<bool> fold_defined;  // false when a fold's targets are constant
  double mean_r2 = 0.0;
  bool any_undefined = false;
};

/// Out-of-fold R^2 of a k-nearest-neighbor regressor (uniform average of k
/// neighbors, Euclidean metric on the latents).
KnnR2Result knn_r2(const Matrix& psi, const Matrix& y, std::size_t k = 5,
                   std::size_t folds = 5, std::uint64_t seed = 0);

struct CalibrationBin {
  std::size_t index = 0;
  double mean_predicted = 0.0;
  double mean_observed = 0.0;
  std::size_t count = 0;
};

struct CalibrationResult {
  std::vector<CalibrationBin> bins;
  double gap = 0.0;      // max_b |mean predicted - mean observed|
  bool merged = false;   // heavy ties forced bin merging
};

/// Equal-frequency bins of the predictions (deciles by default); per-bin mean
/// prediction vs mean observation. Ties across a boundary merge bins.
CalibrationResult calibration_bins(const Matrix& y, const Matrix& y_hat,
                                   std::size_t n_bins = 10);

/// Everything the diagnose command emits.
struct DiagnosticsReport {
  SpearmanResult spearman;
  KnnR2Result knn;
  double downstream_r2 = 0.0;
  CalibrationResult calibration;
  std::size_t epoch = 0;

  std::string to_json(const std::string& config_echo = "{}") const;
  std::string to_csv() const;
};

/// Plain R^2 = 1 - SS_res/SS_tot of predictions against observations
/// (first columns compared when multi-dimensional).
double r_squared(const Matrix& y, const Matrix& y_hat);

}  // namespace veil::diag

#endif  // VEIL_DIAGNOSTICS_HPP_
