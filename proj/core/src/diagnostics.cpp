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

#include "veil/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "veil/rng.hpp"
#include "veil/stats.hpp"

namespace veil::diag {

SpearmanResult spearman_latent_target(const Matrix& psi, const Matrix& y,
                                      std::size_t max_pairs, std::uint64_t seed) {
  const std::size_t n = psi.rows();
  if (n < 3) throw std::invalid_argument("spearman_latent_target: need N >= 3");
  if (y.rows() != n) {
    throw std::invalid_argument("spearman_latent_target: row count mismatch");
  }
  SpearmanResult result;
  const std::size_t total_pairs = n * (n - 1) / 2;
  std::vector<double> latent_d, target_d;

  if (total_pairs <= max_pairs) {
    latent_d.reserve(total_pairs);
    target_d.reserve(total_pairs);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        latent_d.push_back(std::sqrt(squared_distance(psi.row(i), psi.row(j))));
        target_d.push_back(std::sqrt(squared_distance(y.row(i), y.row(j))));
      }
    }
  } else {
    result.sampled = true;
    Rng rng(seed);
    latent_d.reserve(max_pairs);
    target_d.reserve(max_pairs);
    for (std::size_t t = 0; t < max_pairs; ++t) {
      const std::size_t i = rng.index(n);
      std::size_t j = rng.index(n - 1);
      if (j >= i) ++j;
      latent_d.push_back(std::sqrt(squared_distance(psi.row(i), psi.row(j))));
      target_d.push_back(std::sqrt(squared_distance(y.row(i), y.row(j))));
    }
  }
  result.pairs_used = latent_d.size();
  result.defined = stats::spearman(latent_d, target_d, &result.rho);
  return result;
}

KnnR2Result knn_r2(const Matrix& psi, const Matrix& y, std::size_t k, std::size_t folds,
                   std::uint64_t seed) {
  const std::size_t n = psi.rows();
  if (folds < 2) throw std::invalid_argument("knn_r2: need folds >= 2");
  if (n < folds * (k + 1)) {
    throw std::invalid_argument("knn_r2: need N >= folds * (k + 1)");
  }
  if (y.rows() != n) throw std::invalid_argument("knn_r2: row count mismatch");

  Rng rng(seed);
  const auto perm = rng.permutation(n);

  KnnR2Result result;
  double sum = 0.0;
  std::size_t defined = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t begin = f * n / folds;
    const std::size_t end = (f + 1) * n / folds;
    std::vector<std::size_t> test_idx(perm.begin() + static_cast<std::ptrdiff_t>(begin),
                                      perm.begin() + static_cast<std::ptrdiff_t>(end));
    std::vector<std::size_t> train_idx;
    train_idx.reserve(n - test_idx.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (i < begin || i >= end) train_idx.push_back(perm[i]);
    }

    // Uniform average of the k nearest training latents; ties by index.
    double ss_res = 0.0;
    std::vector<double> observed;
    observed.reserve(test_idx.size());
    for (std::size_t t : test_idx) {
      std::vector<std::pair<double, std::size_t>> dist;
      dist.reserve(train_idx.size());
      for (std::size_t s : train_idx) {
        dist.push_back({squared_distance(psi.row(t), psi.row(s)), s});
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k),
                        dist.end());
      double pred = 0.0;
      for (std::size_t q = 0; q < k; ++q) pred += y(dist[q].second, 0);
      pred /= static_cast<double>(k);
      const double obs = y(t, 0);
      ss_res += (obs - pred) * (obs - pred);
      observed.push_back(obs);
    }
    const double obs_mean = stats::mean(observed);
    double ss_tot = 0.0;
    for (double o : observed) ss_tot += (o - obs_mean) * (o - obs_mean);

    if (ss_tot == 0.0) {
      result.fold_r2.push_back(0.0);
      result.fold_defined.push_back(false);
      result.any_undefined = true;
    } else {
      const double r2 = 1.0 - ss_res / ss_tot;
      result.fold_r2.push_back(r2);
      result.fold_defined.push_back(true);
      sum += r2;
      ++defined;
    }
  }
  result.mean_r2 = defined > 0 ? sum / static_cast<double>(defined) : 0.0;
  return result;
}

CalibrationResult calibration_bins(const Matrix& y, const Matrix& y_hat,
                                   std::size_t n_bins) {
  const std::size_t n = y.rows();
  if (n_bins < 2) throw std::invalid_argument("calibration_bins: need n_bins >= 2");
  if (n < n_bins) throw std::invalid_argument("calibration_bins: need N >= n_bins");
  if (y_hat.rows() != n) {
    throw std::invalid_argument("calibration_bins: row count mismatch");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (y_hat(a, 0) != y_hat(b, 0)) return y_hat(a, 0) < y_hat(b, 0);
    return a < b;
  });

  // Equal-frequency boundaries; bin sizes differ by at most one.
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  for (std::size_t b = 0; b < n_bins; ++b) {
    ranges.push_back({b * n / n_bins, (b + 1) * n / n_bins});
  }

  CalibrationResult result;
  // Identical predictions straddling a boundary make the equal-frequency
  // split impossible; merge those bins.
  std::vector<std::pair<std::size_t, std::size_t>> merged;
  for (const auto& range : ranges) {
    if (!merged.empty()) {
      const std::size_t prev_last = merged.back().second - 1;
      if (y_hat(order[prev_last], 0) == y_hat(order[range.first], 0)) {
        merged.back().second = range.second;
        result.merged = true;
        continue;
      }
    }
    merged.push_back(range);
  }

  for (std::size_t b = 0; b < merged.size(); ++b) {
    CalibrationBin bin;
    bin.index = b;
    for (std::size_t r = merged[b].first; r < merged[b].second; ++r) {
      bin.mean_predicted += y_hat(order[r], 0);
      bin.mean_observed += y(order[r], 0);
      ++bin.count;
    }
    bin.mean_predicted /= static_cast<double>(bin.count);
    bin.mean_observed /= static_cast<double>(bin.count);
    result.gap = std::max(result.gap, std::abs(bin.mean_predicted - bin.mean_observed));
    result.bins.push_back(bin);
  }
  return result;
}

double r_squared(const Matrix& y, const Matrix& y_hat) {
  if (y.rows() != y_hat.rows()) throw std::invalid_argument("r_squared: row mismatch");
  double ss_res = 0.0, ss_tot = 0.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < y.rows(); ++i) mean += y(i, 0);
  mean /= static_cast<double>(y.rows());
  for (std::size_t i = 0; i < y.rows(); ++i) {
    const double obs = y(i, 0);
    const double pred = y_hat(i, 0);
    ss_res += (obs - pred) * (obs - pred);
    ss_tot += (obs - mean) * (obs - mean);
  }
  if (ss_tot == 0.0) return 0.0;
  return 1.0 - ss_res / ss_tot;
}

std::string DiagnosticsReport::to_json(const std::string& config_echo) const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["spearman"] = {{"rho", spearman.rho},
                   {"defined", spearman.defined},
                   {"pairs_used", spearman.pairs_used},
                   {"sampled", spearman.sampled}};
  j["knn_r2"] = {{"folds", knn.fold_r2},
                 {"mean", knn.mean_r2},
                 {"any_undefined", knn.any_undefined}};
  j["downstream_r2"] = downstream_r2;
  nlohmann::ordered_json bins = nlohmann::ordered_json::array();
  for (const auto& b : calibration.bins) {
    bins.push_back({{"bin", b.index},
                    {"mean_predicted", b.mean_predicted},
                    {"mean_observed", b.mean_observed},
                    {"count", b.count}});
  }
  j["calibration"] = {{"bins", bins},
                      {"gap", calibration.gap},
                      {"merged", calibration.merged}};
  j["config"] = nlohmann::ordered_json::parse(config_echo);
  return j.dump(2);
}

std::string DiagnosticsReport::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,spearman_rho,spearman_defined,knn_r2_mean,downstream_r2,calibration_gap\n";
  os << epoch << ',' << spearman.rho << ',' << (spearman.defined ? 1 : 0) << ','
     << knn.mean_r2 << ',' << downstream_r2 << ',' << calibration.gap << '\n';
  return os.str();
}

}  // namespace veil::diag
