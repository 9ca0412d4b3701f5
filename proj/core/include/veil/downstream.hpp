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

#ifndef VEIL_DOWNSTREAM_HPP_
#define VEIL_DOWNSTREAM_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "veil/matrix.hpp"
#include "veil/net.hpp"

namespace veil::downstream {

/// Input standardization fitted on training data and applied at predict time.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // 1/std, 1 for constant columns

  static Standardizer fit(const Matrix& x);
  Matrix apply(const Matrix& x) const;
};

/// Multiclass softmax regression trained full-batch with adaptive moments.
/// Deterministic under the config seed.
struct LogisticRegressionConfig {
  std::size_t iterations = 300;
  double learning_rate = 0.05;
  double l2 = 1e-3;
  std::uint64_t seed = 0;
};

class LogisticRegression {
 public:
  LogisticRegression() = default;

  static LogisticRegression fit(const Matrix& x, const std::vector<std::size_t>& labels,
                                std::size_t num_classes,
                                const LogisticRegressionConfig& config = {});

  Matrix predict_proba(const Matrix& x) const;
  std::vector<std::size_t> predict(const Matrix& x) const;
  double accuracy(const Matrix& x, const std::vector<std::size_t>& labels) const;

  std::size_t num_classes() const { return weights_.cols(); }
  std::size_t input_dim() const { return weights_.rows(); }

  const Matrix& weights() const { return weights_; }
  const Matrix& bias() const { return bias_; }
  const Standardizer& standardizer() const { return standardizer_; }

  static LogisticRegression from_parts(Matrix weights, Matrix bias, Standardizer s);

 private:
  Matrix weights_;  // d x K
  Matrix bias_;     // 1 x K
  Standardizer standardizer_;
};

/// Ridge regression by normal equations (Cholesky); exact and deterministic.
class LinearRegression {
 public:
  LinearRegression() = default;

  static LinearRegression fit(const Matrix& x, const Matrix& y, double l2 = 1e-6);

  Matrix predict(const Matrix& x) const;

  const Matrix& weights() const { return weights_; }
  const Matrix& bias() const { return bias_; }
  const Standardizer& standardizer() const { return standardizer_; }

  static LinearRegression from_parts(Matrix weights, Matrix bias, Standardizer s);

 private:
  Matrix weights_;  // d x t
  Matrix bias_;     // 1 x t
  Standardizer standardizer_;
};

/// Small dense-network regressor with early stopping on a held-out split;
/// the attacker decoder of the reconstruction attack.
struct MlpRegressorConfig {
  std::vector<std::size_t> hidden_widths;  // e.g. {2E, 2E}
  std::size_t max_epochs = 200;
  std::size_t patience = 20;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  double holdout_fraction = 0.15;
  std::uint64_t seed = 0;
};

class MlpRegressor {
 public:
  static MlpRegressor fit(const Matrix& x, const Matrix& y,
                          const MlpRegressorConfig& config);
  Matrix predict(const Matrix& x) const;
  std::size_t epochs_ran() const { return epochs_ran_; }

 private:
  nn::Mlp net_;
  Standardizer x_standardizer_;
  Standardizer y_standardizer_;
  std::size_t epochs_ran_ = 0;
};

/// Downstream artifact (kind = "downstream") for the inference service:
/// a latent-consuming predictor with its standardization constants.
struct DownstreamModel {
  std::string type;  // "logistic" | "linear"
  LogisticRegression logistic;
  LinearRegression linear;

  std::size_t input_dim() const;
  /// Probabilities for logistic, point predictions for linear.
  Matrix predict(const Matrix& latents) const;
};

void save_downstream(const DownstreamModel& model, const std::string& path,
                     const std::string& config_echo = "{}");
DownstreamModel load_downstream(const std::string& path);

}  // namespace veil::downstream

#endif  // VEIL_DOWNSTREAM_HPP_
