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

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "veil/diagnostics.hpp"
#include "veil/downstream.hpp"
#include "veil/rng.hpp"

using namespace veil;
using namespace veil::downstream;

TEST_CASE("logistic regression separates gaussian blobs") {
  Rng rng(51);
  const std::size_t n = 400;
  Matrix x(n, 3);
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = rng.index(3);
    for (std::size_t j = 0; j < 3; ++j) {
      x(i, j) = rng.normal(labels[i] == j ? 2.5 : 0.0, 1.0);
    }
  }
  const auto model = LogisticRegression::fit(x, labels, 3);
  CHECK(model.accuracy(x, labels) > 0.9);

  const Matrix probs = model.predict_proba(x);
  for (std::size_t i = 0; i < 5; ++i) {
    double sum = 0.0;
    for (double v : probs.row(i)) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }

  // Determinism under the same config.
  const auto again = LogisticRegression::fit(x, labels, 3);
  CHECK(model.weights() == again.weights());
}

TEST_CASE("linear regression recovers planted coefficients") {
  Rng rng(52);
  const std::size_t n = 300;
  Matrix x(n, 4);
  Matrix y(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 4; ++j) x(i, j) = rng.normal();
    y(i, 0) = 2.0 * x(i, 0) - 1.0 * x(i, 1) + 0.5 * x(i, 2) + 3.0 + 0.01 * rng.normal();
  }
  const auto model = LinearRegression::fit(x, y);
  const Matrix pred = model.predict(x);
  CHECK(diag::r_squared(y, pred) > 0.999);
}

TEST_CASE("mlp regressor fits a nonlinear map and stops early") {
  Rng rng(53);
  const std::size_t n = 600;
  Matrix x(n, 2);
  Matrix y(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = rng.uniform(-2, 2);
    x(i, 1) = rng.uniform(-2, 2);
    y(i, 0) = std::sin(x(i, 0)) * x(i, 1) + 0.02 * rng.normal();
  }
  MlpRegressorConfig cfg;
  cfg.hidden_widths = {16, 16};
  cfg.max_epochs = 150;
  cfg.patience = 15;
  cfg.learning_rate = 3e-3;
  cfg.seed = 4;
  const auto model = MlpRegressor::fit(x, y, cfg);
  CHECK(diag::r_squared(y, model.predict(x)) > 0.9);
  CHECK(model.epochs_ran() <= 150);
}

TEST_CASE("downstream artifact round trip") {
  Rng rng(54);
  Matrix x(120, 4);
  std::vector<std::size_t> labels(120);
  for (std::size_t i = 0; i < 120; ++i) {
    labels[i] = rng.index(2);
    for (std::size_t j = 0; j < 4; ++j) {
      x(i, j) = rng.normal(labels[i] ? 1.0 : -1.0, 1.0);
    }
  }
  DownstreamModel model;
  model.type = "logistic";
  model.logistic = LogisticRegression::fit(x, labels, 2);

  const std::string path =
      (std::filesystem::temp_directory_path() / "veil_downstream.vm").string();
  save_downstream(model, path);
  const DownstreamModel loaded = load_downstream(path);
  CHECK(loaded.type == "logistic");
  CHECK(loaded.predict(x) == model.predict(x));
  std::remove(path.c_str());
}
