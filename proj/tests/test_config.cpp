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
#include <string>

#include "doctest.h"
#include "veil/config.hpp"

using namespace veil;
using namespace veil::io;

TEST_CASE("a full config parses and resolves") {
  const std::string text = R"({
    "seed": 42,
    "data": {"target_column": "label", "valid_fraction": 0.25},
    "spec": {"layer_widths": [32, 16], "activation": "relu",
             "head": "classifier", "head_dim": 10},
    "train": {"weights": {"lambda_recon": 0.0, "lambda_repr": 1.0,
                          "lambda_pred": 1.0, "lambda_reg": 0.1,
                          "sigma": 1.0, "tau": 0.5, "delta": 1.0,
                          "k": 5, "sym_mode": "union"},
              "repr_loss": "center", "pred_loss": "cross_entropy",
              "batch_size": 128, "epochs": 10, "learning_rate": 0.001,
              "optimizer": "adaptive_moments"},
    "encode": {"with_targets": true},
    "downstream": {"kind": "logistic", "l2": 0.001},
    "attack": {"reconstruction": {"permutations": 20},
               "attribute": {"folds": 5, "permutation": {"initial_permutations": 100}},
               "membership": {"quantile_bins": 4}},
    "serve": {"role": "inference", "host": "127.0.0.1", "port": 9000}
  })";
  const RunConfig cfg = parse_run_config(text);
  CHECK(cfg.seed == 42);
  CHECK(cfg.target_column == "label");
  CHECK(cfg.spec.layer_widths == std::vector<std::size_t>{32, 16});
  CHECK(cfg.spec.head_dim == 10);
  CHECK(cfg.train.batch_size == 128);
  CHECK(cfg.train.seed == 42);  // seed flows into sections
  CHECK(cfg.encode_with_targets);
  CHECK(cfg.downstream_kind == "logistic");
  CHECK(cfg.reconstruction.permutations == 20);
  CHECK(cfg.attribute.folds == 5);
  CHECK(cfg.serve_role == "inference");
  CHECK(cfg.inference.port == 9000);

  // The resolved echo parses back strictly.
  CHECK_NOTHROW(parse_run_config(cfg.resolved_json()));
}

TEST_CASE("unknown keys are fatal at every level") {
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"sede": 1})"),
                       doctest::Contains("unknown key '$.sede'"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_run_config(R"({"train": {"epochz": 3}})"),
                       doctest::Contains("'train.epochz'"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      parse_run_config(R"({"train": {"weights": {"lambda_rec": 1}}})"),
      doctest::Contains("'train.weights.lambda_rec'"), std::invalid_argument);
}

TEST_CASE("all violations are enumerated together") {
  try {
    parse_run_config(R"({"sede": 1, "train": {"epochz": 3}, "serve": {"role": "zzz"}})");
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("$.sede") != std::string::npos);
    CHECK(msg.find("train.epochz") != std::string::npos);
    CHECK(msg.find("serve.role") != std::string::npos);
  }
}

TEST_CASE("malformed json is rejected with context") {
  CHECK_THROWS_WITH_AS(parse_run_config("{nope"), doctest::Contains("not valid JSON"),
                       std::invalid_argument);
}

TEST_CASE("bad enum values are reported, not defaulted") {
  CHECK_THROWS_AS(parse_run_config(R"({"train": {"repr_loss": "centerx"}})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse_run_config(R"({"spec": {"activation": "sigmoid"}})"),
                  std::invalid_argument);
}
