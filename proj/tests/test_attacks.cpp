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
#include <stdexcept>

#include "doctest.h"
#include "veil/attacks.hpp"

using namespace veil;
using namespace veil::attacks;

namespace {

// Cheap trained encoder for fixtures that need one.
scrae::EncoderModel tiny_encoder(std::size_t input_dim, std::size_t bottleneck,
                                 std::uint64_t seed) {
  scrae::EncoderSpec spec;
  spec.input_dim = input_dim;
  spec.layer_widths = {std::max<std::size_t>(bottleneck + 2, input_dim / 2), bottleneck};
  spec.activation = nn::Act::tanh_fn;
  spec.head = scrae::HeadKind::regressor;
  spec.head_dim = 1;

  Rng rng(seed);
  scrae::Dataset ds;
  ds.x = Matrix(64, input_dim);
  ds.targets = Matrix(64, 1);
  for (std::size_t i = 0; i < 64; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < input_dim; ++j) {
      ds.x(i, j) = rng.normal();
      s += ds.x(i, j);
    }
    ds.targets(i, 0) = s / static_cast<double>(input_dim);
  }
  scrae::TrainConfig cfg;
  cfg.repr_loss = scrae::ReprLoss::r_nce;
  cfg.pred_loss = scrae::PredLoss::huber;
  cfg.weights.lambda_reg = 0;
  cfg.batch_size = 16;
  cfg.epochs = 2;
  cfg.seed = seed;
  return scrae::train(ds, ds, spec, cfg).model;
}

downstream::LogisticRegressionConfig fast_logreg() {
  downstream::LogisticRegressionConfig cfg;
  cfg.iterations = 120;
  return cfg;
}

}  // namespace

TEST_CASE("add-one permutation estimator endpoints") {
  PermutationTest protocol;
  protocol.escalate = false;

  // Observed below every null draw: conservatively p = 1.
  const auto low = permutation_p_value(
      -10.0, [](std::size_t) { return 0.0; }, protocol);
  CHECK(low.p_value == 1.0);

  // Observed above all 100 null draws: p = 1/101.
  const auto high = permutation_p_value(
      10.0, [](std::size_t) { return 0.0; }, protocol);
  CHECK(high.p_value == doctest::Approx(1.0 / 101.0));
  CHECK(high.permutations_used == 100);
}

TEST_CASE("gray-zone p-values trigger the 1000-permutation rerun") {
  PermutationTest protocol;  // escalation on by default
  // 5 of 100 null draws at or above the observed: first pass p = 6/101 = 0.059.
  const auto sampler = [](std::size_t i) { return i % 20 == 0 ? 1.0 : -1.0; };
  const auto outcome = permutation_p_value(0.5, sampler, protocol);
  CHECK(outcome.permutations_used == 1000);

  PermutationTest no_escalate = protocol;
  no_escalate.escalate = false;
  CHECK(permutation_p_value(0.5, sampler, no_escalate).permutations_used == 100);
}

TEST_CASE("p-values never reach zero") {
  PermutationTest protocol;
  protocol.escalate = false;
  const auto outcome = permutation_p_value(
      1e9, [](std::size_t) { return -1e9; }, protocol);
  CHECK(outcome.p_value > 0.0);
  CHECK(outcome.p_value <= 1.0);
}

TEST_CASE("verdict rule requires both practical advantage and significance") {
  CHECK(decide_verdict(0.5, 0.02, 0.001) == Verdict::leak);
  CHECK(decide_verdict(0.5, 0.02, 0.20) == Verdict::no_leak);   // not significant
  CHECK(decide_verdict(0.01, 0.02, 0.001) == Verdict::no_leak); // not practical
  CHECK(decide_verdict(0.5, 0.02, 0.001, true) == Verdict::inconclusive);
}

TEST_CASE("structural check passes on a proper encoder and full-rank data") {
  const auto model = tiny_encoder(12, 4, 71);
  const std::string path =
      (std::filesystem::temp_directory_path() / "veil_structural.vm").string();
  io::save_model(model, path);
  const auto artifact = io::read_model_file(path);

  Rng rng(72);
  Matrix x(128, 12);
  for (double& v : x.data()) v = rng.normal();
  const auto report = structural_check(artifact, x);
  CHECK(report.input_dim == 12);
  CHECK(report.latent_dim == 4);
  CHECK(report.compression_ok);
  CHECK(report.operator_whitelist_ok);
  CHECK(report.effective_dim > 4);
  CHECK(report.effective_dim_ok);
  CHECK(report.duplicate_latents == 0);
  CHECK(report.all_ok());
  std::remove(path.c_str());
}

TEST_CASE("structural check fails compression for E = D artifacts") {
  // Hand-built artifact that violates the compression contract.
  auto model = tiny_encoder(8, 3, 73);
  const std::string path =
      (std::filesystem::temp_directory_path() / "veil_structural_ed.vm").string();
  io::save_model(model, path);
  auto artifact = io::read_model_file(path);
  artifact.header["spec"]["layer_widths"] = std::vector<std::size_t>{10, 8};
  // Re-shape the tensors accordingly: E == D == 8.
  Rng rng(74);
  for (auto& t : artifact.tensors) {
    if (t.name == "encoder.0.w") t.value = Matrix(8, 10, 0.1);
    if (t.name == "encoder.0.b") t.value = Matrix(1, 10, 0.0);
    if (t.name == "encoder.1.w") t.value = Matrix(10, 8, 0.1);
    if (t.name == "encoder.1.b") t.value = Matrix(1, 8, 0.0);
    if (t.name == "decoder.0.w") t.value = Matrix(8, 10, 0.1);
    if (t.name == "decoder.0.b") t.value = Matrix(1, 10, 0.0);
    if (t.name == "decoder.1.w") t.value = Matrix(10, 8, 0.1);
    if (t.name == "decoder.1.b") t.value = Matrix(1, 8, 0.0);
    if (t.name == "head.w") t.value = Matrix(18, 1, 0.1);
    if (t.name == "projection.w") t.value = Matrix(18, 2, 0.1);
  }
  Matrix x(64, 8);
  for (double& v : x.data()) v = rng.normal();
  const auto report = structural_check(artifact, x);
  CHECK(!report.compression_ok);
  CHECK(!report.all_ok());
  std::remove(path.c_str());
}

TEST_CASE("structural check flags non-whitelisted operators, not a parse error") {
  const auto model = tiny_encoder(10, 3, 75);
  const std::string path =
      (std::filesystem::temp_directory_path() / "veil_structural_ops.vm").string();
  io::save_model(model, path);
  auto artifact = io::read_model_file(path);
  artifact.header["operators"].push_back("discontinuous_step");
  Rng rng(76);
  Matrix x(64, 10);
  for (double& v : x.data()) v = rng.normal();
  const auto report = structural_check(artifact, x);
  CHECK(!report.operator_whitelist_ok);
  CHECK(report.compression_ok);
  std::remove(path.c_str());
}

TEST_CASE("structural check fails effective dimensionality on low-rank data") {
  // Data on a 4-dim subspace with E = 6: the non-injectivity premise fails.
  const auto model = tiny_encoder(20, 6, 77);
  const std::string path =
      (std::filesystem::temp_directory_path() / "veil_structural_rank.vm").string();
  io::save_model(model, path);
  const auto artifact = io::read_model_file(path);
  Rng rng(78);
  Matrix basis(4, 20);
  for (double& v : basis.data()) v = rng.normal();
  Matrix x(200, 20);
  for (std::size_t i = 0; i < 200; ++i) {
    double coef[4];
    for (double& c : coef) c = rng.normal();
    for (std::size_t j = 0; j < 20; ++j) {
      double s = 0.0;
      for (std::size_t b = 0; b < 4; ++b) s += coef[b] * basis(b, j);
      x(i, j) = s;
    }
  }
  const auto report = structural_check(artifact, x);
  CHECK(report.effective_dim == 4);
  CHECK(!report.effective_dim_ok);
  std::remove(path.c_str());
}

TEST_CASE("structural check counts duplicate latents") {
  const auto model = tiny_encoder(10, 3, 79);
  const std::string path =
      (std::filesystem::temp_directory_path() / "veil_structural_dup.vm").string();
  io::save_model(model, path);
  const auto artifact = io::read_model_file(path);
  Rng rng(80);
  Matrix x(40, 10);
  for (double& v : x.data()) v = rng.normal();
  // Plant exact duplicate inputs -> exact duplicate latents.
  for (std::size_t j = 0; j < 10; ++j) {
    x(1, j) = x(0, j);
    x(2, j) = x(0, j);
  }
  const auto report = structural_check(artifact, x);
  CHECK(report.duplicate_latents == 2);
  std::remove(path.c_str());
}

TEST_CASE("reconstruction attack: identity encoder is a leak ceiling") {
  Rng rng(81);
  const std::size_t n = 220, d = 6;
  Matrix x(n, d);
  for (double& v : x.data()) v = rng.normal(0, 2.0);
  ReconstructionConfig cfg;
  cfg.permutations = 20;  // the add-one estimator needs 20 to reach p < 0.05
  cfg.decoder_epochs = 250;
  cfg.decoder_patience = 30;
  cfg.decoder_learning_rate = 5e-3;
  cfg.seed = 82;
  // latents = raw features: E = D identity "encoder".
  const auto report =
      reconstruction_attack(x, x, infer_feature_kinds(x), cfg);
  CHECK(report.advantage >= 0.9);
  CHECK(report.verdict == Verdict::leak);
}

TEST_CASE("reconstruction attack: independent noise latents do not leak") {
  Rng rng(83);
  const std::size_t n = 200, d = 5, e = 3;
  Matrix x(n, d);
  Matrix noise(n, e);
  for (double& v : x.data()) v = rng.normal();
  for (double& v : noise.data()) v = rng.normal();
  ReconstructionConfig cfg;
  cfg.permutations = 10;
  cfg.decoder_epochs = 40;
  cfg.decoder_patience = 8;
  cfg.seed = 84;
  const auto report = reconstruction_attack(noise, x, infer_feature_kinds(x), cfg);
  CHECK(report.advantage < 0.05);
  CHECK(report.verdict == Verdict::no_leak);
}

TEST_CASE("reconstruction attack refuses tiny samples") {
  Matrix small(30, 2);
  ReconstructionConfig cfg;
  CHECK_THROWS_WITH_AS(
      reconstruction_attack(small, small, infer_feature_kinds(small), cfg),
      doctest::Contains("50"), std::invalid_argument);
}

TEST_CASE("attribute inference: latent-correlated attribute leaks, coin flip does not") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL, 5ULL}) {
    Rng rng(900 + seed);
    const std::size_t n = 300, e = 6;
    Matrix z(n, e);
    std::vector<std::size_t> correlated(n), coin(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < e; ++j) z(i, j) = rng.normal();
      correlated[i] = z(i, 0) + 0.3 * rng.normal() > 0 ? 1 : 0;
      coin[i] = rng.index(2);
    }
    AttributeConfig cfg;
    cfg.classifier = fast_logreg();
    cfg.permutation.initial_permutations = 40;
    cfg.permutation.escalate = false;
    cfg.seed = seed;

    const auto leak = attribute_inference(z, correlated, cfg);
    CHECK(leak.primary.verdict == Verdict::leak);
    CHECK(leak.primary.advantage > 0.02);

    const auto null = attribute_inference(z, coin, cfg);
    CHECK(null.primary.verdict == Verdict::no_leak);
  }
}

TEST_CASE("attribute inference magnitude and centroid baselines run") {
  Rng rng(91);
  const std::size_t n = 240, e = 4;
  Matrix z(n, e);
  std::vector<std::size_t> attr(n);
  for (std::size_t i = 0; i < n; ++i) {
    attr[i] = rng.index(2);
    for (std::size_t j = 0; j < e; ++j) {
      // magnitude carries the signal: one class has larger norms
      z(i, j) = rng.normal(0, attr[i] ? 2.0 : 1.0);
    }
  }
  AttributeConfig cfg;
  cfg.classifier = fast_logreg();
  cfg.permutation.initial_permutations = 30;
  cfg.permutation.escalate = false;
  cfg.seed = 92;
  const auto result = attribute_inference(z, attr, cfg);
  CHECK(result.magnitude.observed > 0.55);
  CHECK(result.centroid.observed > 0.0);
  CHECK(result.magnitude.metric_name == "magnitude_attack_accuracy");
}

TEST_CASE("attribute inference enforces the class-count check") {
  Matrix z(20, 3);
  std::vector<std::size_t> attr(20, 0);
  attr[0] = 1;  // class 1 has a single member < folds
  AttributeConfig cfg;
  CHECK_THROWS_WITH_AS(attribute_inference(z, attr, cfg),
                       doctest::Contains("class-count"), std::invalid_argument);
}

TEST_CASE("membership inference: exchangeable pools give chance-level AUC") {
  const auto encoder = tiny_encoder(10, 4, 93);
  Rng rng(94);
  scrae::Dataset ds;
  ds.x = Matrix(600, 10);
  ds.targets = Matrix(600, 1);
  for (std::size_t i = 0; i < 600; ++i) {
    for (std::size_t j = 0; j < 10; ++j) ds.x(i, j) = rng.normal();
    ds.targets(i, 0) = rng.normal();
  }
  MembershipConfig cfg;
  cfg.downstream_model = fast_logreg();
  cfg.downstream_model.l2 = 0.05;
  cfg.attack_model = fast_logreg();
  cfg.permutation.initial_permutations = 30;
  cfg.permutation.escalate = false;
  cfg.seed = 95;
  const auto result = membership_inference(ds, encoder, cfg);
  CHECK(std::abs(result.auc - 0.5) < 0.12);
  CHECK(result.report.verdict == Verdict::no_leak);
  CHECK(result.report.baseline == 0.5);
}

TEST_CASE("membership inference: overfit downstream model leaks") {
  const auto encoder = tiny_encoder(10, 6, 96);
  Rng rng(97);
  scrae::Dataset ds;
  ds.x = Matrix(600, 10);
  ds.targets = Matrix(600, 1);
  for (std::size_t i = 0; i < 600; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 10; ++j) {
      ds.x(i, j) = rng.normal();
      s += ds.x(i, j);
    }
    ds.targets(i, 0) = s + 3.0 * rng.normal();  // noisy target invites memorization
  }
  MembershipConfig cfg;
  cfg.downstream_member_limit = 24;  // tiny training set
  cfg.downstream_model.iterations = 3000;
  cfg.downstream_model.l2 = 0.0;  // unregularized on purpose
  cfg.attack_model = fast_logreg();
  cfg.permutation.initial_permutations = 30;
  cfg.permutation.escalate = false;
  cfg.seed = 98;
  const auto result = membership_inference(ds, encoder, cfg);
  CHECK(result.report.advantage > 0.05);
}

TEST_CASE("membership inference requires 500 rows") {
  const auto encoder = tiny_encoder(10, 4, 99);
  scrae::Dataset ds;
  ds.x = Matrix(100, 10);
  ds.targets = Matrix(100, 1);
  MembershipConfig cfg;
  CHECK_THROWS_AS(membership_inference(ds, encoder, cfg), std::invalid_argument);
}

TEST_CASE("attack report JSON embeds config echo and verdict") {
  AttackReport report;
  report.attack = AttackKind::attribute;
  report.metric_name = "cv_accuracy";
  report.observed = 0.69;
  report.baseline = 0.55;
  report.advantage = 0.14;
  report.p_value = 0.0099;
  report.verdict = Verdict::leak;
  const std::string json = report.to_json(R"({"seed":5})");
  CHECK(json.find("\"verdict\": \"leak\"") != std::string::npos);
  CHECK(json.find("\"seed\": 5") != std::string::npos);
  CHECK(report.exit_code() == 2);
}
