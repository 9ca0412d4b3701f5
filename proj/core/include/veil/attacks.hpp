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

#ifndef VEIL_ATTACKS_HPP_
#define VEIL_ATTACKS_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "veil/downstream.hpp"
#include "veil/matrix.hpp"
#include "veil/model_io.hpp"
#include "veil/scrae.hpp"

namespace veil::attacks {

/// Monte-Carlo permutation protocol: an add-one estimator with automatic
/// escalation when the first pass lands in the gray zone.
struct PermutationTest {
  std::size_t initial_permutations = 100;
  std::size_t max_permutations = 1000;
  double gray_zone_low = 0.01;
  double gray_zone_high = 0.10;
  bool escalate = true;
};

struct PermutationOutcome {
  double p_value = 1.0;
  std::size_t permutations_used = 0;
};

/// p = (1 + #{null >= observed}) / (1 + permutations). `null_sampler` must be
/// deterministic in its permutation index.
PermutationOutcome permutation_p_value(
    double observed, const std::function<double(std::size_t)>& null_sampler,
    const PermutationTest& test);

enum class AttackKind { reconstruction, attribute, membership };
enum class Verdict { no_leak, leak, inconclusive };

std::string attack_kind_name(AttackKind k);
std::string verdict_name(Verdict v);

/// Joint decision rule: a leak requires both a practical advantage and
/// statistical significance.
Verdict decide_verdict(double advantage, double practical_threshold, double p_value,
                       bool degenerate = false);

struct AttackReport {
  AttackKind attack = AttackKind::reconstruction;
  std::string metric_name;
  double observed = 0.0;
  double baseline = 0.0;
  double advantage = 0.0;  // observed - baseline
  double std_dev = 0.0;
  double p_value = 1.0;
  std::size_t permutations_used = 0;
  Verdict verdict = Verdict::no_leak;
  std::string notes;

  std::string to_json(const std::string& config_echo = "{}") const;
  /// Scriptable gating: 0 = no_leak, 2 = leak, 3 = inconclusive.
  int exit_code() const;
};

// ---------------------------------------------------------------------------
// Structural non-invertibility validation

struct StructuralCheckReport {
  std::size_t input_dim = 0;
  std::size_t latent_dim = 0;
  bool compression_ok = false;        // E < D
  bool operator_whitelist_ok = false; // artifact ops within the continuity set
  std::size_t effective_dim = 0;      // at the 0.95 variance threshold
  bool effective_dim_ok = false;      // effective_dim > E
  std::size_t duplicate_latents = 0;  // exact collisions after f32 quantization

  bool all_ok() const {
    return compression_ok && operator_whitelist_ok && effective_dim_ok;
  }
  std::string to_json(const std::string& config_echo = "{}") const;
};

/// The operators a continuous encoder may use.
const std::vector<std::string>& operator_whitelist();

/// Validates the preconditions of the non-injectivity argument on a model
/// artifact and a raw sample: strict compression, continuous operators only,
/// input variability above the latent dimensionality, plus a duplicate-latent
/// sanity count. An unknown operator is a whitelist failure, not a parse
/// error.
StructuralCheckReport structural_check(const io::ModelFile& artifact,
                                       const Matrix& x_sample);

// ---------------------------------------------------------------------------
// Reconstruction attack

enum class FeatureKind { numeric, binary };

/// Numeric/binary column inference used by the CSV path: a column whose value
/// set is within {0, 1} is binary.
std::vector<FeatureKind> infer_feature_kinds(const Matrix& x);

struct ReconstructionConfig {
  double train_fraction = 0.7;
  std::size_t permutations = 20;  // each one retrains the decoder
  bool escalate = false;
  double practical_threshold = 0.02;
  std::vector<std::size_t> decoder_widths;  // empty = [2E, 2E]
  std::size_t decoder_epochs = 200;
  std::size_t decoder_patience = 20;
  double decoder_learning_rate = 1e-3;
  std::size_t decoder_batch = 64;
  std::uint64_t seed = 0;
};

/// Trains an attacker decoder on paired (latent, raw) rows and scores its
/// held-out reconstructions against mean/mode baselines; the permutation test
/// retrains on correspondence-shuffled pairs. Refuses fewer than 50 rows.
AttackReport reconstruction_attack(const Matrix& latents, const Matrix& x_raw,
                                   const std::vector<FeatureKind>& feature_kinds,
                                   const ReconstructionConfig& config);

// ---------------------------------------------------------------------------
// Attribute inference

struct AttributeConfig {
  std::size_t folds = 5;
  PermutationTest permutation;
  double practical_threshold = 0.02;
  downstream::LogisticRegressionConfig classifier;
  std::uint64_t seed = 0;
};

/// Primary classifier attack plus the two geometry baselines.
struct AttributeInferenceResult {
  AttackReport primary;    // logistic regression on the latents
  AttackReport magnitude;  // L2 / L1 / max-abs features only
  AttackReport centroid;   // nearest class centroid
};

/// Stratified k-fold attack on an attribute joined to exported latents.
/// Throws when any class count is below the fold count (invalid split).
AttributeInferenceResult attribute_inference(const Matrix& latents,
                                             const std::vector<std::size_t>& attribute,
                                             const AttributeConfig& config);

// ---------------------------------------------------------------------------
// Membership inference

struct MembershipConfig {
  std::size_t quantile_bins = 4;   // downstream task classes
  bool label_informed = true;      // false: black-box feature set
  double practical_threshold = 0.02;
  PermutationTest permutation;
  downstream::LogisticRegressionConfig downstream_model;
  downstream::LogisticRegressionConfig attack_model;
  /// Cap on downstream training members; small caps plus many iterations
  /// build the overfitting positive control. 0 = use every member.
  std::size_t downstream_member_limit = 0;
  std::uint64_t seed = 0;
};

struct MembershipResult {
  AttackReport report;
  double auc = 0.5;
  bool degenerate = false;  // all downstream probability vectors identical
};

/// Encodes the dataset, trains a downstream classifier on quantile-binned
/// targets over a stratified 60/20/20 member/non-member split, then attacks
/// with output-statistics features. Requires at least 500 rows.
MembershipResult membership_inference(const scrae::Dataset& dataset,
                                      const scrae::EncoderModel& encoder,
                                      const MembershipConfig& config);

}  // namespace veil::attacks

#endif  // VEIL_ATTACKS_HPP_
