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

#ifndef VEIL_SCRAE_HPP_
#define VEIL_SCRAE_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "veil/losses.hpp"
#include "veil/matrix.hpp"
#include "veil/net.hpp"
#include "veil/pca.hpp"

namespace veil::scrae {

enum class HeadKind { classifier, regressor };
enum class ReprLoss { center, laplacian_dense, laplacian_knn, info_nce, r_nce };
enum class PredLoss { cross_entropy, hinge, ols, mae, huber };

std::string head_kind_name(HeadKind k);
HeadKind head_kind_from_name(const std::string& name);
std::string repr_loss_name(ReprLoss r);
ReprLoss repr_loss_from_name(const std::string& name);
std::string pred_loss_name(PredLoss p);
PredLoss pred_loss_from_name(const std::string& name);

/// Architecture of the multi-level encoder: L dense layers whose activations
/// concatenate into Psi, a mirrored decoder, a supervised head on Psi, and a
/// 2-D projection head for the PCA-alignment objective.
struct EncoderSpec {
  std::size_t input_dim = 0;                 // D
  std::vector<std::size_t> layer_widths;     // m_1..m_L; bottleneck E = back()
  nn::Act activation = nn::Act::relu;        // relu | tanh
  HeadKind head = HeadKind::classifier;
  std::size_t head_dim = 0;                  // K classes or regression dim
  std::vector<std::size_t> decoder_widths;   // empty = mirror of the encoder

  std::size_t bottleneck_dim() const {
    return layer_widths.empty() ? 0 : layer_widths.back();
  }
  std::size_t psi_dim() const;
  std::vector<std::size_t> effective_decoder_widths() const;

  /// Throws listing every violated constraint; E < D is enforced here.
  void validate() const;
};

struct TrainMeta {
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  losses::LossWeights weights;
  std::string repr_loss;
  std::string pred_loss;
  std::string optimizer;
  double learning_rate = 0.0;
  std::size_t batch_size = 0;
};

struct EncoderModel {
  EncoderSpec spec;
  std::vector<nn::Dense> encoder;
  std::vector<nn::Dense> decoder;
  nn::Dense head;        // psi_dim -> head_dim, identity output
  nn::Dense projection;  // psi_dim -> 2, identity
  losses::ClassCenters centers;  // classification only
  TrainMeta meta;

  /// Operator vocabulary of the forward graph; the artifact whitelist.
  std::vector<std::string> operator_list() const;
};

struct TrainConfig {
  losses::LossWeights weights;
  ReprLoss repr_loss = ReprLoss::center;
  PredLoss pred_loss = PredLoss::cross_entropy;
  std::size_t batch_size = 64;
  std::size_t epochs = 10;
  double learning_rate = 1e-3;
  nn::OptKind optimizer = nn::OptKind::adaptive_moments;
  std::uint64_t seed = 0;

  /// Throws listing every violated constraint, including the dense-Laplacian
  /// batch cap (B <= 1024) and head/objective compatibility.
  void validate(const EncoderSpec& spec) const;
};

/// Supervised dataset: classification targets are a single column of class
/// indices; regression targets are N x dim values.
struct Dataset {
  Matrix x;
  Matrix targets;
};

std::vector<std::size_t> class_labels(const Matrix& targets, std::size_t num_classes);

/// Everything the forward pass produces.
struct ForwardResult {
  std::vector<Matrix> layer_acts;  // h_1..h_L
  Matrix psi;    // concat of all layer activations
  Matrix z;      // bottleneck (= h_L)
  Matrix x_hat;  // decoder output (empty when skipped)
  Matrix y_hat;  // head output on psi (logits / scores / values)
  Matrix psi2;   // projection head output
};

struct ForwardOptions {
  bool with_decoder = true;
  bool with_head = true;
  bool with_projection = true;
};

ForwardResult forward_multilevel(const EncoderModel& model, const Matrix& x_batch,
                                 const ForwardOptions& opts = {});

struct ModelGrads {
  std::vector<nn::DenseGrad> encoder;
  std::vector<nn::DenseGrad> decoder;
  nn::DenseGrad head;
  nn::DenseGrad projection;
};

struct Batch {
  Matrix x;
  Matrix targets;
  Matrix x_pca;  // N x 2 PCA scores; empty unless lambda_reg > 0
};

struct CompositeResult {
  double total = 0.0;
  // Unweighted component values; components with a zero coefficient are
  // skipped and reported as 0.
  double recon = 0.0, repr = 0.0, pred = 0.0, reg = 0.0;
  ModelGrads grads;
  Matrix psi;
};

/// Weighted sum of the four objectives with full backpropagation through the
/// shared layers. Throws with the component name when an objective rejects
/// its inputs.
CompositeResult composite_loss(const EncoderModel& model, const Batch& batch,
                               const TrainConfig& config);

struct CollapseReport {
  bool flagged = false;
  double mean_dimension_variance = 0.0;
  double mean_pairwise_distance = 0.0;
  double mean_row_norm = 0.0;
};

/// Collapse when the mean per-dimension variance of Psi falls below the
/// threshold, or the mean pairwise distance falls below threshold x mean row
/// norm. A zero threshold disables both branches.
CollapseReport detect_collapse(const Matrix& psi_batch, double threshold = 1e-6);

struct EpochStats {
  std::size_t epoch = 0;
  double total = 0.0;
  double recon = 0.0, repr = 0.0, pred = 0.0, reg = 0.0;  // validation values
  double collapse_metric = 0.0;  // mean per-dimension variance of valid Psi
  bool collapse_flagged = false;
  double head_metric = 0.0;     // accuracy (classifier) or R^2 (regressor)
  double spearman_rho = 0.0;    // regression only
  bool spearman_defined = false;
  double knn_r2 = 0.0;          // regression only
};

struct TrainingLog {
  std::vector<EpochStats> epochs;
  std::string to_csv() const;
};

struct TrainResult {
  EncoderModel model;
  TrainingLog log;
};

/// Mini-batch gradient descent over the composite objective. Aborts with an
/// epoch/batch report on a non-finite loss; warns (with a config hint) when
/// the validation latents collapse.
TrainResult train(const Dataset& train_set, const Dataset& valid_set,
                  const EncoderSpec& spec, const TrainConfig& config);

/// Bottleneck latents quantized to 32-bit floats: the only representation
/// that crosses the trust boundary. Never returns Psi, activations, or
/// reconstructions.
Matrix encode_batch(const EncoderModel& model, const Matrix& x_batch);

/// Parameter matrices in a fixed traversal order (encoder, decoder, head,
/// projection; weights before biases).
std::vector<Matrix*> parameter_list(EncoderModel& model);
std::vector<const Matrix*> parameter_list(const EncoderModel& model);
std::vector<const Matrix*> gradient_list(const ModelGrads& grads,
                                         const EncoderModel& model);

}  // namespace veil::scrae

#endif  // VEIL_SCRAE_HPP_
