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

#include "veil/scrae.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "veil/diagnostics.hpp"
#include "veil/log.hpp"

namespace veil::scrae {

namespace {

// Damping of the batch-mean center update; the center-loss literature's rule.
constexpr double kCenterUpdateRate = 0.5;
// Validation rows used for per-epoch collapse/diagnostic tracking.
constexpr std::size_t kEpochDiagnosticCap = 512;
constexpr std::size_t kEpochSpearmanPairs = 20000;

bool is_classification_repr(ReprLoss r) {
  return r == ReprLoss::center || r == ReprLoss::info_nce;
}
bool is_classification_pred(PredLoss p) {
  return p == PredLoss::cross_entropy || p == PredLoss::hinge;
}

}  // namespace

std::string head_kind_name(HeadKind k) {
  return k == HeadKind::classifier ? "classifier" : "regressor";
}
HeadKind head_kind_from_name(const std::string& name) {
  if (name == "classifier") return HeadKind::classifier;
  if (name == "regressor") return HeadKind::regressor;
  throw std::invalid_argument("unknown head kind: " + name);
}

std::string repr_loss_name(ReprLoss r) {
  switch (r) {
    case ReprLoss::center: return "center";
    case ReprLoss::laplacian_dense: return "laplacian_dense";
    case ReprLoss::laplacian_knn: return "laplacian_knn";
    case ReprLoss::info_nce: return "info_nce";
    case ReprLoss::r_nce: return "r_nce";
  }
  return "center";
}
ReprLoss repr_loss_from_name(const std::string& name) {
  if (name == "center") return ReprLoss::center;
  if (name == "laplacian_dense") return ReprLoss::laplacian_dense;
  if (name == "laplacian_knn") return ReprLoss::laplacian_knn;
  if (name == "info_nce") return ReprLoss::info_nce;
  if (name == "r_nce") return ReprLoss::r_nce;
  throw std::invalid_argument("unknown representation loss: " + name);
}

std::string pred_loss_name(PredLoss p) {
  switch (p) {
    case PredLoss::cross_entropy: return "cross_entropy";
    case PredLoss::hinge: return "hinge";
    case PredLoss::ols: return "ols";
    case PredLoss::mae: return "mae";
    case PredLoss::huber: return "huber";
  }
  return "cross_entropy";
}
PredLoss pred_loss_from_name(const std::string& name) {
  if (name == "cross_entropy") return PredLoss::cross_entropy;
  if (name == "hinge") return PredLoss::hinge;
  if (name == "ols") return PredLoss::ols;
  if (name == "mae") return PredLoss::mae;
  if (name == "huber") return PredLoss::huber;
  throw std::invalid_argument("unknown prediction loss: " + name);
}

std::size_t EncoderSpec::psi_dim() const {
  std::size_t total = 0;
  for (std::size_t w : layer_widths) total += w;
  return total;
}

std::vector<std::size_t> EncoderSpec::effective_decoder_widths() const {
  if (!decoder_widths.empty()) return decoder_widths;
  // Mirror: m_{L-1}..m_1 then back to D.
  std::vector<std::size_t> widths;
  for (std::size_t l = layer_widths.size(); l > 1; --l) {
    widths.push_back(layer_widths[l - 2]);
  }
  widths.push_back(input_dim);
  return widths;
}

void EncoderSpec::validate() const {
  std::vector<std::string> violations;
  if (input_dim == 0) violations.push_back("input_dim must be positive");
  if (layer_widths.empty()) violations.push_back("at least one encoder layer required");
  for (std::size_t w : layer_widths) {
    if (w == 0) violations.push_back("layer widths must be positive");
  }
  if (!layer_widths.empty() && bottleneck_dim() >= input_dim) {
    violations.push_back("bottleneck dimension E = " + std::to_string(bottleneck_dim()) +
                         " must be strictly smaller than input dimension D = " +
                         std::to_string(input_dim));
  }
  if (head_dim == 0) violations.push_back("head_dim must be positive");
  if (head == HeadKind::classifier && head_dim < 2) {
    violations.push_back("classifier head needs at least 2 classes");
  }
  if (!decoder_widths.empty() && decoder_widths.back() != input_dim) {
    violations.push_back("decoder must end at input_dim");
  }
  if (!violations.empty()) {
    std::string msg = "invalid encoder spec:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw std::invalid_argument(msg);
  }
}

void TrainConfig::validate(const EncoderSpec& spec) const {
  std::vector<std::string> violations;
  try {
    weights.validate(/*allow_plain_autoencoder=*/true);
  } catch (const std::invalid_argument& e) {
    violations.push_back(e.what());
  }
  if (batch_size < 2) violations.push_back("batch_size must be >= 2");
  if (epochs < 1) violations.push_back("epochs must be >= 1");
  if (learning_rate <= 0) violations.push_back("learning_rate must be > 0");
  if (weights.lambda_repr > 0 && repr_loss == ReprLoss::laplacian_dense &&
      batch_size > 1024) {
    violations.push_back(
        "dense Graph-Laplacian is limited to batches of 1024; switch "
        "repr_loss to laplacian_knn for larger batches");
  }
  if (weights.lambda_repr > 0) {
    if (is_classification_repr(repr_loss) && spec.head != HeadKind::classifier) {
      violations.push_back(repr_loss_name(repr_loss) +
                           " representation loss requires a classifier head");
    }
    if (!is_classification_repr(repr_loss) && spec.head != HeadKind::regressor) {
      violations.push_back(repr_loss_name(repr_loss) +
                           " representation loss requires a regressor head");
    }
  }
  if (weights.lambda_pred > 0) {
    if (is_classification_pred(pred_loss) && spec.head != HeadKind::classifier) {
      violations.push_back(pred_loss_name(pred_loss) +
                           " prediction loss requires a classifier head");
    }
    if (!is_classification_pred(pred_loss) && spec.head != HeadKind::regressor) {
      violations.push_back(pred_loss_name(pred_loss) +
                           " prediction loss requires a regressor head");
    }
  }
  if (!violations.empty()) {
    std::string msg = "invalid train config:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw std::invalid_argument(msg);
  }
}

std::vector<std::size_t> class_labels(const Matrix& targets, std::size_t num_classes) {
  if (targets.cols() != 1) {
    throw std::invalid_argument("class_labels: classification targets must be one column");
  }
  std::vector<std::size_t> labels(targets.rows());
  for (std::size_t i = 0; i < targets.rows(); ++i) {
    const double v = targets(i, 0);
    const double rounded = std::nearbyint(v);
    if (std::abs(v - rounded) > 1e-9 || rounded < 0 ||
        rounded >= static_cast<double>(num_classes)) {
      throw std::invalid_argument("class_labels: target " + std::to_string(v) +
                                  " is not a class index below " +
                                  std::to_string(num_classes));
    }
    labels[i] = static_cast<std::size_t>(rounded);
  }
  return labels;
}

std::vector<std::string> EncoderModel::operator_list() const {
  std::vector<std::string> ops{"affine", nn::act_name(spec.activation), "concat",
                               "linear_head"};
  if (spec.head == HeadKind::classifier) ops.push_back("softmax");
  return ops;
}

ForwardResult forward_multilevel(const EncoderModel& model, const Matrix& x_batch,
                                 const ForwardOptions& opts) {
  if (x_batch.cols() != model.spec.input_dim) {
    throw std::invalid_argument("forward_multilevel: input width " +
                                std::to_string(x_batch.cols()) + " != D = " +
                                std::to_string(model.spec.input_dim));
  }
  ForwardResult r;
  Matrix cur = x_batch;
  for (const nn::Dense& layer : model.encoder) {
    cur = dense_forward(layer, cur, nullptr);
    r.layer_acts.push_back(cur);
  }
  r.z = r.layer_acts.back();
  r.psi = r.layer_acts.front();
  for (std::size_t l = 1; l < r.layer_acts.size(); ++l) {
    r.psi = hconcat(r.psi, r.layer_acts[l]);
  }
  if (opts.with_decoder) {
    Matrix d = r.z;
    for (const nn::Dense& layer : model.decoder) d = dense_forward(layer, d, nullptr);
    r.x_hat = std::move(d);
  }
  if (opts.with_head) r.y_hat = dense_forward(model.head, r.psi, nullptr);
  if (opts.with_projection) r.psi2 = dense_forward(model.projection, r.psi, nullptr);
  return r;
}

namespace {

struct ForwardCaches {
  std::vector<nn::DenseCache> encoder;
  std::vector<nn::DenseCache> decoder;
  nn::DenseCache head;
  nn::DenseCache projection;
};

ModelGrads zero_grads(const EncoderModel& model) {
  ModelGrads g;
  for (const auto& l : model.encoder) g.encoder.push_back(nn::zero_grad(l));
  for (const auto& l : model.decoder) g.decoder.push_back(nn::zero_grad(l));
  g.head = nn::zero_grad(model.head);
  g.projection = nn::zero_grad(model.projection);
  return g;
}

}  // namespace

CompositeResult composite_loss(const EncoderModel& model, const Batch& batch,
                               const TrainConfig& config) {
  const losses::LossWeights& w = config.weights;
  const bool need_decoder = w.lambda_recon > 0;
  const bool need_head = w.lambda_pred > 0;
  const bool need_projection = w.lambda_reg > 0;

  // Forward with caches.
  ForwardCaches caches;
  caches.encoder.resize(model.encoder.size());
  Matrix cur = batch.x;
  std::vector<Matrix> acts;
  for (std::size_t l = 0; l < model.encoder.size(); ++l) {
    cur = dense_forward(model.encoder[l], cur, &caches.encoder[l]);
    acts.push_back(cur);
  }
  Matrix psi = acts.front();
  for (std::size_t l = 1; l < acts.size(); ++l) psi = hconcat(psi, acts[l]);

  CompositeResult result;
  result.grads = zero_grads(model);
  result.psi = psi;

  const std::size_t n = batch.x.rows();
  const std::size_t psi_dim = model.spec.psi_dim();
  Matrix d_psi(n, psi_dim);

  // Reconstruction.
  Matrix d_z_recon;
  if (need_decoder) {
    caches.decoder.resize(model.decoder.size());
    Matrix d = acts.back();
    for (std::size_t l = 0; l < model.decoder.size(); ++l) {
      d = dense_forward(model.decoder[l], d, &caches.decoder[l]);
    }
    auto recon = losses::ols_loss(batch.x, d);
    result.recon = recon.value;
    Matrix d_xhat = scale(recon.grad, w.lambda_recon);
    d_z_recon = Matrix(n, model.spec.bottleneck_dim());
    Matrix back = d_xhat;
    for (std::size_t l = model.decoder.size(); l > 0; --l) {
      back = dense_backward(model.decoder[l - 1], caches.decoder[l - 1], back,
                            result.grads.decoder[l - 1]);
    }
    d_z_recon = std::move(back);
  }

  // Prediction.
  if (need_head) {
    const Matrix y_hat = dense_forward(model.head, psi, &caches.head);
    losses::LossResult pred;
    try {
      switch (config.pred_loss) {
        case PredLoss::cross_entropy: {
          const auto labels = class_labels(batch.targets, model.spec.head_dim);
          pred = losses::cross_entropy_loss(labels, nn::softmax_rows(y_hat));
          break;
        }
        case PredLoss::hinge: {
          const auto labels = class_labels(batch.targets, model.spec.head_dim);
          pred = losses::hinge_loss(y_hat, labels);
          break;
        }
        case PredLoss::ols:
          pred = losses::ols_loss(batch.targets, y_hat);
          break;
        case PredLoss::mae:
          pred = losses::mae_loss(batch.targets, y_hat);
          break;
        case PredLoss::huber:
          pred = losses::huber_loss(batch.targets, y_hat, w.delta);
          break;
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("composite_loss: prediction component (" +
                               pred_loss_name(config.pred_loss) + ") failed: " + e.what());
    }
    result.pred = pred.value;
    const Matrix d_yhat = scale(pred.grad, w.lambda_pred);
    add_in_place(d_psi, dense_backward(model.head, caches.head, d_yhat, result.grads.head));
  }

  // Representation.
  if (w.lambda_repr > 0) {
    losses::LossResult repr;
    try {
      switch (config.repr_loss) {
        case ReprLoss::center: {
          const auto labels = class_labels(batch.targets, model.spec.head_dim);
          repr = losses::center_loss(psi, labels, model.centers);
          break;
        }
        case ReprLoss::info_nce: {
          const auto labels = class_labels(batch.targets, model.spec.head_dim);
          repr = losses::info_nce_loss(psi, labels, w.tau);
          break;
        }
        case ReprLoss::laplacian_dense: {
          const auto graph = losses::build_dense_graph(batch.targets, w.sigma);
          repr = losses::laplacian_loss_dense(psi, graph);
          break;
        }
        case ReprLoss::laplacian_knn: {
          const std::size_t k = std::min(w.k, batch.targets.rows() - 1);
          const auto graph = losses::build_knn_graph(batch.targets, w.sigma, k, w.sym_mode);
          repr = losses::laplacian_loss_sparse(psi, graph);
          break;
        }
        case ReprLoss::r_nce:
          repr = losses::r_nce_loss(psi, batch.targets, w.sigma, w.tau);
          break;
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("composite_loss: representation component (" +
                               repr_loss_name(config.repr_loss) + ") failed: " + e.what());
    }
    result.repr = repr.value;
    add_in_place(d_psi, scale(repr.grad, w.lambda_repr));
  }

  // PCA-alignment regularizer.
  if (need_projection) {
    if (batch.x_pca.rows() != n) {
      throw std::runtime_error(
          "composite_loss: regularization component (pca_cosine) failed: missing "
          "2-D PCA targets for the batch");
    }
    const Matrix psi2 = dense_forward(model.projection, psi, &caches.projection);
    const auto reg = losses::pca_cosine_loss(psi2, batch.x_pca);
    result.reg = reg.value;
    const Matrix d_psi2 = scale(reg.grad, w.lambda_reg);
    add_in_place(d_psi, dense_backward(model.projection, caches.projection, d_psi2,
                                       result.grads.projection));
  }

  // Split dL/dPsi into the per-layer slices and run the encoder chain.
  std::vector<Matrix> d_layer(model.encoder.size());
  std::size_t offset = 0;
  for (std::size_t l = 0; l < model.encoder.size(); ++l) {
    const std::size_t width = model.spec.layer_widths[l];
    Matrix slice(n, width);
    for (std::size_t i = 0; i < n; ++i) {
      auto src = d_psi.row(i);
      auto dst = slice.row(i);
      for (std::size_t j = 0; j < width; ++j) dst[j] = src[offset + j];
    }
    d_layer[l] = std::move(slice);
    offset += width;
  }
  if (need_decoder) add_in_place(d_layer.back(), d_z_recon);

  Matrix back;
  for (std::size_t l = model.encoder.size(); l > 0; --l) {
    Matrix d_out = std::move(d_layer[l - 1]);
    if (l < model.encoder.size()) add_in_place(d_out, back);
    back = dense_backward(model.encoder[l - 1], caches.encoder[l - 1], d_out,
                          result.grads.encoder[l - 1]);
  }

  result.total = w.lambda_recon * result.recon + w.lambda_repr * result.repr +
                 w.lambda_pred * result.pred + w.lambda_reg * result.reg;
  return result;
}

CollapseReport detect_collapse(const Matrix& psi_batch, double threshold) {
  if (psi_batch.rows() < 2) {
    throw std::invalid_argument("detect_collapse: need at least 2 rows");
  }
  CollapseReport report;
  const std::size_t n = psi_batch.rows(), d = psi_batch.cols();

  double var_sum = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += psi_batch(i, j);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dv = psi_batch(i, j) - mean;
      ss += dv * dv;
    }
    var_sum += ss / static_cast<double>(n - 1);
  }
  report.mean_dimension_variance = var_sum / static_cast<double>(d);

  double dist_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist_sum += std::sqrt(squared_distance(psi_batch.row(i), psi_batch.row(j)));
    }
  }
  report.mean_pairwise_distance =
      dist_sum / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);

  double norm_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) norm_sum += norm2(psi_batch.row(i));
  report.mean_row_norm = norm_sum / static_cast<double>(n);

  report.flagged = report.mean_dimension_variance < threshold ||
                   report.mean_pairwise_distance < threshold * report.mean_row_norm;
  return report;
}

std::vector<Matrix*> parameter_list(EncoderModel& model) {
  std::vector<Matrix*> params;
  for (auto& l : model.encoder) {
    params.push_back(&l.w);
    params.push_back(&l.b);
  }
  for (auto& l : model.decoder) {
    params.push_back(&l.w);
    params.push_back(&l.b);
  }
  params.push_back(&model.head.w);
  params.push_back(&model.head.b);
  params.push_back(&model.projection.w);
  params.push_back(&model.projection.b);
  return params;
}

std::vector<const Matrix*> parameter_list(const EncoderModel& model) {
  std::vector<const Matrix*> params;
  for (const auto& l : model.encoder) {
    params.push_back(&l.w);
    params.push_back(&l.b);
  }
  for (const auto& l : model.decoder) {
    params.push_back(&l.w);
    params.push_back(&l.b);
  }
  params.push_back(&model.head.w);
  params.push_back(&model.head.b);
  params.push_back(&model.projection.w);
  params.push_back(&model.projection.b);
  return params;
}

std::vector<const Matrix*> gradient_list(const ModelGrads& grads,
                                         const EncoderModel& model) {
  (void)model;
  std::vector<const Matrix*> gs;
  for (const auto& g : grads.encoder) {
    gs.push_back(&g.dw);
    gs.push_back(&g.db);
  }
  for (const auto& g : grads.decoder) {
    gs.push_back(&g.dw);
    gs.push_back(&g.db);
  }
  gs.push_back(&grads.head.dw);
  gs.push_back(&grads.head.db);
  gs.push_back(&grads.projection.dw);
  gs.push_back(&grads.projection.db);
  return gs;
}

namespace {

EncoderModel initialize_model(const EncoderSpec& spec, Rng& rng) {
  EncoderModel model;
  model.spec = spec;
  std::size_t prev = spec.input_dim;
  for (std::size_t width : spec.layer_widths) {
    model.encoder.push_back(nn::make_dense(prev, width, spec.activation, rng));
    prev = width;
  }
  const auto dec_widths = spec.effective_decoder_widths();
  prev = spec.bottleneck_dim();
  for (std::size_t l = 0; l < dec_widths.size(); ++l) {
    const nn::Act act = (l + 1 == dec_widths.size()) ? nn::Act::identity : spec.activation;
    model.decoder.push_back(nn::make_dense(prev, dec_widths[l], act, rng));
    prev = dec_widths[l];
  }
  model.head = nn::make_dense(spec.psi_dim(), spec.head_dim, nn::Act::identity, rng);
  model.projection = nn::make_dense(spec.psi_dim(), 2, nn::Act::identity, rng);
  if (spec.head == HeadKind::classifier) {
    model.centers.centers = Matrix(spec.head_dim, spec.psi_dim());
    for (double& v : model.centers.centers.data()) v = rng.normal(0.0, 0.1);
    model.centers.counts.assign(spec.head_dim, 0);
  }
  return model;
}

Matrix take_rows(const Matrix& m, const std::vector<std::size_t>& idx, std::size_t begin,
                 std::size_t end) {
  Matrix out(end - begin, m.cols());
  for (std::size_t r = begin; r < end; ++r) {
    auto src = m.row(idx[r]);
    auto dst = out.row(r - begin);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return out;
}

Matrix head_rows(const Matrix& m, std::size_t count) {
  Matrix out(std::min(count, m.rows()), m.cols());
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto src = m.row(i);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

double classification_accuracy(const Matrix& y_hat, const std::vector<std::size_t>& labels) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < y_hat.rows(); ++i) {
    std::size_t best = 0;
    auto row = y_hat.row(i);
    for (std::size_t c = 1; c < y_hat.cols(); ++c) {
      if (row[c] > row[best]) best = c;
    }
    if (best == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(y_hat.rows());
}

}  // namespace

std::string TrainingLog::to_csv() const {
  std::ostringstream os;
  os << "epoch,total,recon,repr,pred,reg,collapse_metric,collapse_flagged,"
        "head_metric,spearman_rho,spearman_defined,knn_r2\n";
  os.precision(17);
  for (const auto& e : epochs) {
    os << e.epoch << ',' << e.total << ',' << e.recon << ',' << e.repr << ',' << e.pred
       << ',' << e.reg << ',' << e.collapse_metric << ',' << (e.collapse_flagged ? 1 : 0)
       << ',' << e.head_metric << ',' << e.spearman_rho << ','
       << (e.spearman_defined ? 1 : 0) << ',' << e.knn_r2 << '\n';
  }
  return os.str();
}

TrainResult train(const Dataset& train_set, const Dataset& valid_set,
                  const EncoderSpec& spec, const TrainConfig& config) {
  spec.validate();
  config.validate(spec);
  if (train_set.x.rows() != train_set.targets.rows() ||
      valid_set.x.rows() != valid_set.targets.rows()) {
    throw std::invalid_argument("train: feature/target row mismatch");
  }
  if (train_set.x.rows() < 2) throw std::invalid_argument("train: need at least 2 rows");

  Rng rng(config.seed);
  TrainResult result;
  result.model = initialize_model(spec, rng);
  EncoderModel& model = result.model;
  model.meta.seed = config.seed;
  model.meta.epochs = config.epochs;
  model.meta.weights = config.weights;
  model.meta.repr_loss = repr_loss_name(config.repr_loss);
  model.meta.pred_loss = pred_loss_name(config.pred_loss);
  model.meta.optimizer = nn::opt_name(config.optimizer);
  model.meta.learning_rate = config.learning_rate;
  model.meta.batch_size = config.batch_size;

  // PCA fitted once on the training inputs for the alignment targets.
  Matrix train_pca_scores, valid_pca_scores;
  if (config.weights.lambda_reg > 0) {
    const PcaModel pca = pca_fit(train_set.x, 2);
    train_pca_scores = pca.transform(train_set.x, 2);
    valid_pca_scores = pca.transform(valid_set.x, 2);
  }

  nn::Optimizer optimizer(config.optimizer, config.learning_rate);
  const std::vector<Matrix*> params = parameter_list(model);

  const std::size_t n = train_set.x.rows();
  const bool regression = spec.head == HeadKind::regressor;
  Rng diag_rng = rng.fork(0xd1a6);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto perm = rng.permutation(n);
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      if (end - start < 2) break;  // trailing singleton carries no graph signal
      Batch batch;
      batch.x = take_rows(train_set.x, perm, start, end);
      batch.targets = take_rows(train_set.targets, perm, start, end);
      if (config.weights.lambda_reg > 0) {
        batch.x_pca = take_rows(train_pca_scores, perm, start, end);
      }
      const CompositeResult step = composite_loss(model, batch, config);
      if (!std::isfinite(step.total)) {
        throw std::runtime_error(
            "train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
            std::to_string(start / config.batch_size) + "; aborting");
      }
      optimizer.step(params, gradient_list(step.grads, model));
      if (config.weights.lambda_repr > 0 && config.repr_loss == ReprLoss::center) {
        const auto labels = class_labels(batch.targets, spec.head_dim);
        model.centers =
            losses::update_centers(model.centers, step.psi, labels, kCenterUpdateRate);
      }
    }

    // Validation pass.
    EpochStats stats;
    stats.epoch = epoch;
    Batch vb;
    vb.x = valid_set.x;
    vb.targets = valid_set.targets;
    if (config.weights.lambda_reg > 0) vb.x_pca = valid_pca_scores;
    const CompositeResult val = composite_loss(model, vb, config);
    stats.total = val.total;
    stats.recon = val.recon;
    stats.repr = val.repr;
    stats.pred = val.pred;
    stats.reg = val.reg;

    const Matrix psi_sample = head_rows(val.psi, kEpochDiagnosticCap);
    const CollapseReport collapse = detect_collapse(psi_sample, 1e-6);
    stats.collapse_metric = collapse.mean_dimension_variance;
    stats.collapse_flagged = collapse.flagged;
    if (collapse.flagged) {
      log::warn("train: latent collapse detected at epoch " + std::to_string(epoch) +
                "; consider raising lambda_recon or switching repr_loss to a "
                "contrastive objective (info_nce / r_nce)");
    }

    const ForwardResult fwd = forward_multilevel(
        model, valid_set.x, {.with_decoder = false, .with_head = true,
                             .with_projection = false});
    if (regression) {
      stats.head_metric = diag::r_squared(valid_set.targets, fwd.y_hat);
      const Matrix y_sample = head_rows(valid_set.targets, kEpochDiagnosticCap);
      if (psi_sample.rows() >= 3) {
        const auto sp = diag::spearman_latent_target(psi_sample, y_sample,
                                                     kEpochSpearmanPairs,
                                                     diag_rng.next_u64());
        stats.spearman_rho = sp.rho;
        stats.spearman_defined = sp.defined;
      }
      if (psi_sample.rows() >= 5 * (5 + 1)) {
        const auto knn = diag::knn_r2(psi_sample, y_sample, 5, 5, diag_rng.next_u64());
        stats.knn_r2 = knn.mean_r2;
      }
    } else {
      const auto labels = class_labels(valid_set.targets, spec.head_dim);
      stats.head_metric = classification_accuracy(fwd.y_hat, labels);
    }
    result.log.epochs.push_back(stats);
  }

  for (const Matrix* p : parameter_list(model)) {
    ensure_finite(*p, "trained parameters");
  }
  return result;
}

Matrix encode_batch(const EncoderModel& model, const Matrix& x_batch) {
  if (x_batch.cols() != model.spec.input_dim) {
    throw std::invalid_argument("encode_batch: input width != model input_dim");
  }
  Matrix cur = x_batch;
  for (const nn::Dense& layer : model.encoder) {
    cur = dense_forward(layer, cur, nullptr);
  }
  return quantize_f32(cur);
}

}  // namespace veil::scrae
