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

#include "veil/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "veil/losses.hpp"
#include "veil/model_io.hpp"
#include "veil/stats.hpp"

namespace veil::downstream {

Standardizer Standardizer::fit(const Matrix& x) {
  Standardizer s;
  s.mean = column_means(x);
  s.scale.assign(x.cols(), 1.0);
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double ss = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const double d = x(i, j) - s.mean[j];
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(std::max<std::size_t>(1, x.rows() - 1)));
    s.scale[j] = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  if (x.cols() != mean.size()) {
    throw std::invalid_argument("Standardizer: dimension mismatch");
  }
  Matrix out = x;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    for (std::size_t j = 0; j < out.cols(); ++j) row[j] = (row[j] - mean[j]) * scale[j];
  }
  return out;
}

LogisticRegression LogisticRegression::fit(const Matrix& x,
                                           const std::vector<std::size_t>& labels,
                                           std::size_t num_classes,
                                           const LogisticRegressionConfig& config) {
  if (labels.size() != x.rows()) {
    throw std::invalid_argument("LogisticRegression::fit: label count mismatch");
  }
  if (num_classes < 2) {
    throw std::invalid_argument("LogisticRegression::fit: need at least 2 classes");
  }
  for (std::size_t l : labels) {
    if (l >= num_classes) {
      throw std::invalid_argument("LogisticRegression::fit: label out of range");
    }
  }
  LogisticRegression model;
  model.standardizer_ = Standardizer::fit(x);
  const Matrix xs = model.standardizer_.apply(x);

  model.weights_ = Matrix(x.cols(), num_classes);
  model.bias_ = Matrix(1, num_classes);
  Rng rng(config.seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(x.cols()));
  for (double& v : model.weights_.data()) v = rng.uniform(-bound, bound);

  nn::Optimizer opt(nn::OptKind::adaptive_moments, config.learning_rate);
  const double n = static_cast<double>(x.rows());

  for (std::size_t it = 0; it < config.iterations; ++it) {
    Matrix logits = matmul(xs, model.weights_);
    for (std::size_t i = 0; i < logits.rows(); ++i) {
      auto row = logits.row(i);
      for (std::size_t c = 0; c < num_classes; ++c) row[c] += model.bias_(0, c);
    }
    Matrix probs = nn::softmax_rows(logits);
    // d(logits) = (p - onehot)/N
    for (std::size_t i = 0; i < probs.rows(); ++i) probs(i, labels[i]) -= 1.0;
    scale_in_place(probs, 1.0 / n);

    Matrix dw = matmul(transpose(xs), probs);
    if (config.l2 > 0) add_in_place(dw, scale(model.weights_, config.l2));
    Matrix db(1, num_classes);
    for (std::size_t i = 0; i < probs.rows(); ++i) {
      auto row = probs.row(i);
      for (std::size_t c = 0; c < num_classes; ++c) db(0, c) += row[c];
    }
    opt.step({&model.weights_, &model.bias_}, {&dw, &db});
  }
  ensure_finite(model.weights_, "logistic regression weights");
  return model;
}

Matrix LogisticRegression::predict_proba(const Matrix& x) const {
  const Matrix xs = standardizer_.apply(x);
  Matrix logits = matmul(xs, weights_);
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    for (std::size_t c = 0; c < logits.cols(); ++c) row[c] += bias_(0, c);
  }
  return nn::softmax_rows(logits);
}

std::vector<std::size_t> LogisticRegression::predict(const Matrix& x) const {
  const Matrix probs = predict_proba(x);
  std::vector<std::size_t> out(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    auto row = probs.row(i);
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.cols(); ++c) {
      if (row[c] > row[best]) best = c;
    }
    out[i] = best;
  }
  return out;
}

double LogisticRegression::accuracy(const Matrix& x,
                                    const std::vector<std::size_t>& labels) const {
  const auto pred = predict(x);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

LogisticRegression LogisticRegression::from_parts(Matrix weights, Matrix bias,
                                                  Standardizer s) {
  LogisticRegression model;
  model.weights_ = std::move(weights);
  model.bias_ = std::move(bias);
  model.standardizer_ = std::move(s);
  return model;
}

namespace {

// Solves (A)x = b for symmetric positive definite A, in place, via Cholesky.
Matrix cholesky_solve(Matrix a, Matrix b) {
  const std::size_t n = a.rows();
  for (std::size_t c = 0; c < n; ++c) {
    double diag = a(c, c);
    for (std::size_t k = 0; k < c; ++k) diag -= a(c, k) * a(c, k);
    if (diag <= 0) throw std::runtime_error("cholesky_solve: matrix not positive definite");
    const double l = std::sqrt(diag);
    a(c, c) = l;
    for (std::size_t r = c + 1; r < n; ++r) {
      double v = a(r, c);
      for (std::size_t k = 0; k < c; ++k) v -= a(r, k) * a(c, k);
      a(r, c) = v / l;
    }
  }
  // Forward then backward substitution per right-hand-side column.
  for (std::size_t col = 0; col < b.cols(); ++col) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = b(i, col);
      for (std::size_t k = 0; k < i; ++k) v -= a(i, k) * b(k, col);
      b(i, col) = v / a(i, i);
    }
    for (std::size_t ii = n; ii > 0; --ii) {
      const std::size_t i = ii - 1;
      double v = b(i, col);
      for (std::size_t k = i + 1; k < n; ++k) v -= a(k, i) * b(k, col);
      b(i, col) = v / a(i, i);
    }
  }
  return b;
}

}  // namespace

LinearRegression LinearRegression::fit(const Matrix& x, const Matrix& y, double l2) {
  if (x.rows() != y.rows()) {
    throw std::invalid_argument("LinearRegression::fit: row count mismatch");
  }
  LinearRegression model;
  model.standardizer_ = Standardizer::fit(x);
  const Matrix xs = model.standardizer_.apply(x);

  // Center targets so the intercept is exact.
  const std::vector<double> y_mean = column_means(y);
  Matrix yc = y;
  for (std::size_t i = 0; i < yc.rows(); ++i) {
    auto row = yc.row(i);
    for (std::size_t j = 0; j < yc.cols(); ++j) row[j] -= y_mean[j];
  }

  Matrix gram = matmul(transpose(xs), xs);
  for (std::size_t j = 0; j < gram.rows(); ++j) gram(j, j) += l2;
  const Matrix rhs = matmul(transpose(xs), yc);
  model.weights_ = cholesky_solve(std::move(gram), rhs);
  model.bias_ = Matrix(1, y.cols());
  for (std::size_t j = 0; j < y.cols(); ++j) model.bias_(0, j) = y_mean[j];
  ensure_finite(model.weights_, "linear regression weights");
  return model;
}

Matrix LinearRegression::predict(const Matrix& x) const {
  const Matrix xs = standardizer_.apply(x);
  Matrix out = matmul(xs, weights_);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    for (std::size_t j = 0; j < out.cols(); ++j) row[j] += bias_(0, j);
  }
  return out;
}

LinearRegression LinearRegression::from_parts(Matrix weights, Matrix bias,
                                              Standardizer s) {
  LinearRegression model;
  model.weights_ = std::move(weights);
  model.bias_ = std::move(bias);
  model.standardizer_ = std::move(s);
  return model;
}

MlpRegressor MlpRegressor::fit(const Matrix& x, const Matrix& y,
                               const MlpRegressorConfig& config) {
  if (x.rows() != y.rows()) {
    throw std::invalid_argument("MlpRegressor::fit: row count mismatch");
  }
  MlpRegressor model;
  model.x_standardizer_ = Standardizer::fit(x);
  model.y_standardizer_ = Standardizer::fit(y);
  const Matrix xs = model.x_standardizer_.apply(x);
  const Matrix ys = model.y_standardizer_.apply(y);

  Rng rng(config.seed);
  std::vector<std::size_t> widths = config.hidden_widths;
  widths.push_back(y.cols());
  model.net_ = nn::make_mlp(x.cols(), widths, nn::Act::relu, nn::Act::identity, rng);

  // Held-out tail of a seeded permutation for early stopping.
  const std::size_t n = xs.rows();
  const auto perm = rng.permutation(n);
  const std::size_t holdout =
      std::max<std::size_t>(1, static_cast<std::size_t>(
                                   static_cast<double>(n) * config.holdout_fraction));
  const std::size_t train_n = n > holdout + 1 ? n - holdout : n;

  auto gather = [&](std::size_t begin, std::size_t end, const Matrix& src) {
    Matrix out(end - begin, src.cols());
    for (std::size_t i = begin; i < end; ++i) {
      auto row = src.row(perm[i]);
      std::copy(row.begin(), row.end(), out.row(i - begin).begin());
    }
    return out;
  };
  const Matrix x_train = gather(0, train_n, xs);
  const Matrix y_train = gather(0, train_n, ys);
  const Matrix x_hold = train_n < n ? gather(train_n, n, xs) : x_train;
  const Matrix y_hold = train_n < n ? gather(train_n, n, ys) : y_train;

  std::vector<Matrix*> params;
  for (auto& layer : model.net_.layers) {
    params.push_back(&layer.w);
    params.push_back(&layer.b);
  }
  nn::Optimizer opt(nn::OptKind::adaptive_moments, config.learning_rate);

  double best_holdout = std::numeric_limits<double>::infinity();
  nn::Mlp best_net = model.net_;
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto order = rng.permutation(train_n);
    for (std::size_t start = 0; start < train_n; start += config.batch_size) {
      const std::size_t end = std::min(train_n, start + config.batch_size);
      Matrix xb(end - start, xs.cols());
      Matrix yb(end - start, ys.cols());
      for (std::size_t i = start; i < end; ++i) {
        auto xr = x_train.row(order[i]);
        std::copy(xr.begin(), xr.end(), xb.row(i - start).begin());
        auto yr = y_train.row(order[i]);
        std::copy(yr.begin(), yr.end(), yb.row(i - start).begin());
      }
      std::vector<nn::DenseCache> caches;
      const Matrix out = nn::mlp_forward(model.net_, xb, &caches);
      const auto loss = losses::ols_loss(yb, out);
      std::vector<nn::DenseGrad> grads;
      nn::mlp_backward(model.net_, caches, loss.grad, grads);
      std::vector<const Matrix*> grad_ptrs;
      for (auto& g : grads) {
        grad_ptrs.push_back(&g.dw);
        grad_ptrs.push_back(&g.db);
      }
      opt.step(params, grad_ptrs);
    }
    const Matrix hold_pred = nn::mlp_forward(model.net_, x_hold, nullptr);
    const double hold_loss = losses::ols_loss(y_hold, hold_pred).value;
    model.epochs_ran_ = epoch;
    if (hold_loss < best_holdout - 1e-12) {
      best_holdout = hold_loss;
      best_net = model.net_;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  model.net_ = best_net;
  return model;
}

Matrix MlpRegressor::predict(const Matrix& x) const {
  const Matrix xs = x_standardizer_.apply(x);
  Matrix out = nn::mlp_forward(net_, xs, nullptr);
  // Undo target standardization.
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto row = out.row(i);
    for (std::size_t j = 0; j < out.cols(); ++j) {
      row[j] = row[j] / y_standardizer_.scale[j] + y_standardizer_.mean[j];
    }
  }
  return out;
}

std::size_t DownstreamModel::input_dim() const {
  return type == "logistic" ? logistic.input_dim() : linear.weights().rows();
}

Matrix DownstreamModel::predict(const Matrix& latents) const {
  if (type == "logistic") return logistic.predict_proba(latents);
  if (type == "linear") return linear.predict(latents);
  throw std::runtime_error("DownstreamModel: unknown type " + type);
}

void save_downstream(const DownstreamModel& model, const std::string& path,
                     const std::string& config_echo) {
  nlohmann::ordered_json header;
  header["kind"] = "downstream";
  header["type"] = model.type;
  header["config"] = nlohmann::ordered_json::parse(config_echo);

  std::vector<io::NamedTensor> tensors;
  auto push_standardizer = [&](const Standardizer& s) {
    Matrix mean(1, s.mean.size());
    Matrix scl(1, s.scale.size());
    for (std::size_t j = 0; j < s.mean.size(); ++j) {
      mean(0, j) = s.mean[j];
      scl(0, j) = s.scale[j];
    }
    tensors.push_back({"standardizer.mean", std::move(mean)});
    tensors.push_back({"standardizer.scale", std::move(scl)});
  };
  if (model.type == "logistic") {
    tensors.push_back({"weights", model.logistic.weights()});
    tensors.push_back({"bias", model.logistic.bias()});
    push_standardizer(model.logistic.standardizer());
  } else if (model.type == "linear") {
    tensors.push_back({"weights", model.linear.weights()});
    tensors.push_back({"bias", model.linear.bias()});
    push_standardizer(model.linear.standardizer());
  } else {
    throw std::runtime_error("save_downstream: unknown type " + model.type);
  }
  io::write_model_file(path, header, tensors);
}

DownstreamModel load_downstream(const std::string& path) {
  const io::ModelFile file = io::read_model_file(path);
  if (file.header.at("kind").get<std::string>() != "downstream") {
    throw std::runtime_error("model artifact is not a downstream model");
  }
  DownstreamModel model;
  model.type = file.header.at("type").get<std::string>();
  Standardizer s;
  const Matrix& mean = file.tensor("standardizer.mean");
  const Matrix& scl = file.tensor("standardizer.scale");
  s.mean.assign(mean.data().begin(), mean.data().end());
  s.scale.assign(scl.data().begin(), scl.data().end());
  if (model.type == "logistic") {
    model.logistic = LogisticRegression::from_parts(file.tensor("weights"),
                                                    file.tensor("bias"), std::move(s));
  } else if (model.type == "linear") {
    model.linear = LinearRegression::from_parts(file.tensor("weights"),
                                                file.tensor("bias"), std::move(s));
  } else {
    throw std::runtime_error("load_downstream: unknown type " + model.type);
  }
  return model;
}

}  // namespace veil::downstream
