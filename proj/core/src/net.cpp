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

#include "veil/net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace veil::nn {

std::string act_name(Act a) {
  switch (a) {
    case Act::identity: return "identity";
    case Act::relu: return "relu";
    case Act::tanh_fn: return "tanh";
  }
  return "identity";
}

Act act_from_name(const std::string& name) {
  if (name == "identity") return Act::identity;
  if (name == "relu") return Act::relu;
  if (name == "tanh") return Act::tanh_fn;
  throw std::invalid_argument("unknown activation: " + name);
}

Dense make_dense(std::size_t in, std::size_t out, Act act, Rng& rng) {
  Dense layer;
  layer.w = Matrix(in, out);
  layer.b = Matrix(1, out);
  layer.act = act;
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  for (double& v : layer.w.data()) v = rng.uniform(-bound, bound);
  return layer;
}

DenseGrad zero_grad(const Dense& layer) {
  return {Matrix(layer.w.rows(), layer.w.cols()), Matrix(1, layer.b.cols())};
}

namespace {

void apply_activation(Act act, Matrix& m) {
  switch (act) {
    case Act::identity:
      break;
    case Act::relu:
      for (double& v : m.data()) v = v > 0.0 ? v : 0.0;
      break;
    case Act::tanh_fn:
      for (double& v : m.data()) v = std::tanh(v);
      break;
  }
}

}  // namespace

Matrix dense_forward(const Dense& layer, const Matrix& input, DenseCache* cache) {
  if (input.cols() != layer.in_dim()) {
    throw std::invalid_argument("dense_forward: input width " + std::to_string(input.cols()) +
                                " != layer fan-in " + std::to_string(layer.in_dim()));
  }
  Matrix pre = matmul(input, layer.w);
  for (std::size_t i = 0; i < pre.rows(); ++i) {
    auto row = pre.row(i);
    for (std::size_t j = 0; j < pre.cols(); ++j) row[j] += layer.b(0, j);
  }
  Matrix out = pre;
  apply_activation(layer.act, out);
  if (cache) {
    cache->input = input;
    cache->pre = std::move(pre);
    cache->out = out;
  }
  return out;
}

Matrix dense_backward(const Dense& layer, const DenseCache& cache,
                      const Matrix& d_out, DenseGrad& grad) {
  Matrix d_pre = d_out;
  switch (layer.act) {
    case Act::identity:
      break;
    case Act::relu:
      for (std::size_t i = 0; i < d_pre.size(); ++i) {
        if (cache.pre.data()[i] <= 0.0) d_pre.data()[i] = 0.0;
      }
      break;
    case Act::tanh_fn:
      for (std::size_t i = 0; i < d_pre.size(); ++i) {
        const double t = cache.out.data()[i];
        d_pre.data()[i] *= (1.0 - t * t);
      }
      break;
  }
  add_in_place(grad.dw, matmul(transpose(cache.input), d_pre));
  for (std::size_t i = 0; i < d_pre.rows(); ++i) {
    auto row = d_pre.row(i);
    for (std::size_t j = 0; j < d_pre.cols(); ++j) grad.db(0, j) += row[j];
  }
  return matmul(d_pre, transpose(layer.w));
}

Mlp make_mlp(std::size_t in, const std::vector<std::size_t>& widths, Act hidden_act,
             Act final_act, Rng& rng) {
  Mlp net;
  std::size_t prev = in;
  for (std::size_t l = 0; l < widths.size(); ++l) {
    const Act act = (l + 1 == widths.size()) ? final_act : hidden_act;
    net.layers.push_back(make_dense(prev, widths[l], act, rng));
    prev = widths[l];
  }
  return net;
}

Matrix mlp_forward(const Mlp& net, const Matrix& x, std::vector<DenseCache>* caches) {
  Matrix cur = x;
  if (caches) caches->resize(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    cur = dense_forward(net.layers[l], cur, caches ? &(*caches)[l] : nullptr);
  }
  return cur;
}

Matrix mlp_backward(const Mlp& net, const std::vector<DenseCache>& caches,
                    const Matrix& d_out, std::vector<DenseGrad>& grads) {
  if (grads.size() != net.layers.size()) {
    grads.clear();
    for (const Dense& layer : net.layers) grads.push_back(zero_grad(layer));
  }
  Matrix d = d_out;
  for (std::size_t l = net.layers.size(); l > 0; --l) {
    d = dense_backward(net.layers[l - 1], caches[l - 1], d, grads[l - 1]);
  }
  return d;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix probs = logits;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    auto row = probs.row(i);
    double mx = row[0];
    for (double v : row) mx = std::max(mx, v);
    double sum = 0.0;
    for (double& v : row) {
      v = std::exp(v - mx);
      sum += v;
    }
    for (double& v : row) v /= sum;
  }
  return probs;
}

std::string opt_name(OptKind k) {
  return k == OptKind::sgd_momentum ? "sgd_momentum" : "adaptive_moments";
}

OptKind opt_from_name(const std::string& name) {
  if (name == "sgd_momentum") return OptKind::sgd_momentum;
  if (name == "adaptive_moments") return OptKind::adaptive_moments;
  throw std::invalid_argument("unknown optimizer: " + name);
}

Optimizer::Optimizer(OptKind kind, double learning_rate)
    : kind_(kind), lr_(learning_rate) {}

void Optimizer::step(const std::vector<Matrix*>& params,
                     const std::vector<const Matrix*>& grads) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("Optimizer::step: param/grad count mismatch");
  }
  if (m_.empty()) {
    for (const Matrix* p : params) {
      m_.emplace_back(p->rows(), p->cols());
      v_.emplace_back(p->rows(), p->cols());
    }
  }
  ++t_;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& p = *params[k];
    const Matrix& g = *grads[k];
    if (kind_ == OptKind::sgd_momentum) {
      Matrix& vel = m_[k];
      for (std::size_t i = 0; i < p.size(); ++i) {
        vel.data()[i] = momentum_ * vel.data()[i] - lr_ * g.data()[i];
        p.data()[i] += vel.data()[i];
      }
    } else {
      Matrix& m = m_[k];
      Matrix& v = v_[k];
      const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
      const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
      for (std::size_t i = 0; i < p.size(); ++i) {
        const double gi = g.data()[i];
        m.data()[i] = beta1_ * m.data()[i] + (1.0 - beta1_) * gi;
        v.data()[i] = beta2_ * v.data()[i] + (1.0 - beta2_) * gi * gi;
        const double mhat = m.data()[i] / bc1;
        const double vhat = v.data()[i] / bc2;
        p.data()[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }
}

std::vector<double> flatten(const std::vector<const Matrix*>& params) {
  std::vector<double> flat;
  for (const Matrix* p : params) {
    flat.insert(flat.end(), p->data().begin(), p->data().end());
  }
  return flat;
}

std::vector<double> flatten(const std::vector<Matrix*>& params) {
  return flatten(std::vector<const Matrix*>(params.begin(), params.end()));
}

void unflatten(const std::vector<double>& flat, const std::vector<Matrix*>& params) {
  std::size_t offset = 0;
  for (Matrix* p : params) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(offset),
              flat.begin() + static_cast<std::ptrdiff_t>(offset + p->size()),
              p->data().begin());
    offset += p->size();
  }
  if (offset != flat.size()) {
    throw std::invalid_argument("unflatten: length mismatch");
  }
}

}  // namespace veil::nn
