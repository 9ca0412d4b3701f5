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

#ifndef VEIL_NET_HPP_
#define VEIL_NET_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "veil/matrix.hpp"
#include "veil/rng.hpp"

namespace veil::nn {

enum class Act { identity, relu, tanh_fn };

std::string act_name(Act a);
Act act_from_name(const std::string& name);

/// One affine layer with an elementwise activation. Weights are in x out so a
/// batch (N x in) maps to (N x out).
struct Dense {
  Matrix w;
  Matrix b;  // 1 x out, broadcast over rows
  Act act = Act::identity;

  std::size_t in_dim() const { return w.rows(); }
  std::size_t out_dim() const { return w.cols(); }
};

/// Fan-in-scaled uniform init: U(-1/sqrt(in), 1/sqrt(in)), seed-controlled.
Dense make_dense(std::size_t in, std::size_t out, Act act, Rng& rng);

/// Forward-pass byproducts kept for the backward pass.
struct DenseCache {
  Matrix input;
  Matrix pre;  // before activation
  Matrix out;
};

struct DenseGrad {
  Matrix dw;
  Matrix db;
};
DenseGrad zero_grad(const Dense& layer);

Matrix dense_forward(const Dense& layer, const Matrix& input, DenseCache* cache);

/// Reverse step: given dL/d(out), accumulates dL/dw and dL/db into `grad` and
/// returns dL/d(input).
Matrix dense_backward(const Dense& layer, const DenseCache& cache,
                      const Matrix& d_out, DenseGrad& grad);

/// A plain chain of dense layers.
struct Mlp {
  std::vector<Dense> layers;
};

Mlp make_mlp(std::size_t in, const std::vector<std::size_t>& widths, Act hidden_act,
             Act final_act, Rng& rng);
Matrix mlp_forward(const Mlp& net, const Matrix& x, std::vector<DenseCache>* caches);
Matrix mlp_backward(const Mlp& net, const std::vector<DenseCache>& caches,
                    const Matrix& d_out, std::vector<DenseGrad>& grads);

/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);

enum class OptKind { sgd_momentum, adaptive_moments };

std::string opt_name(OptKind k);
OptKind opt_from_name(const std::string& name);

/// Optimizer over an ordered set of parameter matrices. The caller must pass
/// the same parameter list, in the same order, on every step.
class Optimizer {
 public:
  Optimizer(OptKind kind, double learning_rate);

  void step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads);

 private:
  OptKind kind_;
  double lr_;
  double momentum_ = 0.9;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  std::int64_t t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

/// Helpers for whole-model finite-difference checks.
std::vector<double> flatten(const std::vector<const Matrix*>& params);
std::vector<double> flatten(const std::vector<Matrix*>& params);
void unflatten(const std::vector<double>& flat, const std::vector<Matrix*>& params);

}  // namespace veil::nn

#endif  // VEIL_NET_HPP_
