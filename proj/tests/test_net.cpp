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
#include <stdexcept>

#include "doctest.h"
#include "veil/grad_check.hpp"
#include "veil/net.hpp"

using namespace veil;
using namespace veil::nn;

TEST_CASE("finite differences of a quadratic match the closed form") {
  Matrix x{{1.5, -2.0}, {0.5, 3.0}};
  const auto f = [](const Matrix& m) {
    double s = 0.0;
    for (double v : m.data()) s += v * v;
    return s;
  };
  const Matrix g = finite_diff_grad(f, x);
  const Matrix expected = scale(x, 2.0);
  CHECK(gradient_rel_error(expected, g, 1e-9) < 1e-6);
}

TEST_CASE("finite differences of a constant vanish") {
  Matrix x(3, 3, 2.5);
  const Matrix g = finite_diff_grad([](const Matrix&) { return 4.0; }, x);
  for (double v : g.data()) CHECK(v == 0.0);
}

TEST_CASE("finite_diff_grad rejects non-finite functions") {
  Matrix x(1, 1, 1.0);
  CHECK_THROWS_AS(
      finite_diff_grad([](const Matrix&) { return std::nan(""); }, x),
      std::runtime_error);
}

TEST_CASE("dense layer forward matches hand arithmetic") {
  Dense layer;
  layer.w = Matrix{{1.0, 0.0}, {0.0, -1.0}};
  layer.b = Matrix{{0.5, 0.5}};
  layer.act = Act::relu;
  const Matrix x{{2.0, 3.0}};
  const Matrix out = dense_forward(layer, x, nullptr);
  CHECK(out(0, 0) == 2.5);   // relu(2 + 0.5)
  CHECK(out(0, 1) == 0.0);   // relu(-3 + 0.5)
}

TEST_CASE("mlp backward matches finite differences on every parameter") {
  Rng rng(31);
  for (Act act : {Act::relu, Act::tanh_fn}) {
    Mlp net = make_mlp(4, {5, 3, 2}, act, Act::identity, rng);
    Matrix x(6, 4);
    for (double& v : x.data()) v = rng.normal();
    Matrix target(6, 2);
    for (double& v : target.data()) v = rng.normal();

    // Scalar objective: 0.5 * sum((out - target)^2)
    const auto objective = [&](const Mlp& m) {
      const Matrix out = mlp_forward(m, x, nullptr);
      double s = 0.0;
      for (std::size_t i = 0; i < out.size(); ++i) {
        const double d = out.data()[i] - target.data()[i];
        s += 0.5 * d * d;
      }
      return s;
    };

    std::vector<DenseCache> caches;
    const Matrix out = mlp_forward(net, x, &caches);
    Matrix d_out = sub(out, target);
    std::vector<DenseGrad> grads;
    const Matrix d_input = mlp_backward(net, caches, d_out, grads);

    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      for (Matrix Dense::* field : {&Dense::w, &Dense::b}) {
        Mlp probe = net;
        const auto f = [&](const Matrix& candidate) {
          probe.layers[l].*field = candidate;
          return objective(probe);
        };
        const Matrix numeric = finite_diff_grad(f, net.layers[l].*field);
        const Matrix& analytic = field == &Dense::w ? grads[l].dw : grads[l].db;
        CHECK(gradient_rel_error(analytic, numeric) < 1e-5);
      }
    }

    // Input gradient too (the path composite losses rely on).
    const auto fx = [&](const Matrix& candidate) {
      const Matrix o = mlp_forward(net, candidate, nullptr);
      double s = 0.0;
      for (std::size_t i = 0; i < o.size(); ++i) {
        const double d = o.data()[i] - target.data()[i];
        s += 0.5 * d * d;
      }
      return s;
    };
    CHECK(gradient_rel_error(d_input, finite_diff_grad(fx, x)) < 1e-5);
  }
}

TEST_CASE("softmax rows are a distribution and shift-invariant") {
  const Matrix logits{{1.0, 2.0, 3.0}, {1001.0, 1002.0, 1003.0}};
  const Matrix p = softmax_rows(logits);
  for (std::size_t i = 0; i < 2; ++i) {
    double sum = 0.0;
    for (double v : p.row(i)) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  // Rows differ by a constant shift, so probabilities agree.
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(p(0, j) == doctest::Approx(p(1, j)).epsilon(1e-12));
  }
}

TEST_CASE("optimizers reduce a quadratic and are deterministic") {
  for (OptKind kind : {OptKind::adaptive_moments, OptKind::sgd_momentum}) {
    Matrix p1(1, 3, 5.0), p2(1, 3, 5.0);
    Optimizer opt1(kind, 0.05), opt2(kind, 0.05);
    for (int step = 0; step < 400; ++step) {
      Matrix g1 = scale(p1, 2.0);
      Matrix g2 = scale(p2, 2.0);
      opt1.step({&p1}, {&g1});
      opt2.step({&p2}, {&g2});
    }
    for (double v : p1.data()) CHECK(std::abs(v) < 0.05);
    CHECK(p1 == p2);
  }
}

TEST_CASE("flatten and unflatten round trip") {
  Rng rng(17);
  Mlp net = make_mlp(3, {4, 2}, Act::relu, Act::identity, rng);
  std::vector<const Matrix*> params{&net.layers[0].w, &net.layers[0].b,
                                    &net.layers[1].w, &net.layers[1].b};
  const auto flat = flatten(params);
  Mlp copy = net;
  std::vector<Matrix*> mut{&copy.layers[0].w, &copy.layers[0].b, &copy.layers[1].w,
                           &copy.layers[1].b};
  for (Matrix* m : mut) {
    for (double& v : m->data()) v = 0.0;
  }
  unflatten(flat, mut);
  CHECK(copy.layers[0].w == net.layers[0].w);
  CHECK(copy.layers[1].b == net.layers[1].b);
}
