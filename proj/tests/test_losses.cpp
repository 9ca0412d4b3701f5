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
#include "veil/losses.hpp"
#include "veil/net.hpp"
#include "veil/rng.hpp"

using namespace veil;
using namespace veil::losses;

namespace {

Matrix random_matrix(std::size_t n, std::size_t d, Rng& rng, double scale = 1.0) {
  Matrix m(n, d);
  for (double& v : m.data()) v = rng.normal(0, scale);
  return m;
}

std::vector<std::size_t> random_labels(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> labels(n);
  for (auto& l : labels) l = rng.index(k);
  return labels;
}

constexpr double kGradTol = 1e-4;

}  // namespace

TEST_CASE("ols loss hand values") {
  const Matrix x{{0.0, 0.0}};
  const Matrix x_hat{{3.0, 4.0}};
  CHECK(ols_loss(x, x).value == 0.0);
  CHECK(ols_loss(x, x_hat).value == doctest::Approx(12.5).epsilon(1e-12));
  CHECK_THROWS_AS(ols_loss(Matrix(1, 2), Matrix(2, 1)), std::invalid_argument);
}

TEST_CASE("ols gradient matches finite differences") {
  Rng rng(101);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.index(16), d = 1 + rng.index(8);
    const Matrix x = random_matrix(n, d, rng);
    const Matrix x_hat = random_matrix(n, d, rng);
    const auto res = ols_loss(x, x_hat);
    const Matrix numeric = finite_diff_grad(
        [&](const Matrix& m) { return ols_loss(x, m).value; }, x_hat);
    CHECK(gradient_rel_error(res.grad, numeric) < kGradTol);
  }
}

TEST_CASE("mae loss hand values") {
  const Matrix y{{0.0}, {0.0}};
  const Matrix y_hat{{1.0}, {-3.0}};
  CHECK(mae_loss(y, y).value == 0.0);
  CHECK(mae_loss(y, y_hat).value == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("mae gradient matches finite differences away from ties") {
  Rng rng(102);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.index(16), d = 1 + rng.index(8);
    const Matrix y = random_matrix(n, d, rng);
    Matrix y_hat = random_matrix(n, d, rng);
    // Push every residual away from the kink.
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (std::abs(y_hat.data()[i] - y.data()[i]) < 1e-3) y_hat.data()[i] += 0.01;
    }
    const auto res = mae_loss(y, y_hat);
    const Matrix numeric = finite_diff_grad(
        [&](const Matrix& m) { return mae_loss(y, m).value; }, y_hat);
    CHECK(gradient_rel_error(res.grad, numeric) < kGradTol);
  }
}

TEST_CASE("huber loss hand values and knee continuity") {
  const Matrix y{{0.0}};
  CHECK(huber_loss(y, y, 1.0).value == 0.0);
  CHECK(huber_loss(y, Matrix{{0.5}}, 1.0).value == doctest::Approx(0.125));
  CHECK(huber_loss(y, Matrix{{2.0}}, 1.0).value == doctest::Approx(1.5));
  CHECK_THROWS_AS(huber_loss(y, y, 0.0), std::invalid_argument);

  const double eps = 1e-7;
  const double g_below = huber_loss(y, Matrix{{1.0 - eps}}, 1.0).grad(0, 0);
  const double g_above = huber_loss(y, Matrix{{1.0 + eps}}, 1.0).grad(0, 0);
  CHECK(std::abs(g_below - g_above) < 1e-6);
}

TEST_CASE("huber gradient matches finite differences") {
  Rng rng(103);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.index(16), d = 1 + rng.index(8);
    const double delta = 0.5 + rng.uniform();
    const Matrix y = random_matrix(n, d, rng);
    Matrix y_hat = random_matrix(n, d, rng);
    for (std::size_t i = 0; i < y.size(); ++i) {
      // keep residuals away from the knee
      const double r = std::abs(y_hat.data()[i] - y.data()[i]);
      if (std::abs(r - delta) < 1e-3) y_hat.data()[i] += 0.01;
    }
    const auto res = huber_loss(y, y_hat, delta);
    const Matrix numeric = finite_diff_grad(
        [&](const Matrix& m) { return huber_loss(y, m, delta).value; }, y_hat);
    CHECK(gradient_rel_error(res.grad, numeric) < kGradTol);
  }
}

TEST_CASE("cross entropy hand values") {
  const Matrix perfect{{1.0, 0.0}};
  CHECK(cross_entropy_loss({0}, perfect).value == doctest::Approx(0.0).epsilon(1e-9));
  const Matrix even{{0.5, 0.5}};
  CHECK(cross_entropy_loss({0}, even).value == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(cross_entropy_loss({0}, Matrix{{0.9, 0.3}}), std::invalid_argument);
}

TEST_CASE("cross entropy gradient (wrt logits) matches finite differences") {
  Rng rng(104);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.index(16), k = 2 + rng.index(7);
    const Matrix logits = random_matrix(n, k, rng);
    const auto labels = random_labels(n, k, rng);
    const auto value_of = [&](const Matrix& lg) {
      return cross_entropy_loss(labels, nn::softmax_rows(lg)).value;
    };
    const auto res = cross_entropy_loss(labels, nn::softmax_rows(logits));
    const Matrix numeric = finite_diff_grad(value_of, logits);
    CHECK(gradient_rel_error(res.grad, numeric) < kGradTol);
  }
}

TEST_CASE("hinge loss hand values") {
  // true class 1 (0-based) with scores (0.5, 2): margin satisfied.
  CHECK(hinge_loss(Matrix{{0.5, 2.0}}, {1}).value == 0.0);
  CHECK(hinge_loss(Matrix{{1.5, 2.0}}, {1}).value == doctest::Approx(0.5));
  // all rivals at least 1 below the true class
  CHECK(hinge_loss(Matrix{{3.0, 1.0, 2.0}}, {0}).value == 0.0);
  CHECK_THROWS_AS(hinge_loss(Matrix{{1.0, 2.0}}, {5}), std::invalid_argument);
}

TEST_CASE("hinge subgradient matches finite differences away from hinge points") {
  Rng rng(105);
  int done = 0;
  while (done < 20) {
    const std::size_t n = 1 + rng.index(16), k = 2 + rng.index(7);
    const Matrix scores = random_matrix(n, k, rng);
    const auto labels = random_labels(n, k, rng);
    // Skip instances near a hinge point.
    bool near_kink = false;
    for (std::size_t i = 0; i < n && !near_kink; ++i) {
      for (std::size_t c = 0; c < k; ++c) {
        if (c == labels[i]) continue;
        if (std::abs(1.0 + scores(i, c) - scores(i, labels[i])) < 1e-3) {
          near_kink = true;
          break;
        }
      }
    }
    if (near_kink) continue;
    ++done;
    const auto res = hinge_loss(scores, labels);
    const Matrix numeric = finite_diff_grad(
        [&](const Matrix& s) { return hinge_loss(s, labels).value; }, scores);
    CHECK(gradient_rel_error(res.grad, numeric) < kGradTol);
  }
}

TEST_CASE("center loss hand values") {
  ClassCenters centers;
  centers.centers = Matrix{{0.0, 0.0}};
  centers.counts = {0};
  const Matrix psi{{1.0, 1.0}};
  CHECK(center_loss(psi, {0}, centers).value == doctest::Approx(1.0));
  CHECK(center_loss(centers.centers, {0}, centers).value == 0.0);
  CHECK_THROWS_AS(center_loss(psi, {3}, centers), std::invalid_argument);
}

TEST_CASE("center loss gradient matches finite differences") {
  Rng rng(106);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.index(16), d = 1 + rng.index(8), k = 1 + rng.index(4);
    ClassCenters centers;
    centers.centers = random_matrix(k, d, rng);
    centers.counts.assign(k, 1);
    const Matrix psi = random_matrix(n, d, rng);
    const auto labels = random_labels(n, k, rng);
    const auto res = center_loss(psi, labels, centers);
    const Matrix numeric = finite_diff_grad(
        [&](const Matrix& m) { return center_loss(m, labels, centers).value; }, psi);
    CHECK(gradient_rel_error(res.grad, numeric) < kGradTol);
  }
}

TEST_CASE("center-loss argmin is the centers themselves") {
  Rng rng(107);
  ClassCenters centers;
  centers.centers = random_matrix(3, 4, rng);
  centers.counts.assign(3, 1);
  Matrix psi(6, 4);
  std::vector<std::size_t> labels(6);
  for (std::size_t i = 0; i < 6; ++i) {
    labels[i] = i % 3;
    for (std::size_t j = 0; j < 4; ++j) psi(i, j) = centers.centers(labels[i], j);
  }
  CHECK(center_loss(psi, labels, centers).value == 0.0);
}

TEST_CASE("update_centers moves toward the batch mean") {
  ClassCenters centers;
  centers.centers = Matrix{{0.0, 0.0}, {10.0, 10.0}};
  centers.counts = {0, 0};
  const Matrix psi{{2.0, 4.0}, {4.0, 2.0}};
  const std::vector<std::size_t> labels{0, 0};

  const auto unchanged = update_centers(centers, psi, labels, 0.0);
  CHECK(unchanged.centers == centers.centers);

  const auto full = update_centers(centers, psi, labels, 1.0);
  CHECK(full.centers(0, 0) == doctest::Approx(3.0));
  CHECK(full.centers(0, 1) == doctest::Approx(3.0));
  CHECK(full.centers(1, 0) == 10.0);  // class absent from batch

  // Damped updates converge monotonically to the stationary batch mean.
  ClassCenters state = centers;
  double prev_dist = 1e300;
  for (int step = 0; step < 2; ++step) {
    state = update_centers(state, psi, labels, 0.5);
    const double dist = std::hypot(state.centers(0, 0) - 3.0, state.centers(0, 1) - 3.0);
    CHECK(dist < prev_dist);
    prev_dist = dist;
  }
}

TEST_CASE("pca cosine loss endpoints") {
  const Matrix target{{1.0, 2.0}, {0.0, -1.0}};
  Matrix aligned = target;
  scale_in_place(aligned, 2.5);  // positive rowwise scaling keeps cosine 1
  CHECK(pca_cosine_loss(aligned, target).value == doctest::Approx(0.0).epsilon(1e-12));
  const Matrix anti = scale(target, -1.0);
  CHECK(pca_cosine_loss(anti, target).value == doctest::Approx(2.0).epsilon(1e-12));
  // zero-norm row contributes exactly 1
  CHECK(pca_cosine_loss(Matrix(1, 2), Matrix{{1.0, 0.0}}).value == doctest::Approx(1.0));
}

TEST_CASE("pca cosine gradient matches finite differences") {
  Rng rng(108);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.index(16);
    Matrix psi2 = random_matrix(n, 2, rng);
    Matrix target = random_matrix(n, 2, rng);
    for (std::size_t i = 0; i < n; ++i) {
      if (norm2(psi2.row(i)) < 0.1) psi2(i, 0) += 1.0;
      if (norm2(target.row(i)) < 0.1) target(i, 0) += 1.0;
    }
    const auto res = pca_cosine_loss(psi2, target);
    const Matrix numeric = finite_diff_grad(
        [&](const Matrix& m) { return pca_cosine_loss(m, target).value; }, psi2);
    CHECK(gradient_rel_error(res.grad, numeric) < kGradTol);
  }
}

TEST_CASE("laplacian dense hand value") {
  // N=2, E=1, psi rows 0 and 2, gamma = 1 both ways: (1/4)(4+4) = 2.
  Matrix y{{0.0}, {0.0}};
  const auto graph = build_dense_graph(y, 1.0);
  const Matrix psi{{0.0}, {2.0}};
  const auto res = laplacian_loss_dense(psi, graph);
  CHECK(res.value == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(laplacian_loss_dense(Matrix{{1.0}, {1.0}}, graph).value == 0.0);
}

TEST_CASE("laplacian dense gradient matches finite differences") {
  Rng rng(109);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.index(15), d = 1 + rng.index(8);
    const Matrix y = random_matrix(n, 1, rng);
    const auto graph = build_dense_graph(y, 0.8);
    const Matrix psi = random_matrix(n, d, rng);
    const auto res = laplacian_loss_dense(psi, graph);
    const Matrix numeric = finite_diff_grad(
        [&](const Matrix& m) { return laplacian_loss_dense(m, graph).value; }, psi);
    CHECK(gradient_rel_error(res.grad, numeric) < kGradTol);
  }
}

TEST_CASE("trace identity matches the pairwise form") {
  Rng rng(110);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + rng.index(63), d = 1 + rng.index(8);
    const Matrix y = random_matrix(n, 1, rng);
    const auto graph = build_dense_graph(y, 0.7);
    const Matrix psi = random_matrix(n, d, rng);

    // Independent oracle: the (1/(2N)) pairwise sum evaluated directly.
    double pairwise = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        pairwise += similarity_kernel(y.row(i), y.row(j), 0.7) *
                    squared_distance(psi.row(i), psi.row(j));
      }
    }
    pairwise /= 2.0 * static_cast<double>(n);

    const double trace = laplacian_loss_trace(psi, graph);
    CHECK(trace == doctest::Approx(pairwise).epsilon(1e-8));

    // Normalization conversion: trace form = (N-1) x dense form.
    const double dense = laplacian_loss_dense(psi, graph).value;
    CHECK(trace == doctest::Approx((static_cast<double>(n) - 1.0) * dense).epsilon(1e-10));
  }
}

TEST_CASE("sparse laplacian equals dense when k = N-1 (directed)") {
  Rng rng(111);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 3 + rng.index(10), d = 1 + rng.index(6);
    const Matrix y = random_matrix(n, 1, rng);
    const auto dense = build_dense_graph(y, 1.1);
    const auto knn = build_knn_graph(y, 1.1, n - 1, SymMode::directed);
    const Matrix psi = random_matrix(n, d, rng);
    const double lv = laplacian_loss_sparse(psi, knn).value;
    const double dv = laplacian_loss_dense(psi, dense).value;
    CHECK(lv == doctest::Approx(dv).epsilon(1e-10));
  }
}

TEST_CASE("sparse laplacian gradient matches finite differences") {
  Rng rng(112);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 4 + rng.index(12), d = 1 + rng.index(8);
    const Matrix y = random_matrix(n, 1, rng);
    const auto mode = static_cast<SymMode>(rng.index(3));
    const auto graph = build_knn_graph(y, 0.9, 2, mode);
    const Matrix psi = random_matrix(n, d, rng);
    const auto res = laplacian_loss_sparse(psi, graph);
    const Matrix numeric = finite_diff_grad(
        [&](const Matrix& m) { return laplacian_loss_sparse(m, graph).value; }, psi);
    CHECK(gradient_rel_error(res.grad, numeric) < kGradTol);
  }
  SimilarityGraph empty;
  empty.form = GraphForm::knn;
  empty.n = 3;
  empty.k = 1;
  CHECK_THROWS_AS(laplacian_loss_sparse(Matrix(3, 2), empty), std::invalid_argument);
}

TEST_CASE("all-equal latents zero every laplacian") {
  Rng rng(113);
  const Matrix y = random_matrix(6, 1, rng);
  const Matrix psi(6, 3, 1.25);
  CHECK(laplacian_loss_dense(psi, build_dense_graph(y, 1.0)).value == 0.0);
  CHECK(laplacian_loss_trace(psi, build_dense_graph(y, 1.0)) ==
        doctest::Approx(0.0).epsilon(1e-15));
  CHECK(laplacian_loss_sparse(psi, build_knn_graph(y, 1.0, 2, SymMode::union_mode)).value ==
        0.0);
}

TEST_CASE("cosine_sim_scaled basics") {
  const std::vector<double> a{1.0, 0.0};
  const std::vector<double> b{0.0, 1.0};
  CHECK(cosine_sim_scaled(a, a, 1.0) == doctest::Approx(1.0));
  CHECK(cosine_sim_scaled(a, b, 1.0) == doctest::Approx(0.0));
  const std::vector<double> c{0.3, 0.7};
  CHECK(cosine_sim_scaled(a, c, 0.5) ==
        doctest::Approx(2.0 * cosine_sim_scaled(a, c, 1.0)));
  const std::vector<double> zero{0.0, 0.0};
  CHECK_THROWS_AS(cosine_sim_scaled(a, zero, 1.0), std::invalid_argument);
}

TEST_CASE("info_nce is zero when the batch is one class") {
  Rng rng(114);
  const Matrix psi = random_matrix(5, 3, rng);
  const std::vector<std::size_t> labels(5, 2);
  CHECK(info_nce_loss(psi, labels, 0.5).value == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("info_nce drops when same-class pairs grow more similar") {
  // N=4 fixture, two classes; rotating a same-class pair together must
  // reduce the loss while the rest stays fixed.
  Matrix psi{{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.2}, {0.3, -1.0}};
  const std::vector<std::size_t> labels{0, 0, 1, 1};
  const double before = info_nce_loss(psi, labels, 0.5).value;
  psi(1, 0) = 0.9;  // move row 1 toward row 0
  psi(1, 1) = 0.1;
  const double after = info_nce_loss(psi, labels, 0.5).value;
  CHECK(after < before);
}

TEST_CASE("info_nce gradient matches finite differences") {
  Rng rng(115);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 4 + rng.index(12), d = 2 + rng.index(7);
    Matrix psi = random_matrix(n, d, rng);
    std::vector<std::size_t> labels = random_labels(n, 2, rng);
    labels[0] = 0;
    labels[1] = 0;  // guarantee positives exist
    labels[2] = 1;
    labels[3] = 1;
    const double tau = 0.4 + rng.uniform();
    const auto res = info_nce_loss(psi, labels, tau);
    const Matrix numeric = finite_diff_grad(
        [&](const Matrix& m) { return info_nce_loss(m, labels, tau).value; }, psi);
    CHECK(gradient_rel_error(res.grad, numeric) < kGradTol);
  }
}

TEST_CASE("r_nce vanishes for equal targets and is never negative") {
  Rng rng(116);
  const Matrix psi = random_matrix(6, 4, rng);
  const Matrix y_const(6, 1, 3.0);
  CHECK(std::abs(r_nce_loss(psi, y_const, 1.0, 0.5).value) <= 1e-12);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + rng.index(14);
    const Matrix p = random_matrix(n, 3, rng);
    const Matrix y = random_matrix(n, 1, rng);
    CHECK(r_nce_loss(p, y, 0.8, 0.5).value >= 0.0);
  }
}

TEST_CASE("r_nce gradient matches finite differences") {
  Rng rng(117);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.index(14), d = 2 + rng.index(7);
    const Matrix psi = random_matrix(n, d, rng);
    const Matrix y = random_matrix(n, 1, rng);
    const double sigma = 0.5 + rng.uniform();
    const double tau = 0.4 + rng.uniform();
    const auto res = r_nce_loss(psi, y, sigma, tau);
    const Matrix numeric = finite_diff_grad(
        [&](const Matrix& m) { return r_nce_loss(m, y, sigma, tau).value; }, psi);
    CHECK(gradient_rel_error(res.grad, numeric) < kGradTol);
  }
}

TEST_CASE("loss weights validation enumerates violations") {
  LossWeights w;
  w.lambda_repr = 0;
  w.lambda_pred = 0;
  w.lambda_recon = 0;
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
  CHECK_THROWS_AS(w.validate(true), std::invalid_argument);  // all-zero is never valid
  w.lambda_recon = 1;
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
  CHECK_NOTHROW(w.validate(true));  // reconstruction-only baseline
  w.lambda_pred = 1;
  w.sigma = -1;
  CHECK_THROWS_AS(w.validate(), std::invalid_argument);
  w.sigma = 1;
  CHECK_NOTHROW(w.validate());
}
