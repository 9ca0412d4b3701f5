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

#include "veil/losses.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "veil/log.hpp"

namespace veil::losses {

namespace {

void check_shapes(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}

constexpr double kProbFloor = 1e-12;

}  // namespace

void LossWeights::validate(bool allow_plain_autoencoder) const {
  std::vector<std::string> violations;
  if (lambda_recon < 0 || lambda_repr < 0 || lambda_pred < 0 || lambda_reg < 0) {
    violations.push_back("all lambda coefficients must be >= 0");
  }
  if (lambda_repr <= 0 && lambda_pred <= 0) {
    const bool plain_ae = allow_plain_autoencoder && lambda_recon > 0;
    if (!plain_ae) {
      violations.push_back(
          "at least one of lambda_repr, lambda_pred must be > 0 "
          "(otherwise nothing trains toward the task)");
    }
  }
  if (sigma <= 0) violations.push_back("sigma must be > 0");
  if (tau <= 0) violations.push_back("tau must be > 0");
  if (delta <= 0) violations.push_back("delta must be > 0");
  if (k < 1) violations.push_back("k must be >= 1");
  if (!violations.empty()) {
    std::string msg = "invalid loss weights:";
    for (const auto& v : violations) msg += "\n  - " + v;
    throw std::invalid_argument(msg);
  }
}

LossResult ols_loss(const Matrix& x, const Matrix& x_hat) {
  check_shapes(x, x_hat, "ols_loss");
  const double n = static_cast<double>(x.rows());
  LossResult r;
  r.grad = Matrix(x.rows(), x.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x_hat.data()[i] - x.data()[i];
    total += d * d;
    r.grad.data()[i] = d / n;
  }
  r.value = total / (2.0 * n);
  return r;
}

LossResult mae_loss(const Matrix& y, const Matrix& y_hat) {
  check_shapes(y, y_hat, "mae_loss");
  const double n = static_cast<double>(y.rows());
  LossResult r;
  r.grad = Matrix(y.rows(), y.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y_hat.data()[i] - y.data()[i];
    total += std::abs(d);
    r.grad.data()[i] = d > 0 ? 1.0 / n : (d < 0 ? -1.0 / n : 0.0);
  }
  r.value = total / n;
  return r;
}

LossResult huber_loss(const Matrix& y, const Matrix& y_hat, double delta) {
  check_shapes(y, y_hat, "huber_loss");
  if (delta <= 0) throw std::invalid_argument("huber_loss: delta must be > 0");
  const double n = static_cast<double>(y.rows());
  LossResult r;
  r.grad = Matrix(y.rows(), y.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y_hat.data()[i] - y.data()[i];
    const double a = std::abs(d);
    if (a < delta) {
      total += 0.5 * d * d;
      r.grad.data()[i] = d / n;
    } else {
      total += a * delta - 0.5 * delta * delta;
      r.grad.data()[i] = (d > 0 ? delta : -delta) / n;
    }
  }
  r.value = total / n;
  return r;
}

LossResult cross_entropy_loss(const std::vector<std::size_t>& labels, const Matrix& probs) {
  if (labels.size() != probs.rows()) {
    throw std::invalid_argument("cross_entropy_loss: label count != row count");
  }
  const std::size_t k = probs.cols();
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    double row_sum = 0.0;
    for (double v : probs.row(i)) row_sum += v;
    if (std::abs(row_sum - 1.0) > 1e-6) {
      throw std::invalid_argument("cross_entropy_loss: probability rows must sum to 1");
    }
    if (labels[i] >= k) {
      throw std::invalid_argument("cross_entropy_loss: label out of range");
    }
  }
  const double n = static_cast<double>(probs.rows());
  LossResult r;
  r.grad = scale(probs, 1.0 / n);  // gradient wrt logits: (p - onehot)/N
  double total = 0.0;
  bool clamped = false;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    double p = probs(i, labels[i]);
    if (p < kProbFloor) {
      p = kProbFloor;
      clamped = true;
    }
    total -= std::log(p);
    r.grad(i, labels[i]) -= 1.0 / n;
  }
  if (clamped) {
    log::warn("cross_entropy_loss: zero probability at true class clamped to 1e-12");
  }
  r.value = total / n;
  return r;
}

LossResult hinge_loss(const Matrix& scores, const std::vector<std::size_t>& labels) {
  if (labels.size() != scores.rows()) {
    throw std::invalid_argument("hinge_loss: label count != row count");
  }
  const std::size_t k = scores.cols();
  if (k < 2) throw std::invalid_argument("hinge_loss: need K >= 2 classes");
  for (std::size_t label : labels) {
    if (label >= k) throw std::invalid_argument("hinge_loss: label out of range");
  }
  const double n = static_cast<double>(scores.rows());
  LossResult r;
  r.grad = Matrix(scores.rows(), scores.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const std::size_t yi = labels[i];
    const double true_score = scores(i, yi);
    for (std::size_t c = 0; c < k; ++c) {
      if (c == yi) continue;
      const double margin = 1.0 + scores(i, c) - true_score;
      if (margin > 0) {
        total += margin;
        r.grad(i, c) += 1.0 / n;
        r.grad(i, yi) -= 1.0 / n;
      }
    }
  }
  r.value = total / n;
  return r;
}

LossResult center_loss(const Matrix& psi, const std::vector<std::size_t>& labels,
                       const ClassCenters& centers) {
  if (labels.size() != psi.rows()) {
    throw std::invalid_argument("center_loss: label count != row count");
  }
  if (centers.centers.cols() != psi.cols()) {
    throw std::invalid_argument("center_loss: center dimension != psi dimension");
  }
  for (std::size_t label : labels) {
    if (label >= centers.num_classes()) {
      throw std::invalid_argument("center_loss: label " + std::to_string(label) +
                                  " has no initialized center");
    }
  }
  const double n = static_cast<double>(psi.rows());
  LossResult r;
  r.grad = Matrix(psi.rows(), psi.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < psi.rows(); ++i) {
    auto mu = centers.centers.row(labels[i]);
    auto p = psi.row(i);
    auto g = r.grad.row(i);
    for (std::size_t j = 0; j < psi.cols(); ++j) {
      const double d = mu[j] - p[j];
      total += d * d;
      g[j] = -d / n;  // (psi - mu)/N
    }
  }
  r.value = total / (2.0 * n);
  return r;
}

ClassCenters update_centers(const ClassCenters& centers, const Matrix& psi,
                            const std::vector<std::size_t>& labels, double alpha) {
  if (alpha < 0 || alpha > 1) {
    throw std::invalid_argument("update_centers: alpha must be in [0, 1]");
  }
  ClassCenters out = centers;
  const std::size_t k = centers.num_classes();
  std::vector<std::size_t> batch_counts(k, 0);
  Matrix batch_sums(k, psi.cols());
  for (std::size_t i = 0; i < psi.rows(); ++i) {
    const std::size_t c = labels[i];
    if (c >= k) throw std::invalid_argument("update_centers: label out of range");
    ++batch_counts[c];
    auto sum = batch_sums.row(c);
    auto p = psi.row(i);
    for (std::size_t j = 0; j < psi.cols(); ++j) sum[j] += p[j];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (batch_counts[c] == 0) continue;
    const double inv = 1.0 / static_cast<double>(batch_counts[c]);
    auto mu = out.centers.row(c);
    auto sum = batch_sums.row(c);
    for (std::size_t j = 0; j < psi.cols(); ++j) {
      const double batch_mean = sum[j] * inv;
      mu[j] -= alpha * (mu[j] - batch_mean);
    }
    out.counts[c] += batch_counts[c];
  }
  return out;
}

LossResult pca_cosine_loss(const Matrix& psi2, const Matrix& x_pca) {
  check_shapes(psi2, x_pca, "pca_cosine_loss");
  const double n = static_cast<double>(psi2.rows());
  LossResult r;
  r.grad = Matrix(psi2.rows(), psi2.cols());
  double total = 0.0;
  bool degenerate = false;
  for (std::size_t i = 0; i < psi2.rows(); ++i) {
    auto a = psi2.row(i);
    auto b = x_pca.row(i);
    const double na = norm2(a);
    const double nb = norm2(b);
    if (na < 1e-150 || nb < 1e-150) {
      total += 1.0;  // cosine defined as 0 for a zero-norm row
      degenerate = true;
      continue;
    }
    const double c = dot(a, b) / (na * nb);
    total += 1.0 - c;
    auto g = r.grad.row(i);
    for (std::size_t j = 0; j < psi2.cols(); ++j) {
      g[j] = (c * a[j] / (na * na) - b[j] / (na * nb)) / n;
    }
  }
  if (degenerate) {
    log::warn("pca_cosine_loss: zero-norm row treated as cosine 0");
  }
  r.value = total / n;
  return r;
}

namespace {

void check_graph(const Matrix& psi, const SimilarityGraph& graph, GraphForm expected,
                 const char* op) {
  if (graph.form != expected) {
    throw std::invalid_argument(std::string(op) + ": graph form mismatch");
  }
  if (graph.n != psi.rows()) {
    throw std::invalid_argument(std::string(op) + ": graph size != batch size");
  }
}

// Shared edge-sum core: value = c * sum_edges w * ||psi_i - psi_j||^2 and the
// exactly matching gradient.
LossResult edge_energy(const Matrix& psi, const SimilarityGraph& graph, double c) {
  LossResult r;
  r.grad = Matrix(psi.rows(), psi.cols());
  double total = 0.0;
  for (const GraphEdge& e : graph.edges) {
    auto pi = psi.row(e.i);
    auto pj = psi.row(e.j);
    auto gi = r.grad.row(e.i);
    auto gj = r.grad.row(e.j);
    double d2 = 0.0;
    for (std::size_t t = 0; t < psi.cols(); ++t) {
      const double d = pi[t] - pj[t];
      d2 += d * d;
      const double g = 2.0 * c * e.weight * d;
      gi[t] += g;
      gj[t] -= g;
    }
    total += e.weight * d2;
  }
  r.value = c * total;
  return r;
}

}  // namespace

LossResult laplacian_loss_dense(const Matrix& psi, const SimilarityGraph& graph) {
  check_graph(psi, graph, GraphForm::dense, "laplacian_loss_dense");
  const double n = static_cast<double>(graph.n);
  return edge_energy(psi, graph, 1.0 / (2.0 * n * (n - 1.0)));
}

double laplacian_loss_trace(const Matrix& psi, const SimilarityGraph& graph) {
  check_graph(psi, graph, GraphForm::dense, "laplacian_loss_trace");
  const std::size_t n = graph.n;
  Matrix gamma(n, n);
  for (const GraphEdge& e : graph.edges) gamma(e.i, e.j) = e.weight;
  Matrix laplacian(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double degree = 0.0;
    for (std::size_t j = 0; j < n; ++j) degree += gamma(i, j);
    for (std::size_t j = 0; j < n; ++j) laplacian(i, j) = -gamma(i, j);
    laplacian(i, i) += degree;
  }
  const Matrix lp = matmul(laplacian, psi);
  double trace = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) trace += psi.data()[i] * lp.data()[i];
  return trace / static_cast<double>(n);
}

LossResult laplacian_loss_sparse(const Matrix& psi, const SimilarityGraph& graph) {
  check_graph(psi, graph, GraphForm::knn, "laplacian_loss_sparse");
  if (graph.edges.empty()) {
    throw std::invalid_argument("laplacian_loss_sparse: empty edge set");
  }
  const double kb = static_cast<double>(graph.k) * static_cast<double>(graph.n);
  return edge_energy(psi, graph, 1.0 / (2.0 * kb));
}

double cosine_sim_scaled(std::span<const double> psi_i, std::span<const double> psi_j,
                         double tau) {
  if (tau <= 0) throw std::invalid_argument("cosine_sim_scaled: tau must be > 0");
  const double ni = norm2(psi_i);
  const double nj = norm2(psi_j);
  if (ni < 1e-150 || nj < 1e-150) {
    throw std::invalid_argument("cosine_sim_scaled: zero-norm row");
  }
  return dot(psi_i, psi_j) / (tau * ni * nj);
}

namespace {

// Shared contrastive core. weights(i, j) gives the numerator weight of the
// ordered pair; entries with no positive mass are skipped when `skip_empty`.
LossResult contrastive_loss(const Matrix& psi, double tau,
                            const std::function<double(std::size_t, std::size_t)>& weight,
                            bool skip_empty, const char* op) {
  const std::size_t n = psi.rows();
  const std::size_t dim = psi.cols();
  if (tau <= 0) throw std::invalid_argument(std::string(op) + ": tau must be > 0");

  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    norms[i] = norm2(psi.row(i));
    if (norms[i] < 1e-150) {
      throw std::invalid_argument(std::string(op) + ": zero-norm latent row");
    }
  }
  Matrix unit = psi;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = unit.row(i);
    for (double& v : row) v /= norms[i];
  }

  // Cosine similarities scaled by tau.
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double c = dot(unit.row(i), unit.row(j)) / tau;
      s(i, j) = c;
      s(j, i) = c;
    }
  }

  LossResult r;
  r.grad = Matrix(n, dim);
  Matrix g_s(n, n);  // dL/ds_ij treating entries independently
  double total = 0.0;
  bool skipped = false;
  const double inv_n = 1.0 / static_cast<double>(n);

  for (std::size_t i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
      if (k != i) mx = std::max(mx, s(i, k));
    }
    if (!std::isfinite(mx)) {
      skipped = true;  // N == 1: no partners at all
      continue;
    }
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      const double e = std::exp(s(i, k) - mx);
      den += e;
      num += weight(i, k) * e;
    }
    if (num <= 0.0) {
      if (skip_empty) {
        skipped = true;
        continue;
      }
      num = kProbFloor * den;
    }
    const double ratio = std::max(num / den, kProbFloor);
    total -= std::log(ratio);
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      const double e = std::exp(s(i, k) - mx);
      g_s(i, k) = -inv_n * (weight(i, k) * e / num - e / den);
    }
  }
  if (skipped) {
    log::warn(std::string(op) + ": observation(s) without a positive partner skipped");
  }
  r.value = total * inv_n;

  // Chain rule through the normalized cosines: s_ij = (u_i . u_j) / tau.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double g = g_s(i, j);
      if (g == 0.0) continue;
      const double c = s(i, j) * tau;
      auto ui = unit.row(i);
      auto uj = unit.row(j);
      auto gi = r.grad.row(i);
      auto gj = r.grad.row(j);
      const double scale_i = g / (tau * norms[i]);
      const double scale_j = g / (tau * norms[j]);
      for (std::size_t t = 0; t < dim; ++t) {
        gi[t] += scale_i * (uj[t] - c * ui[t]);
        gj[t] += scale_j * (ui[t] - c * uj[t]);
      }
    }
  }
  return r;
}

}  // namespace

LossResult info_nce_loss(const Matrix& psi, const std::vector<std::size_t>& labels,
                         double tau) {
  if (labels.size() != psi.rows()) {
    throw std::invalid_argument("info_nce_loss: label count != row count");
  }
  return contrastive_loss(
      psi, tau,
      [&](std::size_t i, std::size_t j) { return labels[i] == labels[j] ? 1.0 : 0.0; },
      /*skip_empty=*/true, "info_nce_loss");
}

LossResult r_nce_loss(const Matrix& psi, const Matrix& y, double sigma, double tau) {
  if (psi.rows() < 2) throw std::invalid_argument("r_nce_loss: need N >= 2");
  if (y.rows() != psi.rows()) {
    throw std::invalid_argument("r_nce_loss: target count != row count");
  }
  if (sigma <= 0) throw std::invalid_argument("r_nce_loss: sigma must be > 0");
  return contrastive_loss(
      psi, tau,
      [&](std::size_t i, std::size_t j) {
        return similarity_kernel(y.row(i), y.row(j), sigma);
      },
      /*skip_empty=*/false, "r_nce_loss");
}

}  // namespace veil::losses
