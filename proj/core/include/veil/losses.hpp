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

#ifndef VEIL_LOSSES_HPP_
#define VEIL_LOSSES_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include "veil/graph.hpp"
#include "veil/matrix.hpp"

namespace veil::losses {

/// Scalar objective value plus its gradient with respect to the op's
/// differentiable argument.
struct LossResult {
  double value = 0.0;
  Matrix grad;
};

/// The four objective coefficients plus per-loss hyperparameters.
struct LossWeights {
  double lambda_recon = 0.0;
  double lambda_repr = 1.0;
  double lambda_pred = 1.0;
  double lambda_reg = 0.1;
  double sigma = 1.0;   // kernel bandwidth
  double tau = 0.5;     // contrastive temperature
  double delta = 1.0;   // Huber knee
  std::size_t k = 5;    // k-NN neighbors
  SymMode sym_mode = SymMode::union_mode;

  /// Throws listing every violated constraint. `allow_plain_autoencoder`
  /// admits the reconstruction-only baseline (all task weights zero).
  void validate(bool allow_plain_autoencoder = false) const;
};

/// Per-class latent centers, one row per class label.
struct ClassCenters {
  Matrix centers;                    // K x dim(psi)
  std::vector<std::size_t> counts;   // observations absorbed per class

  std::size_t num_classes() const { return centers.rows(); }
};

/// Mean squared error with the 1/(2N) normalization; gradient wrt x_hat.
LossResult ols_loss(const Matrix& x, const Matrix& x_hat);

/// Mean L1 error; subgradient 0 at exact ties.
LossResult mae_loss(const Matrix& y, const Matrix& y_hat);

/// Mean Huber value, quadratic inside |r| < delta and linear outside; the
/// gradient is continuous at the knee.
LossResult huber_loss(const Matrix& y, const Matrix& y_hat, double delta);

/// Multiclass cross-entropy of given probabilities. The returned gradient is
/// with respect to the LOGITS via the softmax composition: (p - onehot)/N.
/// Probabilities at the true class are clamped at 1e-12 with a warning.
LossResult cross_entropy_loss(const std::vector<std::size_t>& labels, const Matrix& probs);

/// Multiclass margin loss over raw scores.
LossResult hinge_loss(const Matrix& scores, const std::vector<std::size_t>& labels);

/// Squared distance to the class centers; centers are constants here.
LossResult center_loss(const Matrix& psi, const std::vector<std::size_t>& labels,
                       const ClassCenters& centers);

/// Damped batch-mean update: mu_c <- mu_c - alpha * mean_c(mu_c - psi_i);
/// classes absent from the batch are unchanged.
ClassCenters update_centers(const ClassCenters& centers, const Matrix& psi,
                            const std::vector<std::size_t>& labels, double alpha);

/// Mean (1 - cosine) between projected rows and the 2-D PCA targets. A
/// zero-norm row contributes 1 (cosine treated as 0) and a zero gradient.
LossResult pca_cosine_loss(const Matrix& psi2, const Matrix& x_pca);

/// Dirichlet energy over a dense graph, normalization 1/(2N(N-1)). The
/// gradient is exactly the derivative of this sum (each unordered pair
/// appears twice), finite-difference verified.
LossResult laplacian_loss_dense(const Matrix& psi, const SimilarityGraph& graph);

/// Trace form (1/N) tr(Psi^T L Psi) with L = D - Gamma. Equals the pairwise
/// sum at its own 1/(2N) normalization, i.e. (N-1) times the dense loss.
double laplacian_loss_trace(const Matrix& psi, const SimilarityGraph& graph);

/// Sparsified Dirichlet energy, normalization 1/(2kB), summed over the stored
/// ordered edges; gradients flow to both endpoints of every edge.
LossResult laplacian_loss_sparse(const Matrix& psi, const SimilarityGraph& graph);

/// Temperature-scaled cosine similarity of two latent rows.
double cosine_sim_scaled(std::span<const double> psi_i, std::span<const double> psi_j,
                         double tau);

/// Softmax classifier over same-class neighbors. Observations without a
/// positive partner are skipped with a warning.
LossResult info_nce_loss(const Matrix& psi, const std::vector<std::size_t>& labels,
                         double tau);

/// Target-aware contrastive loss: kernel weights replace the same-class
/// indicator. Always >= 0 since every gamma <= 1.
LossResult r_nce_loss(const Matrix& psi, const Matrix& y, double sigma, double tau);

}  // namespace veil::losses

#endif  // VEIL_LOSSES_HPP_
