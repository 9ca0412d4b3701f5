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

#ifndef VEIL_GRAPH_HPP_
#define VEIL_GRAPH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "veil/matrix.hpp"

namespace veil::losses {

enum class GraphForm { dense, knn };
enum class SymMode { directed, union_mode, mutual };

std::string sym_mode_name(SymMode m);
SymMode sym_mode_from_name(const std::string& name);

struct GraphEdge {
  std::uint32_t i;
  std::uint32_t j;
  double weight;  // gamma_ij in (0, 1]
};

/// Similarity graph over a mini-batch. Edges are stored as ordered pairs:
/// the dense form holds all n(n-1) of them; a directed k-NN graph holds the k
/// out-edges per node; union/mutual symmetrization stores both directions of
/// every kept undirected edge.
struct SimilarityGraph {
  std::size_t n = 0;
  GraphForm form = GraphForm::dense;
  SymMode sym_mode = SymMode::directed;
  std::size_t k = 0;  // knn form only
  std::vector<GraphEdge> edges;
};

/// Edge weight exp(-||y_i - y_j||^2 / sigma^2).
double similarity_kernel(std::span<const double> y_i, std::span<const double> y_j,
                         double sigma);

/// Half the interquartile range of the standardized targets. Falls back to 1
/// (with sets_fallback = true) when the targets are effectively constant.
struct SigmaAutoResult {
  double sigma;
  bool used_fallback;
};
SigmaAutoResult sigma_auto(const Matrix& y);

/// All ordered pairs weighted by the kernel. Requires N >= 2.
SimilarityGraph build_dense_graph(const Matrix& y, double sigma);

/// k nearest target neighbors per node with the selected symmetrization.
/// Scalar targets use a single sort plus a per-row window; vector targets use
/// exhaustive pairwise search. Distance ties break toward the smaller index.
/// Throws when mutual mode yields an empty edge set.
SimilarityGraph build_knn_graph(const Matrix& y, double sigma, std::size_t k,
                                SymMode sym_mode);

}  // namespace veil::losses

#endif  // VEIL_GRAPH_HPP_
