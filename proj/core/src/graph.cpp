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

#include "veil/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "veil/log.hpp"
#include "veil/stats.hpp"

namespace veil::losses {

std::string sym_mode_name(SymMode m) {
  switch (m) {
    case SymMode::directed: return "directed";
    case SymMode::union_mode: return "union";
    case SymMode::mutual: return "mutual";
  }
  return "directed";
}

SymMode sym_mode_from_name(const std::string& name) {
  if (name == "directed") return SymMode::directed;
  if (name == "union") return SymMode::union_mode;
  if (name == "mutual") return SymMode::mutual;
  throw std::invalid_argument("unknown symmetrization mode: " + name);
}

double similarity_kernel(std::span<const double> y_i, std::span<const double> y_j,
                         double sigma) {
  if (sigma <= 0.0) throw std::invalid_argument("similarity_kernel: sigma must be > 0");
  return std::exp(-squared_distance(y_i, y_j) / (sigma * sigma));
}

SigmaAutoResult sigma_auto(const Matrix& y) {
  if (y.rows() < 4) throw std::invalid_argument("sigma_auto: need N >= 4");
  // Standardize each target column by its own mean and standard deviation,
  // then take the IQR over all standardized entries.
  std::vector<double> standardized;
  standardized.reserve(y.size());
  for (std::size_t c = 0; c < y.cols(); ++c) {
    std::vector<double> col(y.rows());
    for (std::size_t i = 0; i < y.rows(); ++i) col[i] = y(i, c);
    const double m = stats::mean(col);
    const double sd = stats::stddev(col);
    for (double v : col) standardized.push_back(sd > 1e-12 ? (v - m) / sd : 0.0);
  }
  std::sort(standardized.begin(), standardized.end());
  const double iqr = stats::quantile_sorted(standardized, 0.75) -
                     stats::quantile_sorted(standardized, 0.25);
  const double sigma = 0.5 * iqr;
  if (sigma <= 1e-12) {
    log::warn("sigma_auto: degenerate target spread, falling back to sigma = 1");
    return {1.0, true};
  }
  return {sigma, false};
}

SimilarityGraph build_dense_graph(const Matrix& y, double sigma) {
  if (y.rows() < 2) throw std::invalid_argument("build_dense_graph: need N >= 2");
  SimilarityGraph g;
  g.n = y.rows();
  g.form = GraphForm::dense;
  g.edges.reserve(g.n * (g.n - 1));
  for (std::uint32_t i = 0; i < g.n; ++i) {
    for (std::uint32_t j = 0; j < g.n; ++j) {
      if (i == j) continue;
      g.edges.push_back({i, j, similarity_kernel(y.row(i), y.row(j), sigma)});
    }
  }
  return g;
}

namespace {

struct Candidate {
  double dist2;
  std::uint32_t index;
  bool operator<(const Candidate& other) const {
    if (dist2 != other.dist2) return dist2 < other.dist2;
    return index < other.index;
  }
};

// Neighbor lists for scalar targets: one sort, then a widening window per row.
std::vector<std::vector<std::uint32_t>> knn_scalar(const Matrix& y, std::size_t k) {
  const std::size_t n = y.rows();
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (y(a, 0) != y(b, 0)) return y(a, 0) < y(b, 0);
    return a < b;
  });

  std::vector<std::vector<std::uint32_t>> neighbors(n);
  for (std::size_t p = 0; p < n; ++p) {
    const std::uint32_t self = order[p];
    const double yv = y(self, 0);
    std::vector<Candidate> cand;
    cand.reserve(2 * k + 2);
    std::ptrdiff_t l = static_cast<std::ptrdiff_t>(p) - 1;
    std::size_t r = p + 1;
    auto side_dist = [&](std::size_t q) {
      const double d = y(order[q], 0) - yv;
      return d * d;
    };
    // Candidates arrive in non-decreasing distance; after k of them, keep
    // pulling only exact ties of the k-th distance so index tie-breaks stay
    // faithful to the exhaustive rule.
    while (l >= 0 || r < n) {
      double dl = l >= 0 ? side_dist(static_cast<std::size_t>(l)) : std::numeric_limits<double>::infinity();
      double dr = r < n ? side_dist(r) : std::numeric_limits<double>::infinity();
      const bool take_left = dl <= dr;
      const double d = take_left ? dl : dr;
      if (cand.size() >= k && d > cand[k - 1].dist2) break;
      if (take_left) {
        cand.push_back({d, order[static_cast<std::size_t>(l)]});
        --l;
      } else {
        cand.push_back({d, order[r]});
        ++r;
      }
      if (cand.size() >= k) {
        std::sort(cand.begin(), cand.end());
      }
    }
    std::sort(cand.begin(), cand.end());
    const std::size_t take = std::min(k, cand.size());
    neighbors[self].reserve(take);
    for (std::size_t t = 0; t < take; ++t) neighbors[self].push_back(cand[t].index);
  }
  return neighbors;
}

// Exhaustive pairwise search for vector targets.
std::vector<std::vector<std::uint32_t>> knn_vector(const Matrix& y, std::size_t k) {
  const std::size_t n = y.rows();
  std::vector<std::vector<std::uint32_t>> neighbors(n);
  std::vector<Candidate> cand;
  cand.reserve(n - 1);
  for (std::uint32_t i = 0; i < n; ++i) {
    cand.clear();
    for (std::uint32_t j = 0; j < n; ++j) {
      if (j == i) continue;
      cand.push_back({squared_distance(y.row(i), y.row(j)), j});
    }
    std::sort(cand.begin(), cand.end());
    neighbors[i].reserve(k);
    for (std::size_t t = 0; t < k; ++t) neighbors[i].push_back(cand[t].index);
  }
  return neighbors;
}

}  // namespace

SimilarityGraph build_knn_graph(const Matrix& y, double sigma, std::size_t k,
                                SymMode sym_mode) {
  const std::size_t n = y.rows();
  if (n < 2) throw std::invalid_argument("build_knn_graph: need N >= 2");
  if (k < 1 || k > n - 1) {
    throw std::invalid_argument("build_knn_graph: k must satisfy 1 <= k <= N-1");
  }

  const auto neighbors = y.cols() == 1 ? knn_scalar(y, k) : knn_vector(y, k);

  SimilarityGraph g;
  g.n = n;
  g.form = GraphForm::knn;
  g.sym_mode = sym_mode;
  g.k = k;

  auto weight = [&](std::uint32_t i, std::uint32_t j) {
    return similarity_kernel(y.row(i), y.row(j), sigma);
  };

  if (sym_mode == SymMode::directed) {
    for (std::uint32_t i = 0; i < n; ++i) {
      for (std::uint32_t j : neighbors[i]) g.edges.push_back({i, j, weight(i, j)});
    }
    return g;
  }

  std::set<std::pair<std::uint32_t, std::uint32_t>> out_edges;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j : neighbors[i]) out_edges.insert({i, j});
  }
  std::set<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (const auto& [i, j] : out_edges) {
    const auto lo = std::min(i, j), hi = std::max(i, j);
    const bool reverse_present = out_edges.count({j, i}) > 0;
    if (sym_mode == SymMode::union_mode || reverse_present) {
      pairs.insert({lo, hi});
    }
  }
  if (sym_mode == SymMode::mutual && pairs.empty()) {
    throw std::runtime_error(
        "build_knn_graph: mutual symmetrization produced an empty edge set; "
        "increase k (mutual graphs can be too sparse, or even empty)");
  }
  for (const auto& [lo, hi] : pairs) {
    const double w = weight(lo, hi);
    g.edges.push_back({lo, hi, w});
    g.edges.push_back({hi, lo, w});
  }
  return g;
}

}  // namespace veil::losses
