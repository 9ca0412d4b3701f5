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

#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "veil/graph.hpp"
#include "veil/rng.hpp"

using namespace veil;
using namespace veil::losses;

namespace {

std::set<std::pair<unsigned, unsigned>> ordered_pairs(const SimilarityGraph& g) {
  std::set<std::pair<unsigned, unsigned>> s;
  for (const auto& e : g.edges) s.insert({e.i, e.j});
  return s;
}

}  // namespace

TEST_CASE("similarity kernel endpoints") {
  const std::vector<double> a{1.0, 2.0};
  CHECK(similarity_kernel(a, a, 0.5) == 1.0);
  const std::vector<double> b{1.0, 2.0 + 0.7};  // distance = sigma
  CHECK(similarity_kernel(a, b, 0.7) == doctest::Approx(std::exp(-1.0)));
  // monotone decreasing in distance
  double prev = 2.0;
  for (double gap = 0.1; gap < 3.0; gap += 0.3) {
    const std::vector<double> c{1.0, 2.0 + gap};
    const double w = similarity_kernel(a, c, 0.7);
    CHECK(w < prev);
    CHECK(w > 0.0);
    CHECK(w <= 1.0);
    prev = w;
  }
}

TEST_CASE("sigma_auto on a standard normal sample") {
  Rng rng(40);
  Matrix y(100000, 1);
  for (double& v : y.data()) v = rng.normal();
  const auto res = sigma_auto(y);
  CHECK(!res.used_fallback);
  // Half the IQR of a standard normal: 1.349/2.
  CHECK(std::abs(res.sigma - 0.6745) < 0.05);
}

TEST_CASE("sigma_auto falls back for constant targets") {
  const Matrix y(8, 1, 3.25);
  const auto res = sigma_auto(y);
  CHECK(res.used_fallback);
  CHECK(res.sigma == 1.0);
}

TEST_CASE("sigma_auto ignores affine shifts") {
  Rng rng(41);
  Matrix y(5000, 1);
  for (double& v : y.data()) v = rng.normal(2.0, 3.0);
  Matrix shifted = y;
  for (double& v : shifted.data()) v += 100.0;
  const double s1 = sigma_auto(y).sigma;
  const double s2 = sigma_auto(shifted).sigma;
  CHECK(s1 == doctest::Approx(s2).epsilon(1e-12));
}

TEST_CASE("dense graph shape") {
  Rng rng(42);
  Matrix y(2, 1);
  y(0, 0) = 1.0;
  y(1, 0) = 2.0;
  CHECK(build_dense_graph(y, 1.0).edges.size() == 2);

  const Matrix y_same(5, 1, 4.0);
  const auto g = build_dense_graph(y_same, 1.0);
  CHECK(g.edges.size() == 5 * 4);
  for (const auto& e : g.edges) CHECK(e.weight == 1.0);

  Matrix y_rand(9, 1);
  for (double& v : y_rand.data()) v = rng.normal();
  CHECK(build_dense_graph(y_rand, 1.0).edges.size() == 9 * 8);
}

TEST_CASE("knn graph hand case y = (0, 1, 10), k = 1") {
  Matrix y(3, 1);
  y(0, 0) = 0.0;
  y(1, 0) = 1.0;
  y(2, 0) = 10.0;

  const auto directed = build_knn_graph(y, 1.0, 1, SymMode::directed);
  CHECK(ordered_pairs(directed) ==
        std::set<std::pair<unsigned, unsigned>>{{0, 1}, {1, 0}, {2, 1}});

  const auto mutual = build_knn_graph(y, 1.0, 1, SymMode::mutual);
  CHECK(ordered_pairs(mutual) ==
        std::set<std::pair<unsigned, unsigned>>{{0, 1}, {1, 0}});

  const auto unioned = build_knn_graph(y, 1.0, 1, SymMode::union_mode);
  CHECK(ordered_pairs(unioned) ==
        std::set<std::pair<unsigned, unsigned>>{{0, 1}, {1, 0}, {1, 2}, {2, 1}});
}

TEST_CASE("k = N-1 collapses all modes onto the dense support") {
  Rng rng(43);
  Matrix y(7, 1);
  for (double& v : y.data()) v = rng.normal();
  const auto dense_support = ordered_pairs(build_dense_graph(y, 1.0));
  for (SymMode mode : {SymMode::directed, SymMode::union_mode, SymMode::mutual}) {
    CHECK(ordered_pairs(build_knn_graph(y, 1.0, 6, mode)) == dense_support);
  }
}

TEST_CASE("mutual edges are a subset of union edges; counts bounded") {
  Rng rng(44);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 4 + rng.index(20);
    const std::size_t k = 1 + rng.index(3);
    Matrix y(n, 1);
    for (double& v : y.data()) v = rng.normal();
    const auto unioned = build_knn_graph(y, 1.0, k, SymMode::union_mode);
    const auto directed = build_knn_graph(y, 1.0, k, SymMode::directed);
    const auto union_set = ordered_pairs(unioned);
    CHECK(directed.edges.size() == k * n);
    CHECK(unioned.edges.size() <= 2 * k * n);
    SimilarityGraph mutual;
    CHECK_NOTHROW(mutual = build_knn_graph(y, 1.0, k, SymMode::mutual));
    CHECK(mutual.edges.size() <= unioned.edges.size());
    for (const auto& pair : ordered_pairs(mutual)) {
      CHECK(union_set.count(pair) == 1);
    }
    for (const auto& e : unioned.edges) {
      CHECK(e.weight > 0.0);
      CHECK(e.weight <= 1.0);
    }
  }
}

TEST_CASE("knn scalar window matches exhaustive search with ties") {
  Rng rng(45);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 5 + rng.index(30);
    const std::size_t k = 1 + rng.index(4);
    Matrix y(n, 1);
    for (double& v : y.data()) v = rng.index(6);  // heavy ties on purpose
    const auto fast = build_knn_graph(y, 1.0, k, SymMode::directed);

    // Exhaustive oracle with identical tie rules.
    Matrix y2(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
      y2(i, 0) = y(i, 0);
      y2(i, 1) = 0.0;
    }
    const auto slow = build_knn_graph(y2, 1.0, k, SymMode::directed);
    CHECK(ordered_pairs(fast) == ordered_pairs(slow));
  }
}

TEST_CASE("knn rejects bad k") {
  Matrix y(3, 1);
  CHECK_THROWS_AS(build_knn_graph(y, 1.0, 0, SymMode::directed), std::invalid_argument);
  CHECK_THROWS_AS(build_knn_graph(y, 1.0, 3, SymMode::directed), std::invalid_argument);
}
