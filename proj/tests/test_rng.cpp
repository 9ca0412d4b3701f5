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

#include "doctest.h"
#include "veil/rng.hpp"

TEST_CASE("seed 42 reproduces the first 1000 draws") {
  veil::Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  veil::Rng c(42), d(42);
  for (int i = 0; i < 1000; ++i) {
    CHECK(c.uniform() == d.uniform());
  }
}

TEST_CASE("different seeds diverge") {
  veil::Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 64; ++i) {
    if (a.next_u64() == b.next_u64()) ++same;
  }
  CHECK(same == 0);
}

TEST_CASE("uniform stays in [0, 1)") {
  veil::Rng rng(9);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal moments are sane") {
  veil::Rng rng(11);
  const int n = 50000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.03);
}

TEST_CASE("index respects bounds and permutation is a bijection") {
  veil::Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    CHECK(rng.index(7) < 7);
  }
  const auto perm = rng.permutation(50);
  std::vector<bool> seen(50, false);
  for (std::size_t p : perm) {
    CHECK(p < 50);
    CHECK(!seen[p]);
    seen[p] = true;
  }
}

TEST_CASE("fill_bytes is deterministic per seed") {
  veil::Rng a(123), b(123);
  std::uint8_t ba[16], bb[16];
  a.fill_bytes(ba, 16);
  b.fill_bytes(bb, 16);
  for (int i = 0; i < 16; ++i) CHECK(ba[i] == bb[i]);
}
