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

#include "veil/grad_check.hpp"

#include <cmath>
#include <stdexcept>

namespace veil {

Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f,
                        const Matrix& x, double h) {
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double original = probe.data()[i];
    probe.data()[i] = original + h;
    const double plus = f(probe);
    probe.data()[i] = original - h;
    const double minus = f(probe);
    probe.data()[i] = original;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw std::runtime_error("finite_diff_grad: non-finite function value");
    }
    grad.data()[i] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

double gradient_rel_error(const Matrix& analytic, const Matrix& numeric,
                          double abs_floor) {
  if (!analytic.same_shape(numeric)) {
    throw std::invalid_argument("gradient_rel_error: shape mismatch");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double a = analytic.data()[i];
    const double g = numeric.data()[i];
    const double denom = std::max({std::abs(a), std::abs(g), abs_floor});
    worst = std::max(worst, std::abs(a - g) / denom);
  }
  return worst;
}

}  // namespace veil
