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

#ifndef VEIL_GRAD_CHECK_HPP_
#define VEIL_GRAD_CHECK_HPP_

#include <functional>

#include "veil/matrix.hpp"

namespace veil {

/// Central differences (f(x + h e_ij) - f(x - h e_ij)) / (2h) entrywise.
/// The oracle against which every analytic gradient is checked.
Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f,
                        const Matrix& x, double h = 1e-5);

/// max over entries of |a - g| / max(|a|, |g|, floor); the relative error
/// measure used by the gradient suite.
double gradient_rel_error(const Matrix& analytic, const Matrix& numeric,
                          double abs_floor = 1e-7);

}  // namespace veil

#endif  // VEIL_GRAD_CHECK_HPP_
