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

#ifndef VEIL_PCA_HPP_
#define VEIL_PCA_HPP_

#include <cstddef>
#include <vector>

#include "veil/matrix.hpp"

namespace veil {

/// Principal directions of column-centered data. Component rows are
/// orthonormal; the first nonzero coordinate of each row is positive.
struct PcaModel {
  std::vector<double> mean;                     // D
  Matrix components;                            // q x D
  std::vector<double> explained_variance_ratio; // q entries, non-increasing

  /// Projects rows of x (centered by the stored mean) onto the first
  /// n_components rows; n_components = 0 means all.
  Matrix transform(const Matrix& x, std::size_t n_components = 0) const;
  /// Maps scores back to the original space (adds the mean back).
  Matrix inverse_transform(const Matrix& scores) const;
};

/// Top-q principal directions by descending eigenvalue. Requires N >= 2 and
/// q <= min(N, D). Beyond the data rank the remaining rows are an orthonormal
/// completion with zero variance ratio.
PcaModel pca_fit(const Matrix& x, std::size_t q);

/// Smallest q whose cumulative explained variance reaches `threshold`
/// (0 < threshold <= 1). Requires N >= 2.
std::size_t effective_dimensionality(const Matrix& x, double threshold);

/// Full eigendecomposition of a symmetric matrix (Householder
/// tridiagonalization + implicit-shift QL). Eigenvalues ascending; the k-th
/// column of `vectors` is the k-th eigenvector.
struct SymmetricEigen {
  std::vector<double> values;
  Matrix vectors;
};
SymmetricEigen symmetric_eigen(const Matrix& a);

}  // namespace veil

#endif  // VEIL_PCA_HPP_
