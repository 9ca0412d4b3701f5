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

#include "veil/pca.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "veil/rng.hpp"

namespace veil {

namespace {

// Largest covariance size handled by the direct eigendecomposition; above
// this the deflated power method avoids the O(D^3) factorization.
constexpr std::size_t kDirectEigenMaxDim = 2048;

// Householder reduction of a symmetric matrix to tridiagonal form with
// accumulated transforms (EISPACK tred2).
void tred2(Matrix& v, std::vector<double>& d, std::vector<double>& e) {
  const std::size_t n = v.rows();
  for (std::size_t j = 0; j < n; ++j) d[j] = v(n - 1, j);

  for (std::size_t i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (std::size_t k = 0; k < i; ++k) scale += std::abs(d[k]);
    if (scale == 0.0) {
      e[i] = d[i - 1];
      for (std::size_t j = 0; j < i; ++j) {
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
        v(j, i) = 0.0;
      }
    } else {
      for (std::size_t k = 0; k < i; ++k) {
        d[k] /= scale;
        h += d[k] * d[k];
      }
      double f = d[i - 1];
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e[i] = scale * g;
      h -= f * g;
      d[i - 1] = f - g;
      for (std::size_t j = 0; j < i; ++j) e[j] = 0.0;

      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        v(j, i) = f;
        g = e[j] + v(j, j) * f;
        for (std::size_t k = j + 1; k <= i - 1; ++k) {
          g += v(k, j) * d[k];
          e[k] += v(k, j) * f;
        }
        e[j] = g;
      }
      f = 0.0;
      for (std::size_t j = 0; j < i; ++j) {
        e[j] /= h;
        f += e[j] * d[j];
      }
      const double hh = f / (h + h);
      for (std::size_t j = 0; j < i; ++j) e[j] -= hh * d[j];
      for (std::size_t j = 0; j < i; ++j) {
        f = d[j];
        g = e[j];
        for (std::size_t k = j; k <= i - 1; ++k) {
          v(k, j) -= (f * e[k] + g * d[k]);
        }
        d[j] = v(i - 1, j);
        v(i, j) = 0.0;
      }
    }
    d[i] = h;
  }

  for (std::size_t i = 0; i + 1 < n; ++i) {
    v(n - 1, i) = v(i, i);
    v(i, i) = 1.0;
    const double h = d[i + 1];
    if (h != 0.0) {
      for (std::size_t k = 0; k <= i; ++k) d[k] = v(k, i + 1) / h;
      for (std::size_t j = 0; j <= i; ++j) {
        double g = 0.0;
        for (std::size_t k = 0; k <= i; ++k) g += v(k, i + 1) * v(k, j);
        for (std::size_t k = 0; k <= i; ++k) v(k, j) -= g * d[k];
      }
    }
    for (std::size_t k = 0; k <= i; ++k) v(k, i + 1) = 0.0;
  }
  for (std::size_t j = 0; j < n; ++j) {
    d[j] = v(n - 1, j);
    v(n - 1, j) = 0.0;
  }
  v(n - 1, n - 1) = 1.0;
  e[0] = 0.0;
}

// Implicit-shift QL on the tridiagonal form (EISPACK tql2). Eigenvalues come
// out ascending, eigenvectors as columns of v.
void tql2(Matrix& v, std::vector<double>& d, std::vector<double>& e) {
  const std::size_t n = v.rows();
  for (std::size_t i = 1; i < n; ++i) e[i - 1] = e[i];
  e[n - 1] = 0.0;

  double f = 0.0;
  double tst1 = 0.0;
  const double eps = std::pow(2.0, -52.0);
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n) {
      if (std::abs(e[m]) <= eps * tst1) break;
      ++m;
    }
    if (m > l) {
      int iter = 0;
      do {
        ++iter;
        if (iter > 50) {
          throw std::runtime_error("symmetric_eigen: QL failed to converge");
        }
        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        f += h;

        p = d[m];
        double c = 1.0;
        double c2 = c;
        double c3 = c;
        const double el1 = e[l + 1];
        double s = 0.0;
        double s2 = 0.0;
        for (std::size_t i = m - 1; i + 1 > l; --i) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[i];
          h = c * p;
          r = std::hypot(p, e[i]);
          e[i + 1] = s * r;
          s = e[i] / r;
          c = p / r;
          p = c * d[i] - s * g;
          d[i + 1] = h + s * (c * g + s * d[i]);
          for (std::size_t k = 0; k < n; ++k) {
            h = v(k, i + 1);
            v(k, i + 1) = s * v(k, i) + c * h;
            v(k, i) = c * v(k, i) - s * h;
          }
        }
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += f;
    e[l] = 0.0;
  }

  // Sort eigenpairs ascending.
  for (std::size_t i = 0; i + 1 < n; ++i) {
    std::size_t k = i;
    double p = d[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      if (d[j] < p) {
        k = j;
        p = d[j];
      }
    }
    if (k != i) {
      d[k] = d[i];
      d[i] = p;
      for (std::size_t j = 0; j < n; ++j) std::swap(v(j, i), v(j, k));
    }
  }
}

Matrix centered(const Matrix& x, const std::vector<double>& mean) {
  Matrix c = x;
  for (std::size_t i = 0; i < c.rows(); ++i) {
    for (std::size_t j = 0; j < c.cols(); ++j) c(i, j) -= mean[j];
  }
  return c;
}

double total_variance(const Matrix& xc) {
  // Trace of the covariance; denominator N-1.
  double total = 0.0;
  for (double v : xc.data()) total += v * v;
  return total / static_cast<double>(xc.rows() - 1);
}

void apply_sign_convention(Matrix& components) {
  for (std::size_t r = 0; r < components.rows(); ++r) {
    auto row = components.row(r);
    for (double v : row) {
      if (std::abs(v) > 1e-12) {
        if (v < 0) {
          for (double& w : row) w = -w;
        }
        break;
      }
    }
  }
}

// Orthonormal rows completing `found` (q_have rows of dimension d) up to
// q_want rows, built from coordinate vectors by Gram-Schmidt.
void complete_basis(Matrix& found, std::size_t q_have, std::size_t q_want) {
  const std::size_t d = found.cols();
  std::size_t next_axis = 0;
  for (std::size_t r = q_have; r < q_want; ++r) {
    bool placed = false;
    while (next_axis < d && !placed) {
      std::vector<double> cand(d, 0.0);
      cand[next_axis++] = 1.0;
      for (std::size_t p = 0; p < r; ++p) {
        const double proj = dot(found.row(p), cand);
        auto prow = found.row(p);
        for (std::size_t j = 0; j < d; ++j) cand[j] -= proj * prow[j];
      }
      const double nrm = norm2(cand);
      if (nrm > 1e-8) {
        for (std::size_t j = 0; j < d; ++j) found(r, j) = cand[j] / nrm;
        placed = true;
      }
    }
    if (!placed) {
      throw std::runtime_error("pca_fit: could not complete orthonormal basis");
    }
  }
}

struct PowerResult {
  std::vector<double> eigenvalues;
  Matrix components;  // rows
};

// Deflated power iteration on the implicit covariance Xc^T Xc / (N-1).
PowerResult power_method_spectrum(const Matrix& xc, std::size_t q, double total_var) {
  const std::size_t d = xc.cols();
  const std::size_t n = xc.rows();
  constexpr double kTol = 1e-10;
  constexpr int kMaxIter = 1000;
  PowerResult out;
  out.components = Matrix(q, d);
  out.eigenvalues.assign(q, 0.0);
  Rng rng(0x7065636155ULL);

  std::size_t r = 0;
  for (; r < q; ++r) {
    std::vector<double> v(d);
    for (double& e : v) e = rng.normal();
    auto orthogonalize = [&](std::vector<double>& w) {
      for (std::size_t p = 0; p < r; ++p) {
        const double proj = dot(out.components.row(p), std::span<const double>(w));
        auto prow = out.components.row(p);
        for (std::size_t j = 0; j < d; ++j) w[j] -= proj * prow[j];
      }
    };
    orthogonalize(v);
    double nrm = norm2(v);
    if (nrm == 0.0) break;
    for (double& e : v) e /= nrm;

    double lambda = 0.0;
    for (int iter = 0; iter < kMaxIter; ++iter) {
      // w = Xc^T (Xc v) / (N-1)
      std::vector<double> t(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) t[i] = dot(xc.row(i), std::span<const double>(v));
      std::vector<double> w(d, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        auto row = xc.row(i);
        const double ti = t[i];
        for (std::size_t j = 0; j < d; ++j) w[j] += ti * row[j];
      }
      for (double& e : w) e /= static_cast<double>(n - 1);
      orthogonalize(w);
      lambda = norm2(w);
      if (lambda <= 1e-14 * std::max(total_var, 1.0)) {
        lambda = 0.0;
        break;
      }
      double delta = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double next = w[j] / lambda;
        delta = std::max(delta, std::abs(next - v[j]));
        v[j] = next;
      }
      if (delta < kTol) break;
    }
    if (lambda == 0.0) break;
    out.eigenvalues[r] = lambda;
    for (std::size_t j = 0; j < d; ++j) out.components(r, j) = v[j];
  }
  complete_basis(out.components, r, q);
  return out;
}

}  // namespace

Matrix PcaModel::transform(const Matrix& x, std::size_t n_components) const {
  const std::size_t q = n_components == 0 ? components.rows()
                                          : std::min(n_components, components.rows());
  if (x.cols() != mean.size()) {
    throw std::invalid_argument("PcaModel::transform: dimension mismatch");
  }
  Matrix scores(x.rows(), q);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t c = 0; c < q; ++c) {
      double s = 0.0;
      auto comp = components.row(c);
      auto row = x.row(i);
      for (std::size_t j = 0; j < x.cols(); ++j) s += (row[j] - mean[j]) * comp[j];
      scores(i, c) = s;
    }
  }
  return scores;
}

Matrix PcaModel::inverse_transform(const Matrix& scores) const {
  if (scores.cols() > components.rows()) {
    throw std::invalid_argument("PcaModel::inverse_transform: too many score columns");
  }
  Matrix x(scores.rows(), components.cols());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    for (std::size_t c = 0; c < scores.cols(); ++c) {
      const double s = scores(i, c);
      auto comp = components.row(c);
      auto row = x.row(i);
      for (std::size_t j = 0; j < components.cols(); ++j) row[j] += s * comp[j];
    }
    auto row = x.row(i);
    for (std::size_t j = 0; j < components.cols(); ++j) row[j] += mean[j];
  }
  return x;
}

SymmetricEigen symmetric_eigen(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw std::invalid_argument("symmetric_eigen: matrix must be square");
  }
  SymmetricEigen result;
  result.vectors = a;
  result.values.assign(a.rows(), 0.0);
  std::vector<double> e(a.rows(), 0.0);
  if (a.rows() == 1) {
    result.values[0] = a(0, 0);
    result.vectors(0, 0) = 1.0;
    return result;
  }
  tred2(result.vectors, result.values, e);
  tql2(result.vectors, result.values, e);
  return result;
}

PcaModel pca_fit(const Matrix& x, std::size_t q) {
  const std::size_t n = x.rows(), d = x.cols();
  if (n < 2) throw std::invalid_argument("pca_fit: need at least 2 observations");
  if (q == 0 || q > std::min(n, d)) {
    throw std::invalid_argument("pca_fit: q must satisfy 1 <= q <= min(N, D)");
  }

  PcaModel model;
  model.mean = column_means(x);
  const Matrix xc = centered(x, model.mean);
  const double total_var = total_variance(xc);

  if (total_var <= 0.0) {
    // Constant data: arbitrary orthonormal completion, zero ratios.
    model.components = Matrix(q, d);
    complete_basis(model.components, 0, q);
    model.explained_variance_ratio.assign(q, 0.0);
    apply_sign_convention(model.components);
    return model;
  }

  std::vector<double> top_eigenvalues(q, 0.0);
  if (d <= kDirectEigenMaxDim) {
    Matrix cov(d, d);
    for (std::size_t i = 0; i < n; ++i) {
      auto row = xc.row(i);
      for (std::size_t a = 0; a < d; ++a) {
        const double va = row[a];
        if (va == 0.0) continue;
        for (std::size_t b = a; b < d; ++b) cov(a, b) += va * row[b];
      }
    }
    const double inv = 1.0 / static_cast<double>(n - 1);
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a; b < d; ++b) {
        cov(a, b) *= inv;
        cov(b, a) = cov(a, b);
      }
    }
    SymmetricEigen eig = symmetric_eigen(cov);
    model.components = Matrix(q, d);
    for (std::size_t r = 0; r < q; ++r) {
      const std::size_t src = d - 1 - r;  // ascending -> descending
      top_eigenvalues[r] = std::max(0.0, eig.values[src]);
      for (std::size_t j = 0; j < d; ++j) model.components(r, j) = eig.vectors(j, src);
    }
  } else {
    PowerResult pr = power_method_spectrum(xc, q, total_var);
    model.components = std::move(pr.components);
    top_eigenvalues = std::move(pr.eigenvalues);
  }

  model.explained_variance_ratio.resize(q);
  for (std::size_t r = 0; r < q; ++r) {
    model.explained_variance_ratio[r] = top_eigenvalues[r] / total_var;
  }
  apply_sign_convention(model.components);
  ensure_finite(model.components, "pca_fit components");
  return model;
}

std::size_t effective_dimensionality(const Matrix& x, double threshold) {
  if (x.rows() < 2) {
    throw std::invalid_argument("effective_dimensionality: undefined covariance for N < 2");
  }
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw std::invalid_argument("effective_dimensionality: threshold must be in (0, 1]");
  }
  const std::size_t d = x.cols();
  const std::vector<double> mean = column_means(x);
  const Matrix xc = centered(x, mean);
  const double total_var = total_variance(xc);
  if (total_var <= 0.0) return 0;  // constant data: no variability to explain

  const std::size_t q_max = std::min(x.rows(), d);
  std::vector<double> eigenvalues;
  if (d <= kDirectEigenMaxDim) {
    Matrix cov(d, d);
    for (std::size_t i = 0; i < x.rows(); ++i) {
      auto row = xc.row(i);
      for (std::size_t a = 0; a < d; ++a) {
        const double va = row[a];
        if (va == 0.0) continue;
        for (std::size_t b = a; b < d; ++b) cov(a, b) += va * row[b];
      }
    }
    const double inv = 1.0 / static_cast<double>(x.rows() - 1);
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a; b < d; ++b) {
        cov(a, b) *= inv;
        cov(b, a) = cov(a, b);
      }
    }
    SymmetricEigen eig = symmetric_eigen(cov);
    eigenvalues.assign(eig.values.rbegin(), eig.values.rend());
  } else {
    PowerResult pr = power_method_spectrum(xc, q_max, total_var);
    eigenvalues = pr.eigenvalues;
  }

  double cum = 0.0;
  for (std::size_t qi = 0; qi < q_max; ++qi) {
    cum += std::max(0.0, eigenvalues[qi]) / total_var;
    if (cum >= threshold - 1e-12) return qi + 1;
  }
  return q_max;
}

}  // namespace veil
