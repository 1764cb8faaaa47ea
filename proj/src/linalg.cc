// Copyright 2026 The MaskZO Authors.
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

#include "maskzo/linalg.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "maskzo/errors.h"

namespace maskzo {
namespace {

Matrix CheckedSymmetrize(const Matrix& h) {
  Require(h.is_square(), "SymEigen: matrix is not square");
  Require(h.AllFinite(), "SymEigen: matrix has non-finite entries");
  double scale = 0.0;
  for (double v : h.data()) scale = std::max(scale, std::abs(v));
  const std::size_t n = h.rows();
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(h(i, j) - h(j, i)) > kSymmetryTolerance * scale) {
        throw ContractError("SymEigen: matrix is not symmetric at (" +
                            std::to_string(i) + ", " + std::to_string(j) +
                            ")");
      }
      s(i, j) = 0.5 * (h(i, j) + h(j, i));
    }
  }
  return s;
}

double OffDiagonalNorm2(const Matrix& a) {
  double off = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j) off += a(i, j) * a(i, j);
  return off;
}

}  // namespace

SymEigenDecomposition SymEigen(const Matrix& h) {
  Matrix a = CheckedSymmetrize(h);
  const std::size_t n = a.rows();
  Matrix v = Matrix::Identity(n);

  double total = 0.0;
  for (double x : a.data()) total += x * x;
  const double stop = total * 1e-32;

  for (int sweep = 0; sweep < 100 && OffDiagonalNorm2(a) > stop; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    return a(i, i) > a(j, j);
  });
  SymEigenDecomposition out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t c = 0; c < n; ++c) {
    out.values[c] = a(order[c], order[c]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
  }
  return out;
}

std::vector<double> SymEigenvalues(const Matrix& h, std::size_t k) {
  Require(k <= h.rows(), "SymEigenvalues: k exceeds dimension");
  auto values = SymEigen(h).values;
  values.resize(k);
  return values;
}

LineFit LinearFit(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2) {
    throw DegenerateFitError("LinearFit: need at least two points");
  }
  // Center the steps first; the normal equations stay well conditioned even
  // for large step indices.
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (const auto& [x, y] : points) {
    mean_x += x;
    mean_y += y;
  }
  mean_x /= static_cast<double>(points.size());
  mean_y /= static_cast<double>(points.size());
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mean_x) * (x - mean_x);
    sxy += (x - mean_x) * (y - mean_y);
  }
  if (sxx == 0.0) {
    throw DegenerateFitError("LinearFit: all steps are identical");
  }
  const double slope = sxy / sxx;
  return {slope, mean_y - slope * mean_x};
}

Matrix Cholesky(const Matrix& h) {
  Require(h.is_square(), "Cholesky: matrix is not square");
  const std::size_t n = h.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = h(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw SingularMatrixError("Cholesky: non-positive pivot at " +
                                std::to_string(j));
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = h(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

std::vector<double> CholeskySolve(const Matrix& lower,
                                  std::span<const double> b) {
  const std::size_t n = lower.rows();
  Require(b.size() == n, "CholeskySolve: dimension mismatch");
  std::vector<double> y(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) y[i] -= lower(i, k) * y[k];
    y[i] /= lower(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) y[i] -= lower(k, i) * y[k];
    y[i] /= lower(i, i);
  }
  return y;
}

Matrix SpdInverse(const Matrix& h) {
  const Matrix l = Cholesky(h);
  const std::size_t n = h.rows();
  Matrix inv(n, n);
  std::vector<double> e(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    e.assign(n, 0.0);
    e[c] = 1.0;
    const auto col = CholeskySolve(l, e);
    for (std::size_t r = 0; r < n; ++r) inv(r, c) = col[r];
  }
  // Symmetrize away the solver's rounding asymmetry.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double m = 0.5 * (inv(i, j) + inv(j, i));
      inv(i, j) = m;
      inv(j, i) = m;
    }
  }
  return inv;
}

Matrix OrthonormalizeColumns(const Matrix& a) {
  Matrix q = a;
  const std::size_t n = q.rows();
  for (std::size_t c = 0; c < q.cols(); ++c) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t p = 0; p < c; ++p) {
        double proj = 0.0;
        for (std::size_t r = 0; r < n; ++r) proj += q(r, p) * q(r, c);
        for (std::size_t r = 0; r < n; ++r) q(r, c) -= proj * q(r, p);
      }
    }
    double norm = 0.0;
    for (std::size_t r = 0; r < n; ++r) norm += q(r, c) * q(r, c);
    norm = std::sqrt(norm);
    if (!(norm > 1e-12)) {
      throw SingularMatrixError("OrthonormalizeColumns: rank deficient");
    }
    for (std::size_t r = 0; r < n; ++r) q(r, c) /= norm;
  }
  return q;
}

}  // namespace maskzo
