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

#ifndef MASKZO_LINALG_H_
#define MASKZO_LINALG_H_

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "maskzo/matrix.h"

namespace maskzo {

// Relative tolerance for accepting a matrix as symmetric.
inline constexpr double kSymmetryTolerance = 1e-10;

struct SymEigenDecomposition {
  std::vector<double> values;  // descending
  Matrix vectors;              // column i pairs with values[i]
};

// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
// The input is symmetrized as (H + Hᵀ)/2 after passing the symmetry check;
// a matrix asymmetric beyond kSymmetryTolerance (relative to its largest
// entry) raises ContractError.
SymEigenDecomposition SymEigen(const Matrix& h);

// Top-k eigenvalues of a symmetric matrix, sorted descending.
std::vector<double> SymEigenvalues(const Matrix& h, std::size_t k);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Least-squares line through (step, value) points via the 2x2 normal
// equations. Throws DegenerateFitError when fewer than two distinct steps
// are present.
LineFit LinearFit(std::span<const std::pair<double, double>> points);

// Lower Cholesky factor L with H = L Lᵀ. Throws SingularMatrixError when H
// is not numerically positive definite.
Matrix Cholesky(const Matrix& h);
std::vector<double> CholeskySolve(const Matrix& lower,
                                  std::span<const double> b);
Matrix SpdInverse(const Matrix& h);

// Orthonormalizes the columns of `a` in place order (modified Gram-Schmidt,
// two passes). Throws SingularMatrixError on rank deficiency.
Matrix OrthonormalizeColumns(const Matrix& a);

}  // namespace maskzo

#endif  // MASKZO_LINALG_H_
