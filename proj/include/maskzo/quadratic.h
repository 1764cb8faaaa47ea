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

#ifndef MASKZO_QUADRATIC_H_
#define MASKZO_QUADRATIC_H_

#include <cstddef>
#include <span>
#include <vector>

#include "maskzo/matrix.h"

namespace maskzo {

// L(θ) = ½ Σ_k D_k ((Uᵀ(θ − θ*))_k − e_k)², i.e. ½(θ−θ*)ᵀ U D Uᵀ (θ−θ*) when
// the noise e is zero. U is d × r.
struct QuadraticTask {
  Matrix u;
  std::vector<double> diag;
  std::vector<double> theta_star;

  // c·I_d centred at `center`.
  static QuadraticTask Isotropic(std::size_t d, double c,
                                 std::vector<double> center);

  std::size_t dim() const { return u.rows(); }
  std::size_t rank() const { return u.cols(); }

  double Loss(std::span<const double> theta,
              std::span<const double> noise = {}) const;
  std::vector<double> Gradient(std::span<const double> theta) const;
  Matrix Hessian() const;
};

// Σ_t w_t H_t.
Matrix WeightedHessian(std::span<const QuadraticTask> tasks,
                       std::span<const double> weights);

struct QuadraticOptimum {
  // Minimizer of Σ w_t L_t inside the span of the task subspaces.
  std::vector<double> theta;
  double loss = 0.0;
};

QuadraticOptimum SolveQuadraticOptimum(std::span<const QuadraticTask> tasks,
                                       std::span<const double> weights);

}  // namespace maskzo

#endif  // MASKZO_QUADRATIC_H_
