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

#include "maskzo/quadratic.h"

#include <algorithm>
#include <cmath>

#include "maskzo/errors.h"
#include "maskzo/linalg.h"

namespace maskzo {

QuadraticTask QuadraticTask::Isotropic(std::size_t d, double c,
                                       std::vector<double> center) {
  Require(center.size() == d, "Isotropic: center must have d entries");
  return {Matrix::Identity(d), std::vector<double>(d, c), std::move(center)};
}

double QuadraticTask::Loss(std::span<const double> theta,
                           std::span<const double> noise) const {
  const std::size_t d = dim(), r = rank();
  Require(theta.size() == d, "QuadraticTask::Loss: theta has wrong length");
  Require(noise.empty() || noise.size() == r,
          "QuadraticTask::Loss: noise must have r entries");
  std::vector<double> y(r, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = theta[i] - theta_star[i];
    const auto ui = u.row(i);
    for (std::size_t k = 0; k < r; ++k) y[k] += ui[k] * diff;
  }
  double total = 0.0;
  for (std::size_t k = 0; k < r; ++k) {
    const double v = y[k] - (noise.empty() ? 0.0 : noise[k]);
    total += diag[k] * v * v;
  }
  return 0.5 * total;
}

std::vector<double> QuadraticTask::Gradient(
    std::span<const double> theta) const {
  const std::size_t d = dim(), r = rank();
  Require(theta.size() == d, "QuadraticTask::Gradient: wrong length");
  std::vector<double> y(r, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = theta[i] - theta_star[i];
    for (std::size_t k = 0; k < r; ++k) y[k] += u(i, k) * diff;
  }
  for (std::size_t k = 0; k < r; ++k) y[k] *= diag[k];
  return MatVec(u, y);
}

Matrix QuadraticTask::Hessian() const {
  Matrix ud = u;
  for (std::size_t i = 0; i < ud.rows(); ++i)
    for (std::size_t k = 0; k < ud.cols(); ++k) ud(i, k) *= diag[k];
  return MatMulTransB(ud, u);
}

Matrix WeightedHessian(std::span<const QuadraticTask> tasks,
                       std::span<const double> weights) {
  Require(!tasks.empty() && tasks.size() == weights.size(),
          "WeightedHessian: one weight per task required");
  Matrix total(tasks[0].dim(), tasks[0].dim());
  for (std::size_t t = 0; t < tasks.size(); ++t)
    total = Add(total, Scaled(tasks[t].Hessian(), weights[t]));
  return total;
}

QuadraticOptimum SolveQuadraticOptimum(std::span<const QuadraticTask> tasks,
                                       std::span<const double> weights) {
  Require(!tasks.empty() && tasks.size() == weights.size(),
          "SolveQuadraticOptimum: one weight per task required");
  const std::size_t d = tasks[0].dim();
  // Every minimizer differs from one inside K = [U_1 … U_T] by a null-space
  // component, so solve Kᵀ H K c = Kᵀ b in the small basis (rT columns).
  std::size_t m = 0;
  for (const auto& t : tasks) {
    Require(t.dim() == d, "SolveQuadraticOptimum: dimension mismatch");
    m += t.rank();
  }
  Matrix k(d, m);
  for (std::size_t t = 0, off = 0; t < tasks.size(); off += tasks[t].rank(), ++t)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t c = 0; c < tasks[t].rank(); ++c)
        k(i, off + c) = tasks[t].u(i, c);

  const Matrix kt = k.Transposed();
  Matrix reduced(m, m);
  std::vector<double> rhs(m, 0.0);
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto& task = tasks[t];
    Matrix p = MatMul(kt, task.u);  // m x r
    Matrix pd = p;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t c = 0; c < task.rank(); ++c)
        pd(i, c) *= weights[t] * task.diag[c];
    reduced = Add(reduced, MatMulTransB(pd, p));
    const auto y = MatVec(task.u.Transposed(), task.theta_star);
    const auto contrib = MatVec(pd, y);
    for (std::size_t i = 0; i < m; ++i) rhs[i] += contrib[i];
  }

  const auto eig = SymEigen(reduced);
  const double cutoff = 1e-12 * std::max(eig.values.front(), 0.0);
  std::vector<double> coef(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    if (!(eig.values[j] > cutoff)) continue;
    double proj = 0.0;
    for (std::size_t i = 0; i < m; ++i) proj += eig.vectors(i, j) * rhs[i];
    const double scale = proj / eig.values[j];
    for (std::size_t i = 0; i < m; ++i) coef[i] += scale * eig.vectors(i, j);
  }
  QuadraticOptimum opt;
  opt.theta = MatVec(k, coef);
  for (std::size_t t = 0; t < tasks.size(); ++t)
    opt.loss += weights[t] * tasks[t].Loss(opt.theta);
  return opt;
}

}  // namespace maskzo
