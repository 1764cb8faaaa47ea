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

#ifndef MASKZO_IMPORTANCE_H_
#define MASKZO_IMPORTANCE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "maskzo/matrix.h"
#include "maskzo/model.h"

namespace maskzo {

struct ImportanceConfig {
  double alpha = 10.0;  // weight of the greedy score
  double beta = 1.0;    // weight of |W|
  double rho = 0.9;     // fraction of each row that stays frozen
  double eta = 0.0;     // step size inside the greedy score; 0 = training η
  // Ridge λ added to the row Hessian. Negative selects the automatic
  // λ = ridge_scale · tr(H) / d.
  double ridge = -1.0;
  double ridge_scale = 1e-6;

  void Validate() const;
};

// Second-order statistics for one weight row: gradient proxy g and Hessian
// proxy H over the row's input dimension.
struct RowCurvature {
  std::vector<double> g;
  Matrix h;
};

// g = mean of the rows of x, H = mean of x xᵀ.
RowCurvature ComputeRowCurvature(const Matrix& x);

double AutoRidge(const Matrix& h, double scale = 1e-6);

// Loss increase of the best quadratic step when coordinate m is held fixed:
//   (e_mᵀ (H+λI)⁻¹ g)² / (2 ((H+λI)⁻¹)_mm).
std::vector<double> GlobalScore(const RowCurvature& curv, double ridge);

// One-step penalty of freezing coordinate m under a ZO step of size η:
//   g_m² η + H_mm g_m² η² − 4 η² g_m (H g)_m.
std::vector<double> GreedyScore(const RowCurvature& curv, double eta);

// S = global + α·greedy + β·|w|.
std::vector<double> CombineScores(std::span<const double> global,
                                  std::span<const double> greedy,
                                  std::span<const double> w_row,
                                  const ImportanceConfig& cfg);

// Min-max scaling to [0, 1]; a constant row maps to zeros.
std::vector<double> NormalizeRow(std::span<const double> scores);
Matrix NormalizeRows(const Matrix& scores);

// Per-layer score matrices, one entry per model layer.
using ScoreSet = std::vector<Matrix>;

// Element-wise sum over tasks.
ScoreSet AggregateTasks(std::span<const ScoreSet> per_task);

// k = ⌈(1−ρ)·n⌉, guarded against round-off in (1−ρ)·n.
std::size_t KeepCount(std::size_t n, double rho);

// Marks the KeepCount(cols, ρ) highest scores of every row; ties go to the
// lower column index.
Matrix BuildRowMask(const Matrix& scores, double rho);
// Same selection over the whole matrix as a single pool (row-major order
// breaks ties).
Matrix BuildPooledMask(const Matrix& scores, double rho);

// delta ⊙ mask.
Matrix MaskedUpdate(const Matrix& delta, const Matrix& mask);

// Scores for one layer from its weight and per-row curvature. `curv` holds
// either one entry shared by all rows or one entry per row.
Matrix LayerScores(const Matrix& w, std::span<const RowCurvature> curv,
                   const ImportanceConfig& cfg, double eta);

enum class BaselineKind { kRandom, kMagnitude, kWanda };
std::string_view ToString(BaselineKind kind);

// |W_ij| · ‖X_j‖₂ with X the n × d_in inputs captured for this layer.
Matrix WandaScores(const Matrix& w, const Matrix& x);
Matrix MagnitudeScores(const Matrix& w);
Matrix RandomScores(std::size_t rows, std::size_t cols, std::uint64_t seed);

// Wanda compares within rows; magnitude and random pool the whole weight.
Matrix BaselineMask(BaselineKind kind, const Matrix& scores, double rho);

// Number of unfrozen entries per row of a mask.
std::vector<std::size_t> RowKeepCounts(const Matrix& mask);

// Trainable dimensionality per row of a rank-r adapter under sparsity ρ.
double EffectiveAdapterDim(std::size_t rank, double rho);

// Flat 0/1 coordinate mask aligned with Model::Params() for a dense model:
// W entries follow `masks`, biases stay trainable.
std::vector<std::uint8_t> CoordinateMask(const Model& model,
                                         const ScoreSet& masks);

void SaveScoreSet(const std::filesystem::path& path, const ScoreSet& set,
                  std::string_view label);
ScoreSet LoadScoreSet(const std::filesystem::path& path,
                      std::string_view label);

}  // namespace maskzo

#endif  // MASKZO_IMPORTANCE_H_
