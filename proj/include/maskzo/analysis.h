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

#ifndef MASKZO_ANALYSIS_H_
#define MASKZO_ANALYSIS_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"
#include "maskzo/matrix.h"
#include "maskzo/multitask.h"
#include "maskzo/param_view.h"
#include "maskzo/quadratic.h"
#include "maskzo/zo.h"

namespace maskzo {

// Stored Hessian of one quadratic task, or Σ w_t H_t for several.
Matrix ExactQuadraticHessian(const QuadraticTask& task);
Matrix ExactQuadraticHessian(std::span<const QuadraticTask> tasks,
                             std::span<const double> weights);

inline constexpr std::size_t kMaxFdDim = 200;

// Central second differences with per-coordinate step
// h_i = h_scale · (1 + |θ_i|), symmetrized. Params are restored exactly.
Matrix FdHessian(const LossFn& loss, ParamView& params, double h_scale = 1e-4);

struct SpectrumReport {
  std::size_t dim = 0;
  std::vector<double> eigenvalues;  // top-k, descending
  std::vector<double> normalized;   // top-k divided by the largest
  std::size_t threshold_rank = 0;   // eigenvalues ≥ threshold · max
  double entropy_rank = 0.0;        // exp(entropy of spectrum / its sum)
  double threshold = 0.01;
};

// k = 0 selects min(d, 100). Ranks use the full spectrum; negative
// eigenvalues count as zero for the entropy rank.
SpectrumReport Spectrum(const Matrix& h, std::size_t k = 0,
                        double threshold = 0.01);

struct CollinearityReport {
  std::size_t tasks = 0;
  std::size_t probes = 0;
  bool shared = true;
  // Per-probe eigenvalues of the T × T Gram matrix of the gradient
  // estimates, normalized by the probe's largest and averaged over probes.
  std::vector<double> mean_normalized_eigenvalues;
  double rank_ratio = 0.0;       // max over probes of λ₂/λ₁
  double mean_rank_ratio = 0.0;  // mean over probes of λ₂/λ₁
};

// Draws n_z perturbations and forms each task's gradient estimate c_t·z_t,
// with z_t = z shared across tasks or drawn per task.
CollinearityReport CollinearityCheck(const TaskSet& tasks, ParamView& params,
                                     std::size_t n_z, bool shared,
                                     std::uint64_t seed, double epsilon = 1e-3);

struct OriginFit {
  double slope = 0.0;
  double r2 = 0.0;  // 1 − SS_res / SS_tot with SS_tot centred on the mean
};
OriginFit FitThroughOrigin(std::span<const std::pair<double, double>> points);

struct VarianceSweep {
  std::vector<std::pair<double, double>> points;  // (d, variance)
  OriginFit fit;
};
VarianceSweep RunVarianceSweep(std::span<const std::size_t> dims,
                               std::size_t n_samples, std::uint64_t seed);

nlohmann::json ToJson(const SpectrumReport& report);
nlohmann::json ToJson(const CollinearityReport& report);
nlohmann::json ToJson(const VarianceSweep& sweep);

}  // namespace maskzo

#endif  // MASKZO_ANALYSIS_H_
