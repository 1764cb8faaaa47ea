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

#ifndef MASKZO_PROBLEMS_H_
#define MASKZO_PROBLEMS_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

#include "maskzo/importance.h"
#include "maskzo/model.h"
#include "maskzo/quadratic.h"

namespace maskzo {

enum class ProblemKind { kQuadratic, kBlobs };
std::string_view ToString(ProblemKind kind);
ProblemKind ParseProblemKind(std::string_view name);

struct ProblemSpec {
  ProblemKind kind = ProblemKind::kQuadratic;
  std::size_t tasks = 4;

  // quadratic-mtl: θ is laid out as a rows × cols weight matrix.
  std::size_t rows = 8;
  std::size_t cols = 64;
  std::size_t rank = 8;
  double conflict_deg = 60.0;  // principal angle between task subspaces
  double curvature_max = 1.0;  // eigenvalues run geometrically max → min
  double curvature_min = 0.1;
  double noise = 0.5;       // std of the per-step residual noise
  double init_scale = 0.02; // θ₀ ~ N(0, init_scale²)

  // blobs-mtl: per-task Gaussian class clusters, shared MLP, task one-hot
  // appended to the features.
  std::size_t input_dim = 8;
  std::vector<std::size_t> hidden = {16};
  std::size_t classes = 3;
  std::size_t batch = 32;
  std::size_t eval_batch = 64;
  double separation = 2.0;
  double spread = 1.0;

  void Validate() const;
};

// A multi-task problem over a shared Model. Quadratic problems use a single
// identity layer purely as the parameter container.
class Problem {
 public:
  virtual ~Problem() = default;

  const ProblemSpec& spec() const { return spec_; }
  std::size_t num_tasks() const { return spec_.tasks; }
  Model& model() { return model_; }
  const Model& model() const { return model_; }

  // Task t's loss on the training batch identified by batch_seed.
  virtual double TrainLoss(std::size_t t, std::uint64_t batch_seed) = 0;
  // Deterministic evaluation loss (noise-free / fixed evaluation batch).
  virtual double EvalLoss(std::size_t t) = 0;
  // Row curvature per layer for task t; each inner list holds one shared
  // entry or one entry per row.
  virtual std::vector<std::vector<RowCurvature>> RowCurvatures(
      std::size_t t) = 0;
  // Layer inputs on task t's evaluation batch; empty when the problem has
  // no activations.
  virtual std::vector<Matrix> CapturedInputs(std::size_t t) = 0;

  // Non-null for quadratic problems.
  virtual const std::vector<QuadraticTask>* quadratic_tasks() const {
    return nullptr;
  }

 protected:
  explicit Problem(ProblemSpec spec) : spec_(std::move(spec)) {}

  ProblemSpec spec_;
  Model model_;
};

std::unique_ptr<Problem> MakeProblem(const ProblemSpec& spec,
                                     std::uint64_t seed);

// Task bases U_t = a·U₀ + b·V_t with V_t ⟂ U₀, V_s ⟂ V_t and a² = cos(angle):
// every principal angle between two task subspaces equals `angle_deg`.
std::vector<Matrix> ConflictingSubspaces(std::size_t d, std::size_t rank,
                                         std::size_t tasks, double angle_deg,
                                         std::uint64_t seed);

}  // namespace maskzo

#endif  // MASKZO_PROBLEMS_H_
