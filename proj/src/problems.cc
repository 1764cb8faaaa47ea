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

#include "maskzo/problems.h"

#include <cmath>
#include <numbers>
#include <string>

#include "maskzo/errors.h"
#include "maskzo/linalg.h"
#include "maskzo/random.h"

namespace maskzo {
namespace {

enum SeedTag : std::uint64_t { kSubspace = 1, kCenters, kInit, kEval, kLayout };

// Flattened effective weight of the container layer for task t.
std::vector<double> Theta(const Model& model, std::size_t t) {
  const Matrix w = model.layers()[0].EffectiveWeight(t);
  return {w.data().begin(), w.data().end()};
}

class QuadraticProblem final : public Problem {
 public:
  QuadraticProblem(const ProblemSpec& spec, std::uint64_t seed)
      : Problem(spec) {
    const std::size_t d = spec.rows * spec.cols;
    const auto bases = ConflictingSubspaces(d, spec.rank, spec.tasks,
                                            spec.conflict_deg,
                                            DeriveSeed(seed, {kSubspace}));
    std::vector<double> diag(spec.rank);
    for (std::size_t k = 0; k < spec.rank; ++k) {
      const double frac =
          spec.rank == 1 ? 0.0
                         : static_cast<double>(k) / static_cast<double>(spec.rank - 1);
      diag[k] = spec.curvature_max *
                std::pow(spec.curvature_min / spec.curvature_max, frac);
    }
    for (std::size_t t = 0; t < spec.tasks; ++t) {
      GaussStream centers(DeriveSeed(seed, {kCenters, t}));
      tasks_.push_back({bases[t], diag, GaussVector(centers, d)});
    }
    LinearLayer layer;
    layer.w = Matrix(spec.rows, spec.cols);
    GaussStream init(DeriveSeed(seed, {kInit}));
    for (double& v : layer.w.data()) v = spec.init_scale * init.Next();
    model_ = Model({std::move(layer)}, Activation::kIdentity, LossHead::kMse);
  }

  double TrainLoss(std::size_t t, std::uint64_t batch_seed) override {
    std::vector<double> e(spec_.rank);
    GaussStream stream(batch_seed);
    for (double& v : e) v = spec_.noise * stream.Next();
    return tasks_.at(t).Loss(Theta(model_, t), e);
  }

  double EvalLoss(std::size_t t) override {
    return tasks_.at(t).Loss(Theta(model_, t));
  }

  // Exact per-row blocks of the task gradient and Hessian.
  std::vector<std::vector<RowCurvature>> RowCurvatures(std::size_t t) override {
    const QuadraticTask& task = tasks_.at(t);
    const auto grad = task.Gradient(Theta(model_, t));
    const std::size_t cols = spec_.cols;
    std::vector<RowCurvature> rows;
    rows.reserve(spec_.rows);
    for (std::size_t i = 0; i < spec_.rows; ++i) {
      RowCurvature c{{grad.begin() + i * cols, grad.begin() + (i + 1) * cols},
                     Matrix(cols, cols)};
      for (std::size_t a = 0; a < cols; ++a) {
        const auto ua = task.u.row(i * cols + a);
        for (std::size_t b = a; b < cols; ++b) {
          const auto ub = task.u.row(i * cols + b);
          double s = 0.0;
          for (std::size_t k = 0; k < task.rank(); ++k)
            s += ua[k] * task.diag[k] * ub[k];
          c.h(a, b) = c.h(b, a) = s;
        }
      }
      rows.push_back(std::move(c));
    }
    return {std::move(rows)};
  }

  std::vector<Matrix> CapturedInputs(std::size_t) override { return {}; }

  const std::vector<QuadraticTask>* quadratic_tasks() const override {
    return &tasks_;
  }

 private:
  std::vector<QuadraticTask> tasks_;
};

class BlobsProblem final : public Problem {
 public:
  BlobsProblem(const ProblemSpec& spec, std::uint64_t seed)
      : Problem(spec) {
    for (std::size_t t = 0; t < spec.tasks; ++t) {
      GaussStream stream(DeriveSeed(seed, {kCenters, t}));
      Matrix mu(spec.classes, spec.input_dim);
      for (double& v : mu.data()) v = spec.separation * stream.Next();
      centers_.push_back(std::move(mu));
    }
    std::vector<std::size_t> sizes{spec.input_dim + spec.tasks};
    sizes.insert(sizes.end(), spec.hidden.begin(), spec.hidden.end());
    sizes.push_back(spec.classes);
    model_ = Model::Mlp(sizes, Activation::kTanh,
                        LossHead::kSoftmaxCrossEntropy,
                        DeriveSeed(seed, {kInit}), /*with_bias=*/true);
    for (std::size_t t = 0; t < spec.tasks; ++t)
      eval_.push_back(MakeBatch(t, spec.eval_batch, DeriveSeed(seed, {kEval, t})));
  }

  double TrainLoss(std::size_t t, std::uint64_t batch_seed) override {
    model_.set_active_task(t);
    return model_.Loss(MakeBatch(t, spec_.batch, batch_seed));
  }

  double EvalLoss(std::size_t t) override {
    model_.set_active_task(t);
    return model_.Loss(eval_.at(t));
  }

  std::vector<std::vector<RowCurvature>> RowCurvatures(std::size_t t) override {
    std::vector<std::vector<RowCurvature>> out;
    for (const Matrix& x : CapturedInputs(t))
      out.push_back({ComputeRowCurvature(x)});
    return out;
  }

  std::vector<Matrix> CapturedInputs(std::size_t t) override {
    model_.set_active_task(t);
    return model_.CaptureRowInputs(eval_.at(t).inputs);
  }

 private:
  Batch MakeBatch(std::size_t t, std::size_t n, std::uint64_t seed) const {
    const std::size_t width = spec_.input_dim + spec_.tasks;
    Batch b{Matrix(n, width), Matrix(n, 1)};
    GaussStream noise(DeriveSeed(seed, {kLayout}));
    for (std::size_t s = 0; s < n; ++s) {
      auto c = static_cast<std::size_t>(UniformAt(seed, s) *
                                        static_cast<double>(spec_.classes));
      c = std::min(c, spec_.classes - 1);
      b.targets(s, 0) = static_cast<double>(c);
      for (std::size_t j = 0; j < spec_.input_dim; ++j)
        b.inputs(s, j) = centers_[t](c, j) + spec_.spread * noise.Next();
      b.inputs(s, spec_.input_dim + t) = 1.0;
    }
    return b;
  }

  std::vector<Matrix> centers_;  // per task: classes × input_dim
  std::vector<Batch> eval_;
};

}  // namespace

std::string_view ToString(ProblemKind kind) {
  return kind == ProblemKind::kQuadratic ? "quadratic-mtl" : "blobs-mtl";
}

ProblemKind ParseProblemKind(std::string_view name) {
  if (name == "quadratic-mtl") return ProblemKind::kQuadratic;
  if (name == "blobs-mtl") return ProblemKind::kBlobs;
  throw ContractError("unknown problem kind '" + std::string(name) +
                      "' (expected quadratic-mtl or blobs-mtl)");
}

void ProblemSpec::Validate() const {
  Require(tasks >= 1, "problem.tasks must be >= 1");
  if (kind == ProblemKind::kQuadratic) {
    const std::size_t d = rows * cols;
    Require(d >= 1, "problem.rows and problem.cols must be >= 1");
    Require(rank >= 1 && rank <= d, "problem.rank must lie in [1, d]");
    Require(rank * (tasks + 1) <= d,
            "infeasible rank: rank * (tasks + 1) must not exceed d = " +
                std::to_string(d));
    Require(conflict_deg >= 0.0 && conflict_deg <= 90.0,
            "problem.conflict_deg must lie in [0, 90]");
    Require(curvature_max > 0.0 && curvature_min > 0.0,
            "curvature bounds must be > 0");
    Require(noise >= 0.0 && init_scale >= 0.0,
            "problem.noise and problem.init_scale must be >= 0");
  } else {
    Require(input_dim >= 1 && classes >= 2,
            "blobs: input_dim >= 1 and classes >= 2 required");
    Require(batch >= 1 && eval_batch >= 1, "blobs: batch sizes must be >= 1");
    for (std::size_t h : hidden) Require(h >= 1, "blobs: hidden sizes >= 1");
    Require(spread >= 0.0, "blobs: spread must be >= 0");
  }
}

std::unique_ptr<Problem> MakeProblem(const ProblemSpec& spec,
                                     std::uint64_t seed) {
  spec.Validate();
  if (spec.kind == ProblemKind::kQuadratic)
    return std::make_unique<QuadraticProblem>(spec, seed);
  return std::make_unique<BlobsProblem>(spec, seed);
}

std::vector<Matrix> ConflictingSubspaces(std::size_t d, std::size_t rank,
                                         std::size_t tasks, double angle_deg,
                                         std::uint64_t seed) {
  Require(rank >= 1 && rank * (tasks + 1) <= d,
          "ConflictingSubspaces: infeasible rank for d");
  const std::size_t m = rank * (tasks + 1);
  Matrix g(d, m);
  GaussStream stream(seed);
  for (double& v : g.data()) v = stream.Next();
  const Matrix q = OrthonormalizeColumns(g);

  const double a2 = std::cos(angle_deg * std::numbers::pi / 180.0);
  const double a = std::sqrt(std::max(a2, 0.0));
  const double b = std::sqrt(std::max(1.0 - a2, 0.0));
  std::vector<Matrix> out;
  for (std::size_t t = 0; t < tasks; ++t) {
    Matrix u(d, rank);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t k = 0; k < rank; ++k)
        u(i, k) = a * q(i, k) + b * q(i, rank * (t + 1) + k);
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace maskzo
