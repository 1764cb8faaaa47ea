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

#ifndef MASKZO_MULTITASK_H_
#define MASKZO_MULTITASK_H_

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "maskzo/checkpoint.h"
#include "maskzo/param_view.h"
#include "maskzo/zo.h"

namespace maskzo {

struct TaskEntry {
  std::string id;
  LossFn loss;  // loss of this task at the current shared parameters
};

// T tasks sharing one parameter vector, with convex combination weights.
class TaskSet {
 public:
  TaskSet(std::vector<TaskEntry> tasks, std::vector<double> weights);
  static TaskSet Uniform(std::vector<TaskEntry> tasks);

  std::size_t size() const { return tasks_.size(); }
  const TaskEntry& task(std::size_t t) const { return tasks_.at(t); }
  const std::vector<double>& weights() const { return weights_; }
  // Replaces the weights; they must lie on the probability simplex.
  void set_weights(std::vector<double> weights);

 private:
  std::vector<TaskEntry> tasks_;
  std::vector<double> weights_;
};

// Throws ContractError unless w_t >= 0 and |Σ w_t − 1| <= 1e-12.
void ValidateSimplex(std::span<const double> weights);

std::vector<double> TaskLosses(const TaskSet& tasks);
// Σ_t w_t L^t, accumulated in task order.
double AggregateLoss(const TaskSet& tasks);

// Per-task two-point coefficients under one shared perturbation z. Every task
// gradient is task_coeffs[t] * z, so the weighted aggregate only changes the
// scalar in front of z.
struct MtlZoEstimate {
  std::vector<double> task_coeffs;
  std::vector<double> loss_plus;
  std::vector<double> loss_minus;
  double aggregate = 0.0;  // Σ w_t c_t with the task set's weights
  std::uint64_t perturb_seed = 0;

  ZoEstimate AsEstimate(double coeff) const { return {coeff, perturb_seed}; }
  ZoEstimate AsEstimate() const { return AsEstimate(aggregate); }
  // (L+ + L−)/2 per task, a loss estimate that costs no extra passes.
  std::vector<double> MidpointLosses() const;
};

// 2T loss evaluations: all tasks at θ+εz, then all tasks at θ−εz.
MtlZoEstimate MtlZoCoefficient(const TaskSet& tasks, ParamView& params,
                               std::uint64_t seed, double epsilon,
                               CoordMask mask = {}, bool exact_restore = false);

double WeightedCoefficient(std::span<const double> task_coeffs,
                           std::span<const double> weights);

// ---------------------------------------------------------------------------
// CoBa: convergence-balancing weights from validation-loss slopes.

struct CobaConfig {
  std::size_t val_batches = 4;  // M
  std::size_t window = 0;       // N; 0 selects 5M
  std::size_t warmup = 0;       // W; 0 selects M
};

struct CobaWeights {
  std::vector<double> weights;
  std::vector<double> rcs;  // empty during warmup
  std::vector<double> acs;  // empty during warmup
  double df = 0.0;
  bool warmup = true;
};

class CobaState {
 public:
  CobaState(std::size_t tasks, CobaConfig cfg = {});

  // Feeds one validation loss per task for the next iteration and returns
  // the weights for that iteration.
  CobaWeights Update(std::span<const double> val_losses);

  std::size_t step() const { return step_; }
  std::size_t window() const { return window_; }
  std::size_t warmup() const { return warmup_; }
  // Most recent convergence slope per task (0 until two points exist).
  std::vector<double> slopes() const;

  std::vector<NamedMatrix> ToEntries(const std::string& prefix) const;
  void LoadEntries(const std::vector<NamedMatrix>& entries,
                   const std::string& prefix);

 private:
  std::size_t tasks_;
  std::size_t window_;
  std::size_t warmup_;
  std::size_t step_ = 0;
  std::vector<double> first_loss_;
  std::vector<std::deque<double>> ratios_;        // last N normalized losses
  std::vector<std::deque<double>> slope_history_; // last N slopes
  std::deque<double> df_terms_;                   // last 5N DF logits
  double alpha_max_sum_ = 0.0;
};

// ---------------------------------------------------------------------------
// FAMO: logit-parameterized weights driven by log-loss decrease.

struct FamoConfig {
  double logit_lr = 0.025;  // β_famo
  double decay = 1e-3;      // γ
};

class FamoState {
 public:
  FamoState(std::size_t tasks, FamoConfig cfg = {});

  std::vector<double> Weights() const;  // softmax(ξ)
  // d_t = log prev_t − log next_t; ξ ← ξ − β(Jᵀd + γξ). Returns the new
  // weights. Losses must be strictly positive.
  std::vector<double> Update(std::span<const double> prev_losses,
                             std::span<const double> next_losses);

  const std::vector<double>& logits() const { return xi_; }
  void set_logits(std::vector<double> xi);
  const FamoConfig& config() const { return cfg_; }

 private:
  FamoConfig cfg_;
  std::vector<double> xi_;
};

// FAMO's gradient weighting applied to shared-direction coefficients:
// Σ_t (c · w_t / L_t) · coeff_t with c = (Σ_t w_t / L_t)^-1.
double FamoCombinedCoefficient(std::span<const double> weights,
                               std::span<const double> losses,
                               std::span<const double> task_coeffs);

}  // namespace maskzo

#endif  // MASKZO_MULTITASK_H_
