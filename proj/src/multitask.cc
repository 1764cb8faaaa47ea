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

#include "maskzo/multitask.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "maskzo/errors.h"
#include "maskzo/linalg.h"
#include "maskzo/model.h"

namespace maskzo {

void ValidateSimplex(std::span<const double> weights) {
  Require(!weights.empty(), "task weights are empty");
  double sum = 0.0;
  for (double w : weights) {
    Require(w >= 0.0 && std::isfinite(w), "task weights must be >= 0");
    sum += w;
  }
  Require(std::abs(sum - 1.0) <= 1e-12,
          "task weights must sum to 1 (got " + std::to_string(sum) + ")");
}

TaskSet::TaskSet(std::vector<TaskEntry> tasks, std::vector<double> weights)
    : tasks_(std::move(tasks)) {
  Require(!tasks_.empty(), "TaskSet: needs at least one task");
  Require(weights.size() == tasks_.size(),
          "TaskSet: one weight per task required");
  set_weights(std::move(weights));
}

TaskSet TaskSet::Uniform(std::vector<TaskEntry> tasks) {
  const std::size_t t = tasks.size();
  Require(t >= 1, "TaskSet: needs at least one task");
  return TaskSet(std::move(tasks),
                 std::vector<double>(t, 1.0 / static_cast<double>(t)));
}

void TaskSet::set_weights(std::vector<double> weights) {
  Require(weights.size() == tasks_.size(),
          "TaskSet: one weight per task required");
  ValidateSimplex(weights);
  weights_ = std::move(weights);
}

std::vector<double> TaskLosses(const TaskSet& tasks) {
  std::vector<double> out(tasks.size());
  for (std::size_t t = 0; t < tasks.size(); ++t) out[t] = tasks.task(t).loss();
  return out;
}

double AggregateLoss(const TaskSet& tasks) {
  double total = 0.0;
  for (std::size_t t = 0; t < tasks.size(); ++t)
    total += tasks.weights()[t] * tasks.task(t).loss();
  return total;
}

std::vector<double> MtlZoEstimate::MidpointLosses() const {
  std::vector<double> out(loss_plus.size());
  for (std::size_t t = 0; t < out.size(); ++t)
    out[t] = 0.5 * (loss_plus[t] + loss_minus[t]);
  return out;
}

double WeightedCoefficient(std::span<const double> task_coeffs,
                           std::span<const double> weights) {
  Require(task_coeffs.size() == weights.size(),
          "WeightedCoefficient: length mismatch");
  double total = 0.0;
  for (std::size_t t = 0; t < weights.size(); ++t)
    total += weights[t] * task_coeffs[t];
  return total;
}

MtlZoEstimate MtlZoCoefficient(const TaskSet& tasks, ParamView& params,
                               std::uint64_t seed, double epsilon,
                               CoordMask mask, bool exact_restore) {
  Require(epsilon > 0.0, "MtlZoCoefficient: epsilon must be > 0");
  const std::size_t n = tasks.size();
  MtlZoEstimate est;
  est.perturb_seed = seed;
  est.loss_plus.resize(n);
  est.loss_minus.resize(n);
  est.task_coeffs.resize(n);

  std::vector<double> saved;
  if (exact_restore) saved = params.Snapshot();
  auto restore = [&](double scale) {
    if (exact_restore) {
      params.Assign(saved);
    } else {
      PerturbInPlace(params, seed, scale, mask);
    }
  };

  PerturbInPlace(params, seed, epsilon, mask);
  for (std::size_t t = 0; t < n; ++t) {
    est.loss_plus[t] = tasks.task(t).loss();
    if (!std::isfinite(est.loss_plus[t])) {
      restore(-epsilon);
      throw EstimationError(EstimationError::Side::kPlus, est.loss_plus[t]);
    }
  }
  PerturbInPlace(params, seed, -2.0 * epsilon, mask);
  for (std::size_t t = 0; t < n; ++t) {
    est.loss_minus[t] = tasks.task(t).loss();
    if (!std::isfinite(est.loss_minus[t])) {
      restore(epsilon);
      throw EstimationError(EstimationError::Side::kMinus, est.loss_minus[t]);
    }
  }
  restore(epsilon);

  for (std::size_t t = 0; t < n; ++t)
    est.task_coeffs[t] =
        (est.loss_plus[t] - est.loss_minus[t]) / (2.0 * epsilon);
  est.aggregate = WeightedCoefficient(est.task_coeffs, tasks.weights());
  return est;
}

// --- CoBa -------------------------------------------------------------------

CobaState::CobaState(std::size_t tasks, CobaConfig cfg)
    : tasks_(tasks),
      window_(cfg.window ? cfg.window : 5 * cfg.val_batches),
      warmup_(cfg.warmup ? cfg.warmup : cfg.val_batches),
      first_loss_(tasks, 0.0),
      ratios_(tasks),
      slope_history_(tasks) {
  Require(tasks >= 1, "CobaState: needs at least one task");
  Require(cfg.val_batches >= 1, "CobaState: M must be >= 1");
  Require(window_ >= 2, "CobaState: window must hold at least two points");
}

std::vector<double> CobaState::slopes() const {
  std::vector<double> out(tasks_, 0.0);
  for (std::size_t t = 0; t < tasks_; ++t)
    if (!slope_history_[t].empty()) out[t] = slope_history_[t].back();
  return out;
}

CobaWeights CobaState::Update(std::span<const double> val_losses) {
  Require(val_losses.size() == tasks_,
          "CobaState::Update: one validation loss per task required");
  ++step_;
  const double i = static_cast<double>(step_);
  const double uniform = 1.0 / static_cast<double>(tasks_);

  bool have_slopes = true;
  for (std::size_t t = 0; t < tasks_; ++t) {
    Require(std::isfinite(val_losses[t]), "CobaState: non-finite loss");
    if (step_ == 1) first_loss_[t] = val_losses[t];
    // Loss ratio against the first recorded value.
    const double ratio =
        first_loss_[t] != 0.0 ? val_losses[t] / first_loss_[t] : val_losses[t];
    auto& hist = ratios_[t];
    hist.push_back(ratio);
    if (hist.size() > window_) hist.pop_front();
    if (hist.size() < 2) {
      have_slopes = false;
      continue;
    }
    std::vector<std::pair<double, double>> pts;
    pts.reserve(hist.size());
    const double s0 = i - static_cast<double>(hist.size()) + 1.0;
    for (std::size_t k = 0; k < hist.size(); ++k)
      pts.emplace_back(s0 + static_cast<double>(k), hist[k]);
    auto& slopes = slope_history_[t];
    slopes.push_back(LinearFit(pts).slope);
    if (slopes.size() > window_) slopes.pop_front();
  }

  CobaWeights out;
  if (have_slopes) {
    double alpha_max = slope_history_[0].back();
    for (std::size_t t = 1; t < tasks_; ++t)
      alpha_max = std::max(alpha_max, slope_history_[t].back());
    alpha_max_sum_ += alpha_max;
    const double df_logit =
        std::abs(alpha_max_sum_) > 0.0 ? i * alpha_max / alpha_max_sum_ : 0.0;
    df_terms_.push_back(df_logit);
    if (df_terms_.size() > 5 * window_) df_terms_.pop_front();
  }

  if (step_ <= warmup_ || !have_slopes) {
    out.weights.assign(tasks_, uniform);
    return out;
  }
  out.warmup = false;

  // Relative convergence score: compare slopes across tasks.
  double abs_sum = 0.0;
  for (std::size_t t = 0; t < tasks_; ++t)
    abs_sum += std::abs(slope_history_[t].back());
  std::vector<double> rcs_logits(tasks_, 0.0);
  if (abs_sum > 0.0) {
    for (std::size_t t = 0; t < tasks_; ++t)
      rcs_logits[t] = static_cast<double>(tasks_) *
                      slope_history_[t].back() / abs_sum;
  }
  out.rcs = Softmax(rcs_logits);

  // Absolute convergence score: each task normalized along its own slope
  // history; the newest entry of that softmax is the task's score.
  out.acs.resize(tasks_);
  for (std::size_t t = 0; t < tasks_; ++t) {
    const auto& hist = slope_history_[t];
    double denom = 0.0;
    for (double a : hist) denom += std::abs(a);
    std::vector<double> logits(hist.size(), 0.0);
    if (denom > 0.0) {
      for (std::size_t k = 0; k < hist.size(); ++k)
        logits[k] = -static_cast<double>(window_) * hist[k] / denom;
    }
    out.acs[t] = Softmax(logits).back();
  }

  const std::vector<double> df_logits(df_terms_.begin(), df_terms_.end());
  out.df = std::min(Softmax(df_logits).back(), 1.0);

  out.weights.resize(tasks_);
  double total = 0.0;
  for (std::size_t t = 0; t < tasks_; ++t) {
    out.weights[t] = out.df * out.rcs[t] + (1.0 - out.df) * out.acs[t];
    total += out.weights[t];
  }
  for (double& w : out.weights) w /= total;
  return out;
}

std::vector<NamedMatrix> CobaState::ToEntries(const std::string& prefix) const {
  auto pack = [&](const std::vector<std::deque<double>>& rows) {
    Matrix m(tasks_, window_ + 1);
    for (std::size_t t = 0; t < tasks_; ++t) {
      m(t, 0) = static_cast<double>(rows[t].size());
      for (std::size_t k = 0; k < rows[t].size(); ++k) m(t, k + 1) = rows[t][k];
    }
    return m;
  };
  Matrix scalars(1, 2, {static_cast<double>(step_), alpha_max_sum_});
  Matrix df(1, df_terms_.size(),
            std::vector<double>(df_terms_.begin(), df_terms_.end()));
  return {{prefix + ".scalars", scalars},
          {prefix + ".first_loss", Matrix(1, tasks_, first_loss_)},
          {prefix + ".ratios", pack(ratios_)},
          {prefix + ".slopes", pack(slope_history_)},
          {prefix + ".df_terms", df}};
}

void CobaState::LoadEntries(const std::vector<NamedMatrix>& entries,
                            const std::string& prefix) {
  const Matrix& scalars = FindEntry(entries, prefix + ".scalars");
  step_ = static_cast<std::size_t>(scalars(0, 0));
  alpha_max_sum_ = scalars(0, 1);
  const auto fl = FindEntry(entries, prefix + ".first_loss").data();
  first_loss_.assign(fl.begin(), fl.end());
  auto unpack = [&](const Matrix& m, std::vector<std::deque<double>>& rows) {
    Require(m.rows() == tasks_, "CobaState: task count mismatch in state");
    for (std::size_t t = 0; t < tasks_; ++t) {
      rows[t].clear();
      const auto n = static_cast<std::size_t>(m(t, 0));
      for (std::size_t k = 0; k < n; ++k) rows[t].push_back(m(t, k + 1));
    }
  };
  unpack(FindEntry(entries, prefix + ".ratios"), ratios_);
  unpack(FindEntry(entries, prefix + ".slopes"), slope_history_);
  const auto df = FindEntry(entries, prefix + ".df_terms").data();
  df_terms_.assign(df.begin(), df.end());
}

// --- FAMO -------------------------------------------------------------------

FamoState::FamoState(std::size_t tasks, FamoConfig cfg)
    : cfg_(cfg), xi_(tasks, 0.0) {
  Require(tasks >= 1, "FamoState: needs at least one task");
  Require(cfg.logit_lr > 0.0 && cfg.decay >= 0.0,
          "FamoState: logit_lr must be > 0 and decay >= 0");
}

std::vector<double> FamoState::Weights() const { return Softmax(xi_); }

void FamoState::set_logits(std::vector<double> xi) {
  Require(xi.size() == xi_.size(), "FamoState: logit count mismatch");
  xi_ = std::move(xi);
}

std::vector<double> FamoState::Update(std::span<const double> prev_losses,
                                      std::span<const double> next_losses) {
  const std::size_t n = xi_.size();
  Require(prev_losses.size() == n && next_losses.size() == n,
          "FamoState::Update: one loss per task required");
  std::vector<double> d(n);
  for (std::size_t t = 0; t < n; ++t) {
    if (!(prev_losses[t] > 0.0) || !(next_losses[t] > 0.0)) {
      throw ContractError("FamoState::Update: losses must be > 0 (task " +
                          std::to_string(t) + ")");
    }
    d[t] = std::log(prev_losses[t]) - std::log(next_losses[t]);
  }
  const auto z = Weights();
  // J_{tt'} = z_t (δ_{tt'} − z_t'); (Jᵀd)_t' = z_t' d_t' − z_t' Σ_t z_t d_t.
  double zd = 0.0;
  for (std::size_t t = 0; t < n; ++t) zd += z[t] * d[t];
  const double keep = 1.0 - cfg_.logit_lr * cfg_.decay;
  for (std::size_t t = 0; t < n; ++t) {
    const double grad = z[t] * d[t] - z[t] * zd;
    xi_[t] = xi_[t] * keep - cfg_.logit_lr * grad;
  }
  return Weights();
}

double FamoCombinedCoefficient(std::span<const double> weights,
                               std::span<const double> losses,
                               std::span<const double> task_coeffs) {
  Require(weights.size() == losses.size() &&
              weights.size() == task_coeffs.size(),
          "FamoCombinedCoefficient: length mismatch");
  double inv_sum = 0.0;
  for (std::size_t t = 0; t < weights.size(); ++t) {
    Require(losses[t] > 0.0, "FamoCombinedCoefficient: losses must be > 0");
    inv_sum += weights[t] / losses[t];
  }
  const double c = 1.0 / inv_sum;
  double total = 0.0;
  for (std::size_t t = 0; t < weights.size(); ++t)
    total += c * weights[t] / losses[t] * task_coeffs[t];
  return total;
}

}  // namespace maskzo
