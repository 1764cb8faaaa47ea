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

#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "maskzo/multitask.h"
#include "maskzo/random.h"

namespace maskzo {
namespace {

// Tasks L_t(θ) = 0.5 ‖θ − c_t‖² with distinct centers.
struct Fixture {
  std::vector<double> theta{0.3, -0.2, 0.5, 0.1};
  std::vector<std::vector<double>> centers{{0, 0, 0, 0}, {1, 0, -1, 0}, {0, 2, 0, 1}};
  ParamView view;
  int calls = 0;

  Fixture() { view.Append(theta); }
  double Loss(std::size_t t) const {
    double s = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i)
      s += (theta[i] - centers[t][i]) * (theta[i] - centers[t][i]);
    return 0.5 * s;
  }
  TaskSet Tasks(std::vector<double> w) {
    std::vector<TaskEntry> es;
    for (std::size_t t = 0; t < centers.size(); ++t)
      es.push_back({"t" + std::to_string(t), [this, t] { ++calls; return Loss(t); }});
    return TaskSet(std::move(es), std::move(w));
  }
};

TEST(Simplex, Validation) {
  EXPECT_NO_THROW(ValidateSimplex(std::vector<double>{0.25, 0.75}));
  EXPECT_THROW(ValidateSimplex(std::vector<double>{0.5, 0.6}), ContractError);
  EXPECT_THROW(ValidateSimplex(std::vector<double>{-0.1, 1.1}), ContractError);
  Fixture f;
  EXPECT_THROW(f.Tasks({0.5, 0.5}), ContractError);
}

TEST(Aggregate, WeightedSumOfTaskLosses) {
  Fixture f;
  TaskSet ts = f.Tasks({0.2, 0.3, 0.5});
  const auto l = TaskLosses(ts);
  EXPECT_DOUBLE_EQ(AggregateLoss(ts), 0.2 * l[0] + 0.3 * l[1] + 0.5 * l[2]);
  // A one-hot weight vector isolates a task.
  ts.set_weights({0, 1, 0});
  EXPECT_EQ(AggregateLoss(ts), f.Loss(1));
}

TEST(Coefficient, SharedDirectionMatchesPerTaskSpsa) {
  Fixture f;
  const TaskSet ts = f.Tasks({0.2, 0.3, 0.5});
  const auto before = f.theta;
  const MtlZoEstimate e = MtlZoCoefficient(ts, f.view, 5, 1e-3, {}, true);
  EXPECT_EQ(f.calls, 6);
  EXPECT_EQ(f.theta, before);
  GaussStream z(5);
  std::vector<double> zs(4);
  z.Fill(zs);
  for (std::size_t t = 0; t < 3; ++t) {
    double dir = 0.0;
    for (std::size_t i = 0; i < 4; ++i) dir += zs[i] * (f.theta[i] - f.centers[t][i]);
    EXPECT_NEAR(e.task_coeffs[t], dir, 1e-8);
  }
  EXPECT_DOUBLE_EQ(e.aggregate, WeightedCoefficient(e.task_coeffs, ts.weights()));
  // Linearity: aggregate equals the coefficient of the weighted loss.
  ZoConfig cfg;
  cfg.exact_restore = true;
  const LossFn agg = [&] { return AggregateLoss(ts); };
  EXPECT_NEAR(SpsaEstimate(agg, f.view, cfg, 5).coeff, e.aggregate, 1e-10);
  const auto mid = e.MidpointLosses();
  for (std::size_t t = 0; t < 3; ++t)
    EXPECT_NEAR(mid[t], f.Loss(t), 1e-5);
}

TEST(Coefficient, NonFiniteTaskLossRestores) {
  Fixture f;
  std::vector<TaskEntry> es{{"ok", [] { return 1.0; }},
                            {"bad", [] { return std::nan(""); }}};
  const TaskSet ts = TaskSet::Uniform(std::move(es));
  const auto before = f.theta;
  EXPECT_THROW(MtlZoCoefficient(ts, f.view, 1, 1e-3, {}, true), EstimationError);
  EXPECT_EQ(f.theta, before);
}

TEST(Coba, WarmupIsUniformAndWeightsStayOnSimplex) {
  CobaState s(3, {.val_batches = 2});
  EXPECT_EQ(s.window(), 10u);
  EXPECT_EQ(s.warmup(), 2u);
  for (std::size_t i = 0; i < 40; ++i) {
    const double k = static_cast<double>(i);
    const auto w = s.Update(std::vector<double>{1.0 / (1 + k), 1.0, 1.0 + 0.01 * k});
    if (i < 2) {
      EXPECT_TRUE(w.warmup);
      for (double v : w.weights) EXPECT_DOUBLE_EQ(v, 1.0 / 3);
    }
    EXPECT_NO_THROW(ValidateSimplex(w.weights));
    EXPECT_GE(w.df, 0.0);
    EXPECT_LE(w.df, 1.0);
  }
}

TEST(Coba, SlowTaskGainsWeight) {
  CobaState s(2, {.val_batches = 2});
  CobaWeights w;
  for (std::size_t i = 0; i < 30; ++i)
    w = s.Update(std::vector<double>{std::exp(-0.2 * static_cast<double>(i)), 1.0});
  const auto slopes = s.slopes();
  EXPECT_LT(slopes[0], 0.0);
  EXPECT_NEAR(slopes[1], 0.0, 1e-12);
  EXPECT_GT(w.rcs[1], w.rcs[0]);
  EXPECT_GT(w.weights[1], w.weights[0]);
}

TEST(Coba, CheckpointRoundTrip) {
  CobaState a(2), b(2);
  for (int i = 0; i < 12; ++i) a.Update(std::vector<double>{1.0 / (i + 1), 2.0 - 0.1 * i});
  b.LoadEntries(a.ToEntries("coba"), "coba");
  const std::vector<double> next{0.05, 0.7};
  EXPECT_EQ(a.Update(next).weights, b.Update(next).weights);
}

TEST(Famo, UpdateMatchesClosedForm) {
  FamoState s(3, {.logit_lr = 0.1, .decay = 0.01});
  s.set_logits({0.2, -0.1, 0.0});
  const std::vector<double> prev{1.0, 2.0, 0.5}, next{0.8, 1.9, 0.5};
  const auto xi = s.logits();
  const auto z = s.Weights();
  std::vector<double> d(3);
  for (int t = 0; t < 3; ++t) d[t] = std::log(prev[t]) - std::log(next[t]);
  const double zd = std::inner_product(z.begin(), z.end(), d.begin(), 0.0);
  s.Update(prev, next);
  for (int t = 0; t < 3; ++t) {
    const double expect = xi[t] * (1 - 0.1 * 0.01) - 0.1 * (z[t] * d[t] - z[t] * zd);
    EXPECT_NEAR(s.logits()[t], expect, 1e-15);
  }
}

TEST(Famo, FastImprovingTaskLosesWeight) {
  FamoState s(2);
  for (int i = 0; i < 20; ++i) s.Update(std::vector<double>{1.0, 1.0}, std::vector<double>{0.5, 1.0});
  const auto w = s.Weights();
  EXPECT_LT(w[0], w[1]);
  EXPECT_NEAR(w[0] + w[1], 1.0, 1e-15);
  EXPECT_THROW(s.Update(std::vector<double>{0.0, 1.0}, std::vector<double>{1.0, 1.0}),
               ContractError);
}

TEST(Famo, CombinedCoefficient) {
  const std::vector<double> w{0.25, 0.75}, l{2.0, 0.5}, c{1.0, -3.0};
  const double norm = 1.0 / (0.25 / 2.0 + 0.75 / 0.5);
  EXPECT_NEAR(FamoCombinedCoefficient(w, l, c),
              norm * (0.25 / 2.0 * 1.0 + 0.75 / 0.5 * -3.0), 1e-15);
}

}  // namespace
}  // namespace maskzo
