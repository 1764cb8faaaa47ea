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
#include <random>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "maskzo/analysis.h"
#include "maskzo/errors.h"
#include "maskzo/linalg.h"
#include "oracles.h"

namespace maskzo {
namespace {

// Rank-r task on coordinates [offset, offset + r) with eigenvalues 1, 1/2, ...
QuadraticTask AxisTask(std::size_t d, std::size_t offset, std::size_t r) {
  QuadraticTask t;
  t.u = Matrix(d, r);
  for (std::size_t k = 0; k < r; ++k) {
    t.u(offset + k, k) = 1.0;
    t.diag.push_back(1.0 / static_cast<double>(k + 1));
  }
  t.theta_star.assign(d, 0.0);
  return t;
}

TEST(Quadratic, GradientAndHessianMatchOracle) {
  std::mt19937_64 rng(4);
  QuadraticTask t;
  Eigen::MatrixXd u = Eigen::HouseholderQR<Eigen::MatrixXd>(
                          Eigen::MatrixXd::Random(6, 2)).householderQ() *
                      Eigen::MatrixXd::Identity(6, 2);
  t.u = oracle::FromEigen(u);
  t.diag = {2.0, 0.5};
  t.theta_star = {1, 0, -1, 0, 2, 0};
  const Eigen::MatrixXd h = u * Eigen::Vector2d(2.0, 0.5).asDiagonal() * u.transpose();
  EXPECT_LT(MaxAbsDiff(t.Hessian(), oracle::FromEigen(h)), 1e-14);
  const std::vector<double> theta{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
  Eigen::VectorXd diff(6);
  for (int i = 0; i < 6; ++i) diff(i) = theta[i] - t.theta_star[i];
  const Eigen::VectorXd g = h * diff;
  const auto got = t.Gradient(theta);
  for (int i = 0; i < 6; ++i) EXPECT_NEAR(got[i], g(i), 1e-13);
  EXPECT_NEAR(t.Loss(theta), 0.5 * diff.dot(h * diff), 1e-13);
}

TEST(Quadratic, OptimumOfConflictingIsotropicTasks) {
  const std::vector<QuadraticTask> ts{QuadraticTask::Isotropic(2, 1.0, {0, 0}),
                                      QuadraticTask::Isotropic(2, 1.0, {2, 0})};
  const std::vector<double> w{0.5, 0.5};
  const QuadraticOptimum opt = SolveQuadraticOptimum(ts, w);
  EXPECT_NEAR(opt.theta[0], 1.0, 1e-12);
  EXPECT_NEAR(opt.theta[1], 0.0, 1e-12);
  EXPECT_NEAR(opt.loss, 0.5, 1e-12);
  EXPECT_LT(MaxAbsDiff(WeightedHessian(ts, w), Matrix::Identity(2)), 1e-15);
}

TEST(FdHessian, RecoversQuadraticAndRestores) {
  const QuadraticTask t = AxisTask(5, 1, 3);
  std::vector<double> theta{0.3, -0.1, 0.2, 0.9, -0.4};
  const auto before = theta;
  ParamView v;
  v.Append(theta);
  const Matrix fd = FdHessian([&] { return t.Loss(theta); }, v);
  EXPECT_LT(MaxAbsDiff(fd, ExactQuadraticHessian(t)), 1e-6);
  EXPECT_EQ(theta, before);
  EXPECT_EQ(fd, fd.Transposed());
}

TEST(FdHessian, NonQuadraticOracleAndGuards) {
  // L = sin(x) y² → H = [[−sin x y², 2 cos x y], [2 cos x y, 2 sin x]].
  std::vector<double> p{0.7, -1.3};
  ParamView v;
  v.Append(p);
  const Matrix fd = FdHessian([&] { return std::sin(p[0]) * p[1] * p[1]; }, v);
  const double x = 0.7, y = -1.3;
  EXPECT_NEAR(fd(0, 0), -std::sin(x) * y * y, 1e-6);
  EXPECT_NEAR(fd(0, 1), 2 * std::cos(x) * y, 1e-6);
  EXPECT_NEAR(fd(1, 1), 2 * std::sin(x), 1e-6);
  EXPECT_THROW(FdHessian([] { return std::nan(""); }, v), NonFiniteError);
  std::vector<double> big(kMaxFdDim + 1);
  ParamView bv;
  bv.Append(big);
  EXPECT_THROW(FdHessian([] { return 0.0; }, bv), ContractError);
}

TEST(Spectrum, RanksOnDiagonal) {
  Matrix h(4, 4);
  h(0, 0) = 4;
  h(1, 1) = 2;
  h(2, 2) = 1;
  h(3, 3) = 0.001;
  const SpectrumReport r = Spectrum(h);
  EXPECT_EQ(r.eigenvalues, (std::vector<double>{4, 2, 1, 0.001}));
  EXPECT_EQ(r.normalized[1], 0.5);
  EXPECT_EQ(r.threshold_rank, 3u);
  double s = 7.001, ent = 0;
  for (double l : {4.0, 2.0, 1.0, 0.001}) ent -= l / s * std::log(l / s);
  EXPECT_NEAR(r.entropy_rank, std::exp(ent), 1e-12);
  EXPECT_EQ(Spectrum(h, 2).eigenvalues.size(), 2u);
  EXPECT_NEAR(Spectrum(Matrix::Identity(3)).entropy_rank, 3.0, 1e-12);
}

TEST(Spectrum, DisjointTasksAddRank) {
  std::vector<QuadraticTask> ts;
  for (std::size_t t = 0; t < 5; ++t) ts.push_back(AxisTask(50, 2 * t, 2));
  const std::vector<double> w(5, 0.2);
  const SpectrumReport agg = Spectrum(ExactQuadraticHessian(ts, w));
  EXPECT_EQ(agg.threshold_rank, 10u);
  for (const auto& t : ts) {
    const SpectrumReport one = Spectrum(ExactQuadraticHessian(t));
    EXPECT_EQ(one.threshold_rank, 2u);
    EXPECT_GT(agg.entropy_rank, one.entropy_rank);
    for (std::size_t i = 2; i < 50; ++i)
      EXPECT_GE(agg.normalized[i], one.normalized[i]);
  }
}

TEST(Collinearity, SharedIsRankOneIndependentIsNot) {
  std::vector<double> theta(30, 0.1);
  ParamView v;
  v.Append(theta);
  std::vector<TaskEntry> es;
  std::vector<QuadraticTask> ts;
  for (std::size_t t = 0; t < 4; ++t) ts.push_back(AxisTask(30, 5 * t, 5));
  for (std::size_t t = 0; t < 4; ++t)
    es.push_back({"t", [&, t] { return ts[t].Loss(theta); }});
  const TaskSet set = TaskSet::Uniform(std::move(es));
  const auto shared = CollinearityCheck(set, v, 50, true, 3);
  EXPECT_LE(shared.rank_ratio, 1e-10);
  EXPECT_EQ(shared.mean_normalized_eigenvalues.size(), 4u);
  const auto indep = CollinearityCheck(set, v, 50, false, 3);
  EXPECT_GT(indep.mean_rank_ratio, 0.05);
  EXPECT_EQ(theta, std::vector<double>(30, 0.1));
}

TEST(OriginFit, ExactAndNoisy) {
  const std::vector<std::pair<double, double>> line{{1, 2}, {2, 4}, {5, 10}};
  const OriginFit f = FitThroughOrigin(line);
  EXPECT_DOUBLE_EQ(f.slope, 2.0);
  EXPECT_DOUBLE_EQ(f.r2, 1.0);
  const std::vector<std::pair<double, double>> bent{{1, 5}, {2, 1}, {3, 6}};
  EXPECT_LT(FitThroughOrigin(bent).r2, 0.5);
  EXPECT_THROW(FitThroughOrigin(std::vector<std::pair<double, double>>{{1, 1}}),
               Error);
}

TEST(Variance, SweepIsLinearInDimension) {
  const std::vector<std::size_t> dims{4, 16, 64};
  const VarianceSweep s = RunVarianceSweep(dims, 4000, 1);
  EXPECT_GE(s.fit.r2, 0.99);
  EXPECT_NEAR(s.fit.slope, 1.0, 0.15);
  EXPECT_EQ(ToJson(s)["points"].size(), 3u);
}

}  // namespace
}  // namespace maskzo
