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

// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails or exceeds its time limit.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "maskzo/analysis.h"
#include "maskzo/config.h"
#include "maskzo/harness.h"
#include "maskzo/importance.h"
#include "maskzo/model.h"
#include "maskzo/multitask.h"
#include "maskzo/random.h"
#include "maskzo/zo.h"
#include "oracles.h"

namespace maskzo {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* fmt, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

std::vector<double> ToStd(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

// L(θ) = ½ (θ − c)ᵀ H (θ − c) over a plain vector.
double QuadLoss(const Eigen::MatrixXd& h, const std::vector<double>& theta,
                const Eigen::VectorXd& c) {
  Eigen::VectorXd r(c.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = theta[i] - c(i);
  return 0.5 * r.dot(h * r);
}

Outcome Ac1() {
  std::mt19937_64 rng(1);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t d = 2 + static_cast<std::size_t>(rep) * 98 / 49;
    const Eigen::MatrixXd h = oracle::RandomSpd(d, rng);
    const Eigen::VectorXd c = oracle::RandomVector(d, rng);
    std::vector<double> theta = ToStd(oracle::RandomVector(d, rng));
    ParamView view;
    view.Append(theta);
    ZoConfig cfg;
    const std::uint64_t seed = DeriveSeed(1, {static_cast<std::uint64_t>(rep)});
    const ZoEstimate e =
        SpsaEstimate([&] { return QuadLoss(h, theta, c); }, view, cfg, seed);
    GaussStream z(seed);
    Eigen::VectorXd zv(d), diff(d);
    for (std::size_t i = 0; i < d; ++i) {
      zv(i) = z.Next();
      diff(i) = theta[i] - c(i);
    }
    const double exact = zv.dot(h * diff);
    worst = std::max(worst, std::fabs(e.coeff - exact) / std::fabs(exact));
  }
  return {worst <= 1e-9, Fmt("max relative error %.2e over 50 quadratics", worst)};
}

Outcome Ac2() {
  const std::size_t d = 100;
  std::mt19937_64 rng(2);
  std::vector<double> theta = ToStd(oracle::RandomVector(d, rng));
  std::vector<std::uint8_t> mask(d, 0);
  for (std::size_t i = 0; i < d; i += 2) mask[i] = 1;
  const std::vector<double> initial = theta;
  ParamView view;
  view.Append(theta);
  const Eigen::MatrixXd h = oracle::RandomSpd(d, rng);
  const Eigen::VectorXd c = oracle::RandomVector(d, rng);
  ZoConfig cfg;
  double worst_ulp = 0.0;
  for (std::uint64_t k = 0; k < 10000; ++k) {
    const std::vector<double> before = theta;
    const ZoEstimate e = SpsaEstimate([&] { return QuadLoss(h, theta, c); }, view,
                                      cfg, DeriveSeed(2, {k}), mask);
    // Drift in ulps of the largest magnitude the entry held in the cycle.
    for (std::size_t i = 0; i < d; ++i) {
      if (!mask[i]) continue;
      const double a = cfg.epsilon * GaussAt(e.perturb_seed, i);
      const double m = std::max({std::fabs(before[i]), std::fabs(before[i] + a),
                                 std::fabs(before[i] - a)});
      const double ulp = std::nextafter(m, std::numeric_limits<double>::infinity()) - m;
      worst_ulp = std::max(worst_ulp, std::fabs(theta[i] - before[i]) / ulp);
    }
    ZoSgdStep(view, e, 1e-4, mask);
  }
  double frozen_drift = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    if (!mask[i]) frozen_drift = std::max(frozen_drift, std::fabs(theta[i] - initial[i]));
  return {frozen_drift == 0.0 && worst_ulp <= 4.0,
          Fmt("frozen drift %.1e, max restore drift %.2f ulp per event", frozen_drift,
              worst_ulp)};
}

Outcome Ac3() {
  const std::size_t d = 64, tasks = 8;
  std::mt19937_64 rng(3);
  std::vector<double> theta = ToStd(oracle::RandomVector(d, rng));
  ParamView view;
  view.Append(theta);
  std::vector<Eigen::MatrixXd> hs;
  std::vector<Eigen::VectorXd> cs;
  std::vector<TaskEntry> es;
  for (std::size_t t = 0; t < tasks; ++t) {
    hs.push_back(oracle::RandomSpd(d, rng));
    cs.push_back(oracle::RandomVector(d, rng));
  }
  for (std::size_t t = 0; t < tasks; ++t)
    es.push_back({"t" + std::to_string(t), [&, t] { return QuadLoss(hs[t], theta, cs[t]); }});
  const TaskSet set = TaskSet::Uniform(std::move(es));
  const CollinearityReport shared = CollinearityCheck(set, view, 1000, true, 3);
  const CollinearityReport indep = CollinearityCheck(set, view, 1000, false, 3);
  return {shared.rank_ratio <= 1e-10,
          Fmt("shared max l2/l1 = %.2e (independent z: mean %.3f)", shared.rank_ratio,
              indep.mean_rank_ratio)};
}

Outcome Ac4() {
  const std::vector<std::size_t> dims{10, 100, 1000};
  const VarianceSweep s = RunVarianceSweep(dims, 100000, 4);
  return {s.fit.r2 >= 0.99,
          Fmt("slope %.4f, R^2 %.6f (var %.1f / %.1f / %.1f)", s.fit.slope, s.fit.r2,
              s.points[0].second, s.points[1].second, s.points[2].second)};
}

Outcome Ac5() {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t d = 2 + static_cast<std::size_t>(rep) % 19;
    const Eigen::MatrixXd h = oracle::RandomSpd(d, rng);
    const Eigen::VectorXd g = oracle::RandomVector(d, rng);
    const auto s = GlobalScore({ToStd(g), oracle::FromEigen(h)}, 0.0);
    const double free = oracle::QuadraticMinimum(h, g);
    for (std::size_t m = 0; m < d; ++m)
      worst = std::max(worst, std::fabs(s[m] - (oracle::QuadraticMinimum(h, g, m) - free)));
  }
  return {worst <= 1e-8, Fmt("max |score - QP gap| = %.2e over 100 instances", worst)};
}

Outcome Ac6() {
  std::mt19937_64 rng(6);
  double min_rho = 1.0, min_ratio = 1e300, max_ratio = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const Eigen::MatrixXd h = oracle::RandomSpd(20, rng);
    const Eigen::VectorXd g = oracle::RandomVector(20, rng);
    const double eta = 0.1 / h.trace();
    const auto s = GreedyScore({ToStd(g), oracle::FromEigen(h)}, eta);
    const auto mc = oracle::FrozenStepPenalty(h, g, eta, 100000, 600 + rep);
    min_rho = std::min(min_rho, oracle::Spearman(s, mc));
    double num = 0, den = 0;
    for (std::size_t m = 0; m < 20; ++m) {
      num += mc[m];
      den += s[m];
    }
    min_ratio = std::min(min_ratio, num / den);
    max_ratio = std::max(max_ratio, num / den);
  }
  return {min_rho >= 0.9, Fmt("min Spearman %.4f over 10 quadratics (oracle/score "
                              "scale %.3f..%.3f)", min_rho, min_ratio, max_ratio)};
}

Outcome Ac7() {
  const int rhos_pct[] = {10, 50, 80, 90, 99};
  const std::size_t widths[] = {7, 64, 1000};
  std::mt19937_64 rng(7);
  std::size_t bad = 0, rows = 0;
  for (int p : rhos_pct) {
    for (std::size_t n : widths) {
      // Exact integer ceiling of (100 − p)·n / 100.
      const std::size_t expect = ((100 - p) * n + 99) / 100;
      Matrix s(4, n);
      for (double& v : s.data()) v = std::uniform_real_distribution<double>()(rng);
      for (std::size_t k : RowKeepCounts(BuildRowMask(s, p / 100.0))) {
        bad += k != expect;
        ++rows;
      }
    }
  }
  return {bad == 0, Fmt("%zu of %zu rows off the expected count", bad, rows)};
}

Outcome Ac8() {
  const std::size_t d = 50, tasks = 5;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n;
  const Eigen::MatrixXd gauss = Eigen::MatrixXd::NullaryExpr(d, d, [&] { return n(rng); });
  // Columns of a random rotation give the disjoint task supports.
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gauss).householderQ();
  std::vector<QuadraticTask> ts;
  for (std::size_t t = 0; t < tasks; ++t) {
    QuadraticTask task;
    task.u = oracle::FromEigen(q.middleCols(2 * t, 2));
    task.diag = {1.0, 0.5};
    task.theta_star.assign(d, 0.0);
    ts.push_back(task);
  }
  const std::vector<double> w(tasks, 1.0 / tasks);
  const SpectrumReport agg = Spectrum(ExactQuadraticHessian(ts, w), d);
  bool slower = true;
  std::size_t max_single = 0;
  for (const auto& t : ts) {
    const SpectrumReport one = Spectrum(ExactQuadraticHessian(t), d);
    max_single = std::max(max_single, one.threshold_rank);
    // Both spectra are zero on the shared null space up to round-off.
    for (std::size_t i = 2; i < d; ++i)
      slower &= agg.normalized[i] >= one.normalized[i] - 1e-12;
    for (std::size_t i = 2; i < 10; ++i) slower &= agg.normalized[i] > one.normalized[i];
  }
  return {agg.threshold_rank == 10 && max_single == 2 && slower,
          Fmt("aggregate rank %zu, single-task rank %zu, entropy rank %.2f, "
              "slower decay %s", agg.threshold_rank, max_single, agg.entropy_rank,
              slower ? "yes" : "no")};
}

ExperimentConfig Benchmark() {
  ExperimentConfig c;  // defaults are the conflict benchmark
  c.run.passes = 4000;
  return c;
}

Outcome Ac9() {
  ExperimentConfig a = Benchmark();
  a.run.passes = 800;
  a.run.log_every = 1;
  a.method = Method::kMtlZo;
  ExperimentConfig b = a;
  b.method = Method::kMazo;
  b.importance.rho = 0.0;
  const RunResult ra = RunExperiment(a), rb = RunExperiment(b);
  bool same = ra.records.size() == rb.records.size();
  for (std::size_t i = 0; same && i < ra.records.size(); ++i)
    same = ra.records[i].task_losses == rb.records[i].task_losses &&
           ra.records[i].coeff == rb.records[i].coeff;
  return {same, Fmt("%zu logged steps %s", ra.records.size(),
                    same ? "bit-identical" : "differ")};
}

Outcome Ac10() {
  const ExperimentConfig c = Benchmark();
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 20; ++s) seeds.push_back(s);
  const CompareResult r = Compare(c, {"mtl-zo", "mazo"}, seeds, 0);
  return {r.mazo_wins >= 16,
          Fmt("MaZO wins %zu/20; final avg loss MTL-ZO %.3f+-%.3f, MaZO %.3f+-%.3f",
              r.mazo_wins, r.rows[0].mean, r.rows[0].sd, r.rows[1].mean,
              r.rows[1].sd)};
}

bool OnSimplex(const std::vector<double>& w) {
  try {
    ValidateSimplex(w);
    return true;
  } catch (const ContractError&) {
    return false;
  }
}

Outcome Ac11() {
  const std::size_t tasks = 4;
  CobaState coba(tasks);
  FamoState famo(tasks);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  bool warm_exact = true, simplex = true;
  std::vector<double> prev(tasks, 2.0);
  for (std::size_t step = 0; step < 500; ++step) {
    std::vector<double> loss(tasks);
    for (std::size_t t = 0; t < tasks; ++t)
      loss[t] = std::max(1e-3, prev[t] * (1.0 - 0.002 * (t + 1)) + 0.01 * n(rng));
    const CobaWeights cw = coba.Update(loss);
    if (cw.warmup)
      for (double v : cw.weights) warm_exact &= v == 1.0 / tasks;
    simplex &= OnSimplex(cw.weights);
    simplex &= OnSimplex(famo.Update(prev, loss));
    prev = loss;
  }
  FamoState decay(3, {.logit_lr = 0.05, .decay = 0.1});
  decay.set_logits({0.4, -1.2, 0.7});
  double worst = 0.0;
  const std::vector<double> same{0.5, 1.0, 2.0};
  for (int k = 0; k < 50; ++k) {
    auto norm = [](const std::vector<double>& v) {
      double s = 0;
      for (double x : v) s += x * x;
      return std::sqrt(s);
    };
    const double before = norm(decay.logits());
    decay.Update(same, same);
    worst = std::max(worst, std::fabs(norm(decay.logits()) / before - (1 - 0.05 * 0.1)));
  }
  return {warm_exact && simplex && worst <= 1e-14,
          Fmt("warmup exact %s, simplex %s, FAMO decay error %.1e", warm_exact ? "yes" : "no",
              simplex ? "yes" : "no", worst)};
}

Outcome Ac12() {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n;
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t r = 1 + rep % 7, c = 1 + rep % 11, b = 1 + rep % 5;
    Matrix w(r, c), x(b, c);
    for (double& v : w.data()) v = n(rng);
    for (double& v : x.data()) v = n(rng);
    const Matrix s = WandaScores(w, x);
    for (std::size_t j = 0; j < c; ++j) {
      double ss = 0;
      for (std::size_t k = 0; k < b; ++k) ss += x(k, j) * x(k, j);
      for (std::size_t i = 0; i < r; ++i)
        worst = std::max(worst, std::fabs(s(i, j) - std::fabs(w(i, j)) * std::sqrt(ss)));
    }
  }
  return {worst <= 1e-12, Fmt("max deviation %.1e over 100 instances", worst)};
}

Outcome Ac13() {
  const std::vector<std::size_t> sizes{6, 10, 4};
  Model m = Model::Mlp(sizes, Activation::kTanh, LossHead::kMse, 13, true);
  Matrix x(5, 6), y(5, 4);
  GaussStream g(14);
  for (double& v : x.data()) v = g.Next();
  for (double& v : y.data()) v = g.Next();
  const Matrix base = m.Forward(x);
  m.AttachLora(3, 15);
  const bool neutral = m.Forward(x) == base;

  // Train the adapters under a row mask and check the effective change.
  std::vector<Matrix> masks;
  for (auto& l : m.mutable_layers()) {
    masks.push_back(BuildRowMask(RandomScores(l.d_out(), l.d_in(), 16), 0.5));
    l.lora->delta_mask = masks.back();
  }
  ParamView p = m.Params();
  ZoConfig cfg;
  for (std::uint64_t k = 0; k < 50; ++k) {
    const ZoEstimate e = SpsaEstimate([&] { return m.Loss({x, y}); }, p, cfg, k);
    ZoSgdStep(p, e, 0.01);
  }
  bool outside_zero = true, inside_moved = false;
  for (std::size_t l = 0; l < masks.size(); ++l) {
    const Matrix d = m.layers()[l].lora->Delta();
    for (std::size_t i = 0; i < d.rows(); ++i)
      for (std::size_t j = 0; j < d.cols(); ++j) {
        if (masks[l](i, j) == 0.0) outside_zero &= d(i, j) == 0.0;
        else inside_moved |= d(i, j) != 0.0;
      }
  }
  const double eff = EffectiveAdapterDim(64, 0.8);
  return {neutral && outside_zero && inside_moved && std::fabs(eff - 12.8) < 1e-12,
          Fmt("zero-init neutral %s, masked delta zero outside M %s, rank-64 rho=0.8 "
              "effective dim %.1f", neutral ? "yes" : "no", outside_zero ? "yes" : "no",
              eff)};
}

struct Criterion {
  const char* id;
  double limit_seconds;
  std::function<Outcome()> check;
};

}  // namespace
}  // namespace maskzo

int main() {
  using namespace maskzo;
  const Criterion all[] = {
      {"AC-1", 5, Ac1},    {"AC-2", 10, Ac2},  {"AC-3", 5, Ac3},
      {"AC-4", 60, Ac4},   {"AC-5", 10, Ac5},  {"AC-6", 120, Ac6},
      {"AC-7", 1, Ac7},    {"AC-8", 5, Ac8},   {"AC-9", 5, Ac9},
      {"AC-10", 120, Ac10}, {"AC-11", 10, Ac11}, {"AC-12", 1, Ac12},
      {"AC-13", 5, Ac13},
  };
  int failures = 0;
  for (const Criterion& c : all) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.limit_seconds;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("%s %s: %s [%.2fs / %.0fs limit]\n", pass ? "PASS" : "FAIL", c.id,
                o.detail.c_str(), secs, c.limit_seconds);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
