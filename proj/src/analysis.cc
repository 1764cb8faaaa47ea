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

#include "maskzo/analysis.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "maskzo/errors.h"
#include "maskzo/linalg.h"
#include "maskzo/random.h"

namespace maskzo {

Matrix ExactQuadraticHessian(const QuadraticTask& task) {
  return task.Hessian();
}

Matrix ExactQuadraticHessian(std::span<const QuadraticTask> tasks,
                             std::span<const double> weights) {
  return WeightedHessian(tasks, weights);
}

Matrix FdHessian(const LossFn& loss, ParamView& params, double h_scale) {
  const std::size_t d = params.size();
  Require(d >= 1 && d <= kMaxFdDim,
          "FdHessian: dimension must be in [1, " + std::to_string(kMaxFdDim) +
              "]");
  Require(h_scale > 0.0, "FdHessian: step must be > 0");
  const auto base = params.Snapshot();
  std::vector<double> h(d);
  for (std::size_t i = 0; i < d; ++i) h[i] = h_scale * (1.0 + std::abs(base[i]));

  auto eval = [&](std::size_t i, double si, std::size_t j, double sj) {
    params.Assign(base);
    params[i] += si * h[i];
    params[j] += sj * h[j];
    const double v = loss();
    if (!std::isfinite(v)) {
      params.Assign(base);
      throw NonFiniteError("FdHessian: non-finite loss at coordinates (" +
                           std::to_string(i) + ", " + std::to_string(j) + ")");
    }
    return v;
  };

  Matrix out(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i; j < d; ++j) {
      // For i == j this is the 2h-spaced second difference.
      const double v = (eval(i, 1, j, 1) - eval(i, 1, j, -1) -
                        eval(i, -1, j, 1) + eval(i, -1, j, -1)) /
                       (4.0 * h[i] * h[j]);
      out(i, j) = v;
      out(j, i) = v;
    }
  }
  params.Assign(base);
  return out;
}

SpectrumReport Spectrum(const Matrix& h, std::size_t k, double threshold) {
  Require(h.is_square() && h.rows() > 0, "Spectrum: square matrix required");
  Require(threshold > 0.0 && threshold < 1.0,
          "Spectrum: threshold must lie in (0, 1)");
  const std::size_t d = h.rows();
  if (k == 0) k = std::min<std::size_t>(d, 100);
  Require(k <= d, "Spectrum: k exceeds dimension");

  const auto all = SymEigenvalues(h, d);
  SpectrumReport rep;
  rep.dim = d;
  rep.threshold = threshold;
  rep.eigenvalues.assign(all.begin(), all.begin() + k);
  const double top = all.front();
  rep.normalized.assign(k, 0.0);
  if (!(top > 0.0)) return rep;
  for (std::size_t i = 0; i < k; ++i) rep.normalized[i] = all[i] / top;
  rep.normalized[0] = 1.0;

  double sum = 0.0;
  for (double v : all) {
    if (v / top >= threshold) ++rep.threshold_rank;
    sum += std::max(v, 0.0);
  }
  double entropy = 0.0;
  for (double v : all) {
    const double p = std::max(v, 0.0) / sum;
    if (p > 0.0) entropy -= p * std::log(p);
  }
  rep.entropy_rank = std::exp(entropy);
  return rep;
}

CollinearityReport CollinearityCheck(const TaskSet& tasks, ParamView& params,
                                     std::size_t n_z, bool shared,
                                     std::uint64_t seed, double epsilon) {
  const std::size_t n_tasks = tasks.size();
  Require(n_tasks >= 2, "CollinearityCheck: needs T >= 2");
  Require(n_z >= 1, "CollinearityCheck: needs at least one probe");
  const std::size_t d = params.size();
  // Diagnostics leave the parameters bit-identical.
  ZoConfig cfg;
  cfg.epsilon = epsilon;
  cfg.exact_restore = true;

  CollinearityReport rep;
  rep.tasks = n_tasks;
  rep.probes = n_z;
  rep.shared = shared;
  rep.mean_normalized_eigenvalues.assign(n_tasks, 0.0);

  std::vector<std::vector<double>> grads(n_tasks, std::vector<double>(d));
  std::vector<double> z(d);
  for (std::size_t p = 0; p < n_z; ++p) {
    if (shared) {
      const std::uint64_t s = DeriveSeed(seed, {p});
      const auto est = MtlZoCoefficient(tasks, params, s, epsilon, {}, true);
      GaussStream stream(s);
      stream.Fill(z);
      for (std::size_t t = 0; t < n_tasks; ++t)
        for (std::size_t i = 0; i < d; ++i)
          grads[t][i] = est.task_coeffs[t] * z[i];
    } else {
      for (std::size_t t = 0; t < n_tasks; ++t) {
        const std::uint64_t s = DeriveSeed(seed, {p, t});
        const auto est = SpsaEstimate(tasks.task(t).loss, params, cfg, s);
        GaussStream stream(s);
        stream.Fill(z);
        for (std::size_t i = 0; i < d; ++i) grads[t][i] = est.coeff * z[i];
      }
    }
    // Gram matrix of the T estimates; shares its non-zero spectrum with the
    // d × d second-moment matrix Σ_t ĝ_t ĝ_tᵀ.
    Matrix gram(n_tasks, n_tasks);
    for (std::size_t a = 0; a < n_tasks; ++a)
      for (std::size_t b = a; b < n_tasks; ++b)
        gram(a, b) = gram(b, a) = Dot(grads[a], grads[b]);
    const auto ev = SymEigenvalues(gram, n_tasks);
    if (!(ev[0] > 0.0)) continue;  // every task flat along z
    const double ratio = std::max(ev[1], 0.0) / ev[0];
    rep.rank_ratio = std::max(rep.rank_ratio, ratio);
    rep.mean_rank_ratio += ratio / static_cast<double>(n_z);
    for (std::size_t k = 0; k < n_tasks; ++k)
      rep.mean_normalized_eigenvalues[k] +=
          std::max(ev[k], 0.0) / ev[0] / static_cast<double>(n_z);
  }
  return rep;
}

OriginFit FitThroughOrigin(std::span<const std::pair<double, double>> points) {
  Require(points.size() >= 2, "FitThroughOrigin: needs at least two points");
  double sxx = 0.0, sxy = 0.0, mean_y = 0.0;
  for (const auto& [x, y] : points) {
    sxx += x * x;
    sxy += x * y;
    mean_y += y;
  }
  if (!(sxx > 0.0)) throw DegenerateFitError("FitThroughOrigin: all x are 0");
  mean_y /= static_cast<double>(points.size());
  OriginFit fit;
  fit.slope = sxy / sxx;
  double ss_res = 0.0, ss_tot = 0.0;
  for (const auto& [x, y] : points) {
    ss_res += (y - fit.slope * x) * (y - fit.slope * x);
    ss_tot += (y - mean_y) * (y - mean_y);
  }
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return fit;
}

VarianceSweep RunVarianceSweep(std::span<const std::size_t> dims,
                               std::size_t n_samples, std::uint64_t seed) {
  VarianceSweep sweep;
  for (std::size_t d : dims) {
    const double v = VarianceProbe(d, n_samples, DeriveSeed(seed, {d}));
    sweep.points.emplace_back(static_cast<double>(d), v);
  }
  sweep.fit = FitThroughOrigin(sweep.points);
  return sweep;
}

nlohmann::json ToJson(const SpectrumReport& report) {
  return {{"record", "spectrum"},
          {"dim", report.dim},
          {"eigenvalues", report.eigenvalues},
          {"normalized", report.normalized},
          {"threshold", report.threshold},
          {"threshold_rank", report.threshold_rank},
          {"entropy_rank", report.entropy_rank}};
}

nlohmann::json ToJson(const CollinearityReport& report) {
  return {{"record", "collinearity"},
          {"tasks", report.tasks},
          {"probes", report.probes},
          {"shared", report.shared},
          {"mean_normalized_eigenvalues", report.mean_normalized_eigenvalues},
          {"rank_ratio", report.rank_ratio},
          {"mean_rank_ratio", report.mean_rank_ratio}};
}

nlohmann::json ToJson(const VarianceSweep& sweep) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& [d, v] : sweep.points) pts.push_back({{"d", d}, {"variance", v}});
  return {{"record", "variance"},
          {"points", pts},
          {"slope", sweep.fit.slope},
          {"r2", sweep.fit.r2}};
}

}  // namespace maskzo
