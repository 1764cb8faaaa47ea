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

#include "maskzo/importance.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "maskzo/checkpoint.h"
#include "maskzo/errors.h"
#include "maskzo/linalg.h"
#include "maskzo/random.h"

namespace maskzo {
namespace {

void CheckSameLength(std::size_t a, std::size_t b, const char* what) {
  Require(a == b, std::string(what) + ": length mismatch");
}

// Indices of the k largest values; equal values prefer the lower index.
std::vector<std::size_t> TopK(std::span<const double> s, std::size_t k) {
  std::vector<std::size_t> idx(s.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      return s[a] > s[b] || (s[a] == s[b] && a < b);
                    });
  idx.resize(k);
  return idx;
}

}  // namespace

void ImportanceConfig::Validate() const {
  Require(rho >= 0.0 && rho < 1.0, "importance.rho must lie in [0, 1)");
  Require(eta >= 0.0, "importance.eta must be >= 0");
  Require(ridge_scale >= 0.0, "importance.ridge_scale must be >= 0");
  Require(std::isfinite(alpha) && std::isfinite(beta),
          "importance.alpha and importance.beta must be finite");
}

RowCurvature ComputeRowCurvature(const Matrix& x) {
  Require(x.rows() >= 1, "ComputeRowCurvature: needs at least one sample");
  const std::size_t n = x.rows(), d = x.cols();
  RowCurvature c{std::vector<double>(d, 0.0), Matrix(d, d)};
  for (std::size_t s = 0; s < n; ++s) {
    auto row = x.row(s);
    for (std::size_t i = 0; i < d; ++i) {
      c.g[i] += row[i];
      for (std::size_t j = 0; j < d; ++j) c.h(i, j) += row[i] * row[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (double& v : c.g) v *= inv;
  for (double& v : c.h.data()) v *= inv;
  return c;
}

double AutoRidge(const Matrix& h, double scale) {
  Require(h.is_square() && h.rows() > 0, "AutoRidge: square matrix required");
  return scale * h.Trace() / static_cast<double>(h.rows());
}

std::vector<double> GlobalScore(const RowCurvature& curv, double ridge) {
  const std::size_t d = curv.g.size();
  Require(curv.h.rows() == d && curv.h.cols() == d,
          "GlobalScore: H must be d x d with d = len(g)");
  Require(ridge >= 0.0, "GlobalScore: ridge must be >= 0");
  Matrix reg = curv.h;
  for (std::size_t i = 0; i < d; ++i) reg(i, i) += ridge;
  const Matrix inv = SpdInverse(reg);
  const auto v = MatVec(inv, curv.g);
  std::vector<double> out(d);
  for (std::size_t m = 0; m < d; ++m) out[m] = v[m] * v[m] / (2.0 * inv(m, m));
  return out;
}

std::vector<double> GreedyScore(const RowCurvature& curv, double eta) {
  const std::size_t d = curv.g.size();
  Require(curv.h.rows() == d && curv.h.cols() == d,
          "GreedyScore: H must be d x d with d = len(g)");
  const auto hg = MatVec(curv.h, curv.g);
  const double eta2 = eta * eta;
  std::vector<double> out(d);
  for (std::size_t m = 0; m < d; ++m) {
    const double g2 = curv.g[m] * curv.g[m];
    out[m] = g2 * eta + curv.h(m, m) * g2 * eta2 - 4.0 * eta2 * curv.g[m] * hg[m];
  }
  return out;
}

std::vector<double> CombineScores(std::span<const double> global,
                                  std::span<const double> greedy,
                                  std::span<const double> w_row,
                                  const ImportanceConfig& cfg) {
  CheckSameLength(global.size(), greedy.size(), "CombineScores");
  CheckSameLength(global.size(), w_row.size(), "CombineScores");
  std::vector<double> out(global.size());
  for (std::size_t m = 0; m < out.size(); ++m)
    out[m] = global[m] + cfg.alpha * greedy[m] + cfg.beta * std::abs(w_row[m]);
  return out;
}

std::vector<double> NormalizeRow(std::span<const double> scores) {
  Require(!scores.empty(), "NormalizeRow: empty row");
  const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
  const double mn = *lo, range = *hi - *lo;
  std::vector<double> out(scores.size(), 0.0);
  if (!(range > 0.0)) return out;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (scores[i] - mn) / range;
  return out;
}

Matrix NormalizeRows(const Matrix& scores) {
  Matrix out(scores.rows(), scores.cols());
  for (std::size_t r = 0; r < scores.rows(); ++r) {
    const auto row = NormalizeRow(scores.row(r));
    std::copy(row.begin(), row.end(), out.row(r).begin());
  }
  return out;
}

ScoreSet AggregateTasks(std::span<const ScoreSet> per_task) {
  Require(!per_task.empty(), "AggregateTasks: no tasks");
  ScoreSet total = per_task[0];
  for (std::size_t t = 1; t < per_task.size(); ++t) {
    Require(per_task[t].size() == total.size(),
            "AggregateTasks: layer count mismatch");
    for (std::size_t l = 0; l < total.size(); ++l) {
      Require(per_task[t][l].rows() == total[l].rows() &&
                  per_task[t][l].cols() == total[l].cols(),
              "AggregateTasks: shape mismatch in layer " + std::to_string(l));
      total[l] = Add(total[l], per_task[t][l]);
    }
  }
  return total;
}

std::size_t KeepCount(std::size_t n, double rho) {
  Require(rho >= 0.0 && rho < 1.0, "rho must lie in [0, 1)");
  if (n == 0) return 0;
  const double x = (1.0 - rho) * static_cast<double>(n);
  // (1−0.9)·100 evaluates to 10.000000000000002; drop that round-off.
  auto k = static_cast<std::size_t>(std::ceil(x - 1e-9 * std::max(1.0, x)));
  return std::clamp<std::size_t>(k, 1, n);
}

Matrix BuildRowMask(const Matrix& scores, double rho) {
  const std::size_t k = KeepCount(scores.cols(), rho);
  Matrix mask(scores.rows(), scores.cols());
  for (std::size_t r = 0; r < scores.rows(); ++r)
    for (std::size_t c : TopK(scores.row(r), k)) mask(r, c) = 1.0;
  return mask;
}

Matrix BuildPooledMask(const Matrix& scores, double rho) {
  const std::size_t k = KeepCount(scores.size(), rho);
  Matrix mask(scores.rows(), scores.cols());
  for (std::size_t i : TopK(scores.data(), k)) mask.data()[i] = 1.0;
  return mask;
}

Matrix MaskedUpdate(const Matrix& delta, const Matrix& mask) {
  Require(delta.rows() == mask.rows() && delta.cols() == mask.cols(),
          "MaskedUpdate: shape mismatch");
  return Hadamard(delta, mask);
}

Matrix LayerScores(const Matrix& w, std::span<const RowCurvature> curv,
                   const ImportanceConfig& cfg, double eta) {
  Require(curv.size() == 1 || curv.size() == w.rows(),
          "LayerScores: need one shared curvature or one per row");
  Matrix out(w.rows(), w.cols());
  std::vector<double> global, greedy;
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const RowCurvature& c = curv.size() == 1 ? curv[0] : curv[r];
    Require(c.g.size() == w.cols(), "LayerScores: curvature width mismatch");
    if (r == 0 || curv.size() > 1) {
      const double ridge = cfg.ridge >= 0.0 ? cfg.ridge
                                            : AutoRidge(c.h, cfg.ridge_scale);
      global = GlobalScore(c, ridge);
      greedy = GreedyScore(c, eta);
    }
    const auto s = CombineScores(global, greedy, w.row(r), cfg);
    std::copy(s.begin(), s.end(), out.row(r).begin());
  }
  return out;
}

std::string_view ToString(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kRandom:
      return "random";
    case BaselineKind::kMagnitude:
      return "magnitude";
    case BaselineKind::kWanda:
      return "wanda";
  }
  return "?";
}

Matrix WandaScores(const Matrix& w, const Matrix& x) {
  Require(x.cols() == w.cols(), "WandaScores: inputs must have d_in columns");
  std::vector<double> norms(w.cols(), 0.0);
  for (std::size_t s = 0; s < x.rows(); ++s)
    for (std::size_t j = 0; j < x.cols(); ++j) norms[j] += x(s, j) * x(s, j);
  for (double& v : norms) v = std::sqrt(v);
  Matrix out(w.rows(), w.cols());
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j)
      out(i, j) = std::abs(w(i, j)) * norms[j];
  return out;
}

Matrix MagnitudeScores(const Matrix& w) {
  Matrix out(w.rows(), w.cols());
  for (std::size_t i = 0; i < w.size(); ++i)
    out.data()[i] = std::abs(w.data()[i]);
  return out;
}

Matrix RandomScores(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Matrix out(rows, cols);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data()[i] = UniformAt(seed, i);
  return out;
}

Matrix BaselineMask(BaselineKind kind, const Matrix& scores, double rho) {
  return kind == BaselineKind::kWanda ? BuildRowMask(scores, rho)
                                      : BuildPooledMask(scores, rho);
}

std::vector<std::size_t> RowKeepCounts(const Matrix& mask) {
  std::vector<std::size_t> out(mask.rows(), 0);
  for (std::size_t r = 0; r < mask.rows(); ++r)
    for (double v : mask.row(r)) out[r] += v != 0.0;
  return out;
}

double EffectiveAdapterDim(std::size_t rank, double rho) {
  Require(rho >= 0.0 && rho < 1.0, "rho must lie in [0, 1)");
  return static_cast<double>(rank) * (1.0 - rho);
}

std::vector<std::uint8_t> CoordinateMask(const Model& model,
                                         const ScoreSet& masks) {
  Require(!model.has_lora() && !model.has_mtl_lora(),
          "CoordinateMask: adapter models mask the adapter delta instead");
  Require(masks.size() == model.layers().size(),
          "CoordinateMask: one mask per layer required");
  std::vector<std::uint8_t> out;
  out.reserve(model.ParamCount());
  for (std::size_t l = 0; l < masks.size(); ++l) {
    const auto& layer = model.layers()[l];
    Require(masks[l].rows() == layer.w.rows() &&
                masks[l].cols() == layer.w.cols(),
            "CoordinateMask: mask shape mismatch in layer " +
                std::to_string(l));
    for (double v : masks[l].data()) out.push_back(v != 0.0 ? 1 : 0);
    out.insert(out.end(), layer.bias.size(), 1);
  }
  return out;
}

void SaveScoreSet(const std::filesystem::path& path, const ScoreSet& set,
                  std::string_view label) {
  std::vector<NamedMatrix> entries;
  for (std::size_t l = 0; l < set.size(); ++l)
    entries.push_back(
        {"layer" + std::to_string(l) + "." + std::string(label), set[l]});
  WriteBundle(path, entries);
}

ScoreSet LoadScoreSet(const std::filesystem::path& path,
                      std::string_view label) {
  const auto entries = ReadBundle(path);
  ScoreSet out;
  for (std::size_t l = 0;; ++l) {
    const std::string name =
        "layer" + std::to_string(l) + "." + std::string(label);
    if (!HasEntry(entries, name)) break;
    out.push_back(FindEntry(entries, name));
  }
  Require(!out.empty(), "LoadScoreSet: no '" + std::string(label) +
                            "' entries in " + path.string());
  return out;
}

}  // namespace maskzo
