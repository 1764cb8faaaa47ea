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

#include "maskzo/zo.h"

#include <cmath>
#include <string>

#include "maskzo/random.h"

namespace maskzo {
namespace {

// Adds scale * z_i to every trainable coordinate. Unmasked runs read the
// sequence in order; masked runs address only the trainable positions.
void ApplyDirection(ParamView& params, std::uint64_t seed, double scale,
                    CoordMask mask) {
  if (mask.empty()) {
    GaussStream stream(seed);
    params.ForEachSegment([&](std::size_t, std::span<double> seg) {
      for (double& v : seg) v += scale * stream.Next();
    });
    return;
  }
  Require(mask.size() == params.size(), "mask length does not match params");
  params.ForEachSegment([&](std::size_t offset, std::span<double> seg) {
    for (std::size_t k = 0; k < seg.size(); ++k) {
      if (!mask[offset + k]) continue;
      seg[k] += scale * GaussAt(seed, offset + k);
    }
  });
}

}  // namespace

void ZoConfig::Validate() const {
  Require(epsilon > 0.0 && std::isfinite(epsilon), "zo: epsilon must be > 0");
  Require(eta > 0.0 && std::isfinite(eta), "zo: eta must be > 0");
  Require(probes >= 1, "zo: probes must be >= 1");
}

EstimationError::EstimationError(Side side, double value)
    : Error("estimation",
            std::string("non-finite loss on the ") +
                (side == Side::kPlus ? "+eps" : "-eps") +
                " side: " + std::to_string(value)),
      side_(side) {}

void PerturbInPlace(ParamView& params, std::uint64_t seed, double scale,
                    CoordMask mask) {
  if (scale == 0.0) return;
  ApplyDirection(params, seed, scale, mask);
}

ZoEstimate SpsaEstimate(const LossFn& loss, ParamView& params,
                        const ZoConfig& cfg, std::uint64_t seed,
                        CoordMask mask) {
  const double eps = cfg.epsilon;
  std::vector<double> saved;
  if (cfg.exact_restore) saved = params.Snapshot();
  auto restore = [&](double from_scale) {
    if (cfg.exact_restore) {
      params.Assign(saved);
    } else {
      PerturbInPlace(params, seed, from_scale, mask);
    }
  };

  PerturbInPlace(params, seed, eps, mask);
  const double plus = loss();
  if (!std::isfinite(plus)) {
    restore(-eps);
    throw EstimationError(EstimationError::Side::kPlus, plus);
  }
  PerturbInPlace(params, seed, -2.0 * eps, mask);
  const double minus = loss();
  if (!std::isfinite(minus)) {
    restore(eps);
    throw EstimationError(EstimationError::Side::kMinus, minus);
  }
  restore(eps);
  return {(plus - minus) / (2.0 * eps), seed, plus, minus};
}

std::vector<ZoEstimate> SpsaEstimateMulti(const LossFn& loss, ParamView& params,
                                          const ZoConfig& cfg,
                                          std::uint64_t seed, CoordMask mask) {
  std::vector<ZoEstimate> out;
  out.reserve(cfg.probes);
  for (std::size_t k = 0; k < cfg.probes; ++k) {
    const std::uint64_t s = cfg.probes == 1 ? seed : DeriveSeed(seed, {k});
    out.push_back(SpsaEstimate(loss, params, cfg, s, mask));
  }
  return out;
}

void ZoSgdStep(ParamView& params, const ZoEstimate& estimate, double eta,
               CoordMask mask) {
  if (estimate.coeff == 0.0) return;
  ApplyDirection(params, estimate.perturb_seed, -eta * estimate.coeff, mask);
}

void ZoSgdStep(ParamView& params, std::span<const ZoEstimate> estimates,
               double eta, CoordMask mask) {
  if (estimates.empty()) return;
  const double per = eta / static_cast<double>(estimates.size());
  for (const auto& e : estimates) ZoSgdStep(params, e, per, mask);
}

double VarianceProbe(std::size_t d, std::size_t n_samples,
                     std::uint64_t seed) {
  Require(d >= 1, "VarianceProbe: d must be >= 1");
  Require(n_samples >= 2, "VarianceProbe: need at least two samples");
  std::vector<double> theta(d, 1.0);
  ParamView view;
  view.Append(theta);
  const LossFn half_norm = [&theta] {
    double s = 0.0;
    for (double v : theta) s += v * v;
    return 0.5 * s;
  };
  ZoConfig cfg;
  cfg.exact_restore = true;  // keep θ pinned at 1 across 10^5 probes

  // Welford accumulators per coordinate.
  std::vector<double> mean(d, 0.0);
  std::vector<double> m2(d, 0.0);
  for (std::size_t s = 0; s < n_samples; ++s) {
    const std::uint64_t probe_seed = DeriveSeed(seed, {s});
    const ZoEstimate est = SpsaEstimate(half_norm, view, cfg, probe_seed);
    GaussStream z(probe_seed);
    const double count = static_cast<double>(s + 1);
    for (std::size_t i = 0; i < d; ++i) {
      const double g = est.coeff * z.Next();
      const double delta = g - mean[i];
      mean[i] += delta / count;
      m2[i] += delta * (g - mean[i]);
    }
  }
  double total = 0.0;
  for (double v : m2) total += v / static_cast<double>(n_samples - 1);
  return total / static_cast<double>(d);
}

}  // namespace maskzo
