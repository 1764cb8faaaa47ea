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

#ifndef MASKZO_ZO_H_
#define MASKZO_ZO_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "maskzo/errors.h"
#include "maskzo/param_view.h"

namespace maskzo {

struct ZoConfig {
  double epsilon = 1e-3;
  double eta = 1e-3;
  std::size_t steps = 100;
  std::uint64_t master_seed = 0;
  // Independent perturbations averaged per step. 1 reproduces the plain
  // two-point estimator.
  std::size_t probes = 1;
  // Restore parameters from a cached copy instead of the third regeneration
  // pass. Costs a dense copy; intended for ulp-sensitive debugging.
  bool exact_restore = false;

  void Validate() const;
};

// Scalar form of the two-point estimate. The implied gradient is coeff * z,
// where z is regenerated from perturb_seed; z itself is never stored.
struct ZoEstimate {
  double coeff = 0.0;
  std::uint64_t perturb_seed = 0;
  double loss_plus = 0.0;
  double loss_minus = 0.0;
};

// Per-coordinate trainability aligned with a ParamView (nonzero = trainable).
// An empty span means every coordinate is trainable.
using CoordMask = std::span<const std::uint8_t>;

class EstimationError : public Error {
 public:
  enum class Side { kPlus, kMinus };
  EstimationError(Side side, double value);
  Side side() const { return side_; }

 private:
  Side side_;
};

using LossFn = std::function<double()>;

// params[i] += scale * z_i for every trainable i, with z_i the i-th value of
// the Gaussian sequence of `seed`. Masked coordinates are not touched.
void PerturbInPlace(ParamView& params, std::uint64_t seed, double scale,
                    CoordMask mask = {});

// Two-point estimate (L(θ+εz) − L(θ−εz)) / 2ε. Calls `loss` exactly twice and
// leaves the parameters where it found them (up to rounding of the
// +ε, −2ε, +ε sequence unless cfg.exact_restore is set).
ZoEstimate SpsaEstimate(const LossFn& loss, ParamView& params,
                        const ZoConfig& cfg, std::uint64_t seed,
                        CoordMask mask = {});

// cfg.probes estimates with seeds derived from `seed`; probes == 1 uses
// `seed` itself.
std::vector<ZoEstimate> SpsaEstimateMulti(const LossFn& loss, ParamView& params,
                                          const ZoConfig& cfg,
                                          std::uint64_t seed,
                                          CoordMask mask = {});

// params[i] -= eta * coeff * z_i over trainable coordinates.
void ZoSgdStep(ParamView& params, const ZoEstimate& estimate, double eta,
               CoordMask mask = {});
// Averages the probe updates: each is applied with eta / probes.
void ZoSgdStep(ParamView& params, std::span<const ZoEstimate> estimates,
               double eta, CoordMask mask = {});

// Per-coordinate variance of ĝ = coeff * z on L(θ) = ½‖θ‖² at θ = 1,
// averaged over coordinates. Analytically d + 1.
double VarianceProbe(std::size_t d, std::size_t n_samples, std::uint64_t seed);

}  // namespace maskzo

#endif  // MASKZO_ZO_H_
