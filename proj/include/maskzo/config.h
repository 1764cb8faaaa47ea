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

#ifndef MASKZO_CONFIG_H_
#define MASKZO_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "maskzo/importance.h"
#include "maskzo/multitask.h"
#include "maskzo/problems.h"
#include "maskzo/zo.h"

namespace maskzo {

enum class Method {
  kStlZo,
  kMtlZo,
  kMazo,
  kRandomMask,
  kMagnitudeMask,
  kWandaMask,
  kCoba,
  kFamo,
  kMtlLora,
};
std::string_view ToString(Method m);
Method ParseMethod(std::string_view name);
bool UsesMask(Method m);

// Perturb and update only unfrozen coordinates, or perturb everything and
// mask only the update.
enum class MaskMode { kPerturbAndUpdate, kUpdateOnly };
std::string_view ToString(MaskMode m);

// kTrace divides zo.eta by tr(Σ w_t H_t) (quadratic problems only); kAuto
// picks kTrace for quadratics and kAbsolute otherwise.
enum class EtaMode { kAuto, kAbsolute, kTrace };
std::string_view ToString(EtaMode m);

struct AdapterConfig {
  std::size_t rank = 0;  // plain LoRA rank; 0 trains W directly
  std::size_t mtl_rank = 16;
  std::size_t num_up = 3;
  double temperature = 0.5;
};

struct RunConfig {
  // Forward-pass budget; when non-zero it replaces zo.steps with
  // passes / (2 · tasks · probes).
  std::size_t passes = 0;
  std::size_t log_every = 10;
  std::size_t checkpoint_every = 0;
  // Stop (after checkpointing) once this many steps are done; 0 = never.
  std::size_t stop_after = 0;
  bool resume = false;
  double divergence_factor = 1e6;
  std::size_t mask_refresh = 0;  // recompute the mask every n steps; 0 = off
};

struct CompareConfig {
  std::vector<std::string> methods = {"mtl-zo", "mazo"};
  std::size_t seeds = 20;
  std::size_t threads = 0;  // 0 = hardware concurrency
};

struct ExperimentConfig {
  ProblemSpec problem;
  Method method = Method::kMtlZo;
  AdapterConfig adapter;
  ZoConfig zo{.epsilon = 1e-3, .eta = 1.0, .steps = 500};
  EtaMode eta_mode = EtaMode::kAuto;
  ImportanceConfig importance;
  MaskMode mask_mode = MaskMode::kPerturbAndUpdate;
  CobaConfig coba;
  FamoConfig famo;
  RunConfig run;
  CompareConfig compare;
  std::uint64_t seed = 0;
  std::string out;

  // Method/option compatibility and value ranges.
  void Validate() const;
  std::size_t StepCount() const;
};

struct ConfigKey {
  std::string name;
  std::string help;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

// Every configurable key, in documentation order.
const std::vector<ConfigKey>& ConfigKeys();

void SetConfigValue(ExperimentConfig& cfg, std::string_view key,
                    const std::string& value);
// `key = value` lines; '#' starts a comment.
void ApplyConfigText(ExperimentConfig& cfg, std::string_view text);
void LoadConfigFile(ExperimentConfig& cfg, const std::filesystem::path& path);
std::string DumpConfig(const ExperimentConfig& cfg);

}  // namespace maskzo

#endif  // MASKZO_CONFIG_H_
