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

#ifndef MASKZO_HARNESS_H_
#define MASKZO_HARNESS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "maskzo/analysis.h"
#include "maskzo/config.h"
#include "maskzo/importance.h"

namespace maskzo {

struct RunRecord {
  std::size_t step = 0;
  std::size_t passes = 0;            // training forward passes so far
  std::vector<double> task_losses;   // evaluation losses
  double aggregate = 0.0;            // mean of task_losses
  double coeff = 0.0;                // coefficient applied at this step
  std::size_t active_params = 0;     // coordinates the update can move
  double wall_seconds = 0.0;
};

struct RunSummary {
  std::string method;
  std::uint64_t seed = 0;
  std::size_t steps = 0;
  std::size_t passes = 0;
  double eta = 0.0;  // resolved learning rate
  std::vector<double> initial_losses;
  std::vector<double> final_losses;
  double initial_average = 0.0;
  double final_average = 0.0;
  std::optional<double> optimum_loss;  // quadratic problems only
  std::optional<double> gap;           // final_average − optimum_loss
  std::size_t param_count = 0;
  std::size_t active_params = 0;
  bool completed = true;  // false when halted by run.stop_after
  double wall_seconds = 0.0;
};

struct RunResult {
  std::vector<RunRecord> records;
  RunSummary summary;
  ScoreSet scores;  // aggregated importance scores (masked methods)
  ScoreSet mask;
};

// Trains one configuration. When cfg.out is set, writes curves.csv,
// records.jsonl, summary.jsonl, config.cfg and, for masked methods,
// scores.bin and mask.bin.
RunResult RunExperiment(const ExperimentConfig& cfg);

nlohmann::json ToJson(const RunRecord& record);
nlohmann::json ToJson(const RunSummary& summary);
void WriteRunOutputs(const std::filesystem::path& dir,
                     const ExperimentConfig& cfg, const RunResult& result);

struct CompareRow {
  std::string method;
  std::vector<double> finals;  // final average loss per seed (inf if diverged)
  double mean = 0.0;
  double sd = 0.0;
  std::size_t diverged = 0;
};

struct CompareResult {
  std::vector<std::uint64_t> seeds;
  std::vector<CompareRow> rows;
  // Share of seeds where mazo ends below mtl-zo, when both are listed.
  std::optional<double> mazo_win_rate;
  std::size_t mazo_wins = 0;
};

// Runs every (method, seed) pair; seeds run in parallel worker threads.
// Results do not depend on the thread count.
CompareResult Compare(const ExperimentConfig& base,
                      const std::vector<std::string>& methods,
                      const std::vector<std::uint64_t>& seeds,
                      std::size_t threads);
nlohmann::json ToJson(const CompareResult& result);

struct ScoreResult {
  std::vector<ScoreSet> per_task;  // row-normalized task scores (mazo)
  ScoreSet scores;                 // aggregate used for the mask
  ScoreSet mask;
};

// Scores and mask at initialization for cfg.method (mazo for methods that
// do not mask).
ScoreResult ComputeScores(const ExperimentConfig& cfg);

// Spectra of each task Hessian and of the uniform aggregate, labelled
// "task<t>" and "aggregate". Quadratics use stored Hessians; other problems
// use finite differences of the evaluation loss (d ≤ 200).
std::vector<std::pair<std::string, SpectrumReport>> SpectrumStudy(
    const ExperimentConfig& cfg, std::size_t k = 0);

CollinearityReport CollinearityStudy(const ExperimentConfig& cfg,
                                     std::size_t n_z, bool shared);

}  // namespace maskzo

#endif  // MASKZO_HARNESS_H_
