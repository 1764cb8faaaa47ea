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

// Command-line front end: run, compare, score, spectrum, collinearity,
// variance. Every config key is also a --flag; flags override --config.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "maskzo/analysis.h"
#include "maskzo/checkpoint.h"
#include "maskzo/config.h"
#include "maskzo/errors.h"
#include "maskzo/harness.h"
#include "maskzo/importance.h"

namespace {

using maskzo::ExperimentConfig;
using nlohmann::json;

struct Overrides {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;
};

void AddConfigFlags(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--config", ov.config_path, "flat key = value config file");
  for (const auto& key : maskzo::ConfigKeys()) {
    auto* opt = cmd->add_option("--" + key.name, ov.values[key.name], key.help);
    ov.options.emplace_back(key.name, opt);
  }
}

ExperimentConfig Resolve(const Overrides& ov) {
  ExperimentConfig cfg;
  if (!ov.config_path.empty()) maskzo::LoadConfigFile(cfg, ov.config_path);
  for (const auto& [name, opt] : ov.options) {
    if (opt->count() > 0) maskzo::SetConfigValue(cfg, name, ov.values.at(name));
  }
  cfg.Validate();
  return cfg;
}

void WriteLine(const std::filesystem::path& path, const json& j) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw maskzo::IoError("cannot write " + path.string());
  out << j.dump() << "\n";
}

int CmdRun(const Overrides& ov) {
  const auto cfg = Resolve(ov);
  const auto result = maskzo::RunExperiment(cfg);
  std::cout << maskzo::ToJson(result.summary).dump() << "\n";
  return 0;
}

int CmdCompare(const Overrides& ov) {
  const auto cfg = Resolve(ov);
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < cfg.compare.seeds; ++i) seeds.push_back(cfg.seed + i);
  const auto result =
      maskzo::Compare(cfg, cfg.compare.methods, seeds, cfg.compare.threads);
  const json j = maskzo::ToJson(result);
  for (const auto& row : result.rows) {
    std::cerr << row.method << ": " << row.mean << " +- " << row.sd
              << " (n=" << row.finals.size() << ", diverged=" << row.diverged
              << ")\n";
  }
  if (result.mazo_win_rate)
    std::cerr << "mazo beats mtl-zo on " << result.mazo_wins << "/"
              << seeds.size() << " seeds\n";
  if (!cfg.out.empty())
    WriteLine(std::filesystem::path(cfg.out) / "compare.jsonl", j);
  std::cout << j.dump() << "\n";
  return 0;
}

int CmdScore(const Overrides& ov) {
  const auto cfg = Resolve(ov);
  const auto res = maskzo::ComputeScores(cfg);
  json layers = json::array();
  for (std::size_t l = 0; l < res.mask.size(); ++l) {
    layers.push_back({{"layer", l},
                      {"rows", res.mask[l].rows()},
                      {"cols", res.mask[l].cols()},
                      {"keep_per_row", maskzo::RowKeepCounts(res.mask[l])}});
  }
  if (!cfg.out.empty()) {
    const std::filesystem::path dir(cfg.out);
    std::filesystem::create_directories(dir);
    std::vector<maskzo::NamedMatrix> entries;
    for (std::size_t l = 0; l < res.scores.size(); ++l)
      entries.push_back({"layer" + std::to_string(l) + ".scores", res.scores[l]});
    for (std::size_t t = 0; t < res.per_task.size(); ++t)
      for (std::size_t l = 0; l < res.per_task[t].size(); ++l)
        entries.push_back({"task" + std::to_string(t) + ".layer" +
                               std::to_string(l) + ".scores",
                           res.per_task[t][l]});
    maskzo::WriteBundle(dir / "scores.bin", entries);
    maskzo::SaveScoreSet(dir / "mask.bin", res.mask, "mask");
  }
  std::cout << json{{"record", "score"},
                    {"method", std::string(maskzo::ToString(cfg.method))},
                    {"rho", cfg.importance.rho},
                    {"layers", layers}}
                   .dump()
            << "\n";
  return 0;
}

int CmdSpectrum(const Overrides& ov, std::size_t k) {
  const auto cfg = Resolve(ov);
  std::string lines;
  for (const auto& [label, rep] : maskzo::SpectrumStudy(cfg, k)) {
    json j = maskzo::ToJson(rep);
    j["label"] = label;
    lines += j.dump() + "\n";
  }
  if (!cfg.out.empty()) {
    std::filesystem::create_directories(cfg.out);
    std::ofstream(std::filesystem::path(cfg.out) / "spectrum.jsonl") << lines;
  }
  std::cout << lines;
  return 0;
}

int CmdCollinearity(const Overrides& ov, std::size_t probes, bool independent) {
  const auto cfg = Resolve(ov);
  const json j =
      maskzo::ToJson(maskzo::CollinearityStudy(cfg, probes, !independent));
  if (!cfg.out.empty())
    WriteLine(std::filesystem::path(cfg.out) / "collinearity.jsonl", j);
  std::cout << j.dump() << "\n";
  return 0;
}

int CmdVariance(const Overrides& ov, const std::vector<std::size_t>& dims,
                std::size_t samples) {
  const auto cfg = Resolve(ov);
  const json j = maskzo::ToJson(maskzo::RunVarianceSweep(dims, samples, cfg.seed));
  if (!cfg.out.empty())
    WriteLine(std::filesystem::path(cfg.out) / "variance.jsonl", j);
  std::cout << j.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"maskzo: masked zeroth-order multi-task fine-tuning toolkit"};
  app.require_subcommand(1);

  Overrides run_ov, cmp_ov, score_ov, spec_ov, col_ov, var_ov;
  auto* run = app.add_subcommand("run", "train one configuration");
  AddConfigFlags(run, run_ov);
  auto* cmp = app.add_subcommand("compare", "method x seed sweep");
  AddConfigFlags(cmp, cmp_ov);
  auto* score = app.add_subcommand("score", "emit importance scores and mask");
  AddConfigFlags(score, score_ov);

  std::size_t k = 0;
  auto* spec = app.add_subcommand("spectrum", "Hessian spectra per task and aggregate");
  AddConfigFlags(spec, spec_ov);
  spec->add_option("--k", k, "eigenvalues to report (0 = min(d, 100))");

  std::size_t probes = 1000;
  bool independent = false;
  auto* col = app.add_subcommand("collinearity", "rank of per-task ZO gradients");
  AddConfigFlags(col, col_ov);
  col->add_option("--probes", probes, "number of perturbations");
  col->add_flag("--independent", independent, "draw a separate z per task");

  std::vector<std::size_t> dims = {10, 100, 1000};
  std::size_t samples = 100000;
  auto* var = app.add_subcommand("variance", "ZO gradient variance vs dimension");
  AddConfigFlags(var, var_ov);
  var->add_option("--dims", dims, "dimensions to probe")->delimiter(',');
  var->add_option("--samples", samples, "probes per dimension");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return CmdRun(run_ov);
    if (*cmp) return CmdCompare(cmp_ov);
    if (*score) return CmdScore(score_ov);
    if (*spec) return CmdSpectrum(spec_ov, k);
    if (*col) return CmdCollinearity(col_ov, probes, independent);
    if (*var) return CmdVariance(var_ov, dims, samples);
  } catch (const maskzo::Error& e) {
    std::cout << json{{"error", e.kind()}, {"message", e.what()}}.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cout << json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
    return 3;
  }
  return 1;
}
