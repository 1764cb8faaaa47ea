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

#include "maskzo/config.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "maskzo/errors.h"

namespace maskzo {
namespace {

std::string_view Trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T ParseNumber(const std::string& key, std::string_view text) {
  T value{};
  const auto s = Trim(text);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ContractError("invalid value for " + key + ": '" + std::string(text) +
                        "'");
  }
  return value;
}

bool ParseBool(const std::string& key, std::string_view text) {
  const auto s = Trim(text);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ContractError("invalid boolean for " + key + ": '" + std::string(s) +
                      "'");
}

std::vector<std::string> SplitList(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto piece =
        Trim(text.substr(start, comma == std::string_view::npos
                                    ? std::string_view::npos
                                    : comma - start));
    if (!piece.empty()) out.emplace_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string FormatDouble(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

template <typename T>
std::string Join(const std::vector<T>& items) {
  std::ostringstream os;
  for (std::size_t i = 0; i < items.size(); ++i) os << (i ? "," : "") << items[i];
  return os.str();
}

// Field accessors so each key is one line below.
template <typename Field>
ConfigKey SizeKey(std::string name, std::string help, Field field) {
  return {name, std::move(help),
          [name, field](ExperimentConfig& c, const std::string& v) {
            field(c) = ParseNumber<std::size_t>(name, v);
          },
          [field](const ExperimentConfig& c) {
            return std::to_string(field(c));
          }};
}

template <typename Field>
ConfigKey DoubleKey(std::string name, std::string help, Field field) {
  return {name, std::move(help),
          [name, field](ExperimentConfig& c, const std::string& v) {
            field(c) = ParseNumber<double>(name, v);
          },
          [field](const ExperimentConfig& c) {
            return FormatDouble(field(c));
          }};
}

template <typename Field>
ConfigKey BoolKey(std::string name, std::string help, Field field) {
  return {name, std::move(help),
          [name, field](ExperimentConfig& c, const std::string& v) {
            field(c) = ParseBool(name, v);
          },
          [field](const ExperimentConfig& c) {
            return std::string(field(c)
                                   ? "true"
                                   : "false");
          }};
}

std::vector<ConfigKey> BuildKeys() {
  using C = ExperimentConfig;
  std::vector<ConfigKey> keys;
  keys.push_back({"method",
                  "stl-zo | mtl-zo | mazo | random-mask | magnitude-mask | "
                  "wanda-mask | coba | famo | mtl-lora",
                  [](C& c, const std::string& v) { c.method = ParseMethod(Trim(v)); },
                  [](const C& c) { return std::string(ToString(c.method)); }});
  keys.push_back({"seed", "master seed (problem, init, batches, perturbations)",
                  [](C& c, const std::string& v) {
                    c.seed = ParseNumber<std::uint64_t>("seed", v);
                  },
                  [](const C& c) { return std::to_string(c.seed); }});
  keys.push_back({"out", "output directory ('' writes nothing)",
                  [](C& c, const std::string& v) { c.out = Trim(v); },
                  [](const C& c) { return c.out; }});

  keys.push_back({"problem.kind", "quadratic-mtl | blobs-mtl",
                  [](C& c, const std::string& v) {
                    c.problem.kind = ParseProblemKind(Trim(v));
                  },
                  [](const C& c) { return std::string(ToString(c.problem.kind)); }});
  keys.push_back(SizeKey("problem.tasks", "number of tasks T",
                         [](auto& c) -> auto& { return c.problem.tasks; }));
  keys.push_back(SizeKey("problem.rows", "quadratic: weight rows",
                         [](auto& c) -> auto& { return c.problem.rows; }));
  keys.push_back(SizeKey("problem.cols", "quadratic: weight columns",
                         [](auto& c) -> auto& { return c.problem.cols; }));
  keys.push_back(SizeKey("problem.rank", "quadratic: Hessian rank per task",
                         [](auto& c) -> auto& { return c.problem.rank; }));
  keys.push_back(DoubleKey("problem.conflict_deg",
                           "quadratic: principal angle between task subspaces",
                           [](auto& c) -> auto& { return c.problem.conflict_deg; }));
  keys.push_back(DoubleKey("problem.curvature_max", "quadratic: largest eigenvalue",
                           [](auto& c) -> auto& { return c.problem.curvature_max; }));
  keys.push_back(DoubleKey("problem.curvature_min", "quadratic: smallest eigenvalue",
                           [](auto& c) -> auto& { return c.problem.curvature_min; }));
  keys.push_back(DoubleKey("problem.noise", "quadratic: per-step residual noise std",
                           [](auto& c) -> auto& { return c.problem.noise; }));
  keys.push_back(DoubleKey("problem.init_scale", "quadratic: std of θ₀",
                           [](auto& c) -> auto& { return c.problem.init_scale; }));
  keys.push_back(SizeKey("problem.input_dim", "blobs: feature dimension",
                         [](auto& c) -> auto& { return c.problem.input_dim; }));
  keys.push_back({"problem.hidden", "blobs: comma-separated hidden widths",
                  [](C& c, const std::string& v) {
                    c.problem.hidden.clear();
                    for (const auto& p : SplitList(v))
                      c.problem.hidden.push_back(
                          ParseNumber<std::size_t>("problem.hidden", p));
                  },
                  [](const C& c) { return Join(c.problem.hidden); }});
  keys.push_back(SizeKey("problem.classes", "blobs: classes per task",
                         [](auto& c) -> auto& { return c.problem.classes; }));
  keys.push_back(SizeKey("problem.batch", "blobs: training batch size",
                         [](auto& c) -> auto& { return c.problem.batch; }));
  keys.push_back(SizeKey("problem.eval_batch",
                         "blobs: evaluation/scoring batch size",
                         [](auto& c) -> auto& { return c.problem.eval_batch; }));
  keys.push_back(DoubleKey("problem.separation", "blobs: std of class centres",
                           [](auto& c) -> auto& { return c.problem.separation; }));
  keys.push_back(DoubleKey("problem.spread", "blobs: within-class std",
                           [](auto& c) -> auto& { return c.problem.spread; }));

  keys.push_back(SizeKey("lora.rank", "LoRA rank (0 = train W directly)",
                         [](auto& c) -> auto& { return c.adapter.rank; }));
  keys.push_back(SizeKey("mtl_lora.rank", "MTL-LoRA rank",
                         [](auto& c) -> auto& { return c.adapter.mtl_rank; }));
  keys.push_back(SizeKey("mtl_lora.num_up", "MTL-LoRA up-projections n",
                         [](auto& c) -> auto& { return c.adapter.num_up; }));
  keys.push_back(DoubleKey("mtl_lora.temperature", "MTL-LoRA temperature τ",
                           [](auto& c) -> auto& { return c.adapter.temperature; }));

  keys.push_back(DoubleKey("zo.epsilon", "perturbation scale ε",
                           [](auto& c) -> auto& { return c.zo.epsilon; }));
  keys.push_back(DoubleKey("zo.eta", "learning rate η (see zo.eta_mode)",
                           [](auto& c) -> auto& { return c.zo.eta; }));
  keys.push_back({"zo.eta_mode", "auto | absolute | trace",
                  [](C& c, const std::string& v) {
                    const auto s = Trim(v);
                    if (s == "auto") c.eta_mode = EtaMode::kAuto;
                    else if (s == "absolute") c.eta_mode = EtaMode::kAbsolute;
                    else if (s == "trace") c.eta_mode = EtaMode::kTrace;
                    else throw ContractError("zo.eta_mode must be auto, absolute or trace");
                  },
                  [](const C& c) { return std::string(ToString(c.eta_mode)); }});
  keys.push_back(SizeKey("zo.steps", "ZO-SGD steps (ignored when run.passes > 0)",
                         [](auto& c) -> auto& { return c.zo.steps; }));
  keys.push_back(SizeKey("zo.probes", "perturbations averaged per step",
                         [](auto& c) -> auto& { return c.zo.probes; }));
  keys.push_back(BoolKey("zo.exact_restore", "restore θ from a cached copy",
                         [](auto& c) -> auto& { return c.zo.exact_restore; }));

  keys.push_back(DoubleKey("importance.alpha", "greedy-score weight α",
                           [](auto& c) -> auto& { return c.importance.alpha; }));
  keys.push_back(DoubleKey("importance.beta", "|W| weight β",
                           [](auto& c) -> auto& { return c.importance.beta; }));
  keys.push_back(DoubleKey("importance.rho", "sparsity ρ (fraction frozen)",
                           [](auto& c) -> auto& { return c.importance.rho; }));
  keys.push_back(DoubleKey("importance.eta", "η inside the greedy score; 0 = training η",
                           [](auto& c) -> auto& { return c.importance.eta; }));
  keys.push_back(DoubleKey("importance.ridge", "Hessian ridge λ; negative = automatic",
                           [](auto& c) -> auto& { return c.importance.ridge; }));
  keys.push_back(DoubleKey("importance.ridge_scale",
                           "automatic ridge λ = scale · tr(H)/d",
                           [](auto& c) -> auto& { return c.importance.ridge_scale; }));
  keys.push_back({"mask.mode", "perturb (mask z and update) | update (mask update only)",
                  [](C& c, const std::string& v) {
                    const auto s = Trim(v);
                    if (s == "perturb") c.mask_mode = MaskMode::kPerturbAndUpdate;
                    else if (s == "update") c.mask_mode = MaskMode::kUpdateOnly;
                    else throw ContractError("mask.mode must be perturb or update");
                  },
                  [](const C& c) { return std::string(ToString(c.mask_mode)); }});

  keys.push_back(SizeKey("coba.val_batches", "CoBa M",
                         [](auto& c) -> auto& { return c.coba.val_batches; }));
  keys.push_back(SizeKey("coba.window", "CoBa history window N (0 = 5M)",
                         [](auto& c) -> auto& { return c.coba.window; }));
  keys.push_back(SizeKey("coba.warmup", "CoBa warmup W (0 = M)",
                         [](auto& c) -> auto& { return c.coba.warmup; }));
  keys.push_back(DoubleKey("famo.logit_lr", "FAMO logit learning rate",
                           [](auto& c) -> auto& { return c.famo.logit_lr; }));
  keys.push_back(DoubleKey("famo.decay", "FAMO logit decay γ",
                           [](auto& c) -> auto& { return c.famo.decay; }));

  keys.push_back(SizeKey("run.passes", "forward-pass budget (0 = use zo.steps)",
                         [](auto& c) -> auto& { return c.run.passes; }));
  keys.push_back(SizeKey("run.log_every", "record interval in steps",
                         [](auto& c) -> auto& { return c.run.log_every; }));
  keys.push_back(SizeKey("run.checkpoint_every", "checkpoint interval (0 = off)",
                         [](auto& c) -> auto& { return c.run.checkpoint_every; }));
  keys.push_back(SizeKey("run.stop_after", "stop after n steps (0 = run to end)",
                         [](auto& c) -> auto& { return c.run.stop_after; }));
  keys.push_back(BoolKey("run.resume", "continue from <out>/checkpoint.bin",
                         [](auto& c) -> auto& { return c.run.resume; }));
  keys.push_back(DoubleKey("run.divergence_factor",
                           "abort when loss exceeds factor × initial",
                           [](auto& c) -> auto& { return c.run.divergence_factor; }));
  keys.push_back(SizeKey("run.mask_refresh", "rebuild the mask every n steps (0 = off)",
                         [](auto& c) -> auto& { return c.run.mask_refresh; }));

  keys.push_back({"compare.methods", "comma-separated methods to compare",
                  [](C& c, const std::string& v) {
                    c.compare.methods = SplitList(v);
                    for (const auto& m : c.compare.methods) ParseMethod(m);
                  },
                  [](const C& c) { return Join(c.compare.methods); }});
  keys.push_back(SizeKey("compare.seeds", "seeds per method (seed, seed+1, ...)",
                         [](auto& c) -> auto& { return c.compare.seeds; }));
  keys.push_back(SizeKey("compare.threads", "worker threads (0 = all cores)",
                         [](auto& c) -> auto& { return c.compare.threads; }));
  return keys;
}

}  // namespace

std::string_view ToString(Method m) {
  switch (m) {
    case Method::kStlZo: return "stl-zo";
    case Method::kMtlZo: return "mtl-zo";
    case Method::kMazo: return "mazo";
    case Method::kRandomMask: return "random-mask";
    case Method::kMagnitudeMask: return "magnitude-mask";
    case Method::kWandaMask: return "wanda-mask";
    case Method::kCoba: return "coba";
    case Method::kFamo: return "famo";
    case Method::kMtlLora: return "mtl-lora";
  }
  return "?";
}

Method ParseMethod(std::string_view name) {
  for (Method m : {Method::kStlZo, Method::kMtlZo, Method::kMazo,
                   Method::kRandomMask, Method::kMagnitudeMask,
                   Method::kWandaMask, Method::kCoba, Method::kFamo,
                   Method::kMtlLora}) {
    if (ToString(m) == name) return m;
  }
  throw ContractError("unknown method '" + std::string(name) + "'");
}

bool UsesMask(Method m) {
  return m == Method::kMazo || m == Method::kRandomMask ||
         m == Method::kMagnitudeMask || m == Method::kWandaMask;
}

std::string_view ToString(MaskMode m) {
  return m == MaskMode::kPerturbAndUpdate ? "perturb" : "update";
}

std::string_view ToString(EtaMode m) {
  switch (m) {
    case EtaMode::kAuto: return "auto";
    case EtaMode::kAbsolute: return "absolute";
    case EtaMode::kTrace: return "trace";
  }
  return "?";
}

void ExperimentConfig::Validate() const {
  problem.Validate();
  zo.Validate();
  importance.Validate();
  const bool quadratic = problem.kind == ProblemKind::kQuadratic;
  Require(!(eta_mode == EtaMode::kTrace && !quadratic),
          "zo.eta_mode=trace needs a quadratic problem");
  Require(!(method == Method::kWandaMask && quadratic),
          "wanda-mask needs captured activations; use problem.kind=blobs-mtl");
  Require(!(method == Method::kMtlLora && adapter.rank > 0),
          "lora.rank cannot be combined with mtl-lora (use mtl_lora.rank)");
  if (method == Method::kMtlLora) {
    Require(adapter.mtl_rank >= 1 && adapter.num_up >= 1,
            "mtl_lora.rank and mtl_lora.num_up must be >= 1");
    Require(adapter.temperature > 0.0, "mtl_lora.temperature must be > 0");
  }
  Require(!(method == Method::kStlZo && run.mask_refresh > 0),
          "run.mask_refresh applies only to masked methods");
  Require(coba.val_batches >= 1, "coba.val_batches must be >= 1");
  Require(famo.logit_lr > 0.0 && famo.decay >= 0.0,
          "famo.logit_lr must be > 0 and famo.decay >= 0");
  Require(run.log_every >= 1, "run.log_every must be >= 1");
  Require(run.divergence_factor > 1.0, "run.divergence_factor must be > 1");
  Require(!(run.resume && out.empty()), "run.resume needs an output directory");
  Require(!((run.checkpoint_every > 0 || run.stop_after > 0) && out.empty()),
          "checkpointing needs an output directory");
}

std::size_t ExperimentConfig::StepCount() const {
  if (run.passes == 0) return zo.steps;
  return run.passes / (2 * problem.tasks * zo.probes);
}

const std::vector<ConfigKey>& ConfigKeys() {
  static const std::vector<ConfigKey> keys = BuildKeys();
  return keys;
}

void SetConfigValue(ExperimentConfig& cfg, std::string_view key,
                    const std::string& value) {
  for (const auto& k : ConfigKeys()) {
    if (k.name == key) {
      k.set(cfg, value);
      return;
    }
  }
  throw ContractError("unknown config key '" + std::string(key) + "'");
}

void ApplyConfigText(ExperimentConfig& cfg, std::string_view text) {
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ContractError("config line " + std::to_string(line_no) +
                          ": expected key = value");
    }
    SetConfigValue(cfg, Trim(line.substr(0, eq)),
                   std::string(Trim(line.substr(eq + 1))));
  }
}

void LoadConfigFile(ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  ApplyConfigText(cfg, buf.str());
}

std::string DumpConfig(const ExperimentConfig& cfg) {
  std::ostringstream os;
  for (const auto& k : ConfigKeys()) os << k.name << " = " << k.get(cfg) << "\n";
  return os.str();
}

}  // namespace maskzo
