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

#include "maskzo/harness.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "maskzo/checkpoint.h"
#include "maskzo/errors.h"
#include "maskzo/multitask.h"
#include "maskzo/problems.h"
#include "maskzo/random.h"

namespace maskzo {
namespace {

enum SeedTag : std::uint64_t {
  kProblemTag = 101,
  kAdapterTag,
  kBatchTag,
  kPerturbTag,
  kMaskTag,
  kProbeBatchTag,
};

constexpr const char* kCheckpointName = "checkpoint.bin";

double Mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Matrix RowVector(std::span<const double> v) {
  return Matrix(1, v.size(), std::vector<double>(v.begin(), v.end()));
}

std::vector<double> ToVector(const Matrix& m) {
  return {m.data().begin(), m.data().end()};
}

Matrix StackRows(const std::vector<Matrix>& parts) {
  std::size_t rows = 0;
  for (const auto& p : parts) rows += p.rows();
  Matrix out(rows, parts.front().cols());
  std::size_t r = 0;
  for (const auto& p : parts)
    for (std::size_t i = 0; i < p.rows(); ++i, ++r)
      std::copy(p.row(i).begin(), p.row(i).end(), out.row(r).begin());
  return out;
}

class Trainer {
 public:
  explicit Trainer(const ExperimentConfig& cfg) : cfg_(cfg) {
    cfg_.Validate();
    problem_ = MakeProblem(cfg_.problem, DeriveSeed(cfg_.seed, {kProblemTag}));
    num_tasks_ = problem_->num_tasks();
    Model& model = problem_->model();
    const std::uint64_t adapter_seed = DeriveSeed(cfg_.seed, {kAdapterTag});
    if (cfg_.method == Method::kMtlLora) {
      model.AttachMtlLora(cfg_.adapter.mtl_rank, num_tasks_,
                          cfg_.adapter.num_up, cfg_.adapter.temperature,
                          adapter_seed);
    } else if (cfg_.adapter.rank > 0) {
      model.AttachLora(cfg_.adapter.rank, adapter_seed);
    }
    params_ = model.Params();
    active_ = params_.size();

    std::vector<TaskEntry> entries;
    for (std::size_t t = 0; t < num_tasks_; ++t) {
      entries.push_back({"task" + std::to_string(t), [this, t] {
                           return problem_->TrainLoss(
                               t, DeriveSeed(batch_seed_, {t}));
                         }});
    }
    tasks_ = std::make_unique<TaskSet>(TaskSet::Uniform(std::move(entries)));

    eta_ = ResolveEta();
    steps_ = cfg_.StepCount();
    if (cfg_.method == Method::kStlZo)
      stl_params_.assign(num_tasks_, params_.Snapshot());
    if (cfg_.method == Method::kCoba)
      coba_ = std::make_unique<CobaState>(num_tasks_, cfg_.coba);
    if (cfg_.method == Method::kFamo)
      famo_ = std::make_unique<FamoState>(num_tasks_, cfg_.famo);
  }

  Trainer(const Trainer&) = delete;
  Trainer& operator=(const Trainer&) = delete;

  Problem& problem() { return *problem_; }
  const TaskSet& tasks() const { return *tasks_; }
  ParamView& params() { return params_; }
  void set_batch_seed(std::uint64_t s) { batch_seed_ = s; }
  const std::vector<ScoreSet>& per_task_scores() const { return per_task_; }
  const ScoreSet& scores() const { return scores_; }
  const ScoreSet& mask() const { return mask_; }

  void BuildMask(std::size_t step) {
    Model& model = problem_->model();
    const auto& layers = model.layers();
    const double rho = cfg_.importance.rho;
    scores_.clear();
    mask_.clear();
    per_task_.clear();
    switch (cfg_.method) {
      case Method::kRandomMask:
        for (std::size_t l = 0; l < layers.size(); ++l) {
          scores_.push_back(RandomScores(layers[l].d_out(), layers[l].d_in(),
                                         DeriveSeed(cfg_.seed, {kMaskTag, step, l})));
          mask_.push_back(BaselineMask(BaselineKind::kRandom, scores_[l], rho));
        }
        break;
      case Method::kMagnitudeMask:
        for (std::size_t l = 0; l < layers.size(); ++l) {
          scores_.push_back(MagnitudeScores(layers[l].EffectiveWeight()));
          mask_.push_back(BaselineMask(BaselineKind::kMagnitude, scores_[l], rho));
        }
        break;
      case Method::kWandaMask: {
        std::vector<std::vector<Matrix>> captured;
        for (std::size_t t = 0; t < num_tasks_; ++t)
          captured.push_back(problem_->CapturedInputs(t));
        for (std::size_t l = 0; l < layers.size(); ++l) {
          std::vector<Matrix> parts;
          for (const auto& c : captured) parts.push_back(c.at(l));
          scores_.push_back(
              WandaScores(layers[l].EffectiveWeight(), StackRows(parts)));
          mask_.push_back(BaselineMask(BaselineKind::kWanda, scores_[l], rho));
        }
        break;
      }
      default: {
        const double eta_score =
            cfg_.importance.eta > 0.0 ? cfg_.importance.eta : eta_;
        for (std::size_t t = 0; t < num_tasks_; ++t) {
          const auto curv = problem_->RowCurvatures(t);
          ScoreSet task_scores;
          for (std::size_t l = 0; l < layers.size(); ++l) {
            task_scores.push_back(NormalizeRows(
                LayerScores(layers[l].EffectiveWeight(t), curv.at(l),
                            cfg_.importance, eta_score)));
          }
          per_task_.push_back(std::move(task_scores));
        }
        scores_ = AggregateTasks(per_task_);
        for (const auto& s : scores_) mask_.push_back(BuildRowMask(s, rho));
        break;
      }
    }
    ApplyMask();
  }

  RunResult Run() {
    const auto start = std::chrono::steady_clock::now();
    const std::filesystem::path ckpt =
        cfg_.out.empty() ? std::filesystem::path()
                         : std::filesystem::path(cfg_.out) / kCheckpointName;
    std::size_t next = 0;
    if (cfg_.run.resume && std::filesystem::exists(ckpt)) {
      next = LoadCheckpoint(ckpt);
    } else {
      if (UsesMask(cfg_.method)) BuildMask(0);
      Record(0, 0.0, 0.0);
    }

    bool completed = true;
    for (std::size_t i = next; i < steps_; ++i) {
      if (UsesMask(cfg_.method) && cfg_.run.mask_refresh > 0 && i > 0 &&
          i % cfg_.run.mask_refresh == 0) {
        BuildMask(i);
      }
      const double coeff =
          cfg_.method == Method::kStlZo ? StepStl(i) : StepMulti(i);
      passes_ += 2 * num_tasks_ * cfg_.zo.probes;
      const std::size_t done = i + 1;
      if (done % cfg_.run.log_every == 0 || done == steps_) {
        Record(done, coeff, Elapsed(start));
      }
      if (cfg_.run.checkpoint_every > 0 &&
          done % cfg_.run.checkpoint_every == 0) {
        SaveCheckpoint(ckpt, done);
      }
      if (cfg_.run.stop_after > 0 && done == cfg_.run.stop_after &&
          done < steps_) {
        if (records_.back().step != done) Record(done, coeff, Elapsed(start));
        SaveCheckpoint(ckpt, done);
        completed = false;
        break;
      }
    }

    RunResult result;
    result.records = records_;
    result.scores = scores_;
    result.mask = mask_;
    RunSummary& s = result.summary;
    s.method = std::string(ToString(cfg_.method));
    s.seed = cfg_.seed;
    s.steps = records_.back().step;
    s.passes = passes_;
    s.eta = eta_;
    s.initial_losses = records_.front().task_losses;
    s.final_losses = records_.back().task_losses;
    s.initial_average = records_.front().aggregate;
    s.final_average = records_.back().aggregate;
    if (const auto* q = problem_->quadratic_tasks()) {
      s.optimum_loss = SolveQuadraticOptimum(*q, tasks_->weights()).loss;
      s.gap = s.final_average - *s.optimum_loss;
    }
    s.param_count = params_.size();
    s.active_params = active_;
    s.completed = completed;
    s.wall_seconds = records_.back().wall_seconds;
    return result;
  }

 private:
  double ResolveEta() const {
    const bool quadratic = problem_->quadratic_tasks() != nullptr;
    const bool trace = cfg_.eta_mode == EtaMode::kTrace ||
                       (cfg_.eta_mode == EtaMode::kAuto && quadratic);
    if (!trace) return cfg_.zo.eta;
    double tr = 0.0;
    const auto& q = *problem_->quadratic_tasks();
    for (std::size_t t = 0; t < q.size(); ++t) {
      for (std::size_t i = 0; i < q[t].dim(); ++i)
        for (std::size_t k = 0; k < q[t].rank(); ++k)
          tr += tasks_->weights()[t] * q[t].diag[k] * q[t].u(i, k) * q[t].u(i, k);
    }
    Require(tr > 0.0, "zo.eta_mode=trace: aggregate Hessian has zero trace");
    return cfg_.zo.eta / tr;
  }

  static double Elapsed(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start)
        .count();
  }

  void ApplyMask() {
    Model& model = problem_->model();
    if (model.has_lora()) {
      for (std::size_t l = 0; l < mask_.size(); ++l)
        model.mutable_layers()[l].lora->delta_mask = mask_[l];
      coord_mask_.clear();
      active_ = params_.size();
      return;
    }
    coord_mask_ = CoordinateMask(model, mask_);
    active_ = static_cast<std::size_t>(
        std::count(coord_mask_.begin(), coord_mask_.end(), 1));
  }

  CoordMask PerturbMask() const {
    return cfg_.mask_mode == MaskMode::kPerturbAndUpdate
               ? CoordMask(coord_mask_)
               : CoordMask();
  }

  double StepMulti(std::size_t step) {
    batch_seed_ = DeriveSeed(cfg_.seed, {kBatchTag, step});
    const std::uint64_t zseed = DeriveSeed(cfg_.seed, {kPerturbTag, step});
    const std::size_t probes = cfg_.zo.probes;
    std::vector<MtlZoEstimate> ests;
    std::vector<double> mid(num_tasks_, 0.0);
    for (std::size_t p = 0; p < probes; ++p) {
      const std::uint64_t s = probes == 1 ? zseed : DeriveSeed(zseed, {p});
      ests.push_back(MtlZoCoefficient(*tasks_, params_, s, cfg_.zo.epsilon,
                                      PerturbMask(), cfg_.zo.exact_restore));
      const auto m = ests.back().MidpointLosses();
      for (std::size_t t = 0; t < num_tasks_; ++t)
        mid[t] += m[t] / static_cast<double>(probes);
    }

    std::vector<double> w = tasks_->weights();
    if (coba_) {
      w = coba_->Update(mid).weights;
    } else if (famo_) {
      if (!famo_prev_.empty()) famo_->Update(famo_prev_, mid);
      famo_prev_ = mid;
      w = famo_->Weights();
    }

    std::vector<ZoEstimate> steps;
    double coeff_sum = 0.0;
    for (const auto& e : ests) {
      const double c = famo_ ? FamoCombinedCoefficient(w, mid, e.task_coeffs)
                             : WeightedCoefficient(e.task_coeffs, w);
      steps.push_back(e.AsEstimate(c));
      coeff_sum += c;
    }
    ZoSgdStep(params_, steps, eta_, CoordMask(coord_mask_));
    return coeff_sum / static_cast<double>(probes);
  }

  double StepStl(std::size_t step) {
    batch_seed_ = DeriveSeed(cfg_.seed, {kBatchTag, step});
    const std::uint64_t zseed = DeriveSeed(cfg_.seed, {kPerturbTag, step});
    double coeff_sum = 0.0;
    for (std::size_t t = 0; t < num_tasks_; ++t) {
      params_.Assign(stl_params_[t]);
      const auto ests = SpsaEstimateMulti(tasks_->task(t).loss, params_,
                                          cfg_.zo, DeriveSeed(zseed, {t}));
      ZoSgdStep(params_, ests, eta_);
      stl_params_[t] = params_.Snapshot();
      for (const auto& e : ests)
        coeff_sum += e.coeff / static_cast<double>(ests.size());
    }
    return coeff_sum / static_cast<double>(num_tasks_);
  }

  std::vector<double> EvalLosses() {
    std::vector<double> out(num_tasks_);
    for (std::size_t t = 0; t < num_tasks_; ++t) {
      if (!stl_params_.empty()) params_.Assign(stl_params_[t]);
      out[t] = problem_->EvalLoss(t);
    }
    return out;
  }

  void Record(std::size_t step, double coeff, double wall) {
    RunRecord r;
    r.step = step;
    r.passes = passes_;
    r.task_losses = EvalLosses();
    r.aggregate = Mean(r.task_losses);
    r.coeff = coeff;
    r.active_params = active_;
    r.wall_seconds = wall_offset_ + wall;
    if (records_.empty()) initial_aggregate_ = r.aggregate;
    const bool blown = !std::isfinite(r.aggregate) ||
                       (initial_aggregate_ > 0.0 &&
                        r.aggregate > cfg_.run.divergence_factor * initial_aggregate_);
    if (blown) {
      std::ostringstream msg;
      msg << "aggregate loss " << r.aggregate << " at step " << step
          << " exceeds " << cfg_.run.divergence_factor << " x initial "
          << initial_aggregate_;
      throw DivergenceError(msg.str());
    }
    records_.push_back(std::move(r));
  }

  void SaveCheckpoint(const std::filesystem::path& path, std::size_t next) {
    auto entries = ModelEntries(problem_->model());
    entries.push_back({"state.scalars",
                       RowVector(std::vector<double>{
                           static_cast<double>(next), static_cast<double>(passes_),
                           eta_, initial_aggregate_})});
    const std::size_t width = 6 + num_tasks_;
    Matrix rec(records_.size(), width);
    for (std::size_t i = 0; i < records_.size(); ++i) {
      const auto& r = records_[i];
      rec(i, 0) = static_cast<double>(r.step);
      rec(i, 1) = static_cast<double>(r.passes);
      rec(i, 2) = r.coeff;
      rec(i, 3) = static_cast<double>(r.active_params);
      rec(i, 4) = r.aggregate;
      rec(i, 5) = r.wall_seconds;
      for (std::size_t t = 0; t < num_tasks_; ++t) rec(i, 6 + t) = r.task_losses[t];
    }
    entries.push_back({"state.records", rec});
    if (coba_) {
      auto more = coba_->ToEntries("coba");
      entries.insert(entries.end(), more.begin(), more.end());
    }
    if (famo_) {
      entries.push_back({"famo.logits", RowVector(famo_->logits())});
      entries.push_back({"famo.prev", RowVector(famo_prev_)});
    }
    if (!stl_params_.empty()) {
      Matrix m(num_tasks_, params_.size());
      for (std::size_t t = 0; t < num_tasks_; ++t)
        std::copy(stl_params_[t].begin(), stl_params_[t].end(), m.row(t).begin());
      entries.push_back({"stl.params", m});
    }
    for (std::size_t l = 0; l < mask_.size(); ++l) {
      entries.push_back({"mask.layer" + std::to_string(l), mask_[l]});
      entries.push_back({"scores.layer" + std::to_string(l), scores_[l]});
    }
    std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    WriteBundle(tmp, entries);
    std::filesystem::rename(tmp, path);
  }

  std::size_t LoadCheckpoint(const std::filesystem::path& path) {
    const auto entries = ReadBundle(path);
    problem_->model() = ModelFromEntries(entries);
    params_ = problem_->model().Params();
    active_ = params_.size();
    const Matrix& sc = FindEntry(entries, "state.scalars");
    const auto next = static_cast<std::size_t>(sc(0, 0));
    passes_ = static_cast<std::size_t>(sc(0, 1));
    eta_ = sc(0, 2);
    initial_aggregate_ = sc(0, 3);
    const Matrix& rec = FindEntry(entries, "state.records");
    Require(rec.cols() == 6 + num_tasks_, "checkpoint: task count mismatch");
    records_.clear();
    for (std::size_t i = 0; i < rec.rows(); ++i) {
      RunRecord r;
      r.step = static_cast<std::size_t>(rec(i, 0));
      r.passes = static_cast<std::size_t>(rec(i, 1));
      r.coeff = rec(i, 2);
      r.active_params = static_cast<std::size_t>(rec(i, 3));
      r.aggregate = rec(i, 4);
      r.wall_seconds = rec(i, 5);
      for (std::size_t t = 0; t < num_tasks_; ++t)
        r.task_losses.push_back(rec(i, 6 + t));
      records_.push_back(std::move(r));
    }
    if (!records_.empty()) wall_offset_ = records_.back().wall_seconds;
    if (coba_) coba_->LoadEntries(entries, "coba");
    if (famo_) {
      famo_->set_logits(ToVector(FindEntry(entries, "famo.logits")));
      famo_prev_ = ToVector(FindEntry(entries, "famo.prev"));
    }
    if (!stl_params_.empty()) {
      const Matrix& m = FindEntry(entries, "stl.params");
      for (std::size_t t = 0; t < num_tasks_; ++t)
        stl_params_[t].assign(m.row(t).begin(), m.row(t).end());
    }
    mask_.clear();
    scores_.clear();
    for (std::size_t l = 0; HasEntry(entries, "mask.layer" + std::to_string(l)); ++l) {
      mask_.push_back(FindEntry(entries, "mask.layer" + std::to_string(l)));
      scores_.push_back(FindEntry(entries, "scores.layer" + std::to_string(l)));
    }
    if (!mask_.empty()) ApplyMask();
    return next;
  }

  ExperimentConfig cfg_;
  std::unique_ptr<Problem> problem_;
  std::size_t num_tasks_ = 0;
  ParamView params_;
  std::unique_ptr<TaskSet> tasks_;
  std::uint64_t batch_seed_ = 0;
  double eta_ = 0.0;
  std::size_t steps_ = 0;
  std::size_t passes_ = 0;
  std::size_t active_ = 0;

  std::vector<ScoreSet> per_task_;
  ScoreSet scores_;
  ScoreSet mask_;
  std::vector<std::uint8_t> coord_mask_;

  std::vector<std::vector<double>> stl_params_;
  std::unique_ptr<CobaState> coba_;
  std::unique_ptr<FamoState> famo_;
  std::vector<double> famo_prev_;

  std::vector<RunRecord> records_;
  double initial_aggregate_ = 0.0;
  double wall_offset_ = 0.0;
};

std::string FormatNumber(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

RunResult RunExperiment(const ExperimentConfig& cfg) {
  Trainer trainer(cfg);
  RunResult result = trainer.Run();
  if (!cfg.out.empty()) WriteRunOutputs(cfg.out, cfg, result);
  return result;
}

nlohmann::json ToJson(const RunRecord& r) {
  return {{"record", "step"},
          {"step", r.step},
          {"passes", r.passes},
          {"task_losses", r.task_losses},
          {"aggregate", r.aggregate},
          {"coeff", r.coeff},
          {"active_params", r.active_params},
          {"wall_seconds", r.wall_seconds}};
}

nlohmann::json ToJson(const RunSummary& s) {
  nlohmann::json j = {{"record", "summary"},
                      {"method", s.method},
                      {"seed", s.seed},
                      {"steps", s.steps},
                      {"passes", s.passes},
                      {"eta", s.eta},
                      {"initial_losses", s.initial_losses},
                      {"final_losses", s.final_losses},
                      {"initial_average", s.initial_average},
                      {"final_average", s.final_average},
                      {"param_count", s.param_count},
                      {"active_params", s.active_params},
                      {"completed", s.completed},
                      {"wall_seconds", s.wall_seconds}};
  if (s.optimum_loss) j["optimum_loss"] = *s.optimum_loss;
  if (s.gap) j["gap"] = *s.gap;
  return j;
}

void WriteRunOutputs(const std::filesystem::path& dir,
                     const ExperimentConfig& cfg, const RunResult& result) {
  std::filesystem::create_directories(dir);
  std::ostringstream csv;
  csv << "step";
  const std::size_t n_tasks = result.summary.initial_losses.size();
  for (std::size_t t = 0; t < n_tasks; ++t) csv << ",task" << t;
  csv << ",aggregate\n";
  std::ostringstream jsonl;
  for (const auto& r : result.records) {
    csv << r.step;
    for (double v : r.task_losses) csv << "," << FormatNumber(v);
    csv << "," << FormatNumber(r.aggregate) << "\n";
    jsonl << ToJson(r).dump() << "\n";
  }
  WriteText(dir / "curves.csv", csv.str());
  WriteText(dir / "records.jsonl", jsonl.str());
  WriteText(dir / "summary.jsonl", ToJson(result.summary).dump() + "\n");
  WriteText(dir / "config.cfg", DumpConfig(cfg));
  if (!result.mask.empty()) {
    SaveScoreSet(dir / "scores.bin", result.scores, "scores");
    SaveScoreSet(dir / "mask.bin", result.mask, "mask");
  }
}

CompareResult Compare(const ExperimentConfig& base,
                      const std::vector<std::string>& methods,
                      const std::vector<std::uint64_t>& seeds,
                      std::size_t threads) {
  Require(!methods.empty(), "compare: no methods given");
  Require(seeds.size() >= 2, "compare: needs at least two seeds");
  std::vector<ExperimentConfig> jobs;
  for (const auto& m : methods) {
    for (std::uint64_t s : seeds) {
      ExperimentConfig c = base;
      c.method = ParseMethod(m);
      c.seed = s;
      c.out.clear();
      c.run.resume = false;
      c.run.checkpoint_every = 0;
      c.run.stop_after = 0;
      c.Validate();
      jobs.push_back(std::move(c));
    }
  }

  std::vector<double> finals(jobs.size(), 0.0);
  std::vector<char> diverged(jobs.size(), 0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        finals[j] = RunExperiment(jobs[j]).summary.final_average;
      } catch (const DivergenceError&) {
        finals[j] = std::numeric_limits<double>::infinity();
        diverged[j] = 1;
      } catch (const EstimationError&) {
        finals[j] = std::numeric_limits<double>::infinity();
        diverged[j] = 1;
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  CompareResult out;
  out.seeds = seeds;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    CompareRow row;
    row.method = methods[m];
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      row.finals.push_back(finals[m * seeds.size() + s]);
      row.diverged += diverged[m * seeds.size() + s];
    }
    row.mean = Mean(row.finals);
    double ss = 0.0;
    for (double v : row.finals) ss += (v - row.mean) * (v - row.mean);
    row.sd = row.diverged ? std::numeric_limits<double>::infinity()
                          : std::sqrt(ss / static_cast<double>(seeds.size() - 1));
    out.rows.push_back(std::move(row));
  }
  const auto find = [&](std::string_view name) -> const CompareRow* {
    for (const auto& r : out.rows)
      if (r.method == name) return &r;
    return nullptr;
  };
  const CompareRow* mazo = find("mazo");
  const CompareRow* mtl = find("mtl-zo");
  if (mazo && mtl) {
    for (std::size_t s = 0; s < seeds.size(); ++s)
      out.mazo_wins += mazo->finals[s] < mtl->finals[s];
    out.mazo_win_rate =
        static_cast<double>(out.mazo_wins) / static_cast<double>(seeds.size());
  }
  return out;
}

nlohmann::json ToJson(const CompareResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"method", r.method},
                    {"mean", r.mean},
                    {"sd", r.sd},
                    {"diverged", r.diverged},
                    {"finals", r.finals}});
  }
  nlohmann::json j = {{"record", "compare"}, {"seeds", result.seeds}, {"rows", rows}};
  if (result.mazo_win_rate) {
    j["mazo_win_rate"] = *result.mazo_win_rate;
    j["mazo_wins"] = result.mazo_wins;
  }
  return j;
}

ScoreResult ComputeScores(const ExperimentConfig& cfg) {
  ExperimentConfig c = cfg;
  if (!UsesMask(c.method)) c.method = Method::kMazo;
  Trainer trainer(c);
  trainer.BuildMask(0);
  return {trainer.per_task_scores(), trainer.scores(), trainer.mask()};
}

std::vector<std::pair<std::string, SpectrumReport>> SpectrumStudy(
    const ExperimentConfig& cfg, std::size_t k) {
  Trainer trainer(cfg);
  Problem& problem = trainer.problem();
  const std::size_t n_tasks = problem.num_tasks();
  std::vector<Matrix> hessians;
  if (const auto* q = problem.quadratic_tasks()) {
    for (const auto& task : *q) hessians.push_back(ExactQuadraticHessian(task));
  } else {
    Require(trainer.params().size() <= kMaxFdDim,
            "spectrum: finite-difference Hessians need at most " +
                std::to_string(kMaxFdDim) + " parameters");
    for (std::size_t t = 0; t < n_tasks; ++t) {
      hessians.push_back(FdHessian([&problem, t] { return problem.EvalLoss(t); },
                                   trainer.params()));
    }
  }
  std::vector<std::pair<std::string, SpectrumReport>> out;
  Matrix agg(hessians[0].rows(), hessians[0].cols());
  for (std::size_t t = 0; t < n_tasks; ++t) {
    out.emplace_back("task" + std::to_string(t), Spectrum(hessians[t], k));
    agg = Add(agg, Scaled(hessians[t], trainer.tasks().weights()[t]));
  }
  out.emplace_back("aggregate", Spectrum(agg, k));
  return out;
}

CollinearityReport CollinearityStudy(const ExperimentConfig& cfg,
                                     std::size_t n_z, bool shared) {
  Trainer trainer(cfg);
  trainer.set_batch_seed(DeriveSeed(cfg.seed, {kProbeBatchTag}));
  return CollinearityCheck(trainer.tasks(), trainer.params(), n_z, shared,
                           DeriveSeed(cfg.seed, {kPerturbTag}),
                           cfg.zo.epsilon);
}

}  // namespace maskzo
