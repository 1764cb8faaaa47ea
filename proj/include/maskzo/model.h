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

#ifndef MASKZO_MODEL_H_
#define MASKZO_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "maskzo/matrix.h"
#include "maskzo/param_view.h"

namespace maskzo {

enum class Activation { kIdentity, kTanh, kRelu };
enum class LossHead { kMse, kSoftmaxCrossEntropy };

std::string_view ToString(Activation a);
std::string_view ToString(LossHead h);

// Low-rank delta ΔW = B·A. B starts at zero so a fresh adapter is neutral.
// An optional binary mask turns the delta into (B·A) ⊙ M while leaving the
// factors themselves dense.
struct LoraAdapter {
  Matrix b;  // d_out x r
  Matrix a;  // r x d_in
  std::optional<Matrix> delta_mask;

  // B = 0, A ~ N(0, 1/d_in).
  static LoraAdapter Create(std::size_t d_out, std::size_t d_in,
                            std::size_t rank, std::uint64_t seed);

  std::size_t rank() const { return a.rows(); }
  Matrix Delta() const;
};

// Multi-task LoRA block: a shared down-projection A, a per-task diagonal
// transform Λ_t, n up-projections B_i and per-task mixing logits.
struct MtlLoraBlock {
  Matrix a;               // r x d_in
  Matrix lambda;          // tasks x r, diagonal of Λ_t in row t
  std::vector<Matrix> b;  // n matrices, each d_out x r
  Matrix logits;          // tasks x n
  double temperature = 0.5;

  // B_i = 0, A ~ N(0, 1/d_in), Λ_t = I, logits = 0.
  static MtlLoraBlock Create(std::size_t d_out, std::size_t d_in,
                             std::size_t rank, std::size_t tasks,
                             std::size_t num_up, double temperature,
                             std::uint64_t seed);

  std::size_t rank() const { return a.rows(); }
  std::size_t num_tasks() const { return lambda.rows(); }
  // softmax(logits[task] / temperature).
  std::vector<double> MixtureWeights(std::size_t task) const;
  // Σ_i softmax_i · B_i Λ_t A.
  Matrix Delta(std::size_t task) const;
};

// h_t = W x + Σ_i softmax_i(w^t / τ) · B_i Λ_t A x.
std::vector<double> MtlLoraForward(const Matrix& w, const MtlLoraBlock& block,
                                   std::span<const double> x,
                                   std::size_t task);

struct LinearLayer {
  Matrix w;                  // d_out x d_in
  std::vector<double> bias;  // empty, or d_out entries
  std::optional<LoraAdapter> lora;
  std::optional<MtlLoraBlock> mtl_lora;

  std::size_t d_in() const { return w.cols(); }
  std::size_t d_out() const { return w.rows(); }
  // W plus whichever adapter is attached. `task` only matters for MTL-LoRA.
  Matrix EffectiveWeight(std::size_t task = 0) const;
};

struct Batch {
  Matrix inputs;   // n x d_in
  Matrix targets;  // n x d_out for mse; n x 1 class indices for cross-entropy
};

// Layer stack y = L_k(σ(... σ(L_1 x))) with the activation applied between
// layers (never after the last one) and a loss head on top.
class Model {
 public:
  Model() = default;
  Model(std::vector<LinearLayer> layers, Activation activation,
        LossHead loss_head);

  // Dense MLP with layer sizes {d_in, h_1, ..., d_out}; W ~ N(0, 1/fan_in).
  static Model Mlp(std::span<const std::size_t> sizes, Activation activation,
                   LossHead loss_head, std::uint64_t seed, bool with_bias);

  const std::vector<LinearLayer>& layers() const { return layers_; }
  std::vector<LinearLayer>& mutable_layers() { return layers_; }
  Activation activation() const { return activation_; }
  LossHead loss_head() const { return loss_head_; }

  // Task used by MTL-LoRA layers during Forward.
  std::size_t active_task() const { return active_task_; }
  void set_active_task(std::size_t task) { active_task_ = task; }

  Matrix Forward(const Matrix& inputs) const;
  // Inputs fed to each layer during Forward; entry i is n x d_in(i).
  std::vector<Matrix> CaptureRowInputs(const Matrix& inputs) const;
  double Loss(const Batch& batch) const;

  // Trainable entries in fixed order: for each layer, in index order,
  //   MTL-LoRA attached: A, Λ, B_1..B_n, logits (row-major each);
  //   LoRA attached:     B, A;
  //   otherwise:         W, then bias.
  // Frozen W entries of adapted layers are never part of the view.
  ParamView Params();
  std::size_t ParamCount() const;

  void AttachLora(std::size_t rank, std::uint64_t seed);
  void AttachMtlLora(std::size_t rank, std::size_t tasks, std::size_t num_up,
                     double temperature, std::uint64_t seed);
  bool has_lora() const;
  bool has_mtl_lora() const;

 private:
  void CheckComposes() const;
  Matrix LayerForward(std::size_t i, const Matrix& x) const;

  std::vector<LinearLayer> layers_;
  Activation activation_ = Activation::kTanh;
  LossHead loss_head_ = LossHead::kMse;
  std::size_t active_task_ = 0;
};

std::vector<double> Softmax(std::span<const double> logits);

}  // namespace maskzo

#endif  // MASKZO_MODEL_H_
