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

#include "maskzo/model.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "maskzo/errors.h"
#include "maskzo/random.h"

namespace maskzo {
namespace {

void FillGaussian(Matrix& m, std::uint64_t seed, double scale) {
  GaussStream stream(seed);
  for (double& v : m.data()) v = scale * stream.Next();
}

double Activate(Activation a, double x) {
  switch (a) {
    case Activation::kIdentity:
      return x;
    case Activation::kTanh:
      return std::tanh(x);
    case Activation::kRelu:
      return x > 0.0 ? x : 0.0;
  }
  return x;
}

}  // namespace

std::string_view ToString(Activation a) {
  switch (a) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kTanh:
      return "tanh";
    case Activation::kRelu:
      return "relu";
  }
  return "?";
}

std::string_view ToString(LossHead h) {
  return h == LossHead::kMse ? "mse" : "softmax-cross-entropy";
}

std::vector<double> Softmax(std::span<const double> logits) {
  Require(!logits.empty(), "Softmax: empty input");
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

LoraAdapter LoraAdapter::Create(std::size_t d_out, std::size_t d_in,
                                std::size_t rank, std::uint64_t seed) {
  Require(rank >= 1, "LoraAdapter: rank must be >= 1");
  LoraAdapter adapter{Matrix(d_out, rank), Matrix(rank, d_in), std::nullopt};
  FillGaussian(adapter.a, seed, 1.0 / std::sqrt(static_cast<double>(d_in)));
  return adapter;
}

Matrix LoraAdapter::Delta() const {
  Matrix delta = MatMul(b, a);
  if (delta_mask) return Hadamard(delta, *delta_mask);
  return delta;
}

MtlLoraBlock MtlLoraBlock::Create(std::size_t d_out, std::size_t d_in,
                                  std::size_t rank, std::size_t tasks,
                                  std::size_t num_up, double temperature,
                                  std::uint64_t seed) {
  Require(rank >= 1 && tasks >= 1 && num_up >= 1,
          "MtlLoraBlock: rank, tasks and num_up must be >= 1");
  Require(temperature > 0.0, "MtlLoraBlock: temperature must be > 0");
  MtlLoraBlock block;
  block.a = Matrix(rank, d_in);
  FillGaussian(block.a, seed, 1.0 / std::sqrt(static_cast<double>(d_in)));
  block.lambda = Matrix(tasks, rank, 1.0);
  block.b.assign(num_up, Matrix(d_out, rank));
  block.logits = Matrix(tasks, num_up);
  block.temperature = temperature;
  return block;
}

std::vector<double> MtlLoraBlock::MixtureWeights(std::size_t task) const {
  Require(task < num_tasks(), "MtlLoraBlock: task index out of range");
  std::vector<double> scaled(logits.cols());
  for (std::size_t i = 0; i < scaled.size(); ++i)
    scaled[i] = logits(task, i) / temperature;
  return Softmax(scaled);
}

Matrix MtlLoraBlock::Delta(std::size_t task) const {
  const auto mix = MixtureWeights(task);
  const std::size_t d_out = b.front().rows();
  // Σ_i s_i B_i, then scale columns by Λ_t, then multiply by A.
  Matrix mixed(d_out, rank());
  for (std::size_t i = 0; i < b.size(); ++i) {
    auto md = mixed.data();
    auto bd = b[i].data();
    for (std::size_t k = 0; k < md.size(); ++k) md[k] += mix[i] * bd[k];
  }
  for (std::size_t r = 0; r < d_out; ++r)
    for (std::size_t c = 0; c < rank(); ++c) mixed(r, c) *= lambda(task, c);
  return MatMul(mixed, a);
}

std::vector<double> MtlLoraForward(const Matrix& w, const MtlLoraBlock& block,
                                   std::span<const double> x,
                                   std::size_t task) {
  Require(x.size() == w.cols() && block.a.cols() == w.cols(),
          "MtlLoraForward: input width mismatch");
  Require(!block.b.empty() && block.b.front().rows() == w.rows(),
          "MtlLoraForward: up-projection shape mismatch");
  auto h = MatVec(w, x);
  auto z = MatVec(block.a, x);
  for (std::size_t c = 0; c < z.size(); ++c) z[c] *= block.lambda(task, c);
  const auto mix = block.MixtureWeights(task);
  for (std::size_t i = 0; i < block.b.size(); ++i) {
    const auto bz = MatVec(block.b[i], z);
    for (std::size_t r = 0; r < h.size(); ++r) h[r] += mix[i] * bz[r];
  }
  return h;
}

Matrix LinearLayer::EffectiveWeight(std::size_t task) const {
  if (mtl_lora) return Add(w, mtl_lora->Delta(task));
  if (lora) return Add(w, lora->Delta());
  return w;
}

Model::Model(std::vector<LinearLayer> layers, Activation activation,
             LossHead loss_head)
    : layers_(std::move(layers)),
      activation_(activation),
      loss_head_(loss_head) {
  Require(!layers_.empty(), "Model: needs at least one layer");
  CheckComposes();
}

Model Model::Mlp(std::span<const std::size_t> sizes, Activation activation,
                 LossHead loss_head, std::uint64_t seed, bool with_bias) {
  Require(sizes.size() >= 2, "Model::Mlp: need at least input and output");
  std::vector<LinearLayer> layers;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    LinearLayer layer;
    layer.w = Matrix(sizes[i + 1], sizes[i]);
    FillGaussian(layer.w, DeriveSeed(seed, {i}),
                 1.0 / std::sqrt(static_cast<double>(sizes[i])));
    if (with_bias) layer.bias.assign(sizes[i + 1], 0.0);
    layers.push_back(std::move(layer));
  }
  return Model(std::move(layers), activation, loss_head);
}

void Model::CheckComposes() const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    Require(l.bias.empty() || l.bias.size() == l.d_out(),
            "Model: bias length mismatch in layer " + std::to_string(i));
    if (i + 1 < layers_.size()) {
      Require(layers_[i + 1].d_in() == l.d_out(),
              "Model: layer " + std::to_string(i + 1) +
                  " input width does not match layer " + std::to_string(i) +
                  " output width");
    }
  }
}

Matrix Model::LayerForward(std::size_t i, const Matrix& x) const {
  const auto& layer = layers_[i];
  Matrix out = (layer.lora || layer.mtl_lora)
                   ? MatMulTransB(x, layer.EffectiveWeight(active_task_))
                   : MatMulTransB(x, layer.w);
  if (!layer.bias.empty()) {
    for (std::size_t r = 0; r < out.rows(); ++r) {
      auto row = out.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] += layer.bias[c];
    }
  }
  return out;
}

Matrix Model::Forward(const Matrix& inputs) const {
  Require(!layers_.empty(), "Forward: empty model");
  Require(inputs.cols() == layers_.front().d_in(),
          "Forward: input width " + std::to_string(inputs.cols()) +
              " != model input width " +
              std::to_string(layers_.front().d_in()));
  Matrix x = inputs;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = LayerForward(i, x);
    if (i + 1 < layers_.size())
      for (double& v : x.data()) v = Activate(activation_, v);
  }
  return x;
}

std::vector<Matrix> Model::CaptureRowInputs(const Matrix& inputs) const {
  Require(!layers_.empty() && inputs.cols() == layers_.front().d_in(),
          "CaptureRowInputs: input width mismatch");
  std::vector<Matrix> captured;
  captured.reserve(layers_.size());
  Matrix x = inputs;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    captured.push_back(x);
    if (i + 1 == layers_.size()) break;
    x = LayerForward(i, x);
    for (double& v : x.data()) v = Activate(activation_, v);
  }
  return captured;
}

double Model::Loss(const Batch& batch) const {
  Require(batch.inputs.rows() >= 1, "Loss: empty batch");
  Require(batch.targets.rows() == batch.inputs.rows(),
          "Loss: inputs and targets disagree on batch size");
  const Matrix out = Forward(batch.inputs);
  const std::size_t n = out.rows();
  if (loss_head_ == LossHead::kMse) {
    Require(batch.targets.cols() == out.cols(), "Loss: target width mismatch");
    double sum = 0.0;
    auto o = out.data();
    auto t = batch.targets.data();
    for (std::size_t i = 0; i < o.size(); ++i) sum += (o[i] - t[i]) * (o[i] - t[i]);
    return sum / static_cast<double>(o.size());
  }
  Require(batch.targets.cols() == 1,
          "Loss: cross-entropy targets must be one class index per row");
  double sum = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = out.row(r);
    const double label = batch.targets(r, 0);
    const auto cls = static_cast<std::size_t>(label);
    Require(label >= 0.0 && static_cast<double>(cls) == label &&
                cls < row.size(),
            "Loss: class index out of range");
    const double mx = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - mx);
    sum += (mx + std::log(z)) - row[cls];
  }
  return sum / static_cast<double>(n);
}

ParamView Model::Params() {
  ParamView view;
  for (auto& layer : layers_) {
    if (layer.mtl_lora) {
      auto& m = *layer.mtl_lora;
      view.Append(m.a.data());
      view.Append(m.lambda.data());
      for (auto& b : m.b) view.Append(b.data());
      view.Append(m.logits.data());
    } else if (layer.lora) {
      view.Append(layer.lora->b.data());
      view.Append(layer.lora->a.data());
    } else {
      view.Append(layer.w.data());
      view.Append(layer.bias);
    }
  }
  return view;
}

std::size_t Model::ParamCount() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) {
    if (layer.mtl_lora) {
      const auto& m = *layer.mtl_lora;
      n += m.a.size() + m.lambda.size() + m.logits.size();
      for (const auto& b : m.b) n += b.size();
    } else if (layer.lora) {
      n += layer.lora->a.size() + layer.lora->b.size();
    } else {
      n += layer.w.size() + layer.bias.size();
    }
  }
  return n;
}

void Model::AttachLora(std::size_t rank, std::uint64_t seed) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto& l = layers_[i];
    Require(!l.mtl_lora, "AttachLora: layer already has an MTL-LoRA block");
    l.lora = LoraAdapter::Create(l.d_out(), l.d_in(), rank,
                                 DeriveSeed(seed, {i, 0x10AA}));
  }
}

void Model::AttachMtlLora(std::size_t rank, std::size_t tasks,
                          std::size_t num_up, double temperature,
                          std::uint64_t seed) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    auto& l = layers_[i];
    Require(!l.lora, "AttachMtlLora: layer already has a LoRA adapter");
    l.mtl_lora = MtlLoraBlock::Create(l.d_out(), l.d_in(), rank, tasks, num_up,
                                      temperature,
                                      DeriveSeed(seed, {i, 0x3A1A}));
  }
}

bool Model::has_lora() const {
  return std::any_of(layers_.begin(), layers_.end(),
                     [](const LinearLayer& l) { return l.lora.has_value(); });
}

bool Model::has_mtl_lora() const {
  return std::any_of(layers_.begin(), layers_.end(), [](const LinearLayer& l) {
    return l.mtl_lora.has_value();
  });
}

}  // namespace maskzo
