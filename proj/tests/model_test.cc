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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "maskzo/checkpoint.h"
#include "maskzo/errors.h"
#include "maskzo/model.h"
#include "maskzo/random.h"

namespace maskzo {
namespace {

Matrix RandomMatrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Matrix m(r, c);
  GaussStream s(seed);
  for (double& v : m.data()) v = s.Next();
  return m;
}

// Straight-line evaluation of y = W2 tanh(W1 x + b1) + b2.
std::vector<double> OracleForward(const Model& m, std::span<const double> x) {
  const auto& l1 = m.layers()[0];
  const auto& l2 = m.layers()[1];
  std::vector<double> h(l1.d_out());
  for (std::size_t i = 0; i < h.size(); ++i) {
    double s = l1.bias.empty() ? 0.0 : l1.bias[i];
    for (std::size_t j = 0; j < x.size(); ++j) s += l1.w(i, j) * x[j];
    h[i] = std::tanh(s);
  }
  std::vector<double> y(l2.d_out());
  for (std::size_t i = 0; i < y.size(); ++i) {
    double s = l2.bias.empty() ? 0.0 : l2.bias[i];
    for (std::size_t j = 0; j < h.size(); ++j) s += l2.w(i, j) * h[j];
    y[i] = s;
  }
  return y;
}

Model TanhMlp(std::uint64_t seed, LossHead head = LossHead::kMse) {
  const std::vector<std::size_t> sizes{4, 6, 3};
  Model m = Model::Mlp(sizes, Activation::kTanh, head, seed, true);
  GaussStream s(seed + 1);
  for (auto& l : m.mutable_layers())
    for (double& b : l.bias) b = 0.3 * s.Next();
  return m;
}

TEST(Forward, IdentitySingleLayer) {
  LinearLayer l{Matrix::Identity(2), {0.0, 0.0}, std::nullopt, std::nullopt};
  Model m({l}, Activation::kIdentity, LossHead::kMse);
  const Matrix out = m.Forward(Matrix{{1, 2}});
  EXPECT_EQ(out, (Matrix{{1, 2}}));
}

TEST(Forward, MatchesHandRolledOracle) {
  const Model m = TanhMlp(17);
  const Matrix x = RandomMatrix(5, 4, 3);
  const Matrix out = m.Forward(x);
  for (std::size_t r = 0; r < 5; ++r) {
    const auto y = OracleForward(m, x.row(r));
    for (std::size_t c = 0; c < 3; ++c) EXPECT_NEAR(out(r, c), y[c], 1e-12);
  }
}

TEST(Forward, ShapeMismatchThrows) {
  const Model m = TanhMlp(1);
  EXPECT_THROW(m.Forward(Matrix(2, 5)), ContractError);
  LinearLayer a{Matrix(3, 2), {}, std::nullopt, std::nullopt};
  LinearLayer b{Matrix(2, 4), {}, std::nullopt, std::nullopt};
  EXPECT_THROW(Model({a, b}, Activation::kTanh, LossHead::kMse), ContractError);
}

TEST(Lora, ZeroInitIsNeutral) {
  Model m = TanhMlp(5);
  const Matrix x = RandomMatrix(4, 4, 6);
  const Matrix before = m.Forward(x);
  m.AttachLora(2, 9);
  EXPECT_EQ(m.Forward(x), before);
  for (const auto& l : m.layers()) {
    EXPECT_EQ(l.lora->Delta(), Matrix(l.d_out(), l.d_in()));
    EXPECT_EQ(l.lora->b, Matrix(l.d_out(), 2));
  }
}

TEST(Lora, EquivalentToMergedWeight) {
  Model m = TanhMlp(5);
  m.AttachLora(3, 9);
  for (auto& l : m.mutable_layers())
    l.lora->b = RandomMatrix(l.d_out(), 3, l.d_in());
  Model merged = m;
  for (auto& l : merged.mutable_layers()) {
    l.w = Add(l.w, MatMul(l.lora->b, l.lora->a));
    l.lora.reset();
  }
  const Matrix x = RandomMatrix(6, 4, 2);
  EXPECT_LT(MaxAbsDiff(m.Forward(x), merged.Forward(x)), 1e-12);
}

TEST(Lora, DeltaMaskApplies) {
  LoraAdapter a = LoraAdapter::Create(3, 4, 2, 1);
  a.b = RandomMatrix(3, 2, 4);
  Matrix mask(3, 4);
  mask(0, 1) = mask(2, 3) = 1.0;
  a.delta_mask = mask;
  const Matrix full = MatMul(a.b, a.a);
  const Matrix d = a.Delta();
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      EXPECT_EQ(d(i, j), mask(i, j) != 0.0 ? full(i, j) : 0.0);
}

TEST(Loss, MseAndCrossEntropyBasics) {
  LinearLayer l{Matrix::Identity(3), {}, std::nullopt, std::nullopt};
  Model mse({l}, Activation::kIdentity, LossHead::kMse);
  const Matrix x = RandomMatrix(4, 3, 1);
  EXPECT_EQ(mse.Loss({x, x}), 0.0);

  LinearLayer z{Matrix(5, 3), {}, std::nullopt, std::nullopt};
  Model ce({z}, Activation::kIdentity, LossHead::kSoftmaxCrossEntropy);
  const Matrix labels{{0}, {4}, {2}, {1}};
  EXPECT_NEAR(ce.Loss({x, labels}), std::log(5.0), 1e-15);
}

TEST(Loss, MatchesIndependentOracle) {
  const Model reg = TanhMlp(21);
  const Matrix x = RandomMatrix(7, 4, 22);
  const Matrix t = RandomMatrix(7, 3, 23);
  double sum = 0.0;
  for (std::size_t r = 0; r < 7; ++r) {
    const auto y = OracleForward(reg, x.row(r));
    for (std::size_t c = 0; c < 3; ++c) sum += (y[c] - t(r, c)) * (y[c] - t(r, c));
  }
  EXPECT_NEAR(reg.Loss({x, t}), sum / 21.0, 1e-12);

  const Model cls = TanhMlp(21, LossHead::kSoftmaxCrossEntropy);
  const Matrix labels{{0}, {1}, {2}, {2}, {1}, {0}, {1}};
  double nll = 0.0;
  for (std::size_t r = 0; r < 7; ++r) {
    const auto y = OracleForward(cls, x.row(r));
    double z = 0.0;
    for (double v : y) z += std::exp(v);
    nll += -std::log(std::exp(y[static_cast<std::size_t>(labels(r, 0))]) / z);
  }
  EXPECT_NEAR(cls.Loss({x, labels}), nll / 7.0, 1e-12);
}

TEST(Loss, RejectsEmptyAndBadLabels) {
  const Model cls = TanhMlp(2, LossHead::kSoftmaxCrossEntropy);
  EXPECT_THROW(cls.Loss({Matrix(0, 4), Matrix(0, 1)}), ContractError);
  EXPECT_THROW(cls.Loss({Matrix(1, 4), Matrix{{3}}}), ContractError);
}

TEST(Capture, SingleLayerAndComposition) {
  LinearLayer a{RandomMatrix(3, 2, 1), {}, std::nullopt, std::nullopt};
  Model single({a}, Activation::kIdentity, LossHead::kMse);
  const Matrix x = RandomMatrix(4, 2, 2);
  const auto c1 = single.CaptureRowInputs(x);
  ASSERT_EQ(c1.size(), 1u);
  EXPECT_EQ(c1[0], x);

  LinearLayer b{RandomMatrix(2, 3, 3), {}, std::nullopt, std::nullopt};
  Model two({a, b}, Activation::kIdentity, LossHead::kMse);
  const auto c2 = two.CaptureRowInputs(x);
  EXPECT_LT(MaxAbsDiff(c2[1], single.Forward(x)), 1e-15);
}

TEST(Capture, TanhMatchesTruncatedForward) {
  const Model m = TanhMlp(8);
  const Matrix x = RandomMatrix(5, 4, 9);
  const auto caps = m.CaptureRowInputs(x);
  Model first({m.layers()[0]}, Activation::kTanh, LossHead::kMse);
  Matrix h = first.Forward(x);
  for (double& v : h.data()) v = std::tanh(v);
  EXPECT_LT(MaxAbsDiff(caps[1], h), 1e-15);
  // Feeding the last capture through the last layer reproduces Forward.
  Model last({m.layers()[1]}, Activation::kTanh, LossHead::kMse);
  EXPECT_LT(MaxAbsDiff(last.Forward(caps[1]), m.Forward(x)), 1e-15);
}

TEST(Params, ViewAliasesStorage) {
  Model m = TanhMlp(4);
  ParamView v = m.Params();
  EXPECT_EQ(v.size(), 4u * 6 + 6 + 6 * 3 + 3);
  EXPECT_EQ(v.size(), m.ParamCount());
  const Matrix x = RandomMatrix(1, 4, 5);
  const Matrix before = m.Forward(x);
  v[6 * 4 + 6 + 0] += 1.0;  // first entry of layer-1 W
  EXPECT_EQ(m.layers()[1].w(0, 0), v[30]);
  EXPECT_NE(m.Forward(x), before);
}

TEST(Params, LoraViewExcludesFrozenW) {
  Model m = TanhMlp(4);
  m.AttachLora(2, 1);
  ParamView v = m.Params();
  EXPECT_EQ(v.size(), 2u * (4 + 6) + 2u * (6 + 3));
  EXPECT_EQ(m.ParamCount(), v.size());
  v[0] = 5.0;  // first entry of layer-0 B
  EXPECT_EQ(m.layers()[0].lora->b(0, 0), 5.0);
}

TEST(MtlLora, ZeroUpProjectionIsBaseForward) {
  const Matrix w = RandomMatrix(3, 4, 1);
  const auto block = MtlLoraBlock::Create(3, 4, 2, 2, 3, 0.5, 7);
  const std::vector<double> x{1, -1, 0.5, 2};
  EXPECT_EQ(MtlLoraForward(w, block, x, 1), MatVec(w, x));
}

TEST(MtlLora, SingletonMixtureWeightIsOne) {
  auto block = MtlLoraBlock::Create(3, 4, 2, 2, 1, 0.5, 7);
  block.logits(0, 0) = 17.0;
  EXPECT_EQ(block.MixtureWeights(0), std::vector<double>{1.0});
}

TEST(MtlLora, MatchesStraightLineOracle) {
  const Matrix w = RandomMatrix(3, 4, 1);
  auto block = MtlLoraBlock::Create(3, 4, 2, 2, 3, 0.5, 7);
  for (auto& b : block.b) b = RandomMatrix(3, 2, b.size() + 10);
  block.logits = RandomMatrix(2, 3, 30);
  block.lambda = RandomMatrix(2, 2, 31);
  const std::vector<double> x{0.2, -1, 0.5, 2};
  for (std::size_t t = 0; t < 2; ++t) {
    double z[3], total = 0.0;
    for (int i = 0; i < 3; ++i) total += z[i] = std::exp(block.logits(t, i) / 0.5);
    std::vector<double> h = MatVec(w, x);
    for (int i = 0; i < 3; ++i) {
      for (std::size_t r = 0; r < 3; ++r) {
        double s = 0.0;
        for (std::size_t k = 0; k < 2; ++k) {
          double ax = 0.0;
          for (std::size_t j = 0; j < 4; ++j) ax += block.a(k, j) * x[j];
          s += block.b[i](r, k) * block.lambda(t, k) * ax;
        }
        h[r] += z[i] / total * s;
      }
    }
    const auto got = MtlLoraForward(w, block, x, t);
    for (std::size_t r = 0; r < 3; ++r) EXPECT_NEAR(got[r], h[r], 1e-12);
    // The per-task effective weight agrees with the vector form.
    const auto eff = MatVec(Add(w, block.Delta(t)), x);
    for (std::size_t r = 0; r < 3; ++r) EXPECT_NEAR(eff[r], h[r], 1e-12);
  }
  EXPECT_THROW(block.MixtureWeights(2), ContractError);
}

TEST(Checkpoint, ModelRoundTripIsLossless) {
  Model m = TanhMlp(3);
  m.AttachLora(2, 4);
  for (auto& l : m.mutable_layers()) {
    l.lora->b = RandomMatrix(l.d_out(), 2, 5);
    Matrix mask(l.d_out(), l.d_in());
    mask(0, 0) = 1.0;
    l.lora->delta_mask = mask;
  }
  m.set_active_task(1);
  const auto path = std::filesystem::temp_directory_path() / "maskzo_model.bin";
  SaveModel(path, m);
  const Model back = LoadModel(path);
  const Matrix x = RandomMatrix(3, 4, 6);
  EXPECT_EQ(back.Forward(x), m.Forward(x));
  EXPECT_EQ(back.active_task(), 1u);
  EXPECT_EQ(*back.layers()[1].lora->delta_mask, *m.layers()[1].lora->delta_mask);

  Model mtl = TanhMlp(3);
  mtl.AttachMtlLora(2, 3, 2, 0.5, 8);
  mtl.mutable_layers()[0].mtl_lora->b[1] = RandomMatrix(6, 2, 9);
  mtl.set_active_task(2);
  SaveModel(path, mtl);
  EXPECT_EQ(LoadModel(path).Forward(x), mtl.Forward(x));
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsGarbage) {
  const auto path = std::filesystem::temp_directory_path() / "maskzo_bad.bin";
  std::ofstream(path) << "not a bundle";
  EXPECT_THROW(ReadBundle(path), IoError);
  EXPECT_THROW(ReadBundle(path.string() + ".missing"), IoError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace maskzo
