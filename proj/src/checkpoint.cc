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

#include "maskzo/checkpoint.h"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "maskzo/errors.h"

namespace maskzo {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr std::array<char, 4> kMagic = {'M', 'Z', 'O', 'B'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void Put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T Get(std::ifstream& in, const std::filesystem::path& path) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw IoError("truncated bundle: " + path.string());
  return value;
}

std::string LayerKey(std::size_t i, const char* suffix) {
  return "layer" + std::to_string(i) + "." + suffix;
}

}  // namespace

void WriteBundle(const std::filesystem::path& path,
                 const std::vector<NamedMatrix>& entries) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(kMagic.data(), kMagic.size());
  Put<std::uint32_t>(out, kVersion);
  Put<std::uint64_t>(out, entries.size());
  for (const auto& e : entries) {
    Put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    Put<std::uint64_t>(out, e.value.rows());
    Put<std::uint64_t>(out, e.value.cols());
    const auto d = e.value.data();
    out.write(reinterpret_cast<const char*>(d.data()),
              static_cast<std::streamsize>(d.size() * sizeof(double)));
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<NamedMatrix> ReadBundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw IoError("not a bundle: " + path.string());
  const auto version = Get<std::uint32_t>(in, path);
  if (version != kVersion) {
    throw IoError("unsupported bundle version " + std::to_string(version));
  }
  const auto count = Get<std::uint64_t>(in, path);
  std::vector<NamedMatrix> entries;
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto name_len = Get<std::uint32_t>(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rows = Get<std::uint64_t>(in, path);
    const auto cols = Get<std::uint64_t>(in, path);
    std::vector<double> data(rows * cols);
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!in) throw IoError("truncated bundle: " + path.string());
    entries.push_back({std::move(name), Matrix(rows, cols, std::move(data))});
  }
  return entries;
}

const Matrix& FindEntry(const std::vector<NamedMatrix>& entries,
                        const std::string& name) {
  for (const auto& e : entries)
    if (e.name == name) return e.value;
  throw IoError("bundle has no entry '" + name + "'");
}

bool HasEntry(const std::vector<NamedMatrix>& entries,
              const std::string& name) {
  for (const auto& e : entries)
    if (e.name == name) return true;
  return false;
}

std::vector<NamedMatrix> ModelEntries(const Model& model) {
  std::vector<NamedMatrix> out;
  out.push_back({"model.meta",
                 Matrix(1, 4,
                        {static_cast<double>(model.activation()),
                         static_cast<double>(model.loss_head()),
                         static_cast<double>(model.layers().size()),
                         static_cast<double>(model.active_task())})});
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    const auto& l = model.layers()[i];
    out.push_back({LayerKey(i, "w"), l.w});
    if (!l.bias.empty())
      out.push_back({LayerKey(i, "bias"), Matrix(1, l.bias.size(), l.bias)});
    if (l.lora) {
      out.push_back({LayerKey(i, "lora.a"), l.lora->a});
      out.push_back({LayerKey(i, "lora.b"), l.lora->b});
      if (l.lora->delta_mask)
        out.push_back({LayerKey(i, "lora.mask"), *l.lora->delta_mask});
    }
    if (l.mtl_lora) {
      const auto& m = *l.mtl_lora;
      out.push_back({LayerKey(i, "mtl.a"), m.a});
      out.push_back({LayerKey(i, "mtl.lambda"), m.lambda});
      out.push_back({LayerKey(i, "mtl.logits"), m.logits});
      out.push_back({LayerKey(i, "mtl.tau"), Matrix(1, 1, {m.temperature})});
      for (std::size_t j = 0; j < m.b.size(); ++j) {
        out.push_back(
            {LayerKey(i, ("mtl.b" + std::to_string(j)).c_str()), m.b[j]});
      }
    }
  }
  return out;
}

Model ModelFromEntries(const std::vector<NamedMatrix>& entries) {
  const Matrix& meta = FindEntry(entries, "model.meta");
  if (meta.rows() != 1 || meta.cols() != 4)
    throw IoError("model.meta has the wrong shape");
  const auto n_layers = static_cast<std::size_t>(meta(0, 2));
  std::vector<LinearLayer> layers(n_layers);
  for (std::size_t i = 0; i < n_layers; ++i) {
    auto& l = layers[i];
    l.w = FindEntry(entries, LayerKey(i, "w"));
    if (HasEntry(entries, LayerKey(i, "bias"))) {
      const auto d = FindEntry(entries, LayerKey(i, "bias")).data();
      l.bias.assign(d.begin(), d.end());
    }
    if (HasEntry(entries, LayerKey(i, "lora.a"))) {
      LoraAdapter a{FindEntry(entries, LayerKey(i, "lora.b")),
                    FindEntry(entries, LayerKey(i, "lora.a")), std::nullopt};
      if (HasEntry(entries, LayerKey(i, "lora.mask")))
        a.delta_mask = FindEntry(entries, LayerKey(i, "lora.mask"));
      l.lora = std::move(a);
    }
    if (HasEntry(entries, LayerKey(i, "mtl.a"))) {
      MtlLoraBlock m;
      m.a = FindEntry(entries, LayerKey(i, "mtl.a"));
      m.lambda = FindEntry(entries, LayerKey(i, "mtl.lambda"));
      m.logits = FindEntry(entries, LayerKey(i, "mtl.logits"));
      m.temperature = FindEntry(entries, LayerKey(i, "mtl.tau"))(0, 0);
      for (std::size_t j = 0; j < m.logits.cols(); ++j) {
        m.b.push_back(FindEntry(
            entries, LayerKey(i, ("mtl.b" + std::to_string(j)).c_str())));
      }
      l.mtl_lora = std::move(m);
    }
  }
  Model model(std::move(layers), static_cast<Activation>(meta(0, 0)),
              static_cast<LossHead>(meta(0, 1)));
  model.set_active_task(static_cast<std::size_t>(meta(0, 3)));
  return model;
}

void SaveModel(const std::filesystem::path& path, const Model& model) {
  WriteBundle(path, ModelEntries(model));
}

Model LoadModel(const std::filesystem::path& path) {
  return ModelFromEntries(ReadBundle(path));
}

}  // namespace maskzo
