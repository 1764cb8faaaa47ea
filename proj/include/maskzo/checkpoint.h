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

#ifndef MASKZO_CHECKPOINT_H_
#define MASKZO_CHECKPOINT_H_

#include <filesystem>
#include <string>
#include <vector>

#include "maskzo/matrix.h"
#include "maskzo/model.h"

namespace maskzo {

// Binary bundle of named matrices. Layout (all integers little-endian):
//
//   char[4]  magic "MZOB"
//   u32      version (1)
//   u64      entry count
//   per entry:
//     u32    name length, followed by that many bytes of UTF-8 name
//     u64    rows
//     u64    cols
//     f64    rows*cols values, row-major, IEEE-754 binary64
//
// Scores, masks, model weights and run state all use this layout.
struct NamedMatrix {
  std::string name;
  Matrix value;
};

void WriteBundle(const std::filesystem::path& path,
                 const std::vector<NamedMatrix>& entries);
std::vector<NamedMatrix> ReadBundle(const std::filesystem::path& path);

// Finds an entry by name; throws IoError when absent.
const Matrix& FindEntry(const std::vector<NamedMatrix>& entries,
                        const std::string& name);
bool HasEntry(const std::vector<NamedMatrix>& entries, const std::string& name);

// Model <-> bundle entries. Entry names: "model.meta" (activation, loss head,
// layer count), "layer<i>.w", "layer<i>.bias", "layer<i>.lora.{a,b,mask}",
// "layer<i>.mtl.{a,lambda,logits,tau,b<j>}".
std::vector<NamedMatrix> ModelEntries(const Model& model);
Model ModelFromEntries(const std::vector<NamedMatrix>& entries);

void SaveModel(const std::filesystem::path& path, const Model& model);
Model LoadModel(const std::filesystem::path& path);

}  // namespace maskzo

#endif  // MASKZO_CHECKPOINT_H_
