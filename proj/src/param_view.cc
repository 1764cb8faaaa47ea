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

#include "maskzo/param_view.h"

#include <algorithm>

#include "maskzo/errors.h"

namespace maskzo {

void ParamView::Append(std::span<double> segment) {
  if (segment.empty()) return;
  starts_.push_back(size_);
  segments_.push_back(segment);
  size_ += segment.size();
}

double& ParamView::operator[](std::size_t i) {
  Require(i < size_, "ParamView: index out of range");
  const auto it = std::upper_bound(starts_.begin(), starts_.end(), i);
  const std::size_t s = static_cast<std::size_t>(it - starts_.begin()) - 1;
  return segments_[s][i - starts_[s]];
}

double ParamView::operator[](std::size_t i) const {
  return const_cast<ParamView&>(*this)[i];
}

std::vector<double> ParamView::Snapshot() const {
  std::vector<double> out;
  out.reserve(size_);
  for (const auto& s : segments_) out.insert(out.end(), s.begin(), s.end());
  return out;
}

void ParamView::Assign(std::span<const double> values) {
  Require(values.size() == size_, "ParamView::Assign: length mismatch");
  std::size_t k = 0;
  for (auto& s : segments_)
    for (double& v : s) v = values[k++];
}

}  // namespace maskzo
