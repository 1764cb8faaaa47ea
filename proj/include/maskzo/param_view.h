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

#ifndef MASKZO_PARAM_VIEW_H_
#define MASKZO_PARAM_VIEW_H_

#include <cstddef>
#include <span>
#include <vector>

namespace maskzo {

// Flat, ordered view over trainable storage scattered across several
// buffers. Element i of the view aliases exactly one double owned elsewhere;
// the view is invalidated if any underlying buffer is resized.
class ParamView {
 public:
  ParamView() = default;

  void Append(std::span<double> segment);

  std::size_t size() const { return size_; }
  double& operator[](std::size_t i);
  double operator[](std::size_t i) const;

  // Calls fn(global_offset, segment) for each segment in order.
  template <typename Fn>
  void ForEachSegment(Fn&& fn) const {
    std::size_t offset = 0;
    for (const auto& s : segments_) {
      fn(offset, s);
      offset += s.size();
    }
  }

  std::vector<double> Snapshot() const;
  void Assign(std::span<const double> values);

 private:
  std::vector<std::span<double>> segments_;
  std::vector<std::size_t> starts_;
  std::size_t size_ = 0;
};

}  // namespace maskzo

#endif  // MASKZO_PARAM_VIEW_H_
