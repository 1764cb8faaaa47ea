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

#ifndef MASKZO_RANDOM_H_
#define MASKZO_RANDOM_H_

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace maskzo {

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Derives an independent child seed from a parent seed and a tag path, e.g.
// DeriveSeed(master, {step, task}).
std::uint64_t DeriveSeed(std::uint64_t seed,
                         std::initializer_list<std::uint64_t> tags);

// Uniform double in the open interval (0, 1) addressed by (seed, index).
double UniformAt(std::uint64_t seed, std::uint64_t index);

// Standard normal value addressed by (seed, index). Values 2k and 2k+1 are
// the cosine/sine halves of one Box-Muller pair, so any position can be
// regenerated in O(1) without replaying the stream.
double GaussAt(std::uint64_t seed, std::uint64_t index);

// Sequential reader over the counter-addressed Gaussian sequence of a seed.
// Two streams with the same seed yield identical values; Skip() is O(1).
class GaussStream {
 public:
  explicit GaussStream(std::uint64_t seed, std::uint64_t cursor = 0)
      : seed_(seed), cursor_(cursor) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t cursor() const { return cursor_; }

  double Next();
  void Fill(std::span<double> out);
  void Skip(std::uint64_t n) { cursor_ += n; }

 private:
  std::uint64_t seed_;
  std::uint64_t cursor_;
  // Cached sine half of the pair starting at cached_pair_ * 2.
  std::uint64_t cached_pair_ = ~0ULL;
  double cached_sin_ = 0.0;
};

// Draws d values from the stream and advances its cursor by d.
std::vector<double> GaussVector(GaussStream& stream, std::size_t d);

}  // namespace maskzo

#endif  // MASKZO_RANDOM_H_
