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

#include "maskzo/random.h"

#include <cmath>
#include <numbers>

#include "maskzo/errors.h"

namespace maskzo {
namespace {

// Keyed counter hash: SplitMix64 state at position `counter` of the stream
// keyed by `seed`.
inline std::uint64_t CounterHash(std::uint64_t seed, std::uint64_t counter) {
  return Mix64(Mix64(seed) + counter * 0x9E3779B97F4A7C15ULL);
}

inline double ToOpenUnit(std::uint64_t bits) {
  // 53 random bits, offset by half an ulp so 0 is never produced.
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

struct BoxMullerPair {
  double cos_half;
  double sin_half;
};

inline BoxMullerPair PairAt(std::uint64_t seed, std::uint64_t pair) {
  const double u1 = ToOpenUnit(CounterHash(seed, 2 * pair));
  const double u2 = ToOpenUnit(CounterHash(seed, 2 * pair + 1));
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace

std::uint64_t DeriveSeed(std::uint64_t seed,
                         std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = Mix64(seed ^ 0xA0761D6478BD642FULL);
  for (std::uint64_t tag : tags) h = Mix64(h ^ Mix64(tag + 0xE7037ED1A0B428DBULL));
  return h;
}

double UniformAt(std::uint64_t seed, std::uint64_t index) {
  return ToOpenUnit(CounterHash(seed ^ 0x5851F42D4C957F2DULL, index));
}

double GaussAt(std::uint64_t seed, std::uint64_t index) {
  const BoxMullerPair p = PairAt(seed, index >> 1);
  return (index & 1) ? p.sin_half : p.cos_half;
}

double GaussStream::Next() {
  const std::uint64_t index = cursor_++;
  const std::uint64_t pair = index >> 1;
  if (index & 1) {
    if (pair == cached_pair_) return cached_sin_;
    return PairAt(seed_, pair).sin_half;
  }
  const BoxMullerPair p = PairAt(seed_, pair);
  cached_pair_ = pair;
  cached_sin_ = p.sin_half;
  return p.cos_half;
}

void GaussStream::Fill(std::span<double> out) {
  for (double& v : out) v = Next();
}

std::vector<double> GaussVector(GaussStream& stream, std::size_t d) {
  Require(d >= 1, "GaussVector: d must be >= 1");
  std::vector<double> out(d);
  stream.Fill(out);
  return out;
}

}  // namespace maskzo
