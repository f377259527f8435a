// Copyright 2026 The vbsprep Authors
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

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

namespace vbs {

/// SplitMix64 finalizer. Used to derive independent stream seeds from a
/// (seed, index) pair so results do not depend on scheduling.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index,
                                    std::uint64_t salt = 0) {
  return mix64(mix64(seed ^ mix64(salt)) + index);
}

/// Small-state generator for per-shot streams (8 bytes of state).
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits. Unlike
/// std::uniform_real_distribution this is identical across standard libraries.
template <class Gen>
double uniform01(Gen& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

template <class Gen>
double uniform(Gen& gen, double lo, double hi) {
  return lo + (hi - lo) * uniform01(gen);
}

/// Uniform integer in [0, n).
template <class Gen>
std::uint64_t uniform_index(Gen& gen, std::uint64_t n) {
  return static_cast<std::uint64_t>(uniform01(gen) * static_cast<double>(n)) % n;
}

/// Standard normal draw (Box-Muller, one value per call).
template <class Gen>
double gaussian(Gen& gen) {
  double u1 = uniform01(gen);
  while (u1 <= 0.0) u1 = uniform01(gen);
  const double u2 = uniform01(gen);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace vbs
