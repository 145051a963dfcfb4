/* Copyright 2026 The EcoAttn Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef ECOATTN_RNG_HPP_
#define ECOATTN_RNG_HPP_

#include <cstdint>

#include "ecoattn/errors.hpp"
#include "ecoattn/matrix.hpp"

namespace ecoattn {

/// SplitMix64 generator. The mixing constants are fixed so that ports in any
/// language reproduce the same stream from the same seed:
///   state += 0x9E3779B97F4A7C15
///   z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
/// Doubles are derived as (u64 >> 11) * 2^-53, uniform in [0, 1).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  /// Uniform integer in [0, n); n must be positive.
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

/// Matrix with entries drawn uniformly from [-scale, +scale], row by row.
inline Matrix rand_matrix(SplitMix64& rng, std::size_t rows, std::size_t cols,
                          double scale) {
  if (!(scale > 0.0)) {
    throw ParameterError("rand_matrix: scale must be positive");
  }
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.next_uniform(-scale, scale);
  return m;
}

}  // namespace ecoattn

#endif  // ECOATTN_RNG_HPP_
