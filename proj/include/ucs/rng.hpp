// Copyright 2026 The ucs Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "ucs/core.hpp"

namespace ucs {

/// Purpose tags that separate the random streams drawn for one key.
enum class StreamPurpose : std::uint64_t {
  kMatrix = 1,
  kSignal = 2,
  kSetChoice = 3,
  kWidthSample = 4,
  kAuxMeasurements = 5,
  kSolver = 6,
  kNoise = 7,
  kTest = 99,
};

/// Counter-based generator: the i-th draw of a stream is a pure function of
/// (key, i), so streams keyed by (seed, trial, purpose) never share state and
/// can be created anywhere without coordination. Normals use Box-Muller so
/// sequences do not depend on the standard library's distributions.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t id, StreamPurpose purpose)
      : key_(mix(mix(seed ^ 0x6a09e667f3bcc909ULL) ^
                 mix(id + 0xbb67ae8584caa73bULL) ^
                 mix(static_cast<std::uint64_t>(purpose) +
                     0x3c6ef372fe94f82bULL))) {}

  std::uint64_t next_u64() { return mix(key_ + kGamma * ++counter_); }

  /// Uniform on (0, 1), never exactly 0 or 1.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) %
           n;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double angle = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
  }

  Vector normal_vector(Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  /// Row-major fill, so the leading rows of a taller draw coincide with a
  /// shorter one from the same stream.
  Matrix normal_matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) m(r, c) = normal();
    }
    return m;
  }

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ucs
