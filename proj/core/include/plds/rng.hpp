// Copyright 2026 The plds Authors
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

#include <cstdint>
#include <limits>

#include "plds/linalg.hpp"

namespace plds {

// Counter-based generator: each draw hashes (key, counter) through a
// SplitMix64 finalizer, so streams can be split by deriving new keys
// without sharing state.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Independent child stream; the parent is not advanced.
  Rng split(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

  /// Uniform on [0, 1).
  double uniform();
  double normal();
  Vec normal_vector(int n);

  /// Draw from N(mean, cov) given the lower Cholesky factor of cov.
  Vec gaussian(const Vec& mean, const Mat& chol_lower);

  /// Index drawn from an unnormalized nonnegative weight vector.
  int categorical(const Vec& weights);

 private:
  std::uint64_t seed_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace plds
