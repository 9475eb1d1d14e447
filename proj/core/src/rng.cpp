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

#include "plds/rng.hpp"

#include <cmath>

namespace plds {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed), key_(mix64(seed + kGolden)) {}

Rng::result_type Rng::operator()() {
  ++counter_;
  return mix64(key_ ^ mix64(counter_ * kGolden));
}

Rng Rng::split(std::uint64_t stream) const {
  Rng child(seed_);
  child.key_ = mix64(key_ ^ mix64((stream + 1) * 0xD1B54A32D192ED03ull));
  return child;
}

double Rng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

Vec Rng::normal_vector(int n) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = normal();
  return v;
}

Vec Rng::gaussian(const Vec& mean, const Mat& chol_lower) {
  return mean + chol_lower * normal_vector(static_cast<int>(mean.size()));
}

int Rng::categorical(const Vec& weights) {
  const double total = weights.sum();
  double u = uniform() * total;
  for (int i = 0; i < weights.size(); ++i) {
    u -= weights(i);
    if (u < 0.0) return i;
  }
  for (int i = static_cast<int>(weights.size()) - 1; i >= 0; --i) {
    if (weights(i) > 0.0) return i;
  }
  return 0;
}

}  // namespace plds
