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

// Brute-force posterior over all K^T mode paths. Each path is conditioned
// with the single-mode Kalman machinery, so the result is exact up to
// floating point. Meant for test fixtures: the cost is exponential in T.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "plds/gaussian.hpp"
#include "plds/model.hpp"

namespace plds {

inline constexpr std::int64_t kDefaultEnumerationCap = std::int64_t{1} << 20;

struct ExactPosterior {
  int K = 0;
  int T = 0;
  int L = 0;

  // Indexed by path number; path s decodes with z_1 as the most significant
  // base-K digit (lexicographic order).
  std::vector<double> log_joint;  // log p(y_{1:T}, z_{1:T} = s)
  std::vector<double> weights;    // beta_s, sums to 1
  double log_marginal_likelihood = 0.0;

  std::vector<std::vector<Vec>> path_mean;   // [s][t] E[x_t | y, s]
  std::vector<std::vector<Mat>> path_cov;    // [s][t]
  std::vector<std::vector<Mat>> path_cross;  // [s][t] Cov(x_{t-1}, x_t | y, s)

  Mat mode_posterior;           // T x K, p(z_t | y_{1:T})
  Mat filtered_mode_posterior;  // T x K, p(z_t | y_{1:t})

  // p(x_t | y_{1:t}) as a K^t component mixture, one entry per t.
  std::vector<GaussianMixture> filtered;

  std::int64_t num_paths() const { return static_cast<std::int64_t>(weights.size()); }
  std::vector<int> path(std::int64_t s) const;

  /// p(x_t | y_{1:T}) as a K^T component mixture.
  GaussianMixture smoothed(int t) const;
  Vec smoothed_mean(int t) const;
  Mat smoothed_cov(int t) const;
};

/// Throws ENUMERATION_TOO_LARGE when K^T exceeds `cap`.
ExactPosterior enumerate_posterior(const StaticParams& theta, const DynamicParams& phi,
                                   std::span<const Vec> y,
                                   std::int64_t cap = kDefaultEnumerationCap);

/// Stacked posterior N([x_1 : x_T]; kappa_s, K_s) for one mode path, built
/// from the path's joint precision. Dimension T*L; only sensible for small T.
Gaussian stacked_path_posterior(const StaticParams& theta, const DynamicParams& phi,
                                std::span<const Vec> y, std::span<const int> path);

}  // namespace plds
