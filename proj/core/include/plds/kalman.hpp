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

// Covariance-form Kalman filter and Rauch-Tung-Striebel smoother. These are
// the reference engines the switching methods must reduce to at K = 1.

#pragma once

#include <span>
#include <vector>

#include "plds/model.hpp"

namespace plds {

struct KalmanBelief {
  std::vector<Vec> predicted_mean;
  std::vector<Mat> predicted_cov;
  std::vector<Vec> filtered_mean;
  std::vector<Mat> filtered_cov;

  // Filled by rts_smoother. cross_cov[t] = Cov(x_{t-1}, x_t | y_{1:T}) for
  // t >= 1; cross_cov[0] is left empty.
  std::vector<Vec> smoothed_mean;
  std::vector<Mat> smoothed_cov;
  std::vector<Mat> cross_cov;

  double log_likelihood = 0.0;
  std::vector<double> log_likelihood_increments;

  int T() const { return static_cast<int>(filtered_mean.size()); }
  bool smoothed() const { return !smoothed_mean.empty(); }
};

/// One predict/update step under component z; `first` selects the
/// initial-state prior in place of the dynamics.
struct KalmanStep {
  Vec predicted_mean;
  Mat predicted_cov;
  Vec filtered_mean;
  Mat filtered_cov;
  double log_likelihood = 0.0;
};
KalmanStep kalman_step(const StaticParams& theta, const DynamicParams& phi, int z, bool first,
                       const Vec& prev_mean, const Mat& prev_cov, const Vec& y, int t);

/// Standard predict/update recursion. Throws NOT_SINGLE_MODE unless K = 1.
KalmanBelief kalman_filter(const StaticParams& theta, const DynamicParams& phi,
                           std::span<const Vec> y);

/// Backward pass over a filtered belief (K = 1). Throws SINGULAR_MATRIX with
/// the time index when a predicted covariance cannot be factored.
KalmanBelief rts_smoother(KalmanBelief belief, const DynamicParams& phi);

/// Filter with a fixed mode path: component modes[t] is active at step t.
KalmanBelief kalman_filter_path(const StaticParams& theta, const DynamicParams& phi,
                                std::span<const Vec> y, std::span<const int> modes);
KalmanBelief rts_smoother_path(KalmanBelief belief, const DynamicParams& phi,
                               std::span<const int> modes);

}  // namespace plds
