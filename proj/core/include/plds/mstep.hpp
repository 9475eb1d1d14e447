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

// Closed-form update of the dynamic parameters (C, Q, tau) shared by the
// variational and GPB2 learners. Both produce the same sufficient
// statistics; only how the pairwise state moments are obtained differs.

#pragma once

#include <vector>

#include "plds/model.hpp"

namespace plds {

/// Expected sufficient statistics summed over t >= 2 (and over sequences).
/// Moments are conditioned on the mode active at time t.
struct TransitionStats {
  int K = 0;
  int L = 0;
  Vec weight;                 // sum_t q(z_t = k)
  std::vector<Mat> S_cur;     // sum_t q(z_t = k) E[x_t x_t^T | k]
  std::vector<Mat> S_prev;    // sum_t q(z_t = k) E[x_{t-1} x_{t-1}^T | k]
  std::vector<Mat> S_cross;   // sum_t q(z_t = k) E[x_t x_{t-1}^T | k]
  Mat transitions;            // (to, from): sum_t q(z_{t-1} = from, z_t = to)

  static TransitionStats zeros(int K, int L);
  TransitionStats& operator+=(const TransitionStats& other);
};

struct MStepConfig {
  bool update_C = false;
  double starvation_eps = 1e-8;
};

struct MStepResult {
  DynamicParams phi;
  std::vector<int> starved;  // components whose C, Q were held (STARVED_COMPONENT)
};

/// tau columns are normalized by the expected number of departures from
/// each mode. C_k = S_cross S_prev^{-1} when enabled; Q_k is the weighted
/// residual second moment, symmetrized and jittered to SPD.
MStepResult m_step(const TransitionStats& stats, const DynamicParams& previous, const MStepConfig& config);

/// The phi-dependent part of the expected complete-data log-likelihood,
///   sum_k [ w_k/2 log|Q_k^{-1}| - 1/2 tr(Q_k^{-1} E_k) ] + sum transitions log tau,
/// with E_k the weighted residual second moment under C_k.
double transition_objective(const TransitionStats& stats, const DynamicParams& phi);

}  // namespace plds
