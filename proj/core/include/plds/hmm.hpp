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

#include <vector>

#include "plds/linalg.hpp"

namespace plds {

struct HmmPosterior {
  Mat marginals;                // T x K
  std::vector<Mat> pairwise;    // [t] K x K, (from, to) = q(z_{t-1}=from, z_t=to); [0] empty
  Mat filtered;                 // T x K, normalized forward messages
  double log_normalizer = 0.0;  // log sum_z prior * prod scores * transitions
};

/// Log-domain forward-backward with per-step normalization.
///   log_scores:  T x K pseudo-observation log scores
///   log_initial: K, log p(z_1)
///   log_tau:     K x K, log_tau(to, from) = log p(z_t = to | z_{t-1} = from)
/// Throws DEGENERATE_RESPONSIBILITIES when every state has zero mass at
/// some t.
HmmPosterior hmm_forward_backward(const Mat& log_scores, const Vec& log_initial, const Mat& log_tau);

}  // namespace plds
