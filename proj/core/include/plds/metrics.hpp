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

// Error metrics on state estimates and mode labels. Mode labels of a
// learned or inferred model are arbitrary, so mode accuracy is reported
// under the label permutation that maximizes agreement.

#pragma once

#include <string>
#include <vector>

#include "plds/linalg.hpp"

namespace plds {

struct StateErrors {
  Vec mae_per_dim;
  Vec std_per_dim;
  Vec rmse_per_dim;
  double mae = 0.0;   // pooled over t and dimensions
  double std = 0.0;   // population standard deviation of |error|
  double rmse = 0.0;
  std::vector<double> abs_errors;  // pooled, row-major by t
};

/// Throws LENGTH_MISMATCH when T or L differ.
StateErrors state_errors(const std::vector<Vec>& estimate, const std::vector<Vec>& truth);

/// perm[est] = true label maximizing agreement. Exhaustive over K! for
/// K <= 6, greedy on the confusion counts otherwise.
std::vector<int> align_labels(const std::vector<int>& estimated, const std::vector<int>& truth, int K);

double mode_accuracy(const std::vector<int>& estimated, const std::vector<int>& truth, int K);

/// Row-wise argmax of a T x K probability matrix.
std::vector<int> argmax_rows(const Mat& probabilities);

/// min over label permutations P of max |P tau_est P^T - tau_true|.
double aligned_max_abs_error(const Mat& tau_est, const Mat& tau_true);

/// Permutation achieving aligned_max_abs_error: new label i is old label perm[i].
std::vector<int> best_tau_permutation(const Mat& tau_est, const Mat& tau_true);

struct MetricsRow {
  std::string method;
  double mae = 0.0;
  double std = 0.0;
  double rmse = 0.0;
  double mode_acc = 0.0;  // NaN when not available
  double us_per_step = 0.0;
  bool failed = false;
  std::string failure;
};

struct MetricsReport {
  std::vector<MetricsRow> rows;
};

/// Columns exactly: method, mae, std, rmse, mode_acc, us_per_step.
std::string report_csv(const MetricsReport& report);

/// Aligned text table; per column the best value is tagged [1] and the
/// runner-up [2] (lower is better except mode_acc).
std::string report_text(const MetricsReport& report);

}  // namespace plds
