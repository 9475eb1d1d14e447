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

/// Multivariate normal. The covariance is symmetrized on construction and
/// jittered when its smallest eigenvalue drops below 1e-10.
class Gaussian {
 public:
  Gaussian() = default;
  Gaussian(Vec mean, const Mat& cov);

  /// Skips the SPD repair; for callers whose covariance is SPD by
  /// construction and who need the moments untouched.
  static Gaussian from_moments_unchecked(Vec mean, Mat cov);

  int dim() const { return static_cast<int>(mean_.size()); }
  const Vec& mean() const { return mean_; }
  const Mat& cov() const { return cov_; }

  double log_pdf(const Vec& x) const;

 private:
  Vec mean_;
  Mat cov_;
};

class GaussianMixture {
 public:
  GaussianMixture() = default;

  /// Weights are normalized here; they must be nonnegative with a positive
  /// sum and all components must share one dimension.
  GaussianMixture(std::vector<double> weights, std::vector<Gaussian> components);

  bool empty() const { return components_.empty(); }
  int size() const { return static_cast<int>(components_.size()); }
  int dim() const { return components_.empty() ? 0 : components_.front().dim(); }

  const std::vector<double>& weights() const { return weights_; }
  const std::vector<Gaussian>& components() const { return components_; }

  Vec mean() const;
  double log_pdf(const Vec& x) const;

 private:
  std::vector<double> weights_;
  std::vector<Gaussian> components_;
};

/// Single Gaussian with the mixture's first two moments:
///   mean = sum_i w_i mu_i
///   cov  = sum_i w_i (Sigma_i + (mu_i - mean)(mu_i - mean)^T)
/// Components with weight below `skip_below` are dropped and the rest
/// renormalized. Throws EMPTY_MIXTURE on an empty mixture.
Gaussian moment_match(const GaussianMixture& mix, double skip_below = 0.0);

/// Same collapse on raw arrays, used by the filters' inner loops.
void moment_match(const double* weights, const Vec* means, const Mat* covs, int n, Vec& mean_out,
                  Mat& cov_out, double skip_below = 0.0);

}  // namespace plds
