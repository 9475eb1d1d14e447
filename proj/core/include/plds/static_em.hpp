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

// Offline learning of the observation model from paired (x, y) data, and
// the per-frame inverse-regression predictor x ~ p(x | y).
//
// The joint model is a mixture of affine-Gaussian pairs:
//   p(x, z = k) = pi_k N(x; gamma_k, Gamma_k)
//   p(y | x, k) = N(y; A_k x + b_k, Sigma_k)
// fitted by closed-form EM; inversion is Gaussian conditioning per
// component.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plds/gaussian.hpp"
#include "plds/model.hpp"

namespace plds {

struct TrainingSet {
  std::vector<Vec> x;
  std::vector<Vec> y;

  int N() const { return static_cast<int>(x.size()); }
  int L() const { return x.empty() ? 0 : static_cast<int>(x.front().size()); }
  int D() const { return y.empty() ? 0 : static_cast<int>(y.front().size()); }
};

struct StaticFitConfig {
  int max_iters = 300;
  double tol = 1e-8;  // relative log-likelihood change
  int restarts = 5;
  std::uint64_t seed = 0;
  bool sigma_diagonal = false;
  double sigma_floor = 1e-8;
  double holdout_fraction = 0.2;  // select_k only
  std::string criterion = "bic";  // "bic" | "mae"
};

struct StaticFitResult {
  StaticParams theta;
  std::vector<double> log_likelihood;  // one entry per EM iteration
  std::vector<int> reinitialized;      // iteration index of every starved-component reset
  bool converged = false;
  int restart = 0;                     // winning restart
};

/// Throws INVALID_PARAMETERS when N < K (L + 1) or dimensions disagree.
StaticFitResult fit_static(const TrainingSet& data, int K, const StaticFitConfig& config);

/// Responsibilities r[n][k] under theta, one simplex row per pair.
Mat static_responsibilities(const StaticParams& theta, const TrainingSet& data);
double static_log_likelihood(const StaticParams& theta, const TrainingSet& data);

struct InversePrediction {
  Vec mean;  // point estimate: the mixture mean
  GaussianMixture posterior;
  Vec weights;  // w_k(y)
};

/// p(x | y) = sum_k w_k(y) N(x; m_k(y), S_k). Per-component factorizations
/// do not depend on y and are computed once.
class InversePredictor {
 public:
  explicit InversePredictor(const StaticParams& theta);

  InversePrediction predict(const Vec& y) const;

  /// Mixture mean and moment-matched covariance only.
  void predict_moments(const Vec& y, Vec& mean, Mat& cov, Vec& weights) const;

 private:
  const StaticParams* theta_;
  std::vector<SpdFactor> marginal_;    // Sigma_k + A_k Gamma_k A_k^T
  std::vector<Vec> marginal_mean_;     // A_k gamma_k + b_k
  std::vector<Mat> post_cov_;          // (Gamma_k^{-1} + A_k^T Sigma_k^{-1} A_k)^{-1}
  std::vector<Mat> gain_;              // post_cov A_k^T Sigma_k^{-1}
  std::vector<Vec> prior_shift_;       // post_cov Gamma_k^{-1} gamma_k
  Vec log_pi_;
};

InversePrediction predict_inverse(const StaticParams& theta, const Vec& y);

struct SelectKRow {
  int K = 0;
  double log_likelihood = 0.0;
  long long parameters = 0;
  double bic = 0.0;
  double mae = 0.0;
};

struct SelectKResult {
  int chosen_K = 0;
  std::vector<SelectKRow> table;
};

/// BIC = -2 loglik + p log N on the training split; MAE of predict_inverse
/// on the held-out split. Chooses the minimizer of config.criterion.
SelectKResult select_k(const TrainingSet& data, const std::vector<int>& k_range, const StaticFitConfig& config);

}  // namespace plds
