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

// Generalized pseudo-Bayes of order two. Each step expands the K-component
// belief into K^2 (previous mode, current mode) hypotheses, conditions each
// exactly on y_t, and collapses back to K by moment matching. The smoother
// mirrors this backward with per-pair RTS updates.

#pragma once

#include <span>
#include <vector>

#include "plds/model.hpp"
#include "plds/mstep.hpp"

namespace plds {

struct Gpb2Belief {
  int t = 0;
  Vec weight;              // rho_hat_{t,k}
  std::vector<Vec> mean;   // eta_hat_{t,k}
  std::vector<Mat> cov;    // V_hat_{t,k}

  // Pair expansion, indexed [j * K + k] for previous mode j and current
  // mode k. Empty at t = 0.
  Mat pair_weight;                  // (j, k), sums to 1
  std::vector<Vec> pair_mean;
  std::vector<Mat> pair_cov;
  std::vector<Vec> innovation;      // d = y - A_k C_k eta_hat_j - b_k
  std::vector<Mat> pred_precision;  // P = (Q_k + C_k V_hat_j C_k^T)^{-1}
  std::vector<Mat> innovation_cov;  // S, only when requested (D x D each)

  double log_likelihood_increment = 0.0;
};

// Per-model factorizations reused across steps.
class Gpb2Model {
 public:
  Gpb2Model(const StaticParams& theta, const DynamicParams& phi);

  const StaticParams& theta() const { return *theta_; }
  const DynamicParams& phi() const { return *phi_; }
  const ObservationCache& obs() const { return obs_; }
  const DynamicsCache& dyn() const { return dyn_; }

 private:
  const StaticParams* theta_;
  const DynamicParams* phi_;
  ObservationCache obs_;
  DynamicsCache dyn_;
};

/// Exact K-component posterior of x_1 given y_1.
Gpb2Belief gpb2_initial(const Gpb2Model& model, const Vec& y);

/// Throws SINGULAR_MATRIX naming (t, j, k) when S or the predicted
/// covariance cannot be factored.
Gpb2Belief gpb2_step(const Gpb2Model& model, const Gpb2Belief& previous, const Vec& y,
                     bool keep_innovation_cov = false);
Gpb2Belief gpb2_step(const StaticParams& theta, const DynamicParams& phi, const Gpb2Belief& previous,
                     const Vec& y);

struct Gpb2FilterResult {
  std::vector<Gpb2Belief> beliefs;
  std::vector<Vec> mean;  // K-bank collapsed to one Gaussian
  std::vector<Mat> cov;
  double log_likelihood = 0.0;

  Mat mode_posterior() const;  // T x K filtered weights
};

Gpb2FilterResult gpb2_filter(const StaticParams& theta, const DynamicParams& phi, std::span<const Vec> y);

struct Gpb2Smoothed {
  Mat mode_posterior;                     // T x K
  std::vector<std::vector<Vec>> mode_mean;  // [t][k]
  std::vector<std::vector<Mat>> mode_cov;
  std::vector<Vec> mean;                  // collapsed over modes
  std::vector<Mat> cov;
  std::vector<Mat> cross_cov;             // [t] Cov(x_{t-1}, x_t); [0] empty
  TransitionStats stats;                  // for the shared M-step
};

Gpb2Smoothed gpb2_smoother(const StaticParams& theta, const DynamicParams& phi, std::span<const Vec> y,
                           const Gpb2FilterResult& filtered);

struct Gpb2LearnConfig {
  int max_iters = 50;
  double tol_rel = 1e-6;  // relative log-likelihood change
  bool update_C = false;
};

struct Gpb2LearnResult {
  DynamicParams phi;
  std::vector<double> trace;  // log-likelihood under the parameters entering each iteration
  std::vector<int> starved;
  bool converged = false;
};

Gpb2LearnResult gpb2_learn(const StaticParams& theta, const DynamicParams& phi0,
                           std::span<const std::vector<Vec>> sequences, const Gpb2LearnConfig& config);

}  // namespace plds
