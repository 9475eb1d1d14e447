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

// Piecewise-linear dynamical system: K affine-Gaussian regimes selected by
// a hidden Markov mode z_t.
//
//   z_1 ~ pi,            z_t | z_{t-1} = j ~ tau(:, j)
//   x_1 ~ N(gamma_z, Gamma_z),  x_t ~ N(C_z x_{t-1}, Q_z)
//   y_t ~ N(A_z x_t + b_z, Sigma_z)
//
// Mode labels are 0-based in memory and 1-based in every file format.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "plds/linalg.hpp"
#include "plds/rng.hpp"

namespace plds {

/// Observation model and initial-state mixture.
struct StaticParams {
  int K = 0;
  int D = 0;
  int L = 0;
  std::vector<Mat> A;      // D x L
  std::vector<Vec> b;      // D
  std::vector<Mat> Sigma;  // D x D
  Vec pi;                  // K
  std::vector<Vec> gamma;  // L
  std::vector<Mat> Gamma;  // L x L
  bool sigma_diagonal = false;
};

/// State dynamics and mode switching. tau(i, j) = p(z_t = i | z_{t-1} = j),
/// so each column is a distribution.
struct DynamicParams {
  int K = 0;
  int L = 0;
  std::vector<Mat> C;  // L x L
  std::vector<Mat> Q;  // L x L
  Mat tau;             // K x K

  double log_transition(int from, int to) const;
};

struct Sequence {
  std::vector<Vec> y;
  std::vector<Vec> x_true;  // empty when unannotated
  std::vector<int> z_true;  // 0-based; empty when unannotated

  int T() const { return static_cast<int>(y.size()); }
  bool has_states() const { return !x_true.empty(); }
  bool has_modes() const { return !z_true.empty(); }
};

struct Violation {
  std::string code;
  std::string message;
};

/// Every invariant violation, never throws. An empty report means valid.
std::vector<Violation> validate(const StaticParams& theta, const DynamicParams& phi);
std::vector<Violation> validate(const StaticParams& theta);

/// Throws INVALID_PARAMETERS (or C_RANK_DEFICIENT when that is the only
/// kind of problem) listing the report.
void require_valid(const StaticParams& theta, const DynamicParams& phi);

/// Draws (z, x, y) for t = 1..T. Identical (params, T, rng) gives a
/// bitwise-identical sequence.
Sequence sample_sequence(const StaticParams& theta, const DynamicParams& phi, int T, Rng& rng);
Sequence sample_sequence(const StaticParams& theta, const DynamicParams& phi, int T,
                         std::uint64_t seed);

/// The additive pieces of log p(y, x, z), each recomputable on its own.
struct LogLikelihoodTerms {
  double initial_mode = 0.0;    // log pi_{z1}
  double initial_state = 0.0;   // log N(x1; gamma, Gamma)
  double transitions = 0.0;     // sum_{t>=2} log tau
  double dynamics = 0.0;        // sum_{t>=2} log N(x_t; C x_{t-1}, Q)
  double observations = 0.0;    // sum_t log N(y_t; A x_t + b, Sigma)

  double total() const { return initial_mode + initial_state + transitions + dynamics + observations; }
};

/// log p(y_{1:T}, x_{1:T}, z_{1:T}); throws MISSING_LATENTS when the
/// sequence lacks x or z.
LogLikelihoodTerms complete_log_likelihood_terms(const StaticParams& theta,
                                                 const DynamicParams& phi, const Sequence& seq);
double complete_log_likelihood(const StaticParams& theta, const DynamicParams& phi,
                               const Sequence& seq);

/// Free parameters of theta: K-1 priors plus per component A, b, Sigma
/// (D or D(D+1)/2), gamma and Gamma.
long long static_parameter_count(int K, int D, int L, bool sigma_diagonal);
/// K(K-1) transitions plus per component C (L^2) and Q (L(L+1)/2).
long long dynamic_parameter_count(int K, int L);

/// Relabels components: new label i takes old label perm[i].
StaticParams permute_labels(const StaticParams& theta, const std::vector<int>& perm);
DynamicParams permute_labels(const DynamicParams& phi, const std::vector<int>& perm);

/// Per-component factorizations reused by every inference routine.
struct ObservationCache {
  explicit ObservationCache(const StaticParams& theta);

  std::vector<SpdFactor> sigma;  // Sigma_k
  std::vector<Mat> AtSi;         // A_k^T Sigma_k^{-1}  (L x D)
  std::vector<Mat> AtSiA;        // A_k^T Sigma_k^{-1} A_k
  std::vector<SpdFactor> Gamma;  // Gamma_k
  std::vector<Mat> Gamma_inv;
};

struct DynamicsCache {
  explicit DynamicsCache(const DynamicParams& phi);

  std::vector<SpdFactor> Q;
  std::vector<Mat> Q_inv;
  std::vector<Mat> QiC;   // Q_k^{-1} C_k
  std::vector<Mat> CtQiC; // C_k^T Q_k^{-1} C_k
  Mat log_tau;            // log tau(i, j)
};

}  // namespace plds
