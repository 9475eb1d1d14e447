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

// Variational EM under the factorization q(x_{1:T}) q(z_{1:T}).
//
// E-Z: with q(x) fixed, q(z) is a hidden Markov chain whose per-step log
//      scores are the z-dependent expected log-densities; solved by
//      forward-backward.
// E-X: with q(z) fixed, q(x) is a Gauss-Markov chain whose pairwise
//      potentials mix the K dynamic regimes. Because the mixed coupling
//      R^T Qbar R differs from Sbar^{-1} in general, the chain is solved with
//      its own information-form forward/backward recursions rather than a
//      standard Kalman/RTS pass.
// M:   closed-form (C, Q, tau) from the pairwise moments.
//
// Internally t is 0-based; vectors indexed by t that refer to the pair
// (t-1, t) leave entry 0 empty.

#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "plds/hmm.hpp"
#include "plds/model.hpp"
#include "plds/mstep.hpp"

namespace plds {

struct VemConfig {
  int max_em_iters = 50;
  int inner_e_sweeps = 3;
  double tol_elbo_rel = 1e-6;
  double tol_eta = 1e-6;
  bool update_C = false;
  int window = 1;           // variational filter lag
  double rho_floor = 1e-12;
  double jitter = 1e-9;
  bool learn = true;        // false disables the M-step
  bool trace_steps = false; // record the ELBO after every coordinate update
};

/// Aggregated natural parameters of q(x) given q(z). "shift" terms are
/// precision-weighted means, e.g. iv_shift[t] = (V^iv_t)^{-1} eta^iv_t.
struct EZAggregates {
  std::vector<Mat> iv_precision;  // sum_z rho A^T Sigma^{-1} A
  std::vector<Vec> iv_shift;      // sum_z rho A^T Sigma^{-1} (y - b)
  Mat gamma_precision;            // sum_z rho_1 Gamma^{-1}
  Vec gamma_shift;                // sum_z rho_1 Gamma^{-1} gamma
  std::vector<Mat> Qbar_inv;      // sum_z rho Q^{-1}               (t >= 1)
  std::vector<Mat> Rbar;          // sum_z rho Q^{-1} C            (t >= 1)
  std::vector<Mat> Sbar_inv;      // sum_z rho C^T Q^{-1} C        (t >= 1)
  std::vector<Mat> Omega_inv;     // iv + Qbar^{-1} + backward precision (t >= 1)

  int T() const { return static_cast<int>(iv_precision.size()); }
};

struct VariationalPosterior {
  int T = 0;
  int K = 0;
  int L = 0;

  Mat rho;                     // T x K, q(z_t)
  std::vector<Mat> rho_joint;  // [t] (from, to) = q(z_{t-1}, z_t)
  Mat log_scores;              // T x K pseudo log-observation scores

  std::vector<Vec> eta;        // E[x_t]
  std::vector<Mat> V;          // Cov[x_t]
  std::vector<Mat> W;          // Cov(x_{t-1}, x_t)

  // Forward messages in moment form; backward messages in information form
  // because the terminal backward precision is zero.
  std::vector<Vec> f_eta;
  std::vector<Mat> f_V;
  std::vector<Mat> b_precision;  // (V^b_t)^{-1}
  std::vector<Vec> b_shift;      // (V^b_t)^{-1} eta^b_t

  std::vector<double> elbo_trace;
};

struct EZResult {
  Mat rho;
  std::vector<Mat> rho_joint;
  Mat log_scores;
  double log_normalizer = 0.0;
};

struct EXResult {
  std::vector<Vec> eta;
  std::vector<Mat> V;
  std::vector<Mat> W;
  std::vector<Vec> f_eta;
  std::vector<Mat> f_V;
  std::vector<Mat> b_precision;
  std::vector<Vec> b_shift;
  EZAggregates aggregates;
};

/// Pseudo log-observation scores: for each t and z the expected
/// log-density terms that depend on z (observation, dynamics or initial
/// prior, with their trace corrections). log pi is not included.
Mat variational_log_scores(const StaticParams& theta, const DynamicParams& phi, std::span<const Vec> y,
                           std::span<const Vec> eta, std::span<const Mat> V, std::span<const Mat> W);

EZResult e_z_step(const StaticParams& theta, const DynamicParams& phi, std::span<const Vec> y,
                  std::span<const Vec> eta, std::span<const Mat> V, std::span<const Mat> W);

/// rho is floored at rho_floor and renormalized before aggregation.
EZAggregates build_aggregates(const StaticParams& theta, const DynamicParams& phi, std::span<const Vec> y,
                              const Mat& rho, double rho_floor = 1e-12);

EXResult e_x_step(const StaticParams& theta, const DynamicParams& phi, std::span<const Vec> y,
                  const Mat& rho, double rho_floor = 1e-12);

/// Expected sufficient statistics of a variational posterior.
TransitionStats variational_stats(const VariationalPosterior& post);

MStepResult m_step(const VariationalPosterior& post, const DynamicParams& previous, const MStepConfig& config);

/// E_q[log p(y, x, z)] + H[q(x)] + H[q(z)], with both entropies taken from
/// the chain structure (marginal and pairwise terms).
double elbo(const StaticParams& theta, const DynamicParams& phi, std::span<const Vec> y,
            const VariationalPosterior& post);

/// C = I, Q = I, tau(i, j) proportional to exp(-d_B(i, j)) where d_B is the
/// Bhattacharyya distance between the initial-state Gaussians; columns
/// normalized.
DynamicParams initial_dynamics(const StaticParams& theta);

/// Warm start: per-frame inverse-regression means and covariances, W = 0,
/// rho from the per-frame mixture weights.
VariationalPosterior initialize_posterior(const StaticParams& theta, std::span<const Vec> y);

/// One E-Z followed by one E-X, updating post in place.
void e_sweep(const StaticParams& theta, const DynamicParams& phi, std::span<const Vec> y,
             VariationalPosterior& post, const VemConfig& config);

struct VemIteration {
  int iter = 0;
  double elbo_after_e = 0.0;
  double elbo_after_m = 0.0;
  int inner_sweeps = 0;
};

struct VemResult {
  DynamicParams phi;
  std::vector<VariationalPosterior> posteriors;  // one per sequence
  std::vector<VemIteration> trace;
  std::vector<double> step_elbos;  // only with config.trace_steps
  std::vector<int> starved;
  bool converged = false;  // false: CONVERGENCE_NOT_REACHED
};

/// Alternates E-Z / E-X until eta stabilizes, then the M-step, until the
/// relative ELBO change drops below tol_elbo_rel.
VemResult run_vem_smoother(const StaticParams& theta, const DynamicParams& phi0, std::span<const Vec> y,
                           const VemConfig& config);
VemResult run_vem(const StaticParams& theta, const DynamicParams& phi0,
                  std::span<const std::vector<Vec>> sequences, const VemConfig& config);

struct FilterOutput {
  Vec eta;
  Mat V;
  Vec rho;
};

// Causal variational filter. Each push(y_t) runs E-Z / E-X coordinate
// updates over the last `window` steps with zero backward precision at t,
// so outputs at t depend only on y_{1:t}. One session per stream.
class VariationalFilter {
 public:
  VariationalFilter(const StaticParams& theta, const DynamicParams& phi, const VemConfig& config);
  ~VariationalFilter();
  VariationalFilter(VariationalFilter&&) noexcept;
  VariationalFilter& operator=(VariationalFilter&&) noexcept;

  FilterOutput push(const Vec& y);
  int steps() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

std::vector<FilterOutput> run_variational_filter(const StaticParams& theta, const DynamicParams& phi,
                                                 std::span<const Vec> y, const VemConfig& config);

// Gauss-Markov chain solver shared by the smoother and the filter window.
// Node potentials are in information form; links (u-1, u) carry
// (Qbar_inv, Rbar, Sbar_inv). With an incoming message, node 0 is linked to
// a frozen predecessor whose forward message is (in_precision, in_shift).
struct ChainProblem {
  std::vector<Mat> unary_precision;
  std::vector<Vec> unary_shift;
  std::vector<Mat> Qbar_inv;
  std::vector<Mat> Rbar;
  std::vector<Mat> Sbar_inv;
  bool has_incoming = false;
  Mat in_precision;
  Vec in_shift;
};

struct ChainSolution {
  std::vector<Mat> f_precision;
  std::vector<Vec> f_shift;
  std::vector<Mat> b_precision;
  std::vector<Vec> b_shift;
  std::vector<Mat> Omega_inv;
  std::vector<Vec> eta;
  std::vector<Mat> V;
  std::vector<Mat> W;  // Cov(x_{u-1}, x_u); entry 0 set only with an incoming message
};

ChainSolution solve_chain(const ChainProblem& problem, int time_offset = 0);

}  // namespace plds
