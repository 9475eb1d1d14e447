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

#include <algorithm>
#include <cmath>
#include <string>

#include "plds/error.hpp"
#include "plds/static_em.hpp"
#include "plds/variational.hpp"
#include "variational_internal.hpp"

namespace plds {

struct VariationalFilter::State {
  State(const StaticParams& th, const DynamicParams& ph, const VemConfig& cfg)
      : theta(th), phi(ph), config(cfg), caches(theta, phi), predictor(theta) {
    log_pi = theta.pi.array().log().matrix();
  }

  StaticParams theta;
  DynamicParams phi;
  VemConfig config;
  detail::ModelCaches caches;
  InversePredictor predictor;
  Vec log_pi;

  std::vector<Vec> y, eta;
  std::vector<Mat> V, W;
  std::vector<Vec> rho;
  std::vector<Mat> f_precision;
  std::vector<Vec> f_shift;
  std::vector<Vec> log_alpha;  // filtered mode log-probabilities

  FilterOutput push(const Vec& obs);
  Vec initial_message(int s) const;
};

Vec VariationalFilter::State::initial_message(int s) const {
  if (s == 0) return log_pi;
  const int K = theta.K;
  Vec out(K);
  Vec terms(K);
  for (int k = 0; k < K; ++k) {
    for (int j = 0; j < K; ++j) terms(j) = caches.dyn.log_tau(k, j) + log_alpha[s - 1](j);
    out(k) = log_sum_exp(terms);
  }
  return out;
}

FilterOutput VariationalFilter::State::push(const Vec& obs) {
  if (obs.size() != theta.D) throw Error(ErrorCode::kDimensionMismatch, "observation length differs from D");
  const int t = static_cast<int>(y.size());
  const int K = theta.K;
  y.push_back(obs);

  if (t == 0) {
    Vec m, w;
    Mat c;
    predictor.predict_moments(obs, m, c, w);
    eta.push_back(m);
    V.push_back(make_spd(c));
    W.emplace_back();
    rho.push_back(w);
  } else {
    eta.push_back(eta[t - 1]);
    V.push_back(V[t - 1]);
    W.push_back(V[t - 1]);
    Vec pred = Vec::Zero(K);
    for (int k = 0; k < K; ++k) {
      for (int j = 0; j < K; ++j) pred(k) += phi.tau(k, j) * std::exp(log_alpha[t - 1](j));
    }
    rho.push_back(pred / pred.sum());
  }
  f_precision.emplace_back();
  f_shift.emplace_back();
  log_alpha.emplace_back(Vec::Zero(K));

  const int s = std::max(0, t - std::max(1, config.window) + 1);
  const int n = t - s + 1;
  Mat scores(n, K);
  Vec row(K);
  auto update_modes = [&] {
    for (int u = s; u <= t; ++u) {
      if (u == 0) {
        detail::score_row(theta, phi, caches, 0, y[0], eta[0], V[0], nullptr, nullptr, nullptr, row.data());
      } else {
        detail::score_row(theta, phi, caches, u, y[u], eta[u], V[u], &eta[u - 1], &V[u - 1], &W[u], row.data());
      }
      scores.row(u - s) = row.transpose();
    }
    const HmmPosterior hp = hmm_forward_backward(scores, initial_message(s), caches.dyn.log_tau);
    for (int u = s; u <= t; ++u) {
      rho[u] = hp.marginals.row(u - s).transpose();
      log_alpha[u] = hp.filtered.row(u - s).transpose().array().max(1e-300).log().matrix();
    }
  };
  // Returns the largest change in any window mean.
  auto update_states = [&] {
    ChainProblem p;
    p.unary_precision.resize(n);
    p.unary_shift.resize(n);
    p.Qbar_inv.resize(n);
    p.Rbar.resize(n);
    p.Sbar_inv.resize(n);
    for (int u = s; u <= t; ++u) {
      detail::NodeAggregates a =
          detail::node_aggregates(theta, caches, u, y[u], detail::floored(rho[u], config.rho_floor));
      const int i = u - s;
      p.unary_precision[i] = std::move(a.unary_precision);
      p.unary_shift[i] = std::move(a.unary_shift);
      p.Qbar_inv[i] = std::move(a.Qbar_inv);
      p.Rbar[i] = std::move(a.Rbar);
      p.Sbar_inv[i] = std::move(a.Sbar_inv);
    }
    if (s > 0) {
      p.has_incoming = true;
      p.in_precision = f_precision[s - 1];
      p.in_shift = f_shift[s - 1];
    }
    ChainSolution sol = solve_chain(p, s);
    double change = 0.0;
    for (int u = s; u <= t; ++u) {
      const int i = u - s;
      change = std::max(change, (sol.eta[i] - eta[u]).cwiseAbs().maxCoeff());
      eta[u] = sol.eta[i];
      V[u] = sol.V[i];
      if (u > 0) W[u] = sol.W[i];
      f_precision[u] = sol.f_precision[i];
      f_shift[u] = sol.f_shift[i];
    }
    return change;
  };

  // A new step first places the state under the predicted mode probabilities,
  // so a corrupted previous mean does not decide the first mode update.
  if (t > 0) update_states();
  for (int sweep = 0; sweep < std::max(1, config.inner_e_sweeps); ++sweep) {
    update_modes();
    if (update_states() < config.tol_eta) break;
  }
  return FilterOutput{eta[t], V[t], rho[t]};
}

VariationalFilter::VariationalFilter(const StaticParams& theta, const DynamicParams& phi, const VemConfig& config) {
  require_valid(theta, phi);
  state_ = std::make_unique<State>(theta, phi, config);
}

VariationalFilter::~VariationalFilter() = default;
VariationalFilter::VariationalFilter(VariationalFilter&&) noexcept = default;
VariationalFilter& VariationalFilter::operator=(VariationalFilter&&) noexcept = default;

FilterOutput VariationalFilter::push(const Vec& y) { return state_->push(y); }

int VariationalFilter::steps() const { return static_cast<int>(state_->y.size()); }

std::vector<FilterOutput> run_variational_filter(const StaticParams& theta, const DynamicParams& phi,
                                                 std::span<const Vec> y, const VemConfig& config) {
  VariationalFilter f(theta, phi, config);
  std::vector<FilterOutput> out;
  out.reserve(y.size());
  for (const Vec& v : y) out.push_back(f.push(v));
  return out;
}

}  // namespace plds
