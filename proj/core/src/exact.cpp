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

#include "plds/exact.hpp"

#include <cmath>
#include <string>

#include "plds/error.hpp"
#include "plds/kalman.hpp"

namespace plds {
namespace {

struct Prefix {
  double log_joint;
  Gaussian filtered;
};

// Depth-first walk of the mode tree. Every prefix of length t+1 yields one
// component of p(x_t | y_{1:t}); every leaf is one full path.
class Enumerator {
 public:
  Enumerator(const StaticParams& theta, const DynamicParams& phi, std::span<const Vec> y,
             ExactPosterior& out)
      : theta_(theta), phi_(phi), y_(y), out_(out), T_(static_cast<int>(y.size())) {
    prefixes_.resize(T_);
    stack_.resize(T_);
    modes_.resize(T_);
  }

  void run() { descend(0, 0.0); }

  std::vector<std::vector<Prefix>> prefixes_;

 private:
  void descend(int t, double log_joint) {
    for (int z = 0; z < theta_.K; ++z) {
      double lj = log_joint;
      if (t == 0) {
        lj += std::log(theta_.pi(z));
      } else {
        lj += phi_.log_transition(modes_[t - 1], z);
      }
      if (!std::isfinite(lj) && lj < 0) {
        // Zero-probability prefix: still counted so path indices stay dense.
        skip(t, z, lj);
        continue;
      }
      modes_[t] = z;
      KalmanStep step = t == 0 ? kalman_step(theta_, phi_, z, true, Vec(), Mat(), y_[0], 0)
                               : kalman_step(theta_, phi_, z, false, stack_[t - 1].filtered_mean,
                                             stack_[t - 1].filtered_cov, y_[t], t);
      lj += step.log_likelihood;
      prefixes_[t].push_back(
          {lj, Gaussian::from_moments_unchecked(step.filtered_mean, step.filtered_cov)});
      stack_[t] = std::move(step);
      if (t + 1 < T_) {
        descend(t + 1, lj);
      } else {
        leaf(lj);
      }
    }
  }

  void skip(int t, int z, double lj) {
    modes_[t] = z;
    prefixes_[t].push_back({lj, Gaussian::from_moments_unchecked(Vec::Zero(theta_.L), Mat::Identity(theta_.L, theta_.L))});
    std::int64_t leaves = 1;
    for (int u = t + 1; u < T_; ++u) {
      leaves *= theta_.K;
      std::int64_t count = 1;
      for (int v = t + 1; v <= u; ++v) count *= theta_.K;
      for (std::int64_t i = 0; i < count; ++i) {
        prefixes_[u].push_back({lj, Gaussian::from_moments_unchecked(Vec::Zero(theta_.L), Mat::Identity(theta_.L, theta_.L))});
      }
    }
    for (std::int64_t i = 0; i < leaves; ++i) {
      out_.log_joint.push_back(lj);
      out_.path_mean.emplace_back(T_, Vec::Zero(theta_.L));
      out_.path_cov.emplace_back(T_, Mat::Identity(theta_.L, theta_.L));
      out_.path_cross.emplace_back(T_, Mat::Zero(theta_.L, theta_.L));
    }
  }

  void leaf(double lj) {
    KalmanBelief b;
    b.predicted_mean.resize(T_);
    b.predicted_cov.resize(T_);
    b.filtered_mean.resize(T_);
    b.filtered_cov.resize(T_);
    for (int t = 0; t < T_; ++t) {
      b.predicted_mean[t] = stack_[t].predicted_mean;
      b.predicted_cov[t] = stack_[t].predicted_cov;
      b.filtered_mean[t] = stack_[t].filtered_mean;
      b.filtered_cov[t] = stack_[t].filtered_cov;
    }
    b = rts_smoother_path(std::move(b), phi_, modes_);
    out_.log_joint.push_back(lj);
    out_.path_mean.push_back(std::move(b.smoothed_mean));
    out_.path_cov.push_back(std::move(b.smoothed_cov));
    b.cross_cov[0] = Mat::Zero(theta_.L, theta_.L);
    out_.path_cross.push_back(std::move(b.cross_cov));
  }

  const StaticParams& theta_;
  const DynamicParams& phi_;
  std::span<const Vec> y_;
  ExactPosterior& out_;
  int T_;
  std::vector<KalmanStep> stack_;
  std::vector<int> modes_;
};

std::vector<double> normalize_log(const std::vector<double>& logs, double& log_total) {
  log_total = log_sum_exp(logs.data(), static_cast<int>(logs.size()));
  std::vector<double> w(logs.size());
  for (std::size_t i = 0; i < logs.size(); ++i) w[i] = std::exp(logs[i] - log_total);
  return w;
}

}  // namespace

std::vector<int> ExactPosterior::path(std::int64_t s) const {
  std::vector<int> z(T);
  for (int t = T - 1; t >= 0; --t) {
    z[t] = static_cast<int>(s % K);
    s /= K;
  }
  return z;
}

GaussianMixture ExactPosterior::smoothed(int t) const {
  std::vector<Gaussian> comps;
  comps.reserve(weights.size());
  for (std::size_t s = 0; s < weights.size(); ++s) {
    comps.push_back(Gaussian::from_moments_unchecked(path_mean[s][t], path_cov[s][t]));
  }
  return GaussianMixture(weights, std::move(comps));
}

Vec ExactPosterior::smoothed_mean(int t) const {
  Vec m = Vec::Zero(L);
  for (std::size_t s = 0; s < weights.size(); ++s) m += weights[s] * path_mean[s][t];
  return m;
}

Mat ExactPosterior::smoothed_cov(int t) const {
  const Vec m = smoothed_mean(t);
  Mat c = Mat::Zero(L, L);
  for (std::size_t s = 0; s < weights.size(); ++s) {
    const Vec d = path_mean[s][t] - m;
    c += weights[s] * (path_cov[s][t] + d * d.transpose());
  }
  return symmetrize(c);
}

ExactPosterior enumerate_posterior(const StaticParams& theta, const DynamicParams& phi,
                                   std::span<const Vec> y, std::int64_t cap) {
  require_valid(theta, phi);
  const int T = static_cast<int>(y.size());
  if (T < 1) throw Error(ErrorCode::kInvalidParameters, "need at least one observation");
  std::int64_t paths = 1;
  for (int t = 0; t < T; ++t) {
    paths *= theta.K;
    if (paths > cap) {
      throw Error(ErrorCode::kEnumerationTooLarge,
                  "K^T exceeds the cap of " + std::to_string(cap) + " paths");
    }
  }

  ExactPosterior out;
  out.K = theta.K;
  out.T = T;
  out.L = theta.L;
  out.log_joint.reserve(paths);

  Enumerator en(theta, phi, y, out);
  en.run();

  out.weights = normalize_log(out.log_joint, out.log_marginal_likelihood);

  out.mode_posterior = Mat::Zero(T, theta.K);
  for (std::int64_t s = 0; s < paths; ++s) {
    const auto z = out.path(s);
    for (int t = 0; t < T; ++t) out.mode_posterior(t, z[t]) += out.weights[s];
  }

  out.filtered_mode_posterior = Mat::Zero(T, theta.K);
  out.filtered.reserve(T);
  for (int t = 0; t < T; ++t) {
    const auto& pre = en.prefixes_[t];
    std::vector<double> logs(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) logs[i] = pre[i].log_joint;
    double lt = 0.0;
    std::vector<double> w = normalize_log(logs, lt);
    std::vector<Gaussian> comps;
    comps.reserve(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) {
      comps.push_back(pre[i].filtered);
      // prefix i ends in mode i mod K
      out.filtered_mode_posterior(t, static_cast<int>(i % theta.K)) += w[i];
    }
    out.filtered.emplace_back(std::move(w), std::move(comps));
  }
  return out;
}

Gaussian stacked_path_posterior(const StaticParams& theta, const DynamicParams& phi,
                                std::span<const Vec> y, std::span<const int> path) {
  const int T = static_cast<int>(y.size());
  const int L = theta.L;
  Mat J = Mat::Zero(T * L, T * L);
  Vec h = Vec::Zero(T * L);
  for (int t = 0; t < T; ++t) {
    const int z = path[t];
    const SpdFactor sigma(theta.Sigma[z], theta.sigma_diagonal, "Sigma");
    const Mat AtSi = sigma.solve(theta.A[z]).transpose();
    J.block(t * L, t * L, L, L) += AtSi * theta.A[z];
    h.segment(t * L, L) += AtSi * (y[t] - theta.b[z]);
    if (t == 0) {
      const SpdFactor g(theta.Gamma[z], false, "Gamma");
      J.block(0, 0, L, L) += g.inverse();
      h.segment(0, L) += g.solve(theta.gamma[z]);
    } else {
      const SpdFactor q(phi.Q[z], false, "Q");
      const Mat Qi = q.inverse();
      const Mat& C = phi.C[z];
      J.block(t * L, t * L, L, L) += Qi;
      J.block((t - 1) * L, (t - 1) * L, L, L) += C.transpose() * Qi * C;
      J.block(t * L, (t - 1) * L, L, L) -= Qi * C;
      J.block((t - 1) * L, t * L, L, L) -= C.transpose() * Qi;
    }
  }
  const SpdFactor jf(symmetrize(J), false, "stacked precision");
  Mat cov = jf.inverse();
  Vec mean = cov * h;
  return Gaussian::from_moments_unchecked(std::move(mean), std::move(cov));
}

}  // namespace plds
