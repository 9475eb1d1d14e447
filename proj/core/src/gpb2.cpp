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

#include "plds/gpb2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "plds/error.hpp"
#include "plds/gaussian.hpp"

namespace plds {
namespace {

constexpr double kSkipWeight = 1e-14;

std::string pair_tag(int t, int j, int k) {
  return " at t=" + std::to_string(t + 1) + ", j=" + std::to_string(j + 1) + ", k=" + std::to_string(k + 1);
}

// Conditions N(prior_mean, prior_cov) on y under observation component k.
// Returns log N(y; A m + b, S).
double condition(const Gpb2Model& m, int k, const Vec& prior_mean, const Mat& prior_cov, const Vec& y,
                 const std::string& tag, Vec& d, Mat& precision, Vec& mean_out, Mat& cov_out, Mat* S_out) {
  const StaticParams& th = m.theta();
  const Mat& A = th.A[k];
  d = y - A * prior_mean - th.b[k];
  const Mat APA = A * prior_cov * A.transpose();
  Mat S = th.Sigma[k] + APA;
  if (th.sigma_diagonal) S = th.Sigma[k].diagonal().asDiagonal().toDenseMatrix() + APA;
  const SpdFactor Sf(symmetrize(S), false, "innovation covariance S" + tag);
  const double ll = -0.5 * (static_cast<double>(d.size()) * kLog2Pi + Sf.log_det() + Sf.quad(d));
  if (S_out) *S_out = symmetrize(S);

  const SpdFactor Pf(prior_cov, false, "predicted covariance P^{-1}" + tag);
  precision = symmetrize(Pf.inverse());
  const SpdFactor post(symmetrize(m.obs().AtSiA[k] + precision), false, "pair posterior precision" + tag);
  cov_out = symmetrize(post.inverse());
  mean_out = post.solve(Vec(m.obs().AtSi[k] * (y - th.b[k]) + precision * prior_mean));
  return ll;
}

void collapse_column(const Mat& logw, int k, const std::vector<Vec>& means, const std::vector<Mat>& covs, int K,
                     Vec& mean_out, Mat& cov_out) {
  const double mx = logw.col(k).maxCoeff();
  std::vector<double> w(K);
  std::vector<Vec> mu(K);
  std::vector<Mat> cv(K);
  double total = 0.0;
  for (int j = 0; j < K; ++j) {
    w[j] = std::isfinite(mx) ? std::exp(logw(j, k) - mx) : 1.0;
    total += w[j];
    mu[j] = means[j * K + k];
    cv[j] = covs[j * K + k];
  }
  for (double& v : w) v /= total;
  moment_match(w.data(), mu.data(), cv.data(), K, mean_out, cov_out, kSkipWeight);
}

}  // namespace

Gpb2Model::Gpb2Model(const StaticParams& theta, const DynamicParams& phi)
    : theta_(&theta), phi_(&phi), obs_(theta), dyn_(phi) {}

Gpb2Belief gpb2_initial(const Gpb2Model& m, const Vec& y) {
  const StaticParams& th = m.theta();
  const int K = th.K;
  if (y.size() != th.D) throw Error(ErrorCode::kDimensionMismatch, "observation length differs from D");
  Gpb2Belief b;
  b.t = 0;
  b.mean.resize(K);
  b.cov.resize(K);
  Vec logw(K);
  Vec d;
  Mat P;
  for (int k = 0; k < K; ++k) {
    logw(k) = std::log(th.pi(k)) + condition(m, k, th.gamma[k], th.Gamma[k], y, pair_tag(0, k, k), d, P,
                                             b.mean[k], b.cov[k], nullptr);
  }
  b.log_likelihood_increment = log_sum_exp(logw);
  b.weight = (logw.array() - b.log_likelihood_increment).exp().matrix();
  b.weight /= b.weight.sum();
  return b;
}

Gpb2Belief gpb2_step(const Gpb2Model& m, const Gpb2Belief& prev, const Vec& y, bool keep_innovation_cov) {
  const StaticParams& th = m.theta();
  const DynamicParams& ph = m.phi();
  const int K = th.K;
  if (y.size() != th.D) throw Error(ErrorCode::kDimensionMismatch, "observation length differs from D");
  Gpb2Belief b;
  b.t = prev.t + 1;
  const int n = K * K;
  b.pair_mean.resize(n);
  b.pair_cov.resize(n);
  b.innovation.resize(n);
  b.pred_precision.resize(n);
  if (keep_innovation_cov) b.innovation_cov.resize(n);

  Mat logw(K, K);
  for (int j = 0; j < K; ++j) {
    const double lj = std::log(prev.weight(j));
    for (int k = 0; k < K; ++k) {
      const int p = j * K + k;
      const double lt = m.dyn().log_tau(k, j);
      const Vec pred_mean = ph.C[k] * prev.mean[j];
      const Mat pred_cov = symmetrize(ph.Q[k] + ph.C[k] * prev.cov[j] * ph.C[k].transpose());
      const double ll = condition(m, k, pred_mean, pred_cov, y, pair_tag(b.t, j, k), b.innovation[p],
                                  b.pred_precision[p], b.pair_mean[p], b.pair_cov[p],
                                  keep_innovation_cov ? &b.innovation_cov[p] : nullptr);
      logw(j, k) = lj + lt + ll;
    }
  }
  b.log_likelihood_increment = log_sum_exp(logw.data(), n);
  b.pair_weight = (logw.array() - b.log_likelihood_increment).exp().matrix();
  b.pair_weight /= b.pair_weight.sum();
  b.weight = b.pair_weight.colwise().sum().transpose();

  b.mean.resize(K);
  b.cov.resize(K);
  for (int k = 0; k < K; ++k) collapse_column(logw, k, b.pair_mean, b.pair_cov, K, b.mean[k], b.cov[k]);
  return b;
}

Gpb2Belief gpb2_step(const StaticParams& theta, const DynamicParams& phi, const Gpb2Belief& previous,
                     const Vec& y) {
  const Gpb2Model m(theta, phi);
  return gpb2_step(m, previous, y);
}

Mat Gpb2FilterResult::mode_posterior() const {
  if (beliefs.empty()) return Mat();
  Mat out(static_cast<Eigen::Index>(beliefs.size()), beliefs.front().weight.size());
  for (std::size_t t = 0; t < beliefs.size(); ++t) out.row(static_cast<Eigen::Index>(t)) = beliefs[t].weight.transpose();
  return out;
}

Gpb2FilterResult gpb2_filter(const StaticParams& theta, const DynamicParams& phi, std::span<const Vec> y) {
  require_valid(theta, phi);
  const Gpb2Model m(theta, phi);
  Gpb2FilterResult r;
  const int T = static_cast<int>(y.size());
  r.beliefs.reserve(T);
  r.mean.resize(T);
  r.cov.resize(T);
  for (int t = 0; t < T; ++t) {
    r.beliefs.push_back(t == 0 ? gpb2_initial(m, y[0]) : gpb2_step(m, r.beliefs.back(), y[t]));
    // The smoother only needs the collapsed bank and the pair weights.
    Gpb2Belief& b = r.beliefs.back();
    b.pair_mean.clear();
    b.pair_cov.clear();
    b.innovation.clear();
    b.pred_precision.clear();
    r.log_likelihood += b.log_likelihood_increment;
    moment_match(b.weight.data(), b.mean.data(), b.cov.data(), theta.K, r.mean[t], r.cov[t], kSkipWeight);
  }
  return r;
}

Gpb2Smoothed gpb2_smoother(const StaticParams& theta, const DynamicParams& phi, std::span<const Vec> y,
                           const Gpb2FilterResult& f) {
  const int T = static_cast<int>(f.beliefs.size());
  if (T != static_cast<int>(y.size())) throw Error(ErrorCode::kLengthMismatch, "filtered result length differs from y");
  const int K = theta.K;
  const int L = theta.L;
  Gpb2Smoothed s;
  s.mode_posterior = Mat::Zero(T, K);
  s.mode_mean.assign(T, std::vector<Vec>(K));
  s.mode_cov.assign(T, std::vector<Mat>(K));
  s.mean.resize(T);
  s.cov.resize(T);
  s.cross_cov.resize(T);
  s.stats = TransitionStats::zeros(K, L);
  if (T == 0) return s;

  const Gpb2Belief& last = f.beliefs[T - 1];
  s.mode_posterior.row(T - 1) = last.weight.transpose();
  s.mode_mean[T - 1] = last.mean;
  s.mode_cov[T - 1] = last.cov;

  const int n = K * K;
  std::vector<Vec> mu(n), mu_next(n);
  std::vector<Mat> cv(n), cross(n);
  std::vector<double> w(n);
  for (int t = T - 2; t >= 0; --t) {
    const Gpb2Belief& cur = f.beliefs[t];
    const Gpb2Belief& nxt = f.beliefs[t + 1];
    Mat ps = Mat::Zero(K, K);  // (j at t, k at t+1)
    for (int k = 0; k < K; ++k) {
      const double filt_k = nxt.weight(k);
      const double smooth_k = s.mode_posterior(t + 1, k);
      if (filt_k <= 0.0) continue;
      for (int j = 0; j < K; ++j) ps(j, k) = smooth_k * nxt.pair_weight(j, k) / filt_k;
    }
    const double total = ps.sum();
    if (total > 0.0) ps /= total;

    for (int j = 0; j < K; ++j) {
      for (int k = 0; k < K; ++k) {
        const int p = j * K + k;
        const Mat& Vf = cur.cov[j];
        const Mat pred = symmetrize(phi.Q[k] + phi.C[k] * Vf * phi.C[k].transpose());
        const SpdFactor pf(pred, false, "predicted covariance" + pair_tag(t + 1, j, k));
        const Mat J = pf.solve(Mat(phi.C[k] * Vf)).transpose();
        const Vec& ms = s.mode_mean[t + 1][k];
        const Mat& Vs = s.mode_cov[t + 1][k];
        mu[p] = cur.mean[j] + J * (ms - phi.C[k] * cur.mean[j]);
        cv[p] = symmetrize(Vf + J * (Vs - pred) * J.transpose());
        cross[p] = J * Vs;  // Cov(x_t, x_{t+1} | j, k)
        mu_next[p] = ms;
      }
    }

    // Collapse over k for each mode j at t.
    for (int j = 0; j < K; ++j) {
      const double rj = ps.row(j).sum();
      s.mode_posterior(t, j) = rj;
      std::vector<double> wk(K);
      std::vector<Vec> mk(K);
      std::vector<Mat> ck(K);
      for (int k = 0; k < K; ++k) {
        wk[k] = rj > 0.0 ? ps(j, k) / rj : 1.0 / K;
        mk[k] = mu[j * K + k];
        ck[k] = cv[j * K + k];
      }
      moment_match(wk.data(), mk.data(), ck.data(), K, s.mode_mean[t][j], s.mode_cov[t][j], kSkipWeight);
    }

    // Sufficient statistics for the step t -> t+1, conditioned on z_{t+1} = k.
    for (int k = 0; k < K; ++k) {
      const double rk = ps.col(k).sum();
      if (rk <= 0.0) continue;
      const Vec& ms = s.mode_mean[t + 1][k];
      s.stats.weight(k) += rk;
      s.stats.S_cur[k] += rk * (s.mode_cov[t + 1][k] + ms * ms.transpose());
      for (int j = 0; j < K; ++j) {
        const int p = j * K + k;
        const double wjk = ps(j, k);
        if (wjk <= 0.0) continue;
        s.stats.S_prev[k] += wjk * (cv[p] + mu[p] * mu[p].transpose());
        s.stats.S_cross[k] += wjk * (cross[p].transpose() + ms * mu[p].transpose());
      }
    }
    s.stats.transitions += ps.transpose();

    // Collapsed pairwise cross-covariance.
    Vec m_t = Vec::Zero(L), m_n = Vec::Zero(L);
    for (int p = 0; p < n; ++p) {
      w[p] = ps(p / K, p % K);
      m_t += w[p] * mu[p];
      m_n += w[p] * mu_next[p];
    }
    Mat cc = Mat::Zero(L, L);
    for (int p = 0; p < n; ++p) {
      if (w[p] <= 0.0) continue;
      cc += w[p] * (cross[p] + (mu[p] - m_t) * (mu_next[p] - m_n).transpose());
    }
    s.cross_cov[t + 1] = cc;
  }

  for (int t = 0; t < T; ++t) {
    const Vec wt = s.mode_posterior.row(t).transpose();
    moment_match(wt.data(), s.mode_mean[t].data(), s.mode_cov[t].data(), K, s.mean[t], s.cov[t], kSkipWeight);
  }
  return s;
}

Gpb2LearnResult gpb2_learn(const StaticParams& theta, const DynamicParams& phi0,
                           std::span<const std::vector<Vec>> sequences, const Gpb2LearnConfig& config) {
  require_valid(theta, phi0);
  if (sequences.empty()) throw Error(ErrorCode::kInvalidParameters, "no sequences given");
  Gpb2LearnResult r;
  r.phi = phi0;
  std::set<int> starved;
  double previous = -std::numeric_limits<double>::infinity();
  const MStepConfig mcfg{config.update_C, 1e-8};
  for (int iter = 0; iter < config.max_iters; ++iter) {
    TransitionStats st = TransitionStats::zeros(theta.K, theta.L);
    double ll = 0.0;
    for (const auto& seq : sequences) {
      const Gpb2FilterResult fr = gpb2_filter(theta, r.phi, seq);
      ll += fr.log_likelihood;
      st += gpb2_smoother(theta, r.phi, seq, fr).stats;
    }
    r.trace.push_back(ll);
    if (std::isfinite(previous) && std::abs(ll - previous) <= config.tol_rel * std::max(1.0, std::abs(previous))) {
      r.converged = true;
      break;
    }
    previous = ll;
    MStepResult m = m_step(st, r.phi, mcfg);
    r.phi = std::move(m.phi);
    starved.insert(m.starved.begin(), m.starved.end());
  }
  r.starved.assign(starved.begin(), starved.end());
  return r;
}

}  // namespace plds
