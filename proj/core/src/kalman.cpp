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

#include "plds/kalman.hpp"

#include <string>

#include "plds/error.hpp"

namespace plds {
namespace {

void require_single_mode(const StaticParams& theta, const DynamicParams& phi) {
  if (theta.K != 1 || phi.K != 1) {
    throw Error(ErrorCode::kNotSingleMode, "Kalman engines need K = 1, got K = " + std::to_string(theta.K));
  }
}

}  // namespace

KalmanStep kalman_step(const StaticParams& theta, const DynamicParams& phi, int z, bool first,
                       const Vec& prev_mean, const Mat& prev_cov, const Vec& y, int t) {
  if (y.size() != theta.D) throw Error(ErrorCode::kDimensionMismatch, "observation dimension differs from D");
  KalmanStep s;
  if (first) {
    s.predicted_mean = theta.gamma[z];
    s.predicted_cov = theta.Gamma[z];
  } else {
    s.predicted_mean = phi.C[z] * prev_mean;
    s.predicted_cov = symmetrize(phi.C[z] * prev_cov * phi.C[z].transpose() + phi.Q[z]);
  }
  const Mat& A = theta.A[z];
  const Mat& P = s.predicted_cov;
  const Mat PAt = P * A.transpose();
  const Mat S = symmetrize(A * PAt + theta.Sigma[z]);
  const SpdFactor s_fac(S, false, "innovation covariance at t=" + std::to_string(t + 1));
  const Vec innov = y - A * s.predicted_mean - theta.b[z];
  const Mat gain = s_fac.solve(PAt.transpose()).transpose();
  s.filtered_mean = s.predicted_mean + gain * innov;
  s.filtered_cov = symmetrize(P - gain * S * gain.transpose());
  s.log_likelihood = log_gauss(innov, Vec::Zero(innov.size()), s_fac);
  return s;
}

KalmanBelief kalman_filter_path(const StaticParams& theta, const DynamicParams& phi,
                                std::span<const Vec> y, std::span<const int> modes) {
  const int T = static_cast<int>(y.size());
  if (static_cast<int>(modes.size()) != T) {
    throw Error(ErrorCode::kLengthMismatch, "mode path and observations differ in length");
  }
  KalmanBelief b;
  b.predicted_mean.resize(T);
  b.predicted_cov.resize(T);
  b.filtered_mean.resize(T);
  b.filtered_cov.resize(T);
  b.log_likelihood_increments.resize(T);
  const Vec none;
  const Mat none_cov;
  for (int t = 0; t < T; ++t) {
    KalmanStep s = kalman_step(theta, phi, modes[t], t == 0, t == 0 ? none : b.filtered_mean[t - 1],
                               t == 0 ? none_cov : b.filtered_cov[t - 1], y[t], t);
    b.predicted_mean[t] = std::move(s.predicted_mean);
    b.predicted_cov[t] = std::move(s.predicted_cov);
    b.filtered_mean[t] = std::move(s.filtered_mean);
    b.filtered_cov[t] = std::move(s.filtered_cov);
    b.log_likelihood_increments[t] = s.log_likelihood;
    b.log_likelihood += s.log_likelihood;
  }
  return b;
}

KalmanBelief rts_smoother_path(KalmanBelief b, const DynamicParams& phi, std::span<const int> modes) {
  const int T = b.T();
  b.smoothed_mean.assign(T, Vec());
  b.smoothed_cov.assign(T, Mat());
  b.cross_cov.assign(T, Mat());
  if (T == 0) return b;
  b.smoothed_mean[T - 1] = b.filtered_mean[T - 1];
  b.smoothed_cov[T - 1] = b.filtered_cov[T - 1];
  for (int t = T - 2; t >= 0; --t) {
    const Mat& C = phi.C[modes[t + 1]];
    const SpdFactor pred(b.predicted_cov[t + 1], false, "predicted covariance at t=" + std::to_string(t + 2));
    // J = P_f C^T P_pred^{-1}
    const Mat J = pred.solve(C * b.filtered_cov[t]).transpose();
    b.smoothed_mean[t] = b.filtered_mean[t] + J * (b.smoothed_mean[t + 1] - b.predicted_mean[t + 1]);
    b.smoothed_cov[t] =
        symmetrize(b.filtered_cov[t] + J * (b.smoothed_cov[t + 1] - b.predicted_cov[t + 1]) * J.transpose());
    b.cross_cov[t + 1] = J * b.smoothed_cov[t + 1];
  }
  return b;
}

KalmanBelief kalman_filter(const StaticParams& theta, const DynamicParams& phi, std::span<const Vec> y) {
  require_single_mode(theta, phi);
  const std::vector<int> modes(y.size(), 0);
  return kalman_filter_path(theta, phi, y, modes);
}

KalmanBelief rts_smoother(KalmanBelief belief, const DynamicParams& phi) {
  if (phi.K != 1) throw Error(ErrorCode::kNotSingleMode, "RTS smoother needs K = 1");
  const std::vector<int> modes(belief.T(), 0);
  return rts_smoother_path(std::move(belief), phi, modes);
}

}  // namespace plds
