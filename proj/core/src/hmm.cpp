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

#include "plds/hmm.hpp"

#include <cmath>
#include <string>

#include "plds/error.hpp"

namespace plds {
namespace {

[[noreturn]] void degenerate(int t) {
  throw Error(ErrorCode::kDegenerateResponsibilities,
              "all modes have zero mass at t=" + std::to_string(t + 1));
}

}  // namespace

HmmPosterior hmm_forward_backward(const Mat& log_scores, const Vec& log_initial, const Mat& log_tau) {
  const int T = static_cast<int>(log_scores.rows());
  const int K = static_cast<int>(log_scores.cols());
  HmmPosterior out;
  out.marginals.resize(T, K);
  out.filtered.resize(T, K);
  out.pairwise.assign(T, Mat());
  if (T == 0) return out;

  // log_alpha(t, :) is normalized; c(t) holds the log normalizers.
  Mat log_alpha(T, K);
  Vec c(T);
  Vec tmp(K);
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < K; ++k) {
      double pred;
      if (t == 0) {
        pred = log_initial(k);
      } else {
        for (int j = 0; j < K; ++j) tmp(j) = log_alpha(t - 1, j) + log_tau(k, j);
        pred = log_sum_exp(tmp);
      }
      log_alpha(t, k) = pred + log_scores(t, k);
    }
    c(t) = log_sum_exp(log_alpha.row(t).transpose().eval());
    if (!std::isfinite(c(t))) degenerate(t);
    log_alpha.row(t).array() -= c(t);
  }
  out.log_normalizer = c.sum();
  out.filtered = log_alpha.array().exp().matrix();

  // Backward messages scaled by the same per-step constants.
  Mat log_beta = Mat::Zero(T, K);
  for (int t = T - 2; t >= 0; --t) {
    for (int j = 0; j < K; ++j) {
      for (int k = 0; k < K; ++k) tmp(k) = log_tau(k, j) + log_scores(t + 1, k) + log_beta(t + 1, k);
      log_beta(t, j) = log_sum_exp(tmp) - c(t + 1);
    }
  }

  for (int t = 0; t < T; ++t) {
    Vec lg = (log_alpha.row(t) + log_beta.row(t)).transpose();
    const double z = log_sum_exp(lg);
    if (!std::isfinite(z)) degenerate(t);
    out.marginals.row(t) = (lg.array() - z).exp().matrix().transpose();
  }

  for (int t = 1; t < T; ++t) {
    Mat lp(K, K);
    for (int j = 0; j < K; ++j) {
      for (int k = 0; k < K; ++k) {
        lp(j, k) = log_alpha(t - 1, j) + log_tau(k, j) + log_scores(t, k) + log_beta(t, k);
      }
    }
    const double z = log_sum_exp(lp.data(), K * K);
    if (!std::isfinite(z)) degenerate(t);
    Mat p = (lp.array() - z).exp().matrix();
    for (int j = 0; j < K; ++j) {
      for (int k = 0; k < K; ++k) {
        if (!std::isfinite(lp(j, k)) && lp(j, k) < 0) p(j, k) = 0.0;
      }
    }
    out.pairwise[t] = std::move(p);
  }
  return out;
}

}  // namespace plds
