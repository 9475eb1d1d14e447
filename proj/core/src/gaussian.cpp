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

#include "plds/gaussian.hpp"

#include <cmath>
#include <utility>

#include "plds/error.hpp"

namespace plds {

Gaussian::Gaussian(Vec mean, const Mat& cov) : mean_(std::move(mean)), cov_(make_spd(cov)) {
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "Gaussian mean/covariance dimensions differ");
  }
}

Gaussian Gaussian::from_moments_unchecked(Vec mean, Mat cov) {
  Gaussian g;
  g.mean_ = std::move(mean);
  g.cov_ = std::move(cov);
  return g;
}

double Gaussian::log_pdf(const Vec& x) const { return log_gauss(x, mean_, cov_); }

GaussianMixture::GaussianMixture(std::vector<double> weights, std::vector<Gaussian> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
  if (weights_.size() != components_.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "mixture weight/component counts differ");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw Error(ErrorCode::kInvalidParameters, "negative mixture weight");
    total += w;
  }
  if (!components_.empty() && !(total > 0.0)) {
    throw Error(ErrorCode::kInvalidParameters, "mixture weights sum to zero");
  }
  for (double& w : weights_) w /= total;
  for (const auto& c : components_) {
    if (c.dim() != components_.front().dim()) {
      throw Error(ErrorCode::kDimensionMismatch, "mixture components differ in dimension");
    }
  }
}

Vec GaussianMixture::mean() const {
  Vec m = Vec::Zero(dim());
  for (int i = 0; i < size(); ++i) m += weights_[i] * components_[i].mean();
  return m;
}

double GaussianMixture::log_pdf(const Vec& x) const {
  std::vector<double> terms;
  terms.reserve(components_.size());
  for (int i = 0; i < size(); ++i) {
    if (weights_[i] > 0.0) terms.push_back(std::log(weights_[i]) + components_[i].log_pdf(x));
  }
  return log_sum_exp(terms.data(), static_cast<int>(terms.size()));
}

void moment_match(const double* weights, const Vec* means, const Mat* covs, int n, Vec& mean_out,
                  Mat& cov_out, double skip_below) {
  if (n <= 0) throw Error(ErrorCode::kEmptyMixture, "cannot collapse an empty mixture");
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    if (weights[i] >= skip_below) total += weights[i];
  }
  if (!(total > 0.0)) throw Error(ErrorCode::kEmptyMixture, "all mixture weights vanish");

  const auto d = means[0].size();
  mean_out = Vec::Zero(d);
  for (int i = 0; i < n; ++i) {
    if (weights[i] >= skip_below && weights[i] > 0.0) mean_out += (weights[i] / total) * means[i];
  }
  cov_out = Mat::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    if (!(weights[i] >= skip_below && weights[i] > 0.0)) continue;
    const Vec diff = means[i] - mean_out;
    cov_out += (weights[i] / total) * (covs[i] + diff * diff.transpose());
  }
  cov_out = symmetrize(cov_out);
}

Gaussian moment_match(const GaussianMixture& mix, double skip_below) {
  if (mix.empty()) throw Error(ErrorCode::kEmptyMixture, "cannot collapse an empty mixture");
  const int n = mix.size();
  std::vector<Vec> means(n);
  std::vector<Mat> covs(n);
  for (int i = 0; i < n; ++i) {
    means[i] = mix.components()[i].mean();
    covs[i] = mix.components()[i].cov();
  }
  Vec m;
  Mat c;
  moment_match(mix.weights().data(), means.data(), covs.data(), n, m, c, skip_below);
  return Gaussian::from_moments_unchecked(std::move(m), std::move(c));
}

}  // namespace plds
