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

#include "plds/static_em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "plds/error.hpp"
#include "plds/rng.hpp"

namespace plds {
namespace {

void check_data(const TrainingSet& data) {
  if (data.x.size() != data.y.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "training set has unequal x and y row counts");
  }
  if (data.N() == 0) throw Error(ErrorCode::kInvalidParameters, "training set is empty");
  for (int n = 0; n < data.N(); ++n) {
    if (data.x[n].size() != data.L() || data.y[n].size() != data.D()) {
      throw Error(ErrorCode::kDimensionMismatch, "training row " + std::to_string(n + 1) + " has inconsistent dimensions");
    }
  }
}

// Rows of concatenated (x, y), each column scaled to unit variance.
std::vector<Vec> whitened_rows(const TrainingSet& data) {
  const int N = data.N();
  const int d = data.L() + data.D();
  std::vector<Vec> rows(N, Vec(d));
  for (int n = 0; n < N; ++n) rows[n] << data.x[n], data.y[n];
  Vec mean = Vec::Zero(d), sq = Vec::Zero(d);
  for (const auto& r : rows) mean += r;
  mean /= N;
  for (const auto& r : rows) sq += (r - mean).cwiseAbs2();
  Vec sd = (sq / std::max(1, N - 1)).cwiseSqrt();
  for (int i = 0; i < d; ++i) {
    if (!(sd(i) > 0.0)) sd(i) = 1.0;
  }
  for (auto& r : rows) r = (r - mean).cwiseQuotient(sd);
  return rows;
}

// k-means++ seeding followed by a few Lloyd iterations; returns labels.
std::vector<int> kmeans_labels(const std::vector<Vec>& rows, int K, Rng& rng) {
  const int N = static_cast<int>(rows.size());
  std::vector<Vec> centers;
  centers.push_back(rows[static_cast<int>(rng.uniform() * N) % N]);
  Vec d2(N);
  while (static_cast<int>(centers.size()) < K) {
    for (int n = 0; n < N; ++n) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, (rows[n] - c).squaredNorm());
      d2(n) = best;
    }
    if (!(d2.sum() > 0.0)) d2.setOnes();
    centers.push_back(rows[rng.categorical(d2)]);
  }
  std::vector<int> label(N, 0);
  for (int iter = 0; iter < 20; ++iter) {
    bool changed = false;
    for (int n = 0; n < N; ++n) {
      int arg = 0;
      double best = std::numeric_limits<double>::infinity();
      for (int k = 0; k < K; ++k) {
        const double v = (rows[n] - centers[k]).squaredNorm();
        if (v < best) {
          best = v;
          arg = k;
        }
      }
      changed = changed || arg != label[n];
      label[n] = arg;
    }
    std::vector<Vec> sum(K, Vec::Zero(rows[0].size()));
    std::vector<int> count(K, 0);
    for (int n = 0; n < N; ++n) {
      sum[label[n]] += rows[n];
      ++count[label[n]];
    }
    for (int k = 0; k < K; ++k) {
      if (count[k] > 0) centers[k] = sum[k] / count[k];
    }
    if (!changed && iter > 0) break;
  }
  return label;
}

struct EStep {
  Mat resp;
  Vec row_log;  // log p(x_n, y_n)
  double log_likelihood;
};

EStep e_step(const StaticParams& th, const TrainingSet& data) {
  const int N = data.N();
  const int K = th.K;
  std::vector<SpdFactor> sig, gam;
  for (int k = 0; k < K; ++k) {
    sig.emplace_back(th.Sigma[k], th.sigma_diagonal, "Sigma");
    gam.emplace_back(th.Gamma[k], false, "Gamma");
  }
  EStep e{Mat(N, K), Vec(N), 0.0};
  Vec lr(K);
  for (int n = 0; n < N; ++n) {
    for (int k = 0; k < K; ++k) {
      lr(k) = th.pi(k) > 0.0 ? std::log(th.pi(k)) + log_gauss(data.x[n], th.gamma[k], gam[k]) +
                                   log_gauss(data.y[n], th.A[k] * data.x[n] + th.b[k], sig[k])
                             : -std::numeric_limits<double>::infinity();
    }
    const double z = log_sum_exp(lr);
    e.row_log(n) = z;
    e.resp.row(n) = (lr.array() - z).exp().matrix().transpose();
    e.log_likelihood += z;
  }
  return e;
}

StaticParams m_step_static(const TrainingSet& data, const Mat& resp, int K, const StaticFitConfig& cfg) {
  const int N = data.N(), L = data.L(), D = data.D();
  StaticParams th;
  th.K = K;
  th.D = D;
  th.L = L;
  th.sigma_diagonal = cfg.sigma_diagonal;
  th.pi = Vec(K);
  th.A.resize(K);
  th.b.resize(K);
  th.Sigma.resize(K);
  th.gamma.resize(K);
  th.Gamma.resize(K);
  for (int k = 0; k < K; ++k) {
    const double nk = resp.col(k).sum();
    th.pi(k) = nk / N;
    Vec g = Vec::Zero(L);
    for (int n = 0; n < N; ++n) g += resp(n, k) * data.x[n];
    g /= nk;
    Mat G = Mat::Zero(L, L);
    Mat xx = Mat::Zero(L + 1, L + 1);
    Mat yx = Mat::Zero(D, L + 1);
    Vec xt(L + 1);
    for (int n = 0; n < N; ++n) {
      const double r = resp(n, k);
      if (r == 0.0) continue;
      const Vec dx = data.x[n] - g;
      G += r * dx * dx.transpose();
      xt << data.x[n], 1.0;
      xx += r * xt * xt.transpose();
      yx += r * data.y[n] * xt.transpose();
    }
    th.gamma[k] = g;
    th.Gamma[k] = make_spd(G / nk);

    Eigen::LDLT<Mat> ldlt(xx);
    Mat B;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > 1e-14) {
      B = ldlt.solve(yx.transpose()).transpose();
    } else {
      Mat ridge = xx;
      ridge.diagonal().array() += 1e-10 * std::max(1.0, xx.trace());
      B = ridge.ldlt().solve(yx.transpose()).transpose();
    }
    th.A[k] = B.leftCols(L);
    th.b[k] = B.col(L);

    Mat S = Mat::Zero(D, D);
    Vec sd = Vec::Zero(D);
    for (int n = 0; n < N; ++n) {
      const double r = resp(n, k);
      if (r == 0.0) continue;
      const Vec e = data.y[n] - th.A[k] * data.x[n] - th.b[k];
      if (cfg.sigma_diagonal) {
        sd += r * e.cwiseAbs2();
      } else {
        S.noalias() += r * e * e.transpose();
      }
    }
    if (cfg.sigma_diagonal) {
      sd /= nk;
      S = sd.cwiseMax(cfg.sigma_floor).asDiagonal();
    } else {
      S = symmetrize(S / nk);
      for (int i = 0; i < D; ++i) S(i, i) = std::max(S(i, i), cfg.sigma_floor);
      S = make_spd(S);
    }
    th.Sigma[k] = S;
  }
  return th;
}

// Hands a starved component the neighbourhood of the worst-explained datum.
void reinitialize(Mat& resp, int k, const Vec& row_log, const std::vector<Vec>& rows, int min_rows) {
  const int N = static_cast<int>(rows.size());
  int worst = 0;
  row_log.minCoeff(&worst);
  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> dist(N);
  for (int n = 0; n < N; ++n) dist[n] = (rows[n] - rows[worst]).squaredNorm();
  std::partial_sort(order.begin(), order.begin() + std::min(N, min_rows), order.end(),
                    [&](int a, int b) { return dist[a] < dist[b]; });
  for (int i = 0; i < std::min(N, min_rows); ++i) {
    resp.row(order[i]).setZero();
    resp(order[i], k) = 1.0;
  }
}

StaticFitResult fit_once(const TrainingSet& data, int K, const StaticFitConfig& cfg, Rng rng,
                         const std::vector<Vec>& rows) {
  const int N = data.N();
  const auto labels = kmeans_labels(rows, K, rng);
  Mat resp = Mat::Zero(N, K);
  for (int n = 0; n < N; ++n) resp(n, labels[n]) = 1.0;

  const int min_rows = std::max(2 * (data.L() + 1), N / (4 * K));
  const double starve = std::max(1e-8 * N, 0.5 * (data.L() + 1));
  StaticFitResult res;
  Vec row_log = Vec::Zero(N);
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    for (int k = 0; k < K; ++k) {
      if (resp.col(k).sum() < starve) {
        reinitialize(resp, k, row_log, rows, min_rows);
        res.reinitialized.push_back(iter);
      }
    }
    res.theta = m_step_static(data, resp, K, cfg);
    EStep e = e_step(res.theta, data);
    resp = std::move(e.resp);
    row_log = std::move(e.row_log);
    res.log_likelihood.push_back(e.log_likelihood);
    const auto n = res.log_likelihood.size();
    if (n >= 2) {
      const double prev = res.log_likelihood[n - 2];
      if (std::abs(e.log_likelihood - prev) <= cfg.tol * std::max(1.0, std::abs(prev))) {
        res.converged = true;
        break;
      }
    }
  }
  return res;
}

}  // namespace

StaticFitResult fit_static(const TrainingSet& data, int K, const StaticFitConfig& config) {
  check_data(data);
  if (K < 1) throw Error(ErrorCode::kInvalidParameters, "K must be at least 1");
  if (data.N() < K * (data.L() + 1)) {
    throw Error(ErrorCode::kInvalidParameters, "need at least K (L + 1) training rows");
  }
  const auto rows = whitened_rows(data);
  const Rng base(config.seed);
  StaticFitResult best;
  double best_ll = -std::numeric_limits<double>::infinity();
  const int restarts = std::max(1, config.restarts);
  for (int r = 0; r < restarts; ++r) {
    StaticFitResult res = fit_once(data, K, config, base.split(static_cast<std::uint64_t>(r)), rows);
    const double ll = res.log_likelihood.empty() ? -std::numeric_limits<double>::infinity()
                                                 : res.log_likelihood.back();
    if (ll > best_ll || r == 0) {
      best_ll = ll;
      best = std::move(res);
      best.restart = r;
    }
  }
  return best;
}

Mat static_responsibilities(const StaticParams& theta, const TrainingSet& data) {
  check_data(data);
  return e_step(theta, data).resp;
}

double static_log_likelihood(const StaticParams& theta, const TrainingSet& data) {
  check_data(data);
  return e_step(theta, data).log_likelihood;
}

InversePredictor::InversePredictor(const StaticParams& theta) : theta_(&theta) {
  const auto report = validate(theta);
  if (!report.empty()) throw Error(ErrorCode::kInvalidParameters, report.front().code + ": " + report.front().message);
  const int K = theta.K;
  log_pi_ = theta.pi.array().log().matrix();
  for (int k = 0; k < K; ++k) {
    const Mat& A = theta.A[k];
    const SpdFactor sig(theta.Sigma[k], theta.sigma_diagonal, "Sigma");
    const SpdFactor gam(theta.Gamma[k], false, "Gamma");
    marginal_.emplace_back(symmetrize(theta.Sigma[k] + A * theta.Gamma[k] * A.transpose()), false,
                           "prior predictive covariance");
    marginal_mean_.push_back(A * theta.gamma[k] + theta.b[k]);
    const Mat AtSi = sig.solve(A).transpose();
    const SpdFactor post(symmetrize(gam.inverse() + AtSi * A), false, "inverse posterior precision");
    post_cov_.push_back(post.inverse());
    gain_.push_back(post_cov_.back() * AtSi);
    prior_shift_.push_back(post_cov_.back() * gam.solve(theta.gamma[k]));
  }
}

void InversePredictor::predict_moments(const Vec& y, Vec& mean, Mat& cov, Vec& weights) const {
  const int K = theta_->K;
  Vec lw(K);
  for (int k = 0; k < K; ++k) lw(k) = log_pi_(k) + log_gauss(y, marginal_mean_[k], marginal_[k]);
  const double z = log_sum_exp(lw);
  weights = (lw.array() - z).exp().matrix();
  std::vector<Vec> means(K);
  for (int k = 0; k < K; ++k) means[k] = prior_shift_[k] + gain_[k] * (y - theta_->b[k]);
  moment_match(weights.data(), means.data(), post_cov_.data(), K, mean, cov);
}

InversePrediction InversePredictor::predict(const Vec& y) const {
  const int K = theta_->K;
  InversePrediction out;
  Mat cov;
  predict_moments(y, out.mean, cov, out.weights);
  std::vector<Gaussian> comps;
  std::vector<double> w(K);
  for (int k = 0; k < K; ++k) {
    comps.push_back(Gaussian::from_moments_unchecked(prior_shift_[k] + gain_[k] * (y - theta_->b[k]), post_cov_[k]));
    w[k] = out.weights(k);
  }
  out.posterior = GaussianMixture(std::move(w), std::move(comps));
  return out;
}

InversePrediction predict_inverse(const StaticParams& theta, const Vec& y) {
  return InversePredictor(theta).predict(y);
}

SelectKResult select_k(const TrainingSet& data, const std::vector<int>& k_range, const StaticFitConfig& config) {
  check_data(data);
  if (k_range.empty()) throw Error(ErrorCode::kInvalidParameters, "k_range is empty");
  if (config.criterion != "bic" && config.criterion != "mae") {
    throw Error(ErrorCode::kInvalidParameters, "criterion must be \"bic\" or \"mae\"");
  }
  const int N = data.N();
  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng(config.seed).split(0xC0FFEE);
  for (int i = N - 1; i > 0; --i) std::swap(order[i], order[static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1))]);
  const int n_hold = std::clamp(static_cast<int>(std::floor(config.holdout_fraction * N)), 0, N - 1);
  TrainingSet train, hold;
  for (int i = 0; i < N; ++i) {
    TrainingSet& dst = i < N - n_hold ? train : hold;
    dst.x.push_back(data.x[order[i]]);
    dst.y.push_back(data.y[order[i]]);
  }
  const TrainingSet& eval = n_hold > 0 ? hold : train;

  SelectKResult out;
  double best = std::numeric_limits<double>::infinity();
  for (int K : k_range) {
    const StaticFitResult fit = fit_static(train, K, config);
    SelectKRow row;
    row.K = K;
    row.log_likelihood = fit.log_likelihood.back();
    row.parameters = static_parameter_count(K, data.D(), data.L(), config.sigma_diagonal);
    row.bic = -2.0 * row.log_likelihood + static_cast<double>(row.parameters) * std::log(static_cast<double>(train.N()));
    const InversePredictor pred(fit.theta);
    double abs_err = 0.0;
    for (int n = 0; n < eval.N(); ++n) {
      Vec m;
      Mat c;
      Vec w;
      pred.predict_moments(eval.y[n], m, c, w);
      abs_err += (m - eval.x[n]).cwiseAbs().sum();
    }
    row.mae = abs_err / (static_cast<double>(eval.N()) * data.L());
    const double score = config.criterion == "bic" ? row.bic : row.mae;
    if (score < best) {
      best = score;
      out.chosen_K = K;
    }
    out.table.push_back(row);
  }
  return out;
}

}  // namespace plds
