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

// Independent reference computations shared by the unit and acceptance
// tests. Nothing here calls the recursions under test.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "plds/linalg.hpp"
#include "plds/model.hpp"
#include "plds/rng.hpp"

namespace plds::testing {

struct InstanceShape {
  int K = 2;
  int D = 2;
  int L = 1;
  double obs_scale = 0.5;    // observation noise std
  double proc_scale = 0.3;   // process noise std
  double centre_scale = 3.0; // spread of gamma and b
  double c_scale = 0.9;      // C = c_scale * (I + small random)
  bool distinct_c = true;
};

inline Mat random_spd(Rng& rng, int d, double scale) {
  Mat G(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) G(i, j) = rng.normal();
  }
  Mat S = G * G.transpose() / d + Mat::Identity(d, d);
  return scale * scale * S / (S.trace() / d);
}

struct Instance {
  StaticParams theta;
  DynamicParams phi;
};

inline Instance random_instance(const InstanceShape& s, Rng& rng) {
  Instance in;
  StaticParams& th = in.theta;
  th.K = s.K;
  th.D = s.D;
  th.L = s.L;
  Vec pi(s.K);
  for (int k = 0; k < s.K; ++k) pi(k) = 0.5 + rng.uniform();
  th.pi = pi / pi.sum();
  DynamicParams& ph = in.phi;
  ph.K = s.K;
  ph.L = s.L;
  ph.tau = Mat(s.K, s.K);
  for (int k = 0; k < s.K; ++k) {
    Mat A(s.D, s.L);
    for (int i = 0; i < s.D; ++i) {
      for (int j = 0; j < s.L; ++j) A(i, j) = rng.normal();
    }
    th.A.push_back(A);
    th.b.push_back(s.centre_scale * rng.normal_vector(s.D));
    th.Sigma.push_back(random_spd(rng, s.D, s.obs_scale));
    th.gamma.push_back(s.centre_scale * rng.normal_vector(s.L));
    th.Gamma.push_back(random_spd(rng, s.L, 1.0));
    Mat C = Mat::Identity(s.L, s.L);
    if (s.distinct_c) {
      for (int i = 0; i < s.L; ++i) {
        for (int j = 0; j < s.L; ++j) C(i, j) += 0.2 * rng.normal();
      }
    }
    // Keep the spectral radius at most c_scale so long chains stay bounded.
    const double radius = Eigen::EigenSolver<Mat>(C).eigenvalues().cwiseAbs().maxCoeff();
    ph.C.push_back(s.c_scale * C / std::max(1.0, radius));
    ph.Q.push_back(random_spd(rng, s.L, s.proc_scale));
    for (int i = 0; i < s.K; ++i) ph.tau(i, k) = 0.2 + rng.uniform();
    ph.tau.col(k) /= ph.tau.col(k).sum();
  }
  return in;
}

// Posterior of x_{1:T} under fixed responsibilities, built as one dense
// (T*L)-dimensional Gaussian from the expected quadratic form.
struct DenseChain {
  std::vector<Vec> mean;
  std::vector<Mat> cov;
  std::vector<Mat> cross;  // [t] Cov(x_{t-1}, x_t)
};

inline DenseChain dense_chain_posterior(const StaticParams& th, const DynamicParams& ph, const std::vector<Vec>& y,
                                        const Mat& rho) {
  const int T = static_cast<int>(y.size());
  const int L = th.L;
  const int n = T * L;
  Mat J = Mat::Zero(n, n);
  Vec h = Vec::Zero(n);
  for (int t = 0; t < T; ++t) {
    for (int z = 0; z < th.K; ++z) {
      const double r = rho(t, z);
      const Mat Si = th.Sigma[z].inverse();
      J.block(t * L, t * L, L, L) += r * th.A[z].transpose() * Si * th.A[z];
      h.segment(t * L, L) += r * th.A[z].transpose() * Si * (y[t] - th.b[z]);
      if (t == 0) {
        const Mat Gi = th.Gamma[z].inverse();
        J.block(0, 0, L, L) += r * Gi;
        h.segment(0, L) += r * Gi * th.gamma[z];
      } else {
        const Mat Qi = ph.Q[z].inverse();
        const Mat& C = ph.C[z];
        J.block(t * L, t * L, L, L) += r * Qi;
        J.block((t - 1) * L, (t - 1) * L, L, L) += r * C.transpose() * Qi * C;
        J.block(t * L, (t - 1) * L, L, L) -= r * Qi * C;
        J.block((t - 1) * L, t * L, L, L) -= r * C.transpose() * Qi;
      }
    }
  }
  const Mat cov = J.inverse();
  const Vec mean = cov * h;
  DenseChain d;
  d.cross.resize(T);
  for (int t = 0; t < T; ++t) {
    d.mean.push_back(mean.segment(t * L, L));
    d.cov.push_back(cov.block(t * L, t * L, L, L));
    if (t > 0) d.cross[t] = cov.block((t - 1) * L, t * L, L, L);
  }
  return d;
}

// Exact posterior for L = D = 1 by discretizing x on a uniform grid and
// running a forward-backward pass over (grid point, mode).
struct GridPosterior {
  std::vector<double> smoothed_mean;
  std::vector<double> filtered_mean;
  Mat mode_posterior;  // T x K
  double log_likelihood = 0.0;
};

inline double normal_pdf(double x, double m, double var) {
  return std::exp(-0.5 * (x - m) * (x - m) / var) / std::sqrt(2.0 * M_PI * var);
}

inline GridPosterior grid_posterior(const StaticParams& th, const DynamicParams& ph, const std::vector<Vec>& y,
                                    double lo, double hi, int points) {
  const int T = static_cast<int>(y.size());
  const int K = th.K;
  const int G = points;
  const double dx = (hi - lo) / (G - 1);
  std::vector<double> xs(G);
  for (int i = 0; i < G; ++i) xs[i] = lo + i * dx;
  // kernel[k](i_to, i_from) = N(x_to; C_k x_from, Q_k) dx
  std::vector<Mat> kernel(K, Mat(G, G));
  for (int k = 0; k < K; ++k) {
    const double c = ph.C[k](0, 0), q = ph.Q[k](0, 0);
    for (int a = 0; a < G; ++a) {
      for (int b = 0; b < G; ++b) kernel[k](a, b) = normal_pdf(xs[a], c * xs[b], q) * dx;
    }
  }
  auto lik = [&](int t, int k) {
    Vec v(G);
    for (int i = 0; i < G; ++i) v(i) = normal_pdf(y[t](0), th.A[k](0, 0) * xs[i] + th.b[k](0), th.Sigma[k](0, 0));
    return v;
  };
  // alpha[t] is G x K, scaled.
  std::vector<Mat> alpha(T, Mat(G, K));
  std::vector<double> scale(T);
  GridPosterior out;
  out.filtered_mean.resize(T);
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < K; ++k) {
      Vec prior(G);
      if (t == 0) {
        for (int i = 0; i < G; ++i) prior(i) = th.pi(k) * normal_pdf(xs[i], th.gamma[k](0), th.Gamma[k](0, 0)) * dx;
      } else {
        Vec mix = Vec::Zero(G);
        for (int j = 0; j < K; ++j) mix += ph.tau(k, j) * alpha[t - 1].col(j);
        prior = kernel[k] * mix;
      }
      alpha[t].col(k) = prior.cwiseProduct(lik(t, k));
    }
    scale[t] = alpha[t].sum();
    alpha[t] /= scale[t];
    out.log_likelihood += std::log(scale[t]);
    double m = 0.0;
    for (int i = 0; i < G; ++i) m += xs[i] * alpha[t].row(i).sum();
    out.filtered_mean[t] = m;
  }
  std::vector<Mat> beta(T, Mat::Ones(G, K));
  for (int t = T - 2; t >= 0; --t) {
    Mat msg(G, K);
    for (int k = 0; k < K; ++k) msg.col(k) = lik(t + 1, k).cwiseProduct(beta[t + 1].col(k));
    for (int j = 0; j < K; ++j) {
      Vec acc = Vec::Zero(G);
      for (int k = 0; k < K; ++k) acc += ph.tau(k, j) * (kernel[k].transpose() * msg.col(k));
      beta[t].col(j) = acc / scale[t + 1];
    }
  }
  out.smoothed_mean.resize(T);
  out.mode_posterior = Mat(T, K);
  for (int t = 0; t < T; ++t) {
    const Mat post = alpha[t].cwiseProduct(beta[t]);
    const double z = post.sum();
    double m = 0.0;
    for (int i = 0; i < G; ++i) m += xs[i] * post.row(i).sum();
    out.smoothed_mean[t] = m / z;
    out.mode_posterior.row(t) = post.colwise().sum() / z;
  }
  return out;
}

inline double max_abs(const Mat& a, const Mat& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace plds::testing
