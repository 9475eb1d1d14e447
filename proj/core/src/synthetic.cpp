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

#include "plds/synthetic.hpp"

#include <cmath>

#include "plds/error.hpp"
#include "plds/rng.hpp"

namespace plds {

std::vector<std::string> check_spec(const SyntheticSpec& s) {
  if (s.K < 1 || s.D < 1 || s.L < 1) throw Error(ErrorCode::kInvalidParameters, "K, D and L must be positive");
  if (!(s.obs_noise > 0.0) || !(s.proc_noise > 0.0) || !(s.prior_scale > 0.0)) {
    throw Error(ErrorCode::kInvalidParameters, "noise scales must be positive");
  }
  if (!(s.stay >= 0.0 && s.stay <= 1.0)) throw Error(ErrorCode::kInvalidParameters, "stay must lie in [0, 1]");
  if (!(s.outlier_rate >= 0.0 && s.outlier_rate <= 1.0)) {
    throw Error(ErrorCode::kInvalidParameters, "outlier_rate must lie in [0, 1]");
  }
  if (s.separation < 0.0) throw Error(ErrorCode::kInvalidParameters, "separation must be nonnegative");
  std::vector<std::string> warnings;
  if (s.separation == 0.0 && s.K > 1) warnings.emplace_back("SEPARATION_ZERO");
  return warnings;
}

SyntheticModel make_synthetic_model(const SyntheticSpec& s, std::uint64_t seed) {
  check_spec(s);
  Rng rng(seed);
  const int K = s.K, D = s.D, L = s.L;
  SyntheticModel m;
  StaticParams& th = m.theta;
  th.K = K;
  th.D = D;
  th.L = L;
  th.sigma_diagonal = s.sigma_diagonal;
  th.pi = Vec::Constant(K, 1.0 / K);
  for (int k = 0; k < K; ++k) {
    Vec dir = rng.normal_vector(L);
    dir /= dir.norm();
    th.gamma.push_back(s.separation * dir);
    th.Gamma.push_back(s.prior_scale * s.prior_scale * Mat::Identity(L, L));
    Mat A(D, L);
    for (int i = 0; i < D; ++i) {
      for (int j = 0; j < L; ++j) A(i, j) = rng.normal();
    }
    th.A.push_back(A);
    th.b.push_back(s.separation * rng.normal_vector(D));
    th.Sigma.push_back(s.obs_noise * s.obs_noise * Mat::Identity(D, D));
  }

  DynamicParams& ph = m.phi;
  ph.K = K;
  ph.L = L;
  ph.C.assign(K, Mat::Identity(L, L));
  ph.Q.assign(K, s.proc_noise * s.proc_noise * Mat::Identity(L, L));
  if (K == 1) {
    ph.tau = Mat::Ones(1, 1);
  } else {
    ph.tau = Mat::Constant(K, K, (1.0 - s.stay) / (K - 1));
    ph.tau.diagonal().setConstant(s.stay);
  }
  return m;
}

Sequence simulate(const SyntheticModel& model, const SyntheticSpec& spec, int T, std::uint64_t seed) {
  const Rng root(seed);
  Rng draws = root.split(0);
  Sequence seq = sample_sequence(model.theta, model.phi, T, draws);
  if (spec.outlier_rate > 0.0) {
    Rng out = root.split(1);
    for (Vec& y : seq.y) {
      if (out.uniform() < spec.outlier_rate) y += spec.outlier_scale * out.normal_vector(static_cast<int>(y.size()));
    }
  }
  return seq;
}

TrainingSet sample_training_set(const StaticParams& theta, int N, std::uint64_t seed) {
  if (N < 1) throw Error(ErrorCode::kInvalidParameters, "N must be positive");
  Rng rng(seed);
  const int K = theta.K;
  std::vector<Mat> cs(K), cg(K);
  for (int k = 0; k < K; ++k) {
    cs[k] = theta.Sigma[k].llt().matrixL();
    cg[k] = theta.Gamma[k].llt().matrixL();
  }
  TrainingSet data;
  data.x.reserve(N);
  data.y.reserve(N);
  for (int n = 0; n < N; ++n) {
    const int z = rng.categorical(theta.pi);
    Vec x = rng.gaussian(theta.gamma[z], cg[z]);
    data.y.push_back(rng.gaussian(theta.A[z] * x + theta.b[z], cs[z]));
    data.x.push_back(std::move(x));
  }
  return data;
}

}  // namespace plds
