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

#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "plds/exact.hpp"
#include "plds/gpb2.hpp"
#include "plds/kalman.hpp"

using namespace plds;

TEST_CASE("GPB2 at K = 1 is the Kalman filter and RTS smoother") {
  Rng rng(41);
  const auto in = testing::random_instance({.K = 1, .D = 3, .L = 2}, rng);
  const Sequence s = sample_sequence(in.theta, in.phi, 30, 41);
  const Gpb2FilterResult f = gpb2_filter(in.theta, in.phi, s.y);
  const KalmanBelief b = rts_smoother(kalman_filter(in.theta, in.phi, s.y), in.phi);
  CHECK(std::abs(f.log_likelihood - b.log_likelihood) < 1e-8);
  const Gpb2Smoothed sm = gpb2_smoother(in.theta, in.phi, s.y, f);
  for (int t = 0; t < 30; ++t) {
    CHECK(testing::max_abs(f.mean[t], b.filtered_mean[t]) < 1e-8);
    CHECK(testing::max_abs(f.cov[t], b.filtered_cov[t]) < 1e-8);
    CHECK(testing::max_abs(sm.mean[t], b.smoothed_mean[t]) < 1e-8);
    CHECK(testing::max_abs(sm.cov[t], b.smoothed_cov[t]) < 1e-8);
    if (t > 0) CHECK(testing::max_abs(sm.cross_cov[t], b.cross_cov[t]) < 1e-8);
  }
}

TEST_CASE("GPB2 is exact for the first two steps") {
  Rng rng(42);
  const auto in = testing::random_instance({.K = 3, .D = 2, .L = 2}, rng);
  const Sequence s = sample_sequence(in.theta, in.phi, 2, 42);
  const Gpb2FilterResult f = gpb2_filter(in.theta, in.phi, s.y);
  const ExactPosterior e = enumerate_posterior(in.theta, in.phi, s.y);
  CHECK(std::abs(f.log_likelihood - e.log_marginal_likelihood) < 1e-9);
  const Mat modes = f.mode_posterior();
  for (int t = 0; t < 2; ++t) {
    CHECK(testing::max_abs(f.mean[t], e.filtered[t].mean()) < 1e-9);
    CHECK(testing::max_abs(modes.row(t), e.filtered_mode_posterior.row(t)) < 1e-9);
  }
}

TEST_CASE("GPB2 weights stay on the simplex and covariances stay SPD") {
  Rng rng(43);
  const auto in = testing::random_instance({.K = 4, .D = 3, .L = 2}, rng);
  const Sequence s = sample_sequence(in.theta, in.phi, 40, 43);
  const Gpb2FilterResult f = gpb2_filter(in.theta, in.phi, s.y);
  for (const Gpb2Belief& b : f.beliefs) {
    CHECK(std::abs(b.weight.sum() - 1.0) < 1e-12);
    CHECK(b.weight.minCoeff() >= 0.0);
    for (const Mat& V : b.cov) CHECK(min_eigenvalue(V) > 0.0);
  }
  const Gpb2Smoothed sm = gpb2_smoother(in.theta, in.phi, s.y, f);
  for (int t = 0; t < 40; ++t) CHECK(std::abs(sm.mode_posterior.row(t).sum() - 1.0) < 1e-10);
}

TEST_CASE("GPB2 filter is causal") {
  Rng rng(44);
  const auto in = testing::random_instance({.K = 2, .D = 3, .L = 2}, rng);
  const Sequence s = sample_sequence(in.theta, in.phi, 20, 44);
  std::vector<Vec> other = s.y;
  for (int t = 10; t < 20; ++t) other[t] = 5.0 * rng.normal_vector(3);
  const Gpb2FilterResult a = gpb2_filter(in.theta, in.phi, s.y);
  const Gpb2FilterResult b = gpb2_filter(in.theta, in.phi, other);
  for (int t = 0; t < 10; ++t) CHECK(a.mean[t] == b.mean[t]);
}

TEST_CASE("GPB2 handles a single observation") {
  Rng rng(45);
  const auto in = testing::random_instance({}, rng);
  const Sequence s = sample_sequence(in.theta, in.phi, 1, 45);
  const Gpb2FilterResult f = gpb2_filter(in.theta, in.phi, s.y);
  const Gpb2Smoothed sm = gpb2_smoother(in.theta, in.phi, s.y, f);
  CHECK(testing::max_abs(sm.mean[0], f.mean[0]) < 1e-12);
  CHECK(std::abs(f.log_likelihood - enumerate_posterior(in.theta, in.phi, s.y).log_marginal_likelihood) < 1e-10);
}

TEST_CASE("identical modes split the weight evenly") {
  Rng rng(46);
  auto in = testing::random_instance({.K = 1, .D = 2, .L = 1}, rng);
  in.theta.K = in.phi.K = 2;
  for (auto* v : {&in.theta.A, &in.theta.Sigma, &in.theta.Gamma, &in.phi.C, &in.phi.Q}) v->push_back(v->front());
  in.theta.b.push_back(in.theta.b[0]);
  in.theta.gamma.push_back(in.theta.gamma[0]);
  in.theta.pi = Vec::Constant(2, 0.5);
  in.phi.tau = Mat::Constant(2, 2, 0.5);
  const Sequence s = sample_sequence(in.theta, in.phi, 12, 46);
  const Gpb2FilterResult f = gpb2_filter(in.theta, in.phi, s.y);
  const Gpb2Smoothed sm = gpb2_smoother(in.theta, in.phi, s.y, f);
  CHECK((f.mode_posterior().array() - 0.5).abs().maxCoeff() < 1e-12);
  CHECK((sm.mode_posterior.array() - 0.5).abs().maxCoeff() < 1e-10);
}

TEST_CASE("GPB2 smoother tracks the exact smoother on short sequences") {
  Rng rng(47);
  const auto in = testing::random_instance({.K = 2, .D = 3, .L = 2}, rng);
  const Sequence s = sample_sequence(in.theta, in.phi, 8, 47);
  const Gpb2Smoothed sm = gpb2_smoother(in.theta, in.phi, s.y, gpb2_filter(in.theta, in.phi, s.y));
  const ExactPosterior e = enumerate_posterior(in.theta, in.phi, s.y);
  for (int t = 0; t < 8; ++t) {
    CHECK(testing::max_abs(sm.mean[t], e.smoothed_mean(t)) < 0.1 * (1.0 + e.smoothed_mean(t).norm()));
  }
}

TEST_CASE("GPB2 learning keeps the model valid and raises the likelihood") {
  Rng rng(48);
  const auto in = testing::random_instance({.K = 2, .D = 3, .L = 2}, rng);
  std::vector<std::vector<Vec>> seqs{sample_sequence(in.theta, in.phi, 80, 48).y};
  DynamicParams start = in.phi;
  start.tau = Mat::Constant(2, 2, 0.5);
  for (Mat& Q : start.Q) Q *= 3.0;
  Gpb2LearnConfig cfg;
  cfg.max_iters = 10;
  const Gpb2LearnResult r = gpb2_learn(in.theta, start, seqs, cfg);
  CHECK(validate(in.theta, r.phi).empty());
  REQUIRE(r.trace.size() >= 2);
  CHECK(r.trace.back() > r.trace.front());
}
