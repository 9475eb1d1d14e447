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

#include "doctest.h"
#include "oracles.hpp"
#include "plds/error.hpp"
#include "plds/gaussian.hpp"
#include "plds/model.hpp"

using namespace plds;

namespace {

bool has_code(const std::vector<Violation>& v, const std::string& code) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.code == code; });
}

testing::Instance unit_model(int D = 3, int L = 2) {
  testing::Instance in;
  StaticParams& th = in.theta;
  th.K = 1;
  th.D = D;
  th.L = L;
  th.A = {Mat::Identity(D, L)};
  th.b = {Vec::Zero(D)};
  th.Sigma = {Mat::Identity(D, D)};
  th.pi = Vec::Ones(1);
  th.gamma = {Vec::Zero(L)};
  th.Gamma = {Mat::Identity(L, L)};
  DynamicParams& ph = in.phi;
  ph.K = 1;
  ph.L = L;
  ph.C = {Mat::Identity(L, L)};
  ph.Q = {Mat::Identity(L, L)};
  ph.tau = Mat::Ones(1, 1);
  return in;
}

}  // namespace

TEST_CASE("validate accepts a consistent single-mode model") {
  const auto in = unit_model();
  CHECK(validate(in.theta, in.phi).empty());
}

TEST_CASE("validate reports tau columns that do not sum to one") {
  Rng rng(1);
  auto in = testing::random_instance({}, rng);
  in.phi.tau.col(0) *= 0.9;
  CHECK(has_code(validate(in.theta, in.phi), "TAU_COLUMN_STOCHASTIC"));
}

TEST_CASE("validate reports a zero transition matrix as rank deficient") {
  Rng rng(2);
  auto in = testing::random_instance({}, rng);
  in.phi.C[0].setZero();
  CHECK(has_code(validate(in.theta, in.phi), "C_RANK_DEFICIENT"));
}

TEST_CASE("validate reports non-SPD covariances and a bad pi") {
  Rng rng(3);
  auto in = testing::random_instance({}, rng);
  in.theta.Sigma[1] = -in.theta.Sigma[1];
  in.phi.Q[0](0, 0) = -1.0;
  in.theta.pi(0) += 0.5;
  const auto v = validate(in.theta, in.phi);
  CHECK(has_code(v, "SIGMA_NOT_SPD"));
  CHECK(has_code(v, "Q_NOT_SPD"));
  CHECK(has_code(v, "PI_SIMPLEX"));
}

TEST_CASE("near-noiseless single mode pins observations to zero") {
  auto in = unit_model(2, 2);
  in.theta.Sigma = {1e-12 * Mat::Identity(2, 2)};
  in.theta.Gamma = {1e-12 * Mat::Identity(2, 2)};
  in.phi.Q = {1e-12 * Mat::Identity(2, 2)};
  const Sequence s = sample_sequence(in.theta, in.phi, 50, 7);
  for (const Vec& y : s.y) CHECK(y.cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("absorbing transition matrix keeps the mode constant") {
  Rng rng(4);
  auto in = testing::random_instance({}, rng);
  in.phi.tau = Mat::Identity(2, 2);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Sequence s = sample_sequence(in.theta, in.phi, 40, seed);
    CHECK(std::all_of(s.z_true.begin(), s.z_true.end(), [&](int z) { return z == s.z_true[0]; }));
  }
}

TEST_CASE("uniform transitions visit both modes at the stationary rate") {
  Rng rng(5);
  auto in = testing::random_instance({}, rng);
  in.phi.tau = Mat::Constant(2, 2, 0.5);
  const Sequence s = sample_sequence(in.theta, in.phi, 10000, 11);
  const double f = std::count(s.z_true.begin(), s.z_true.end(), 0) / 10000.0;
  CHECK(std::abs(f - 0.5) < 0.02);
}

TEST_CASE("sampling is bitwise deterministic in the seed") {
  Rng rng(6);
  const auto in = testing::random_instance({.K = 3, .D = 4, .L = 2}, rng);
  const Sequence a = sample_sequence(in.theta, in.phi, 100, 99);
  const Sequence b = sample_sequence(in.theta, in.phi, 100, 99);
  for (int t = 0; t < 100; ++t) {
    CHECK(a.y[t] == b.y[t]);
    CHECK(a.x_true[t] == b.x_true[t]);
    CHECK(a.z_true[t] == b.z_true[t]);
  }
}

TEST_CASE("complete log-likelihood at the modes equals the two normalizers") {
  auto in = unit_model(1, 1);
  Sequence s;
  s.x_true = {Vec::Zero(1)};
  s.y = {Vec::Zero(1)};
  s.z_true = {0};
  const double expected = 2.0 * (-0.5 * std::log(2.0 * M_PI));
  CHECK(std::abs(complete_log_likelihood(in.theta, in.phi, s) - expected) < 1e-12);
}

TEST_CASE("complete log-likelihood decomposes into independently computed factors") {
  Rng rng(8);
  const auto in = testing::random_instance({.K = 2, .D = 3, .L = 2}, rng);
  const Sequence s = sample_sequence(in.theta, in.phi, 20, 3);
  double manual = std::log(in.theta.pi(s.z_true[0]));
  auto logn = [](const Vec& x, const Vec& m, const Mat& S) {
    const Vec d = x - m;
    return -0.5 * (x.size() * std::log(2 * M_PI) + std::log(S.determinant()) + d.dot(S.inverse() * d));
  };
  manual += logn(s.x_true[0], in.theta.gamma[s.z_true[0]], in.theta.Gamma[s.z_true[0]]);
  for (int t = 0; t < 20; ++t) {
    const int z = s.z_true[t];
    manual += logn(s.y[t], in.theta.A[z] * s.x_true[t] + in.theta.b[z], in.theta.Sigma[z]);
    if (t > 0) {
      manual += std::log(in.phi.tau(z, s.z_true[t - 1]));
      manual += logn(s.x_true[t], in.phi.C[z] * s.x_true[t - 1], in.phi.Q[z]);
    }
  }
  const double v = complete_log_likelihood(in.theta, in.phi, s);
  CHECK(std::isfinite(v));
  CHECK(std::abs(v - manual) < 1e-9);
}

TEST_CASE("doubling Sigma lowers the density of an on-surface observation") {
  auto in = unit_model(2, 2);
  Sequence s;
  s.x_true = {Vec::Zero(2)};
  s.y = {Vec::Zero(2)};
  s.z_true = {0};
  const double a = complete_log_likelihood(in.theta, in.phi, s);
  in.theta.Sigma[0] *= 2.0;
  CHECK(complete_log_likelihood(in.theta, in.phi, s) < a);
}

TEST_CASE("complete log-likelihood needs latent annotations") {
  const auto in = unit_model();
  Sequence s;
  s.y = {Vec::Zero(3)};
  CHECK_THROWS_AS(complete_log_likelihood(in.theta, in.phi, s), Error);
  try {
    complete_log_likelihood(in.theta, in.phi, s);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMissingLatents);
  }
}

TEST_CASE("moment matching reproduces the law of total variance") {
  std::vector<Gaussian> comps{Gaussian(Vec::Constant(1, -1.0), Mat::Ones(1, 1)),
                              Gaussian(Vec::Constant(1, 1.0), Mat::Ones(1, 1))};
  const Gaussian g = moment_match(GaussianMixture({0.5, 0.5}, comps));
  CHECK(std::abs(g.mean()(0)) < 1e-15);
  CHECK(std::abs(g.cov()(0, 0) - 2.0) < 1e-15);
}

TEST_CASE("moment matching leaves identical and single components unchanged") {
  Rng rng(9);
  const Mat S = testing::random_spd(rng, 3, 1.0);
  const Vec m = rng.normal_vector(3);
  const Gaussian one = moment_match(GaussianMixture({1.0}, {Gaussian(m, S)}));
  CHECK(testing::max_abs(one.cov(), S) < 1e-15);
  const Gaussian two = moment_match(GaussianMixture({0.3, 0.7}, {Gaussian(m, S), Gaussian(m, S)}));
  CHECK(testing::max_abs(two.mean(), m) < 1e-15);
  CHECK(testing::max_abs(two.cov(), S) < 1e-14);
}

TEST_CASE("empty mixtures are rejected") {
  CHECK_THROWS_AS(moment_match(GaussianMixture()), Error);
}

TEST_CASE("SPD repair symmetrizes and jitters") {
  Mat m(2, 2);
  m << 1.0, 1.0 + 1e-12, 1.0, 1.0;
  const Mat r = make_spd(m);
  CHECK(r == r.transpose());
  CHECK(min_eigenvalue(r) > 0.0);
  const Gaussian g(Vec::Zero(2), m);
  CHECK(is_spd(g.cov()));
}

TEST_CASE("parameter counts") {
  CHECK(static_parameter_count(1, 1, 1, false) == 1 + 1 + 1 + 1 + 1);
  const long long p = static_parameter_count(10, 1000, 10, true);
  CHECK(p >= 100000);
  CHECK(p < 1000000);
  CHECK(dynamic_parameter_count(10, 10) == 1640);
}

TEST_CASE("label permutation is an involution for swaps") {
  Rng rng(10);
  const auto in = testing::random_instance({.K = 3}, rng);
  const std::vector<int> perm{2, 0, 1};
  const std::vector<int> inv{1, 2, 0};
  const auto back = permute_labels(permute_labels(in.phi, perm), inv);
  CHECK(testing::max_abs(back.tau, in.phi.tau) == 0.0);
  CHECK(validate(permute_labels(in.theta, perm), permute_labels(in.phi, perm)).empty());
}
