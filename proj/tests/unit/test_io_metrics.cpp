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
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "plds/error.hpp"
#include "plds/io.hpp"
#include "plds/metrics.hpp"
#include "plds/synthetic.hpp"

using namespace plds;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "plds_unit";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("model JSON round-trips exactly") {
  Rng rng(61);
  const auto in = testing::random_instance({.K = 3, .D = 4, .L = 2}, rng);
  const ModelFile m = model_from_json(model_to_json(in.theta, in.phi));
  CHECK(m.theta.K == 3);
  for (int k = 0; k < 3; ++k) {
    CHECK(m.theta.A[k] == in.theta.A[k]);
    CHECK(m.theta.Sigma[k] == in.theta.Sigma[k]);
    CHECK(m.theta.gamma[k] == in.theta.gamma[k]);
    CHECK(m.phi.Q[k] == in.phi.Q[k]);
  }
  CHECK(m.phi.tau == in.phi.tau);
  CHECK(m.theta.pi == in.theta.pi);
}

TEST_CASE("malformed model JSON is a parse error") {
  CHECK_THROWS_AS(model_from_json("{\"version\": 1, \"K\": "), Error);
  CHECK_THROWS_AS(read_model(scratch("missing.json").string() + ".nope"), Error);
}

TEST_CASE("sequence CSV round-trips with one-based modes on disk") {
  Rng rng(62);
  const auto in = testing::random_instance({.K = 2, .D = 3, .L = 2}, rng);
  const Sequence s = sample_sequence(in.theta, in.phi, 17, 62);
  const fs::path p = scratch("seq.csv");
  write_sequence(p.string(), s);
  const Sequence r = read_sequence(p.string());
  REQUIRE(r.T() == 17);
  for (int t = 0; t < 17; ++t) {
    CHECK(r.y[t] == s.y[t]);
    CHECK(r.x_true[t] == s.x_true[t]);
    CHECK(r.z_true[t] == s.z_true[t]);
  }
  const CsvTable tab = read_csv(p.string());
  const int zc = tab.column("z");
  REQUIRE(zc >= 0);
  CHECK(tab.rows[0][zc] == s.z_true[0] + 1);
}

TEST_CASE("posterior CSV round-trips and writes identical bytes twice") {
  Rng rng(63);
  PosteriorTrack tr;
  tr.rho = Mat(5, 2);
  for (int t = 0; t < 5; ++t) {
    tr.eta.push_back(rng.normal_vector(3));
    tr.V.push_back(testing::random_spd(rng, 3, 1.0));
    tr.rho.row(t) << 0.25, 0.75;
    tr.us.push_back(1.5 + t);
  }
  const fs::path a = scratch("post_a.csv"), b = scratch("post_b.csv");
  write_posterior(a.string(), tr);
  write_posterior(b.string(), tr);
  CHECK(slurp(a) == slurp(b));
  const PosteriorTrack r = read_posterior(a.string());
  for (int t = 0; t < 5; ++t) {
    CHECK(r.eta[t] == tr.eta[t]);
    CHECK(testing::max_abs(r.V[t], tr.V[t]) == 0.0);
  }
  CHECK(r.rho == tr.rho);
  CHECK(r.us == tr.us);
}

TEST_CASE("training set CSV round-trips") {
  TrainingSet d;
  Rng rng(64);
  for (int n = 0; n < 9; ++n) {
    d.x.push_back(rng.normal_vector(2));
    d.y.push_back(rng.normal_vector(5));
  }
  const fs::path p = scratch("train.csv");
  write_training_set(p.string(), d);
  const TrainingSet r = read_training_set(p.string());
  REQUIRE(r.N() == 9);
  CHECK(r.x[8] == d.x[8]);
  CHECK(r.y[3] == d.y[3]);
}

TEST_CASE("perfect estimates score zero error") {
  Rng rng(65);
  std::vector<Vec> truth;
  for (int t = 0; t < 20; ++t) truth.push_back(rng.normal_vector(3));
  const StateErrors e = state_errors(truth, truth);
  CHECK(e.mae == 0.0);
  CHECK(e.rmse == 0.0);
}

TEST_CASE("a constant offset on one dimension has unit MAE and zero spread") {
  Rng rng(66);
  std::vector<Vec> truth, est;
  for (int t = 0; t < 20; ++t) {
    truth.push_back(rng.normal_vector(2));
    est.push_back(truth.back() + Vec::Unit(2, 1));
  }
  const StateErrors e = state_errors(est, truth);
  CHECK(std::abs(e.mae_per_dim(1) - 1.0) < 1e-12);
  CHECK(e.std_per_dim(1) < 1e-12);
  CHECK(e.mae_per_dim(0) == 0.0);
}

TEST_CASE("unit Gaussian noise has the half-normal mean absolute error") {
  Rng rng(67);
  std::vector<Vec> truth, est;
  for (int t = 0; t < 10000; ++t) {
    truth.push_back(rng.normal_vector(1));
    est.push_back(truth.back() + rng.normal_vector(1));
  }
  CHECK(std::abs(state_errors(est, truth).mae - std::sqrt(2.0 / M_PI)) < 0.03);
}

TEST_CASE("length mismatch is reported") {
  const std::vector<Vec> a(3, Vec::Zero(2)), b(4, Vec::Zero(2));
  try {
    state_errors(a, b);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kLengthMismatch);
  }
}

TEST_CASE("mode accuracy is label-permutation invariant") {
  const std::vector<int> truth{0, 0, 1, 1, 2, 2, 2};
  const std::vector<int> swapped{2, 2, 0, 0, 1, 1, 0};
  CHECK(std::abs(mode_accuracy(swapped, truth, 3) - 6.0 / 7.0) < 1e-12);
  std::vector<int> big(40), big_truth(40);
  for (int i = 0; i < 40; ++i) {
    big_truth[i] = i % 8;
    big[i] = (i % 8 + 3) % 8;
  }
  CHECK(mode_accuracy(big, big_truth, 8) == 1.0);
}

TEST_CASE("tau alignment undoes a relabeling") {
  Mat tau(3, 3);
  tau << 0.8, 0.1, 0.2, 0.15, 0.7, 0.1, 0.05, 0.2, 0.7;
  DynamicParams phi;
  phi.K = 3;
  phi.L = 1;
  phi.C.assign(3, Mat::Ones(1, 1));
  phi.Q.assign(3, Mat::Ones(1, 1));
  phi.tau = tau;
  const Mat permuted = permute_labels(phi, {1, 2, 0}).tau;
  CHECK(aligned_max_abs_error(permuted, tau) < 1e-15);
}

TEST_CASE("report CSV has the fixed column order and the text marks ranks") {
  MetricsReport rep;
  rep.rows.push_back({"static", 2.0, 1.0, 2.5, NAN, 3.0});
  rep.rows.push_back({"kalman", 1.0, 0.5, 1.2, NAN, 4.0});
  rep.rows.push_back({"gpb2-filter", 1.5, 0.7, 1.8, 0.9, 9.0});
  const std::string csv = report_csv(rep);
  CHECK(csv.rfind("method,mae,std,rmse,mode_acc,us_per_step\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  const std::string txt = report_text(rep);
  CHECK(txt.find("[1]") != std::string::npos);
  CHECK(txt.find("[2]") != std::string::npos);
}

TEST_CASE("synthetic spec checks") {
  SyntheticSpec s;
  s.separation = 0.0;
  const auto warnings = check_spec(s);
  CHECK(std::find(warnings.begin(), warnings.end(), "SEPARATION_ZERO") != warnings.end());
  s.K = 0;
  CHECK_THROWS_AS(check_spec(s), Error);
}

TEST_CASE("synthetic generator is deterministic and valid") {
  SyntheticSpec s;
  s.K = 3;
  s.outlier_rate = 0.1;
  const SyntheticModel a = make_synthetic_model(s, 7), b = make_synthetic_model(s, 7);
  CHECK(validate(a.theta, a.phi).empty());
  CHECK(a.theta.A[2] == b.theta.A[2]);
  const Sequence x = simulate(a, s, 50, 3), y = simulate(b, s, 50, 3);
  CHECK(x.T() == 50);
  for (int t = 0; t < 50; ++t) CHECK(x.y[t] == y.y[t]);
}
