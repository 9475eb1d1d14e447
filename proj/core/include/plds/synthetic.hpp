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

// Random P-LDS instances for experiments. Components sit at distinct
// initial-state centres and differ in their observation offsets, so the
// active mode is identifiable from y when `separation` is large relative
// to `obs_noise`.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plds/model.hpp"
#include "plds/static_em.hpp"

namespace plds {

struct SyntheticSpec {
  int K = 2;
  int D = 6;
  int L = 2;
  double separation = 5.0;    // distance scale between component centres and offsets
  double obs_noise = 0.5;     // observation noise standard deviation
  double proc_noise = 0.1;    // process noise standard deviation
  double stay = 0.95;         // diagonal of tau
  double prior_scale = 1.0;   // initial-state standard deviation
  double outlier_rate = 0.0;  // fraction of frames replaced by gross outliers
  double outlier_scale = 20.0;
  bool sigma_diagonal = false;
};

struct SyntheticModel {
  StaticParams theta;
  DynamicParams phi;
};

/// Throws INVALID_PARAMETERS for unusable specs. Returns warnings such as
/// SEPARATION_ZERO for specs that are legal but degenerate.
std::vector<std::string> check_spec(const SyntheticSpec& spec);

SyntheticModel make_synthetic_model(const SyntheticSpec& spec, std::uint64_t seed);

/// Samples from the model, then replaces a fraction `outlier_rate` of the
/// observations by y_t + outlier_scale * N(0, I). Ground truth x, z are kept.
Sequence simulate(const SyntheticModel& model, const SyntheticSpec& spec, int T, std::uint64_t seed);

/// Paired draws z ~ pi, x ~ N(gamma_z, Gamma_z), y ~ N(A_z x + b_z, Sigma_z).
TrainingSet sample_training_set(const StaticParams& theta, int N, std::uint64_t seed);

}  // namespace plds
