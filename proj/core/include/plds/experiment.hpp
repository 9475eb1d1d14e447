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

// Method registry and the comparison harness. Only the inference kernel is
// clocked; IO and parsing are outside the timed region.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plds/io.hpp"
#include "plds/metrics.hpp"
#include "plds/synthetic.hpp"
#include "plds/variational.hpp"

namespace plds {

const std::vector<std::string>& method_registry();

/// Throws UNKNOWN_METHOD listing the registry.
void require_method(const std::string& method);

struct TrackConfig {
  VemConfig vem;
};

/// Runs one method over a sequence. Filters stream causally with per-step
/// timing; smoothers report their total time spread evenly over steps.
PosteriorTrack track(const std::string& method, const StaticParams& theta, const DynamicParams& phi,
                     std::span<const Vec> y, const TrackConfig& config);

/// Closest single-mode model: the joint (x, y) Gaussian with the same first
/// two moments as the K-component static mixture, with pi-weighted C and Q.
ModelFile single_mode_projection(const StaticParams& theta, const DynamicParams& phi);

/// Metrics of one track against a ground-truth sequence.
MetricsRow evaluate_track(const std::string& method, const PosteriorTrack& track, const Sequence& truth);

struct CompareConfig {
  SyntheticSpec spec;
  std::optional<ModelFile> model;  // overrides the generated model
  std::uint64_t model_seed = 0;
  std::vector<std::string> methods;
  std::vector<std::uint64_t> seeds;
  int T = 200;
  TrackConfig track;
  std::string out_dir;  // empty: no files
};

struct CompareResult {
  MetricsReport report;
  double time_ratio = 0.0;  // gpb2-filter / var-filter per-step time; NaN if either is missing
  std::vector<std::string> files;
};

CompareResult compare(const CompareConfig& config);

}  // namespace plds
