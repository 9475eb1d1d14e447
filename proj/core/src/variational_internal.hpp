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

#pragma once

#include "plds/model.hpp"

namespace plds::detail {

struct ModelCaches {
  ModelCaches(const StaticParams& theta, const DynamicParams& phi) : obs(theta), dyn(phi) {}
  ObservationCache obs;
  DynamicsCache dyn;
};

/// z-dependent expected log-density at step t. prev_* are ignored at t = 0.
void score_row(const StaticParams& theta, const DynamicParams& phi, const ModelCaches& c, int t, const Vec& y,
               const Vec& eta, const Mat& V, const Vec* eta_prev, const Mat* V_prev, const Mat* W,
               double* out);

/// rho floored at `floor` and renormalized.
Vec floored(const Vec& rho, double floor);

struct NodeAggregates {
  Mat unary_precision;
  Vec unary_shift;
  Mat Qbar_inv, Rbar, Sbar_inv;  // empty at t = 0
};

/// Mixed potentials at step t; the initial-state prior is folded into the
/// unary terms at t = 0.
NodeAggregates node_aggregates(const StaticParams& theta, const ModelCaches& c, int t, const Vec& y,
                               const Vec& rho);

}  // namespace plds::detail
