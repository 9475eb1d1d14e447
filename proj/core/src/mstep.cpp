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

#include "plds/mstep.hpp"

#include <cmath>

#include "plds/error.hpp"

namespace plds {
namespace {

Mat residual_moment(const TransitionStats& s, int k, const Mat& C) {
  const Mat cross = C * s.S_cross[k].transpose();
  return symmetrize(s.S_cur[k] - cross - cross.transpose() + C * s.S_prev[k] * C.transpose());
}

}  // namespace

TransitionStats TransitionStats::zeros(int K, int L) {
  TransitionStats s;
  s.K = K;
  s.L = L;
  s.weight = Vec::Zero(K);
  s.S_cur.assign(K, Mat::Zero(L, L));
  s.S_prev.assign(K, Mat::Zero(L, L));
  s.S_cross.assign(K, Mat::Zero(L, L));
  s.transitions = Mat::Zero(K, K);
  return s;
}

TransitionStats& TransitionStats::operator+=(const TransitionStats& o) {
  if (o.K != K || o.L != L) throw Error(ErrorCode::kDimensionMismatch, "transition statistics differ in shape");
  weight += o.weight;
  for (int k = 0; k < K; ++k) {
    S_cur[k] += o.S_cur[k];
    S_prev[k] += o.S_prev[k];
    S_cross[k] += o.S_cross[k];
  }
  transitions += o.transitions;
  return *this;
}

MStepResult m_step(const TransitionStats& stats, const DynamicParams& previous, const MStepConfig& config) {
  MStepResult out;
  out.phi = previous;
  DynamicParams& phi = out.phi;
  const int K = stats.K;

  for (int k = 0; k < K; ++k) {
    if (stats.weight(k) < config.starvation_eps) {
      out.starved.push_back(k);
      continue;
    }
    if (config.update_C) {
      const SpdFactor prev(stats.S_prev[k], false, "sum of E[x x^T] for C update");
      phi.C[k] = prev.solve(stats.S_cross[k].transpose()).transpose();
    }
    phi.Q[k] = make_spd(residual_moment(stats, k, phi.C[k]) / stats.weight(k));
  }

  for (int j = 0; j < K; ++j) {
    const double departures = stats.transitions.col(j).sum();
    if (departures < config.starvation_eps) continue;
    phi.tau.col(j) = stats.transitions.col(j) / departures;
  }
  return out;
}

double transition_objective(const TransitionStats& stats, const DynamicParams& phi) {
  double q = 0.0;
  for (int k = 0; k < stats.K; ++k) {
    const SpdFactor qf(phi.Q[k], false, "Q");
    const Mat e = residual_moment(stats, k, phi.C[k]);
    q += 0.5 * (-stats.weight(k) * qf.log_det() - qf.solve(e).trace());
  }
  for (int j = 0; j < stats.K; ++j) {
    for (int i = 0; i < stats.K; ++i) {
      const double n = stats.transitions(i, j);
      if (n > 0.0) q += n * std::log(phi.tau(i, j));
    }
  }
  return q;
}

}  // namespace plds
