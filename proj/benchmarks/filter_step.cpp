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

// Per-step cost of the causal trackers as the number of modes grows.
// Arguments: K, D (L is fixed at 3).

#include <benchmark/benchmark.h>

#include <memory>

#include "plds/gpb2.hpp"
#include "plds/static_em.hpp"
#include "plds/synthetic.hpp"
#include "plds/variational.hpp"

namespace {

using plds::Sequence;
using plds::SyntheticModel;
using plds::SyntheticSpec;

constexpr int kSteps = 200;

struct Fixture {
  SyntheticModel model;
  Sequence seq;

  Fixture(int K, int D) {
    SyntheticSpec spec;
    spec.K = K;
    spec.D = D;
    spec.L = 3;
    model = plds::make_synthetic_model(spec, 17);
    seq = plds::simulate(model, spec, kSteps, 18);
  }
};

void BM_Gpb2Step(benchmark::State& state) {
  const Fixture f(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const plds::Gpb2Model model(f.model.theta, f.model.phi);
  plds::Gpb2Belief belief = plds::gpb2_initial(model, f.seq.y[0]);
  int t = 1;
  for (auto _ : state) {
    belief = plds::gpb2_step(model, belief, f.seq.y[t]);
    benchmark::DoNotOptimize(belief.weight.data());
    if (++t == kSteps) {
      state.PauseTiming();
      belief = plds::gpb2_initial(model, f.seq.y[0]);
      t = 1;
      state.ResumeTiming();
    }
  }
}

void BM_VariationalFilterPush(benchmark::State& state) {
  const Fixture f(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const plds::VemConfig config;
  auto filter = std::make_unique<plds::VariationalFilter>(f.model.theta, f.model.phi, config);
  int t = 0;
  for (auto _ : state) {
    const plds::FilterOutput out = filter->push(f.seq.y[t]);
    benchmark::DoNotOptimize(out.eta.data());
    if (++t == kSteps) {
      state.PauseTiming();
      filter = std::make_unique<plds::VariationalFilter>(f.model.theta, f.model.phi, config);
      t = 0;
      state.ResumeTiming();
    }
  }
}

void BM_InversePrediction(benchmark::State& state) {
  const Fixture f(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  const plds::InversePredictor predictor(f.model.theta);
  int t = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(predictor.predict(f.seq.y[t]).mean.data());
    t = (t + 1) % kSteps;
  }
}

void Grid(benchmark::internal::Benchmark* b) {
  for (int K : {2, 5, 10, 25}) b->Args({K, 30});
  b->Args({25, 100});
  b->Unit(benchmark::kMicrosecond);
}

}  // namespace

BENCHMARK(BM_Gpb2Step)->Apply(Grid);
BENCHMARK(BM_VariationalFilterPush)->Apply(Grid);
BENCHMARK(BM_InversePrediction)->Apply(Grid);

BENCHMARK_MAIN();
