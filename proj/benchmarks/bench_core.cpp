// Copyright 2026 The ffsim Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "ffsim/data_io.hpp"
#include "ffsim/meta.hpp"
#include "ffsim/nn.hpp"
#include "ffsim/rng.hpp"

namespace {

using namespace ffsim;

struct Fixture {
  ModelConfig config;
  MlpModel model;
  Batch batch;
  ParamVector params;

  explicit Fixture(bool batchnorm)
      : config{.input_dim = 256, .hidden_dims = {32, 32}, .num_classes = 2,
               .batchnorm_enabled = batchnorm},
        model(config) {
    Rng rng(7);
    params = init_params(config, rng);
    batch.input_dim = config.input_dim;
    for (int r = 0; r < 20; ++r) {
      for (int j = 0; j < config.input_dim; ++j) batch.inputs.push_back(rng.uniform(-1, 1));
      batch.labels.push_back(static_cast<int>(rng.uniform_int(2)));
    }
  }
};

void BM_Grad(benchmark::State& state) {
  Fixture f(state.range(0) != 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(grad(f.params, f.config, f.batch));
  }
}
BENCHMARK(BM_Grad)->Arg(0)->Arg(1);

void BM_Hvp(benchmark::State& state) {
  Fixture f(state.range(0) != 0);
  ParamVector v(f.params.size(), 0.01);
  for (auto _ : state) {
    benchmark::DoNotOptimize(hvp(f.params, f.config, f.batch, v));
  }
}
BENCHMARK(BM_Hvp)->Arg(0)->Arg(1);

void BM_MetaGradient(benchmark::State& state) {
  Fixture f(false);
  Rng rng(11);
  MetaParams meta = init_meta_params(f.config, rng);
  SyntheticSpec spec;
  spec.resolution = 16;
  LabeledDataset ds = generate_synthetic(spec);
  Rng ep_rng(3);
  Episode ep = sample_episode(ds, EpisodeSpec{}, ep_rng);
  MetaConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(meta_gradient(meta, f.model, ep, cfg));
  }
}
BENCHMARK(BM_MetaGradient);

}  // namespace

BENCHMARK_MAIN();
