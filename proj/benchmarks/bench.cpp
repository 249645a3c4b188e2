/* Copyright 2026 The kwsdet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include <benchmark/benchmark.h>

#include <cmath>
#include <random>

#include "kwsdet/dataset.hpp"
#include "kwsdet/decoder.hpp"
#include "kwsdet/encoder.hpp"
#include "kwsdet/features.hpp"
#include "kwsdet/losses.hpp"
#include "kwsdet/model.hpp"

namespace {

kws::AudioClip noise_clip(double seconds) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 0.1);
  kws::AudioClip clip;
  clip.samples.resize(static_cast<std::size_t>(seconds * clip.sample_rate_hz));
  for (double& s : clip.samples) s = g(rng);
  return clip;
}

kws::PipelineConfig small_config() {
  kws::PipelineConfig cfg;
  cfg.num_keywords = 3;
  cfg.n_ch = 32;
  cfg.depth = 3;
  return cfg;
}

void BM_Features(benchmark::State& state) {
  const kws::PipelineConfig cfg;
  const auto clip = noise_clip(cfg.input_len_s);
  for (auto _ : state) benchmark::DoNotOptimize(kws::compute_features(clip, cfg));
}
BENCHMARK(BM_Features)->Unit(benchmark::kMillisecond);

void BM_Forward(benchmark::State& state) {
  auto cfg = small_config();
  cfg.n_ch = static_cast<int>(state.range(0));
  const auto params = kws::init_params(kws::detection_arch(cfg), 3);
  const auto x = kws::compute_features(noise_clip(cfg.input_len_s), cfg);
  for (auto _ : state) benchmark::DoNotOptimize(kws::forward(params, x));
}
BENCHMARK(BM_Forward)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
  const auto cfg = small_config();
  const auto params = kws::init_params(kws::detection_arch(cfg), 3);
  const auto x = kws::compute_features(noise_clip(cfg.input_len_s), cfg);
  std::vector<kws::AlignedWord> words;
  for (int i = 0; i < 6; ++i) {
    kws::AlignedWord w;
    w.cls = i % (cfg.num_keywords + 1);
    w.loc_pc = 10.5 + 20.0 * i;
    w.len = 9.0;
    words.push_back(w);
  }
  const auto targets = kws::encode_targets(words, cfg);
  for (auto _ : state) {
    kws::ForwardCache cache;
    const auto preds = kws::forward(params, x, &cache);
    kws::PredictionGrads g;
    kws::detector_loss(preds, targets, cfg, &g);
    benchmark::DoNotOptimize(kws::backward(params, cache, g.dY_hat, g.dL_hat, g.dO_hat));
  }
}
BENCHMARK(BM_ForwardBackward)->Unit(benchmark::kMillisecond);

void BM_Decode(benchmark::State& state) {
  const auto cfg = small_config();
  const int T = cfg.temporal_resolution;
  kws::PredictionTensors p;
  p.Y_hat.resize(T, cfg.heat_channels());
  for (int t = 0; t < T; ++t) {
    for (int c = 0; c < cfg.heat_channels(); ++c) p.Y_hat(t, c) = 0.5 + 0.5 * std::sin(0.37 * t + c);
  }
  p.L_hat = kws::Vector::Constant(T, 8.0);
  p.O_hat = kws::Vector::Constant(T, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(kws::decode(p, cfg));
}
BENCHMARK(BM_Decode);

}  // namespace

BENCHMARK_MAIN();
