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
#include "kwsdet/pipeline.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace kws {
namespace {

TEST(ChunkStarts, HalfOverlapWithRightAlignedTail) {
  EXPECT_EQ(chunk_starts(100, 100), std::vector<std::size_t>{0});
  EXPECT_EQ(chunk_starts(40, 100), std::vector<std::size_t>{0});
  EXPECT_EQ(chunk_starts(230, 100), (std::vector<std::size_t>{0, 50, 100, 130}));
  EXPECT_EQ(chunk_starts(200, 100), (std::vector<std::size_t>{0, 50, 100}));
  EXPECT_THROW(chunk_starts(10, 0), ShapeError);
}

PipelineConfig cfg3() {
  PipelineConfig cfg;
  cfg.num_keywords = 3;
  cfg.n_ch = 8;
  cfg.depth = 2;
  return cfg;
}

TEST(DetectClip, UntrainedModelStaysBelowFloorOnAnyLength) {
  const auto cfg = cfg3();
  const auto params = init_params(detection_arch(cfg), 1);
  std::mt19937_64 rng(1);
  for (double seconds : {1.0, 5.11, 12.3}) {
    AudioClip clip{std::vector<double>(static_cast<std::size_t>(seconds * 16000)), 16000};
    for (auto& s : clip.samples) s = testing::uniform(rng, -0.1, 0.1);
    EXPECT_TRUE(detect_clip(params, clip, cfg).empty());
    auto open = cfg;
    open.detect_threshold = 0.0;
    for (const auto& d : detect_clip(params, clip, open)) {
      EXPECT_LT(d.center_s, seconds);
      EXPECT_LT(d.cls, 3);
    }
  }
}

TEST(Evaluation, GroundTruthAsDetections) {
  testing::TempDir dir("pipe");
  SynthSpec spec;
  spec.num_utterances = 6;
  generate_synthetic_corpus(spec, 2, dir.path());
  const auto corpus = load_corpus(dir.path(), cfg3());
  const auto gts = ground_truth(corpus.utterances, 3);
  std::vector<DetectionRecord> recs;
  for (const auto& g : gts) {
    recs.push_back({g.utterance_id, corpus.keywords.name(g.cls), g.cls, 0.9, g.interval.start,
                    g.interval.end, 0.5 * (g.interval.start + g.interval.end)});
  }
  const auto report = evaluate_records(recs, corpus.utterances, corpus.keywords, cfg3());
  EXPECT_DOUBLE_EQ(report.map.map, 1.0);
  EXPECT_EQ(report.frr_at(5.0), 0.0);
  EXPECT_NEAR(report.audio_hours, 6 * 5.11 / 3600, 1e-9);

  recs.push_back({"nobody", "alpha", 0, 0.5, 0, 1, 0.5});
  EXPECT_THROW(evaluate_records(recs, corpus.utterances, corpus.keywords, cfg3()), DataError);
  recs.back() = {corpus.utterances[0].id, "x", 7, 0.5, 0, 1, 0.5};
  EXPECT_THROW(evaluate_records(recs, corpus.utterances, corpus.keywords, cfg3()), DataError);
}

}  // namespace
}  // namespace kws
