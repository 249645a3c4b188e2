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
#ifndef KWSDET_PIPELINE_HPP_
#define KWSDET_PIPELINE_HPP_

#include <string>
#include <vector>

#include "kwsdet/baseline.hpp"
#include "kwsdet/dataset.hpp"
#include "kwsdet/decoder.hpp"
#include "kwsdet/metrics.hpp"
#include "kwsdet/model.hpp"

namespace kws {

/// Chunk start samples for a clip: a single tiled chunk when the audio is
/// no longer than input_len_s, else chunks with 50% overlap and a final
/// chunk right-aligned to the end.
std::vector<std::size_t> chunk_starts(std::size_t num_samples, std::size_t chunk_samples);

/// Detector inference on audio of any length. Detections from overlapping
/// chunks are merged; those centred past the real end of the audio are
/// dropped; scores below cfg.detect_threshold are removed.
std::vector<Detection> detect_clip(const DetectorParams& params, const AudioClip& clip,
                                   const PipelineConfig& cfg);

/// Sliding-window classifier inference with union merging of confident
/// windows (threshold cfg.merge_threshold).
std::vector<Detection> classify_clip(const DetectorParams& params, const AudioClip& clip,
                                     const PipelineConfig& cfg, double L_in, double L_step,
                                     double max_x);

struct DetectRun {
  std::vector<DetectionRecord> records;
  double audio_s = 0.0;
  double process_s = 0.0;
};

/// Detector over a set of utterances; records follow the input order.
DetectRun detect_utterances(const DetectorParams& params, const std::vector<Utterance>& utts,
                            const KeywordSet& keywords, const PipelineConfig& cfg,
                            int threads = 1);

DetectRun classify_utterances(const DetectorParams& params, const std::vector<Utterance>& utts,
                              const KeywordSet& keywords, const PipelineConfig& cfg, double L_in,
                              double L_step, double max_x, int threads = 1);

/// Accuracy of the window classifier on windows of length L_in centred on
/// every word of `utts`, labelled as in training.
double trimmed_window_accuracy(const DetectorParams& params, const std::vector<Utterance>& utts,
                               const PipelineConfig& cfg, double L_in, int threads = 1);

/// Keyword occurrences (class < C) as metric ground truth, in seconds.
std::vector<GroundTruth> ground_truth(const std::vector<Utterance>& utts, int num_keywords);
std::vector<ScoredDetection> scored_detections(const std::vector<DetectionRecord>& recs);
double total_hours(const std::vector<Utterance>& utts);

/// Throws DataError when a detection names an utterance that has no
/// ground-truth entry.
EvalReport evaluate_records(const std::vector<DetectionRecord>& recs,
                            const std::vector<Utterance>& utts, const KeywordSet& keywords,
                            const PipelineConfig& cfg);

}  // namespace kws

#endif  // KWSDET_PIPELINE_HPP_
