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
#ifndef KWSDET_DECODER_HPP_
#define KWSDET_DECODER_HPP_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "kwsdet/config.hpp"
#include "kwsdet/encoder.hpp"
#include "kwsdet/features.hpp"

namespace kws {

/// A decoded keyword. Frame quantities are relative to the clip; seconds
/// include the clip's origin in the source audio.
struct Detection {
  int cls = 0;
  double score = 0.0;
  int peak = 0;         // integer frame of the heatmap peak
  double center = 0.0;  // peak + offset
  double length = 0.0;
  double start_s = 0.0;
  double end_s = 0.0;
  double center_s = 0.0;

  double start() const { return center - length / 2; }
  double end() const { return center + length / 2; }
};

struct Peak {
  int t = 0;
  double score = 0.0;
};

/// Local maxima of a heatmap column: strictly above every value within
/// `radius` on the left, not below those on the right, and strictly above
/// whatever follows an equal-valued plateau. Plateaus report their leftmost
/// index; out-of-range neighbours count as -inf.
std::vector<Peak> find_peaks(std::span<const double> column, int radius = 1);

/// Peaks over all heatmap channels (unknown included), ranked by score with
/// ties by (lower t, lower class), cut to M, then unknown-class and
/// zero-score entries dropped. No suppression between neighbours.
std::vector<Detection> decode(const PredictionTensors& preds, const PipelineConfig& cfg,
                              const FrameClock& clock);
std::vector<Detection> decode(const PredictionTensors& preds, const PipelineConfig& cfg);

/// Keeps detections with score >= threshold, preserving order.
std::vector<Detection> score_threshold_filter(const std::vector<Detection>& dets,
                                              double threshold);

/// Cross-chunk merge: among same-class detections whose seconds intervals
/// overlap with IoU >= iou, keep the highest score. Output sorted by
/// descending score.
std::vector<Detection> merge_overlapping(std::vector<Detection> dets, double iou = 0.5);

/// One line of the detection file.
struct DetectionRecord {
  std::string utterance_id;
  std::string keyword;
  int cls = 0;
  double score = 0.0;
  double start_s = 0.0;
  double end_s = 0.0;
  double center_s = 0.0;
};

/// JSON lines: {"utterance_id","keyword","class","score","start_s","end_s","center_s"}.
void write_detections(const std::filesystem::path& path, const std::vector<DetectionRecord>& recs);
std::vector<DetectionRecord> read_detections(const std::filesystem::path& path);

}  // namespace kws

#endif  // KWSDET_DECODER_HPP_
