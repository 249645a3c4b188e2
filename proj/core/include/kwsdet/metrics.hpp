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
#ifndef KWSDET_METRICS_HPP_
#define KWSDET_METRICS_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kwsdet/config.hpp"

namespace kws {

struct Interval {
  double start = 0.0;
  double end = 0.0;
  double length() const { return end - start; }
};

/// |a n b| / |a u b|; 0 when disjoint or both degenerate. Throws
/// std::invalid_argument on reversed intervals.
double iou_1d(const Interval& a, const Interval& b);

struct ScoredDetection {
  std::string utterance_id;
  int cls = 0;
  double score = 0.0;
  Interval interval;
};

struct GroundTruth {
  std::string utterance_id;
  int cls = 0;
  Interval interval;
};

/// Outcome of greedy matching in descending score order (stable for equal
/// scores). Each detection takes the unmatched ground truth of the same
/// utterance and class with the highest IoU >= threshold (earliest on
/// ties). `order` lists detection indices in processing order.
struct MatchResult {
  std::vector<std::size_t> order;
  std::vector<bool> is_tp;  // indexed like `order`
  std::size_t num_gt = 0;
  std::size_t tp() const;
  std::size_t fp() const { return is_tp.size() - tp(); }
  std::size_t fn() const { return num_gt - tp(); }
};

MatchResult greedy_match(const std::vector<ScoredDetection>& dets,
                         const std::vector<GroundTruth>& gts, double iou_thr);

/// Area under the precision envelope (all-point interpolation). Returns 0
/// when there is no ground truth.
double average_precision(const std::vector<ScoredDetection>& dets,
                         const std::vector<GroundTruth>& gts, double iou_thr);

/// 0.05, 0.10, ..., 0.95.
std::vector<double> default_iou_thresholds();

struct MeanApResult {
  double map = 0.0;
  std::vector<double> thresholds;
  std::vector<double> per_threshold;           // class-mean AP
  std::vector<int> classes;                    // classes with ground truth
  std::vector<std::vector<double>> per_class;  // [class][threshold]
};

/// Mean over thresholds of the mean AP over classes present in `gts`.
MeanApResult mean_ap(const std::vector<ScoredDetection>& dets, const std::vector<GroundTruth>& gts,
                     const std::vector<double>& thresholds = default_iou_thresholds());

struct FrrPoint {
  double fa_target = 0.0;
  double frr = 1.0;
  double fa_per_hour = 0.0;  // at the chosen operating point
  double threshold = 0.0;    // +inf when no detection is kept
};

/// Sweeps the score threshold from high to low and, for each FA/h budget,
/// reports the lowest FRR reached while FA/h stays within budget.
std::vector<FrrPoint> frr_at_fa(const std::vector<ScoredDetection>& dets,
                                const std::vector<GroundTruth>& gts, double audio_hours,
                                const std::vector<double>& fa_targets = {5.0, 15.0, 25.0},
                                double match_iou = 0.5);

double rtf(double process_time_s, double audio_time_s);
double classification_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth);

struct MatchCounts {
  double iou = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct EvalReport {
  std::vector<std::string> class_names;
  MeanApResult map;
  double ap5 = 0.0;
  double ap50 = 0.0;
  double ap75 = 0.0;
  std::vector<FrrPoint> frr;
  std::vector<MatchCounts> counts;
  std::optional<double> rtf;
  std::optional<double> classification_accuracy;
  double audio_hours = 0.0;
  std::size_t num_detections = 0;
  std::size_t num_ground_truth = 0;
  std::map<std::string, std::string> metadata;

  double frr_at(double fa_target) const;
  std::string to_json() const;
  /// Plain-text table: AP@5 AP@75 mAP FRR@5 FRR@15 FRR@25 Acc RTF.
  std::string to_table(const std::string& model_name = "model") const;
};

EvalReport evaluate(const std::vector<ScoredDetection>& dets, const std::vector<GroundTruth>& gts,
                    double audio_hours, const PipelineConfig& cfg,
                    std::vector<std::string> class_names = {});

}  // namespace kws

#endif  // KWSDET_METRICS_HPP_
