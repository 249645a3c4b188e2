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
#ifndef KWSDET_BASELINE_HPP_
#define KWSDET_BASELINE_HPP_

#include <functional>
#include <vector>

#include "kwsdet/common.hpp"
#include "kwsdet/dataset.hpp"
#include "kwsdet/decoder.hpp"
#include "kwsdet/features.hpp"

namespace kws {

struct Window {
  double start_s = 0.0;
  double end_s = 0.0;
};

struct WindowPlan {
  double duration_s = 0.0;
  double L_in = 0.0;
  double L_step = 0.0;
  double max_x = 0.0;
  std::vector<Window> windows;
};

/// Windows of length L_in every L_step seconds, plus a final window
/// right-aligned at the end of the audio. Requires L_in > max_x and
/// L_step < L_in - max_x, which makes every interval no longer than max_x
/// fall entirely inside some window. Throws ConfigError naming the
/// violated constraint.
WindowPlan plan_windows(double duration_s, double L_in, double L_step, double max_x);

/// True when `inner` lies within some window (tolerance 1e-9 s).
bool plan_contains(const WindowPlan& plan, double start_s, double end_s);

std::vector<double> default_step_grid();  // 0.1 .. 0.4 s

struct StepSearch {
  double best_step = 0.0;
  std::vector<double> steps;  // admissible steps that were scored
  std::vector<double> scores;
};

/// Scores each admissible step with `dev_map` and returns the best; ties go
/// to the larger step. Throws ConfigError if no step satisfies the plan
/// constraints.
StepSearch grid_search_step(const std::function<double(double)>& dev_map,
                            const std::vector<double>& steps, double L_in, double max_x);

/// Per-window class scores are laid out as C keywords, unknown, background.
/// A window whose best keyword score reaches theta_merge becomes a
/// candidate spanning the window; overlapping same-class candidates then
/// merge (union interval, max score).
std::vector<Detection> windows_to_detections(const std::vector<Eigen::RowVectorXd>& scores,
                                             const WindowPlan& plan, int num_keywords,
                                             double theta_merge,
                                             const FrameClock& clock = FrameClock{});

/// The merge step on its own. Idempotent; output sorted by descending
/// score, then start time, then class.
std::vector<Detection> merge_window_candidates(std::vector<Detection> candidates,
                                               const FrameClock& clock = FrameClock{});

/// Training label of a window given clip-relative words (seconds): the
/// keyword it fully contains, else unknown when words cover at least half
/// of it, else background.
int window_label(const std::vector<AlignedWord>& words, const Window& w, int num_keywords);

/// Feature rows overlapping the window (at least one row).
Matrix window_frames(const Matrix& features, const FrameClock& clock, const Window& w);

/// Longest keyword (class < num_keywords) in seconds across utterances.
double max_keyword_length_s(const std::vector<Utterance>& utts, int num_keywords);

}  // namespace kws

#endif  // KWSDET_BASELINE_HPP_
