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
#include "kwsdet/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace kws {
namespace {

constexpr double kTimeEps = 1e-9;

std::string num(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

Detection make_detection(int cls, double score, double start_s, double end_s,
                         const FrameClock& clock) {
  Detection d;
  d.cls = cls;
  d.score = score;
  d.start_s = start_s;
  d.end_s = end_s;
  d.center_s = 0.5 * (start_s + end_s);
  d.center = clock.frame_of_time(d.center_s);
  d.length = (end_s - start_s) * clock.frames_per_second;
  d.peak = static_cast<int>(std::floor(d.center));
  return d;
}

}  // namespace

WindowPlan plan_windows(double duration_s, double L_in, double L_step, double max_x) {
  if (!(duration_s > 0)) throw ConfigError("duration must be positive, got " + num(duration_s));
  if (!(max_x > 0)) throw ConfigError("MAX_x must be positive, got " + num(max_x));
  if (!(L_step > 0)) throw ConfigError("L_step must be positive, got " + num(L_step));
  if (!(L_in > max_x)) {
    throw ConfigError("constraint L_in > MAX_x violated (" + num(L_in) + " <= " + num(max_x) + ")");
  }
  if (!(L_step < L_in - max_x)) {
    throw ConfigError("constraint L_step < L_in - MAX_x violated (" + num(L_step) +
                      " >= " + num(L_in - max_x) + ")");
  }
  WindowPlan plan{duration_s, L_in, L_step, max_x, {}};
  if (duration_s <= L_in + kTimeEps) {
    plan.windows.push_back({0.0, L_in});
    return plan;
  }
  for (long k = 0;; ++k) {
    const double s = static_cast<double>(k) * L_step;
    if (s + L_in >= duration_s - kTimeEps) break;
    plan.windows.push_back({s, s + L_in});
  }
  plan.windows.push_back({duration_s - L_in, duration_s});
  return plan;
}

bool plan_contains(const WindowPlan& plan, double start_s, double end_s) {
  return std::any_of(plan.windows.begin(), plan.windows.end(), [&](const Window& w) {
    return w.start_s <= start_s + kTimeEps && end_s <= w.end_s + kTimeEps;
  });
}

std::vector<double> default_step_grid() { return {0.1, 0.2, 0.3, 0.4}; }

StepSearch grid_search_step(const std::function<double(double)>& dev_map,
                            const std::vector<double>& steps, double L_in, double max_x) {
  StepSearch out;
  bool have = false;
  double best_score = 0.0;
  for (double step : steps) {
    if (!(step > 0) || !(step < L_in - max_x)) continue;
    const double score = dev_map(step);
    out.steps.push_back(step);
    out.scores.push_back(score);
    if (!have || score > best_score || (score == best_score && step > out.best_step)) {
      have = true;
      best_score = score;
      out.best_step = step;
    }
  }
  if (!have) {
    throw ConfigError("no step in the grid satisfies L_step < L_in - MAX_x (" + num(L_in - max_x) +
                      ")");
  }
  return out;
}

std::vector<Detection> windows_to_detections(const std::vector<Eigen::RowVectorXd>& scores,
                                             const WindowPlan& plan, int num_keywords,
                                             double theta_merge, const FrameClock& clock) {
  if (scores.size() != plan.windows.size()) {
    throw ShapeError("windows_to_detections: one score vector per window expected");
  }
  std::vector<Detection> cands;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = scores[i];
    if (s.size() < num_keywords) throw ShapeError("windows_to_detections: score vector too short");
    Eigen::Index best = 0;
    const double score = s.head(num_keywords).maxCoeff(&best);
    if (score < theta_merge) continue;
    cands.push_back(make_detection(static_cast<int>(best), score, plan.windows[i].start_s,
                                   plan.windows[i].end_s, clock));
  }
  return merge_window_candidates(std::move(cands), clock);
}

std::vector<Detection> merge_window_candidates(std::vector<Detection> candidates,
                                               const FrameClock& clock) {
  std::map<int, std::vector<Detection>> by_class;
  for (auto& d : candidates) by_class[d.cls].push_back(std::move(d));
  std::vector<Detection> out;
  for (auto& [cls, list] : by_class) {
    std::stable_sort(list.begin(), list.end(), [](const Detection& a, const Detection& b) {
      return a.start_s < b.start_s || (a.start_s == b.start_s && a.end_s < b.end_s);
    });
    double s = list[0].start_s, e = list[0].end_s, best = list[0].score;
    for (std::size_t i = 1; i <= list.size(); ++i) {
      if (i < list.size() && list[i].start_s < e) {
        e = std::max(e, list[i].end_s);
        best = std::max(best, list[i].score);
        continue;
      }
      out.push_back(make_detection(cls, best, s, e, clock));
      if (i < list.size()) {
        s = list[i].start_s;
        e = list[i].end_s;
        best = list[i].score;
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.start_s != b.start_s) return a.start_s < b.start_s;
    return a.cls < b.cls;
  });
  return out;
}

int window_label(const std::vector<AlignedWord>& words, const Window& w, int num_keywords) {
  int label = -1;
  double label_len = 0.0;
  double covered = 0.0;
  for (const auto& word : words) {
    const double lo = std::max(word.start_s, w.start_s);
    const double hi = std::min(word.end_s, w.end_s);
    if (hi > lo) covered += hi - lo;
    const bool inside = word.start_s >= w.start_s - kTimeEps && word.end_s <= w.end_s + kTimeEps;
    const double len = word.end_s - word.start_s;
    if (inside && word.cls < num_keywords && len > label_len) {
      label = word.cls;
      label_len = len;
    }
  }
  if (label >= 0) return label;
  return covered >= 0.5 * (w.end_s - w.start_s) ? num_keywords : num_keywords + 1;
}

Matrix window_frames(const Matrix& features, const FrameClock& clock, const Window& w) {
  const int T = static_cast<int>(features.rows());
  if (T == 0) throw ShapeError("window_frames: empty feature matrix");
  int lo = static_cast<int>(std::floor(clock.frame_of_time(w.start_s) + kTimeEps));
  int hi = static_cast<int>(std::ceil(clock.frame_of_time(w.end_s) - kTimeEps));
  lo = std::clamp(lo, 0, T - 1);
  hi = std::clamp(hi, lo + 1, T);
  return features.middleRows(lo, hi - lo);
}

double max_keyword_length_s(const std::vector<Utterance>& utts, int num_keywords) {
  double m = 0.0;
  for (const auto& u : utts) {
    for (const auto& w : u.words) {
      if (w.cls < num_keywords) m = std::max(m, w.end_s - w.start_s);
    }
  }
  return m;
}

}  // namespace kws
