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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "kwsdet/parallel.hpp"

namespace kws {
namespace {

constexpr double kChunkMergeIou = 0.5;

AudioClip slice(const AudioClip& clip, std::size_t start, std::size_t n) {
  AudioClip out{std::vector<double>(n, 0.0), clip.sample_rate_hz};
  const std::size_t avail = clip.samples.size() > start ? clip.samples.size() - start : 0;
  std::copy_n(clip.samples.begin() + static_cast<std::ptrdiff_t>(start), std::min(n, avail),
              out.samples.begin());
  return out;
}

std::size_t chunk_samples(const PipelineConfig& cfg) {
  return static_cast<std::size_t>(std::llround(cfg.input_len_s * cfg.sample_rate_hz));
}

// Feature matrices for every chunk with their start times in seconds.
std::vector<std::pair<double, Matrix>> chunk_features(const AudioClip& clip,
                                                      const PipelineConfig& cfg) {
  check_sample_rate(clip, cfg);
  if (clip.samples.empty()) throw DataError("empty audio");
  const std::size_t n = chunk_samples(cfg);
  std::vector<std::pair<double, Matrix>> out;
  if (clip.samples.size() <= n) {
    const AudioClip tiled = normalize_length(clip, cfg.input_len_s, LengthMode::kRepeatPad, 0);
    out.emplace_back(0.0, compute_features(tiled, cfg));
    return out;
  }
  for (std::size_t s : chunk_starts(clip.samples.size(), n)) {
    out.emplace_back(static_cast<double>(s) / clip.sample_rate_hz,
                     compute_features(slice(clip, s, n), cfg));
  }
  return out;
}

DetectionRecord to_record(const std::string& id, const Detection& d, const KeywordSet& keywords) {
  return {id, keywords.name(d.cls), d.cls, d.score, d.start_s, d.end_s, d.center_s};
}

template <typename Fn>
DetectRun run_over(const std::vector<Utterance>& utts, const KeywordSet& keywords, int threads,
                   Fn&& per_clip) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::vector<Detection>> per(utts.size());
  std::vector<double> durations(utts.size());
  parallel_for(utts.size(), threads, [&](std::size_t i) {
    const AudioClip clip = read_wav(utts[i].audio_path);
    durations[i] = clip.duration_s();
    per[i] = per_clip(clip);
  });
  DetectRun run;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    run.audio_s += durations[i];
    for (const auto& d : per[i]) run.records.push_back(to_record(utts[i].id, d, keywords));
  }
  run.process_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return run;
}

}  // namespace

std::vector<std::size_t> chunk_starts(std::size_t num_samples, std::size_t chunk) {
  if (chunk == 0) throw ShapeError("chunk_starts: zero chunk length");
  if (num_samples <= chunk) return {0};
  const std::size_t hop = std::max<std::size_t>(1, chunk / 2);
  std::vector<std::size_t> starts;
  for (std::size_t s = 0; s + chunk < num_samples; s += hop) starts.push_back(s);
  starts.push_back(num_samples - chunk);
  return starts;
}

std::vector<Detection> detect_clip(const DetectorParams& params, const AudioClip& clip,
                                   const PipelineConfig& cfg) {
  const auto chunks = chunk_features(clip, cfg);
  const double duration = clip.duration_s();
  const FrameClock base = model_clock(cfg);
  std::vector<Detection> all;
  for (const auto& [start_s, feats] : chunks) {
    const PredictionTensors preds = forward(params, feats);
    for (auto& d : decode(preds, cfg, FrameClock{base.frames_per_second, start_s})) {
      if (d.center_s < duration) all.push_back(d);
    }
  }
  if (chunks.size() > 1) all = merge_overlapping(std::move(all), kChunkMergeIou);
  return score_threshold_filter(all, cfg.detect_threshold);
}

std::vector<Detection> classify_clip(const DetectorParams& params, const AudioClip& clip,
                                     const PipelineConfig& cfg, double L_in, double L_step,
                                     double max_x) {
  const auto chunks = chunk_features(clip, cfg);
  const double duration = clip.duration_s();
  const FrameClock base = model_clock(cfg);
  std::vector<Detection> candidates;
  for (const auto& [start_s, feats] : chunks) {
    const double span = std::min(cfg.input_len_s, duration);
    const WindowPlan plan = plan_windows(span, L_in, L_step, max_x);
    std::vector<Eigen::RowVectorXd> scores;
    for (const auto& w : plan.windows) {
      scores.push_back(classification_head_forward(params, window_frames(feats, base, w)));
    }
    for (auto d : windows_to_detections(scores, plan, cfg.num_keywords, cfg.merge_threshold, base)) {
      d.start_s += start_s;
      d.end_s += start_s;
      candidates.push_back(d);
    }
  }
  return merge_window_candidates(std::move(candidates), base);
}

DetectRun detect_utterances(const DetectorParams& params, const std::vector<Utterance>& utts,
                            const KeywordSet& keywords, const PipelineConfig& cfg, int threads) {
  return run_over(utts, keywords, threads,
                  [&](const AudioClip& clip) { return detect_clip(params, clip, cfg); });
}

DetectRun classify_utterances(const DetectorParams& params, const std::vector<Utterance>& utts,
                              const KeywordSet& keywords, const PipelineConfig& cfg, double L_in,
                              double L_step, double max_x, int threads) {
  return run_over(utts, keywords, threads, [&](const AudioClip& clip) {
    return classify_clip(params, clip, cfg, L_in, L_step, max_x);
  });
}

double trimmed_window_accuracy(const DetectorParams& params, const std::vector<Utterance>& utts,
                               const PipelineConfig& cfg, double L_in, int threads) {
  const FrameClock clock = model_clock(cfg);
  std::vector<std::vector<int>> pred(utts.size()), truth(utts.size());
  parallel_for(utts.size(), threads, [&](std::size_t i) {
    const auto chunks = chunk_features(read_wav(utts[i].audio_path), cfg);
    const Matrix& feats = chunks.front().second;
    const auto words = words_for_clip(utts[i], 0.0, cfg.input_len_s, cfg);
    const double span = std::min(cfg.input_len_s, utts[i].duration_s);
    for (const auto& w : words) {
      const double c = 0.5 * (w.start_s + w.end_s);
      const double lo = std::clamp(c - L_in / 2, 0.0, std::max(0.0, span - L_in));
      const Window win{lo, lo + L_in};
      Eigen::Index best = 0;
      classification_head_forward(params, window_frames(feats, clock, win)).maxCoeff(&best);
      pred[i].push_back(static_cast<int>(best));
      truth[i].push_back(window_label(words, win, cfg.num_keywords));
    }
  });
  std::vector<int> p, t;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    p.insert(p.end(), pred[i].begin(), pred[i].end());
    t.insert(t.end(), truth[i].begin(), truth[i].end());
  }
  return classification_accuracy(p, t);
}

std::vector<GroundTruth> ground_truth(const std::vector<Utterance>& utts, int num_keywords) {
  std::vector<GroundTruth> out;
  for (const auto& u : utts) {
    for (const auto& w : u.words) {
      if (w.cls < num_keywords) out.push_back({u.id, w.cls, {w.start_s, w.end_s}});
    }
  }
  return out;
}

std::vector<ScoredDetection> scored_detections(const std::vector<DetectionRecord>& recs) {
  std::vector<ScoredDetection> out;
  out.reserve(recs.size());
  for (const auto& r : recs) out.push_back({r.utterance_id, r.cls, r.score, {r.start_s, r.end_s}});
  return out;
}

double total_hours(const std::vector<Utterance>& utts) {
  double s = 0.0;
  for (const auto& u : utts) s += u.duration_s;
  return s / 3600.0;
}

EvalReport evaluate_records(const std::vector<DetectionRecord>& recs,
                            const std::vector<Utterance>& utts, const KeywordSet& keywords,
                            const PipelineConfig& cfg) {
  std::set<std::string> ids;
  for (const auto& u : utts) ids.insert(u.id);
  for (const auto& r : recs) {
    if (!ids.count(r.utterance_id)) {
      throw DataError("detection for utterance '" + r.utterance_id +
                      "' which is not in the ground truth");
    }
    if (r.cls < 0 || r.cls >= keywords.size()) {
      throw DataError("detection class " + std::to_string(r.cls) + " out of range");
    }
  }
  return evaluate(scored_detections(recs), ground_truth(utts, keywords.size()), total_hours(utts),
                  cfg, keywords.names());
}

}  // namespace kws
