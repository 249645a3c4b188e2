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
#include "kwsdet/decoder.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"

namespace kws {
namespace {

double interval_iou(double a0, double a1, double b0, double b1) {
  const double inter = std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
  const double uni = std::max(a1, b1) - std::min(a0, b0);
  return uni > 0 ? inter / uni : 0.0;
}

}  // namespace

std::vector<Peak> find_peaks(std::span<const double> column, int radius) {
  const int n = static_cast<int>(column.size());
  std::vector<Peak> peaks;
  for (int t = 0; t < n; ++t) {
    const double v = column[static_cast<std::size_t>(t)];
    bool ok = true;
    for (int s = std::max(0, t - radius); s < t && ok; ++s) {
      ok = column[static_cast<std::size_t>(s)] < v;
    }
    for (int s = t + 1; s <= std::min(n - 1, t + radius) && ok; ++s) {
      ok = column[static_cast<std::size_t>(s)] <= v;
    }
    if (!ok) continue;
    int end = t;
    while (end + 1 < n && column[static_cast<std::size_t>(end + 1)] == v) ++end;
    for (int s = end + 1; s <= std::min(n - 1, end + radius) && ok; ++s) {
      ok = column[static_cast<std::size_t>(s)] < v;
    }
    if (ok) peaks.push_back({t, v});
  }
  return peaks;
}

std::vector<Detection> decode(const PredictionTensors& preds, const PipelineConfig& cfg) {
  return decode(preds, cfg, model_clock(cfg));
}

std::vector<Detection> decode(const PredictionTensors& preds, const PipelineConfig& cfg,
                              const FrameClock& clock) {
  const auto T = preds.Y_hat.rows();
  if (preds.L_hat.size() != T || preds.O_hat.size() != T) {
    throw ShapeError("decode: prediction tensors disagree on T");
  }
  struct Candidate {
    int t;
    int c;
    double score;
  };
  std::vector<Candidate> cands;
  std::vector<double> column(static_cast<std::size_t>(T));
  for (Eigen::Index c = 0; c < preds.Y_hat.cols(); ++c) {
    for (Eigen::Index t = 0; t < T; ++t) column[static_cast<std::size_t>(t)] = preds.Y_hat(t, c);
    for (const auto& p : find_peaks(column, cfg.peak_radius)) {
      cands.push_back({p.t, static_cast<int>(c), p.score});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.t != b.t) return a.t < b.t;
    return a.c < b.c;
  });
  if (cands.size() > static_cast<std::size_t>(cfg.max_detections)) {
    cands.resize(static_cast<std::size_t>(cfg.max_detections));
  }
  std::vector<Detection> out;
  for (const auto& cand : cands) {
    if (cand.c >= cfg.num_keywords || !(cand.score > 0.0)) continue;
    Detection d;
    d.cls = cand.c;
    d.score = cand.score;
    d.peak = cand.t;
    d.center = cand.t + preds.O_hat[cand.t];
    d.length = preds.L_hat[cand.t];
    d.start_s = clock.time_of_frame(d.start());
    d.end_s = clock.time_of_frame(d.end());
    d.center_s = clock.time_of_frame(d.center);
    out.push_back(d);
  }
  return out;
}

std::vector<Detection> score_threshold_filter(const std::vector<Detection>& dets,
                                              double threshold) {
  std::vector<Detection> out;
  std::copy_if(dets.begin(), dets.end(), std::back_inserter(out),
               [&](const Detection& d) { return d.score >= threshold; });
  return out;
}

std::vector<Detection> merge_overlapping(std::vector<Detection> dets, double iou) {
  std::stable_sort(dets.begin(), dets.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  std::vector<Detection> kept;
  for (const auto& d : dets) {
    const bool dup = std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
      return k.cls == d.cls && interval_iou(k.start_s, k.end_s, d.start_s, d.end_s) >= iou;
    });
    if (!dup) kept.push_back(d);
  }
  return kept;
}

void write_detections(const std::filesystem::path& path, const std::vector<DetectionRecord>& recs) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write detections: " + path.string());
  for (const auto& r : recs) {
    nlohmann::ordered_json j;
    j["utterance_id"] = r.utterance_id;
    j["keyword"] = r.keyword;
    j["class"] = r.cls;
    j["score"] = r.score;
    j["start_s"] = r.start_s;
    j["end_s"] = r.end_s;
    j["center_s"] = r.center_s;
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("failed writing detections: " + path.string());
}

std::vector<DetectionRecord> read_detections(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open detections: " + path.string());
  std::vector<DetectionRecord> recs;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      DetectionRecord r;
      r.utterance_id = j.at("utterance_id").get<std::string>();
      r.keyword = j.at("keyword").get<std::string>();
      r.cls = j.value("class", -1);
      r.score = j.at("score").get<double>();
      r.start_s = j.at("start_s").get<double>();
      r.end_s = j.at("end_s").get<double>();
      r.center_s = j.value("center_s", 0.5 * (r.start_s + r.end_s));
      recs.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return recs;
}

}  // namespace kws
