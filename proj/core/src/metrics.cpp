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
#include "kwsdet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

namespace kws {
namespace {

std::vector<std::size_t> score_order(const std::vector<ScoredDetection>& dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });
  return order;
}

std::string fmt(double v, int prec = 3) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

}  // namespace

double iou_1d(const Interval& a, const Interval& b) {
  if (!(a.end >= a.start) || !(b.end >= b.start)) {
    throw std::invalid_argument("iou_1d: malformed interval");
  }
  const double inter = std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
  const double uni = a.length() + b.length() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::size_t MatchResult::tp() const {
  return static_cast<std::size_t>(std::count(is_tp.begin(), is_tp.end(), true));
}

MatchResult greedy_match(const std::vector<ScoredDetection>& dets,
                         const std::vector<GroundTruth>& gts, double iou_thr) {
  MatchResult res;
  res.num_gt = gts.size();
  res.order = score_order(dets);
  res.is_tp.assign(dets.size(), false);

  std::unordered_map<std::string, std::vector<std::size_t>> by_utt;
  for (std::size_t g = 0; g < gts.size(); ++g) by_utt[gts[g].utterance_id].push_back(g);
  std::vector<bool> used(gts.size(), false);

  for (std::size_t k = 0; k < res.order.size(); ++k) {
    const auto& d = dets[res.order[k]];
    auto it = by_utt.find(d.utterance_id);
    if (it == by_utt.end()) continue;
    std::size_t best = gts.size();
    double best_iou = -1.0;
    for (std::size_t g : it->second) {
      if (used[g] || gts[g].cls != d.cls) continue;
      const double iou = iou_1d(d.interval, gts[g].interval);
      if (iou >= iou_thr && iou > best_iou) {
        best_iou = iou;
        best = g;
      }
    }
    if (best < gts.size()) {
      used[best] = true;
      res.is_tp[k] = true;
    }
  }
  return res;
}

double average_precision(const std::vector<ScoredDetection>& dets,
                         const std::vector<GroundTruth>& gts, double iou_thr) {
  if (gts.empty()) return 0.0;
  const MatchResult m = greedy_match(dets, gts, iou_thr);
  const std::size_t n = m.order.size();
  std::vector<double> precision(n);
  std::size_t tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    tp += m.is_tp[k] ? 1 : 0;
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
  }
  // Precision envelope: running max from the tail.
  for (std::size_t k = n; k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
  double ap = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (m.is_tp[k]) ap += precision[k];
  }
  return ap / static_cast<double>(gts.size());
}

std::vector<double> default_iou_thresholds() {
  std::vector<double> t;
  for (int i = 1; i <= 19; ++i) t.push_back(0.05 * i);
  return t;
}

MeanApResult mean_ap(const std::vector<ScoredDetection>& dets, const std::vector<GroundTruth>& gts,
                     const std::vector<double>& thresholds) {
  MeanApResult r;
  r.thresholds = thresholds;
  std::set<int> classes;
  for (const auto& g : gts) classes.insert(g.cls);
  r.classes.assign(classes.begin(), classes.end());
  r.per_threshold.assign(thresholds.size(), 0.0);
  if (r.classes.empty() || thresholds.empty()) return r;

  for (int c : r.classes) {
    std::vector<ScoredDetection> cd;
    std::vector<GroundTruth> cg;
    for (const auto& d : dets) {
      if (d.cls == c) cd.push_back(d);
    }
    for (const auto& g : gts) {
      if (g.cls == c) cg.push_back(g);
    }
    std::vector<double> aps;
    for (double thr : thresholds) aps.push_back(average_precision(cd, cg, thr));
    r.per_class.push_back(std::move(aps));
  }
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    double s = 0.0;
    for (const auto& aps : r.per_class) s += aps[i];
    r.per_threshold[i] = s / static_cast<double>(r.classes.size());
  }
  r.map = std::accumulate(r.per_threshold.begin(), r.per_threshold.end(), 0.0) /
          static_cast<double>(thresholds.size());
  return r;
}

std::vector<FrrPoint> frr_at_fa(const std::vector<ScoredDetection>& dets,
                                const std::vector<GroundTruth>& gts, double audio_hours,
                                const std::vector<double>& fa_targets, double match_iou) {
  if (!(audio_hours > 0)) throw std::invalid_argument("frr_at_fa: audio_hours must be > 0");
  const MatchResult m = greedy_match(dets, gts, match_iou);
  const double num_gt = static_cast<double>(gts.size());
  auto frr_of = [&](std::size_t tp) { return num_gt > 0 ? 1.0 - tp / num_gt : 0.0; };

  std::vector<FrrPoint> out;
  for (double target : fa_targets) {
    out.push_back({target, frr_of(0), 0.0, std::numeric_limits<double>::infinity()});
  }
  // Operating points sit after each group of equal scores.
  std::size_t tp = 0;
  std::size_t fp = 0;
  const std::size_t n = m.order.size();
  for (std::size_t k = 0; k < n; ++k) {
    (m.is_tp[k] ? tp : fp) += 1;
    const double score = dets[m.order[k]].score;
    if (k + 1 < n && dets[m.order[k + 1]].score == score) continue;
    const double fa = static_cast<double>(fp) / audio_hours;
    for (auto& p : out) {
      if (fa <= p.fa_target) {
        p.frr = frr_of(tp);
        p.fa_per_hour = fa;
        p.threshold = score;
      }
    }
  }
  return out;
}

double rtf(double process_time_s, double audio_time_s) {
  if (!(audio_time_s > 0)) throw std::invalid_argument("rtf: audio time must be > 0");
  return process_time_s / audio_time_s;
}

double classification_accuracy(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("classification_accuracy: length mismatch");
  }
  if (truth.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

double EvalReport::frr_at(double fa_target) const {
  for (const auto& p : frr) {
    if (p.fa_target == fa_target) return p.frr;
  }
  throw std::out_of_range("no FRR computed at FA/h " + fmt(fa_target, 1));
}

EvalReport evaluate(const std::vector<ScoredDetection>& dets, const std::vector<GroundTruth>& gts,
                    double audio_hours, const PipelineConfig& cfg,
                    std::vector<std::string> class_names) {
  EvalReport r;
  r.class_names = std::move(class_names);
  r.map = mean_ap(dets, gts);
  auto at = [&](double thr) {
    for (std::size_t i = 0; i < r.map.thresholds.size(); ++i) {
      if (std::abs(r.map.thresholds[i] - thr) < 1e-9) return r.map.per_threshold[i];
    }
    return 0.0;
  };
  r.ap5 = at(0.05);
  r.ap50 = at(0.5);
  r.ap75 = at(0.75);
  r.frr = frr_at_fa(dets, gts, audio_hours, {5.0, 15.0, 25.0}, cfg.frr_match_iou);
  for (double thr : r.map.thresholds) {
    const MatchResult m = greedy_match(dets, gts, thr);
    r.counts.push_back({thr, m.tp(), m.fp(), m.fn()});
  }
  r.audio_hours = audio_hours;
  r.num_detections = dets.size();
  r.num_ground_truth = gts.size();
  return r;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["AP@5"] = ap5;
  j["AP@50"] = ap50;
  j["AP@75"] = ap75;
  j["mAP"] = map.map;
  for (const auto& p : frr) {
    j["FRR@" + std::to_string(static_cast<int>(p.fa_target))] = p.frr;
  }
  j["RTF"] = rtf ? nlohmann::ordered_json(*rtf) : nlohmann::ordered_json(nullptr);
  j["classification_accuracy"] = classification_accuracy
                                     ? nlohmann::ordered_json(*classification_accuracy)
                                     : nlohmann::ordered_json(nullptr);
  j["iou_thresholds"] = map.thresholds;
  j["ap_per_threshold"] = map.per_threshold;
  nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < map.classes.size(); ++i) {
    const int c = map.classes[i];
    const std::string name = c >= 0 && static_cast<std::size_t>(c) < class_names.size()
                                 ? class_names[static_cast<std::size_t>(c)]
                                 : std::to_string(c);
    per_class[name] = map.per_class[i];
  }
  j["ap_per_class"] = per_class;
  nlohmann::ordered_json frr_points = nlohmann::ordered_json::array();
  for (const auto& p : frr) {
    nlohmann::ordered_json e;
    e["fa_target_per_hour"] = p.fa_target;
    e["frr"] = p.frr;
    e["fa_per_hour"] = p.fa_per_hour;
    e["score_threshold"] =
        std::isfinite(p.threshold) ? nlohmann::ordered_json(p.threshold) : nlohmann::ordered_json(nullptr);
    frr_points.push_back(e);
  }
  j["frr_operating_points"] = frr_points;
  nlohmann::ordered_json counts_j = nlohmann::ordered_json::array();
  for (const auto& c : counts) {
    counts_j.push_back({{"iou", c.iou}, {"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}});
  }
  j["counts"] = counts_j;
  j["audio_hours"] = audio_hours;
  j["num_detections"] = num_detections;
  j["num_ground_truth"] = num_ground_truth;
  j["metadata"] = metadata;
  return j.dump(2) + "\n";
}

std::string EvalReport::to_table(const std::string& model_name) const {
  const std::vector<std::string> head = {"Model",  "AP@5",   "AP@75",    "mAP", "FRR@5",
                                         "FRR@15", "FRR@25", "Accuracy", "RTF"};
  auto frr_or = [&](double fa) {
    for (const auto& p : frr) {
      if (p.fa_target == fa) return fmt(p.frr);
    }
    return std::string("-");
  };
  const std::vector<std::string> row = {
      model_name,   fmt(ap5),     fmt(ap75),
      fmt(map.map), frr_or(5.0),  frr_or(15.0),
      frr_or(25.0), classification_accuracy ? fmt(*classification_accuracy) : "N/A",
      rtf ? fmt(*rtf) : "N/A"};
  std::vector<std::size_t> width(head.size());
  for (std::size_t i = 0; i < head.size(); ++i) width[i] = std::max(head[i].size(), row[i].size());
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i == 0) {
        out << cells[i] << std::string(width[i] - cells[i].size(), ' ');
      } else {
        out << "  " << std::string(width[i] - cells[i].size(), ' ') << cells[i];
      }
    }
    out << '\n';
  };
  line(head);
  line(row);
  return out.str();
}

}  // namespace kws
