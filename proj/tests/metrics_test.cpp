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

#include <gtest/gtest.h>

#include "json.hpp"
#include "metric_oracles.hpp"

namespace kws {
namespace {

ScoredDetection sd(double score, double s, double e, int cls = 0, const std::string& utt = "u") {
  return {utt, cls, score, {s, e}};
}
GroundTruth gt(double s, double e, int cls = 0, const std::string& utt = "u") {
  return {utt, cls, {s, e}};
}

TEST(Iou, Examples) {
  EXPECT_DOUBLE_EQ(iou_1d({0, 2}, {0, 2}), 1.0);
  EXPECT_DOUBLE_EQ(iou_1d({0, 2}, {1, 3}), 1.0 / 3.0);
  EXPECT_EQ(iou_1d({0, 1}, {2, 3}), 0.0);
  EXPECT_EQ(iou_1d({1, 1}, {1, 1}), 0.0);
  EXPECT_THROW(iou_1d({2, 1}, {0, 1}), std::invalid_argument);
}

TEST(Iou, SymmetricBoundedAndOneOnlyWhenEqual) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 2000; ++i) {
    const double a0 = testing::uniform(rng, 0, 5), b0 = testing::uniform(rng, 0, 5);
    const Interval a{a0, a0 + testing::uniform(rng, 0.01, 2)};
    const Interval b{b0, b0 + testing::uniform(rng, 0.01, 2)};
    const double v = iou_1d(a, b);
    ASSERT_EQ(v, iou_1d(b, a));
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 1.0);
    ASSERT_LT(v, 1.0);
    ASSERT_DOUBLE_EQ(iou_1d(a, a), 1.0);
  }
}

TEST(AveragePrecision, Examples) {
  const std::vector<GroundTruth> g = {gt(0, 1), gt(2, 3), gt(4, 5)};
  EXPECT_DOUBLE_EQ(average_precision({sd(0.2, 0, 1), sd(0.9, 2, 3), sd(0.5, 4, 5)}, g, 0.5), 1.0);
  EXPECT_EQ(average_precision({}, g, 0.5), 0.0);
  EXPECT_EQ(average_precision({sd(0.2, 0, 1)}, {}, 0.5), 0.0);
  // TP, FP, TP, TP: the envelope lifts the precision at recall 2/3 to 3/4.
  const std::vector<ScoredDetection> d = {sd(0.9, 0, 1), sd(0.8, 7, 8), sd(0.7, 2, 3), sd(0.6, 4, 5)};
  const double ap = average_precision(d, g, 0.5);
  EXPECT_NEAR(ap, (1.0 + 0.75 + 0.75) / 3.0, 1e-15);
  EXPECT_NEAR(ap, testing::oracle_ap(d, g, 0.5), 1e-15);
}

TEST(AveragePrecision, InvariantUnderMonotoneScoreTransform) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 300; ++i) {
    auto inst = testing::random_metric_instance(rng, 15, 8);
    auto moved = inst.dets;
    for (auto& d : moved) d.score = std::exp(3 * d.score) - 0.5;
    ASSERT_EQ(average_precision(inst.dets, inst.gts, 0.3), average_precision(moved, inst.gts, 0.3));
  }
}

TEST(AveragePrecision, GreedyPrefersHighestIou) {
  // The first detection overlaps both truths; it should take the better one.
  const std::vector<GroundTruth> g = {gt(0.0, 1.0), gt(0.3, 1.3)};
  const std::vector<ScoredDetection> d = {sd(0.9, 0.3, 1.25), sd(0.8, 0.0, 0.9)};
  EXPECT_DOUBLE_EQ(average_precision(d, g, 0.5), 1.0);
}

TEST(MeanAp, ThresholdGrid) {
  const auto t = default_iou_thresholds();
  ASSERT_EQ(t.size(), 19u);
  EXPECT_NEAR(t.front(), 0.05, 1e-12);
  EXPECT_NEAR(t.back(), 0.95, 1e-12);
  for (std::size_t i = 1; i < t.size(); ++i) EXPECT_NEAR(t[i] - t[i - 1], 0.05, 1e-12);
}

TEST(MeanAp, PerfectAndEmpty) {
  const std::vector<GroundTruth> g = {gt(0, 1, 0), gt(2, 3, 1, "v")};
  const auto perfect = mean_ap({sd(0.3, 0, 1, 0), sd(0.4, 2, 3, 1, "v")}, g);
  EXPECT_DOUBLE_EQ(perfect.map, 1.0);
  EXPECT_EQ(perfect.classes, (std::vector<int>{0, 1}));
  EXPECT_EQ(mean_ap({}, g).map, 0.0);
  EXPECT_EQ(mean_ap({sd(0.3, 0, 1)}, {}).map, 0.0);
}

TEST(MeanAp, MatchesBruteForceOracle) {
  std::mt19937_64 rng(17);
  const auto thr = default_iou_thresholds();
  for (int i = 0; i < 300; ++i) {
    const auto inst = testing::random_metric_instance(rng, 20, 10, i % 3 == 0);
    ASSERT_NEAR(mean_ap(inst.dets, inst.gts).map, testing::oracle_map(inst.dets, inst.gts, thr), 1e-12)
        << "instance " << i;
  }
}

TEST(FrrAtFa, PerfectAndEmpty) {
  const std::vector<GroundTruth> g = {gt(0, 1), gt(2, 3)};
  for (const auto& p : frr_at_fa({sd(0.5, 0, 1), sd(0.6, 2, 3)}, g, 1.0)) EXPECT_EQ(p.frr, 0.0);
  const auto empty = frr_at_fa({}, g, 1.0);
  ASSERT_EQ(empty.size(), 3u);
  for (const auto& p : empty) {
    EXPECT_EQ(p.frr, 1.0);
    EXPECT_EQ(p.fa_per_hour, 0.0);
  }
  EXPECT_THROW(frr_at_fa({}, g, 0.0), std::invalid_argument);
}

// Ten truths, twelve detections; two false alarms outrank every hit.
TEST(FrrAtFa, HandBuiltSweep) {
  std::vector<GroundTruth> g;
  std::vector<ScoredDetection> d = {sd(0.99, 100, 101), sd(0.98, 200, 201)};
  for (int i = 0; i < 10; ++i) {
    g.push_back(gt(2.0 * i, 2.0 * i + 1));
    d.push_back(sd(0.9 - 0.01 * i, 2.0 * i, 2.0 * i + 1));
  }
  // Over one hour both false alarms fit every budget.
  for (const auto& p : frr_at_fa(d, g, 1.0)) EXPECT_EQ(p.frr, 0.0);
  // Over 15 minutes they cost 4 and 8 FA/h: the 5 FA/h budget stops after
  // the first false alarm, before any hit.
  const auto q = frr_at_fa(d, g, 0.25);
  EXPECT_EQ(q[0].frr, 1.0);
  EXPECT_DOUBLE_EQ(q[0].fa_per_hour, 4.0);
  EXPECT_EQ(q[0].threshold, 0.99);
  EXPECT_EQ(q[1].frr, 0.0);
  EXPECT_DOUBLE_EQ(q[1].fa_per_hour, 8.0);

  // One false alarm above four hits and one more in the middle, 0.2 h.
  std::vector<ScoredDetection> m = {sd(0.95, 100, 101)};
  for (int i = 0; i < 4; ++i) m.push_back(sd(0.9 - 0.01 * i, 2.0 * i, 2.0 * i + 1));
  m.push_back(sd(0.85, 200, 201));
  for (int i = 4; i < 10; ++i) m.push_back(sd(0.8 - 0.01 * i, 2.0 * i, 2.0 * i + 1));
  const auto r = frr_at_fa(m, g, 0.2);
  EXPECT_NEAR(r[0].frr, 0.6, 1e-15);  // 5 FA/h allows the first false alarm only
  EXPECT_EQ(r[1].frr, 0.0);
  EXPECT_EQ(r[2].frr, 0.0);
}

TEST(FrrAtFa, MatchesThresholdSweepOracleAndIsMonotone) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 300; ++i) {
    const auto inst = testing::random_metric_instance(rng, 20, 10, i % 2 == 0);
    const double hours = testing::uniform(rng, 0.05, 1.0);
    const auto pts = frr_at_fa(inst.dets, inst.gts, hours, {5, 15, 25}, 0.5);
    for (const auto& p : pts) {
      ASSERT_NEAR(p.frr, testing::oracle_frr(inst.dets, inst.gts, hours, p.fa_target, 0.5), 1e-12);
      ASSERT_LE(p.fa_per_hour, p.fa_target);
    }
    ASSERT_GE(pts[0].frr, pts[1].frr);
    ASSERT_GE(pts[1].frr, pts[2].frr);
  }
}

TEST(Rtf, Examples) {
  EXPECT_DOUBLE_EQ(rtf(1.0, 10.0), 0.1);
  EXPECT_DOUBLE_EQ(rtf(3.0, 3.0), 1.0);
  EXPECT_THROW(rtf(1.0, 0.0), std::invalid_argument);
}

TEST(ClassificationAccuracy, Examples) {
  EXPECT_EQ(classification_accuracy({1, 2, 3}, {1, 2, 3}), 1.0);
  EXPECT_EQ(classification_accuracy({1, 2}, {3, 4}), 0.0);
  EXPECT_EQ(classification_accuracy({0, 1, 0, 0}, {0, 1, 1, 0}), 0.75);
  EXPECT_THROW(classification_accuracy({1}, {1, 2}), std::invalid_argument);
}

TEST(EvalReport, JsonAndTable) {
  PipelineConfig cfg;
  const std::vector<GroundTruth> g = {gt(0, 1), gt(2, 3)};
  EvalReport r = evaluate({sd(0.9, 0, 1), sd(0.8, 5, 6)}, g, 0.5, cfg, {"alpha"});
  r.rtf = 0.02;
  const auto j = nlohmann::json::parse(r.to_json());
  EXPECT_DOUBLE_EQ(j["AP@5"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(j["mAP"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(j["FRR@5"].get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(j["RTF"].get<double>(), 0.02);
  EXPECT_TRUE(j["classification_accuracy"].is_null());
  EXPECT_EQ(j["counts"].size(), 19u);
  EXPECT_EQ(r.frr_at(15.0), 0.5);
  EXPECT_THROW(r.frr_at(7.0), std::out_of_range);
  const std::string table = r.to_table("toy");
  EXPECT_NE(table.find("AP@75"), std::string::npos);
  EXPECT_NE(table.find("FRR@25"), std::string::npos);
  EXPECT_NE(table.find("N/A"), std::string::npos);
  EXPECT_NE(table.find("0.020"), std::string::npos);
}

}  // namespace
}  // namespace kws
