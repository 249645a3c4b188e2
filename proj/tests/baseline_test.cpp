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

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "window_oracle.hpp"

namespace kws {
namespace {

std::string error_of(double d, double in, double step, double mx) {
  try {
    plan_windows(d, in, step, mx);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

TEST(PlanWindows, ConstraintErrorsNameTheConstraint) {
  const std::string e1 = error_of(5.11, 0.5, 0.2, 0.45);
  EXPECT_NE(e1.find("L_step < L_in - MAX_x"), std::string::npos) << e1;
  EXPECT_NE(e1.find("0.2 >= 0.05"), std::string::npos) << e1;
  const std::string e2 = error_of(5.11, 0.4, 0.01, 0.45);
  EXPECT_NE(e2.find("L_in > MAX_x"), std::string::npos) << e2;
  EXPECT_NE(error_of(5.11, 0.45, 0.01, 0.45).find("L_in > MAX_x"), std::string::npos);
  EXPECT_FALSE(error_of(0.0, 0.5, 0.1, 0.3).empty());
}

TEST(PlanWindows, ReferenceExample) {
  const WindowPlan p = plan_windows(5.11, 0.5, 0.1, 0.35);
  ASSERT_EQ(p.windows.size(), 48u);
  EXPECT_DOUBLE_EQ(p.windows.front().start_s, 0.0);
  EXPECT_DOUBLE_EQ(p.windows.back().end_s, 5.11);
  EXPECT_NEAR(p.windows.back().start_s, 4.61, 1e-12);
  EXPECT_EQ(testing::uncovered_intervals(p, 5.11, 0.35), 0);
  EXPECT_TRUE(plan_contains(p, 4.76, 5.11));
  EXPECT_FALSE(plan_contains(p, 1.0, 1.6));
}

TEST(PlanWindows, ShortAudioGetsOneWindow) {
  const WindowPlan p = plan_windows(0.3, 0.5, 0.1, 0.35);
  ASSERT_EQ(p.windows.size(), 1u);
  EXPECT_DOUBLE_EQ(p.windows[0].end_s, 0.5);
}

TEST(PlanWindows, CoverageOnRandomValidTriples) {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 100; ++i) {
    const double max_x = testing::uniform(rng, 0.1, 0.6);
    const double L_in = max_x + testing::uniform(rng, 0.02, 0.5);
    const double step = testing::uniform(rng, 0.005, 0.999) * (L_in - max_x);
    const double dur = testing::uniform(rng, L_in * 0.5, 8.0);
    const WindowPlan p = plan_windows(dur, L_in, step, max_x);
    ASSERT_EQ(testing::uncovered_intervals(p, dur, max_x), 0)
        << dur << " " << L_in << " " << step << " " << max_x;
    for (const auto& w : p.windows) ASSERT_NEAR(w.end_s - w.start_s, L_in, 1e-12);
  }
}

TEST(GridSearch, TiesGoToLargerStep) {
  const auto s = grid_search_step([](double) { return 0.5; }, default_step_grid(), 0.8, 0.3);
  EXPECT_EQ(s.best_step, 0.4);
  EXPECT_EQ(s.steps.size(), 4u);
  const auto t = grid_search_step([](double step) { return step == 0.2 ? 0.9 : 0.1; },
                                  default_step_grid(), 0.8, 0.3);
  EXPECT_EQ(t.best_step, 0.2);
}

TEST(GridSearch, SingleAdmissibleStepAndNone) {
  int calls = 0;
  const auto s = grid_search_step([&](double) { ++calls; return 0.0; }, default_step_grid(), 0.5, 0.35);
  EXPECT_EQ(s.best_step, 0.1);
  EXPECT_EQ(calls, 1);
  EXPECT_THROW(grid_search_step([](double) { return 0.0; }, default_step_grid(), 0.5, 0.45),
               ConfigError);
}

Eigen::RowVectorXd scores(int C, int cls, double p) {
  Eigen::RowVectorXd s = Eigen::RowVectorXd::Constant(C + 2, (1.0 - p) / (C + 1));
  s[cls] = p;
  return s;
}

TEST(WindowsToDetections, Examples) {
  const WindowPlan p = plan_windows(1.5, 0.5, 0.1, 0.35);
  const int C = 2;
  std::vector<Eigen::RowVectorXd> sc(p.windows.size(), scores(C, C + 1, 0.9));
  EXPECT_TRUE(windows_to_detections(sc, p, C, 0.5).empty());
  sc[1] = scores(C, 0, 0.6);
  auto d = windows_to_detections(sc, p, C, 0.5);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_DOUBLE_EQ(d[0].start_s, 0.1);
  EXPECT_DOUBLE_EQ(d[0].end_s, 0.6);
  sc[1] = scores(C, C + 1, 0.9);
  sc[3] = scores(C, 1, 0.8);
  sc[4] = scores(C, 1, 0.9);
  sc[5] = scores(C, 1, 0.7);
  d = windows_to_detections(sc, p, C, 0.5);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].cls, 1);
  EXPECT_DOUBLE_EQ(d[0].score, 0.9);
  EXPECT_NEAR(d[0].start_s, 0.3, 1e-12);
  EXPECT_NEAR(d[0].end_s, 1.0, 1e-12);
  // Unknown never becomes a detection, even when confident.
  sc.assign(p.windows.size(), scores(C, C, 0.99));
  EXPECT_TRUE(windows_to_detections(sc, p, C, 0.5).empty());
}

TEST(MergeWindowCandidates, Idempotent) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Detection> cands;
    const int n = testing::uniform_int(rng, 0, 25);
    for (int i = 0; i < n; ++i) {
      Detection c;
      c.cls = testing::uniform_int(rng, 0, 2);
      c.score = testing::uniform(rng, 0, 1);
      c.start_s = 0.1 * testing::uniform_int(rng, 0, 40);
      c.end_s = c.start_s + 0.5;
      cands.push_back(c);
    }
    const auto once = merge_window_candidates(cands);
    const auto twice = merge_window_candidates(once);
    ASSERT_EQ(once.size(), twice.size());
    for (std::size_t k = 0; k < once.size(); ++k) {
      ASSERT_EQ(once[k].cls, twice[k].cls);
      ASSERT_EQ(once[k].score, twice[k].score);
      ASSERT_EQ(once[k].start_s, twice[k].start_s);
      ASSERT_EQ(once[k].end_s, twice[k].end_s);
    }
    // Same-class outputs never overlap.
    for (std::size_t a = 0; a < once.size(); ++a) {
      for (std::size_t b = a + 1; b < once.size(); ++b) {
        if (once[a].cls != once[b].cls) continue;
        ASSERT_TRUE(once[a].end_s <= once[b].start_s || once[b].end_s <= once[a].start_s);
      }
    }
  }
}

AlignedWord aw(int cls, double s, double e) {
  AlignedWord w;
  w.cls = cls;
  w.start_s = s;
  w.end_s = e;
  return w;
}

TEST(WindowLabel, ContainedKeywordThenCoverage) {
  const std::vector<AlignedWord> ws = {aw(3, 0.0, 0.2), aw(1, 0.2, 0.5), aw(3, 0.5, 1.2),
                                       aw(0, 1.2, 1.35)};
  EXPECT_EQ(window_label(ws, {0.1, 0.6}, 3), 1);
  EXPECT_EQ(window_label(ws, {0.6, 1.1}, 3), 3);   // covered by unknown
  EXPECT_EQ(window_label(ws, {1.1, 1.6}, 3), 0);
  EXPECT_EQ(window_label(ws, {1.3, 1.8}, 3), 4);   // mostly silence
  EXPECT_EQ(window_label({}, {0.0, 0.5}, 3), 4);
}

TEST(WindowFrames, ClampsToFeatureRows) {
  Matrix f(128, 2);
  for (int t = 0; t < 128; ++t) f.row(t).setConstant(t);
  const FrameClock clock{25.0, 0.0};
  const Matrix a = window_frames(f, clock, {1.0, 1.5});
  EXPECT_EQ(a.rows(), 13);
  EXPECT_EQ(a(0, 0), 25.0);
  const Matrix b = window_frames(f, clock, {5.0, 5.5});
  EXPECT_GE(b.rows(), 1);
  EXPECT_EQ(b(b.rows() - 1, 0), 127.0);
}

}  // namespace
}  // namespace kws
