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
#include "cli.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "json.hpp"
#include "kwsdet/checkpoint.hpp"
#include "kwsdet/decoder.hpp"
#include "kwsdet/pipeline.hpp"
#include "test_util.hpp"

namespace kws {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new testing::TempDir("cli");
    const auto r = run_cli({"gen-data", "--classes", "2", "--utterances", "8", "--seed", "3",
                            "--split", "0.5,0.25,0.25", "--out", (root_->path() / "data").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto t = run_cli({"train", "--data", data(), "--out", (root_->path() / "run").string(),
                            "--seed", "1", "--epochs", "1", "--batch_size", "4", "--n_ch", "8",
                            "--depth", "2"});
    ASSERT_EQ(t.code, 0) << t.err;
  }
  static void TearDownTestSuite() {
    delete root_;
    root_ = nullptr;
  }
  static std::string data() { return (root_->path() / "data").string(); }
  static std::string ckpt() { return (root_->path() / "run" / "model.ckpt").string(); }
  static fs::path path(const std::string& p) { return root_->path() / p; }

  static testing::TempDir* root_;
};

testing::TempDir* CliTest::root_ = nullptr;

TEST_F(CliTest, GenDataIsByteIdentical) {
  const auto again = path("data2").string();
  ASSERT_EQ(run_cli({"gen-data", "--classes", "2", "--utterances", "8", "--seed", "3", "--split",
                     "0.5,0.25,0.25", "--out", again})
                .code,
            0);
  for (const char* f : {"alignments.tsv", "keywords.txt", "splits/test.txt", "audio/utt_00007.wav"}) {
    EXPECT_EQ(testing::slurp(path("data") / f), testing::slurp(path("data2") / f)) << f;
  }
  const auto manifest = nlohmann::json::parse(testing::slurp(path("data") / "manifest.json"));
  EXPECT_EQ(manifest["command"], "gen-data");
  EXPECT_EQ(manifest["seed"], 3);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run_cli({"gen-data", "--classes", "0", "--out", path("x").string()}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"gen-data", "--bogus-key", "1", "--out", path("x").string()}).code,
            cli::kExitUsage);
  EXPECT_EQ(run_cli({}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitUsage);
  EXPECT_EQ(run_cli({"train", "--data", data(), "--out", path("y").string(), "--ablation", "odd"}).code,
            cli::kExitUsage);
  EXPECT_EQ(run_cli({"--help"}).code, cli::kExitOk);
}

TEST_F(CliTest, TrainWritesLogCheckpointAndManifest) {
  EXPECT_TRUE(fs::exists(path("run/train_log.tsv")));
  EXPECT_TRUE(fs::exists(path("run/epoch_001.ckpt")));
  const auto manifest = nlohmann::json::parse(testing::slurp(path("run/manifest.json")));
  EXPECT_EQ(manifest["command"], "train");
  const Checkpoint ck = load_checkpoint(ckpt());
  EXPECT_EQ(ck.keywords, (std::vector<std::string>{"alpha", "bravo"}));
  EXPECT_EQ(ck.cfg.n_ch, 8);
}

TEST_F(CliTest, NoUnknownAblationShrinksHeads) {
  const auto out = path("nu").string();
  ASSERT_EQ(run_cli({"train", "--data", data(), "--out", out, "--ablation", "no-unknown",
                     "--epochs", "1", "--n_ch", "4", "--depth", "1"})
                .code,
            0);
  const Checkpoint ck = load_checkpoint(path("nu/model.ckpt"));
  EXPECT_EQ(ck.params.arch.heat_channels, 2);
  EXPECT_EQ(ck.cfg.max_detections, 3);
  EXPECT_FALSE(ck.cfg.use_unknown_class);
}

TEST_F(CliTest, DetectThenEvalIsDeterministic) {
  for (const char* d : {"det_a", "det_b"}) {
    const auto r = run_cli({"detect", "--checkpoint", ckpt(), "--data", data(), "--split", "test",
                            "--out", path(d).string(), "--threads", d[4] == 'a' ? "1" : "2"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(testing::slurp(path("det_a/detections.jsonl")),
            testing::slurp(path("det_b/detections.jsonl")));
  const auto e = run_cli({"eval", "--detections", path("det_a").string(), "--data", data(),
                          "--split", "test", "--timing", path("det_a/timing.json").string(),
                          "--out", path("eval_a").string()});
  ASSERT_EQ(e.code, 0) << e.err;
  const auto report = nlohmann::json::parse(testing::slurp(path("eval_a/report.json")));
  EXPECT_TRUE(report["RTF"].is_number());
  EXPECT_TRUE(report["mAP"].is_number());
  EXPECT_NE(testing::slurp(path("eval_a/report.txt")).find("FRR@15"), std::string::npos);
}

TEST_F(CliTest, EvalOracleInputs) {
  const auto corpus = load_corpus(data(), PipelineConfig{});
  const auto test = corpus.split_utterances("test");
  std::vector<DetectionRecord> recs;
  for (const auto& g : ground_truth(test, corpus.keywords.size())) {
    recs.push_back({g.utterance_id, corpus.keywords.name(g.cls), g.cls, 1.0, g.interval.start,
                    g.interval.end, 0.5 * (g.interval.start + g.interval.end)});
  }
  ASSERT_FALSE(recs.empty());
  fs::create_directories(path("oracle"));
  write_detections(path("oracle/detections.jsonl"), recs);
  auto r = run_cli({"eval", "--detections", path("oracle").string(), "--data", data(), "--split",
                    "test", "--out", path("oracle_eval").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto report = nlohmann::json::parse(testing::slurp(path("oracle_eval/report.json")));
  EXPECT_DOUBLE_EQ(report["mAP"].get<double>(), 1.0);
  EXPECT_EQ(report["FRR@5"].get<double>(), 0.0);
  EXPECT_TRUE(report["RTF"].is_null());

  fs::create_directories(path("empty"));
  write_detections(path("empty/detections.jsonl"), {});
  r = run_cli({"eval", "--detections", path("empty").string(), "--data", data(), "--split", "test",
               "--out", path("empty_eval").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  report = nlohmann::json::parse(testing::slurp(path("empty_eval/report.json")));
  EXPECT_EQ(report["mAP"].get<double>(), 0.0);
  EXPECT_EQ(report["FRR@25"].get<double>(), 1.0);

  recs.push_back({"not_in_corpus", "alpha", 0, 0.5, 0.0, 0.4, 0.2});
  write_detections(path("oracle/detections.jsonl"), recs);
  r = run_cli({"eval", "--detections", path("oracle").string(), "--data", data(), "--split", "test",
               "--out", path("bad_eval").string()});
  EXPECT_EQ(r.code, cli::kExitData);
}

TEST_F(CliTest, DetectRejectsModelConfigMismatch) {
  const auto r = run_cli({"detect", "--checkpoint", ckpt(), "--data", data(), "--out",
                          path("mismatch").string(), "--n_ch", "16"});
  EXPECT_EQ(r.code, cli::kExitData) << r.err;
}

TEST_F(CliTest, SilenceGivesNoDetections) {
  write_wav(path("silence.wav"), AudioClip{std::vector<double>(16000 * 7, 0.0), 16000});
  const auto r = run_cli({"detect", "--checkpoint", ckpt(), "--audio", path("silence.wav").string(),
                          "--out", path("sil").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(read_detections(path("sil/detections.jsonl")).empty());
}

}  // namespace
}  // namespace kws
