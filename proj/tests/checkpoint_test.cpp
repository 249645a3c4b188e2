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
#include "kwsdet/checkpoint.hpp"

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace kws {
namespace {

Checkpoint sample(bool with_adam) {
  Checkpoint c;
  c.cfg.num_keywords = 2;
  c.cfg.n_ch = 4;
  c.cfg.depth = 1;
  c.keywords = {"alpha", "talk about"};
  c.ablation = "none";
  c.params = init_params(detection_arch(c.cfg), 9);
  c.epoch = 3;
  c.step = 42;
  if (with_adam) {
    AdamState s;
    s.t = 42;
    s.m.assign(c.params.size(), 0.25);
    s.v.assign(c.params.size(), 1e-9);
    c.adam = s;
  }
  return c;
}

TEST(Checkpoint, RoundTrip) {
  testing::TempDir dir("ckpt");
  for (bool adam : {false, true}) {
    const Checkpoint c = sample(adam);
    save_checkpoint(dir / "m.ckpt", c);
    const Checkpoint back = load_checkpoint(dir / "m.ckpt", c.cfg);
    EXPECT_EQ(back.cfg, c.cfg);
    EXPECT_EQ(back.params, c.params);
    EXPECT_EQ(back.keywords, c.keywords);
    EXPECT_EQ(back.ablation, c.ablation);
    EXPECT_EQ(back.epoch, 3);
    EXPECT_EQ(back.step, 42);
    EXPECT_EQ(back.adam, c.adam);
  }
}

TEST(Checkpoint, RejectsDamagedFiles) {
  testing::TempDir dir("ckpt");
  save_checkpoint(dir / "m.ckpt", sample(true));
  const std::string bytes = testing::slurp(dir / "m.ckpt");

  testing::spit(dir / "short.ckpt", bytes.substr(0, bytes.size() / 2));
  EXPECT_THROW(load_checkpoint(dir / "short.ckpt"), DataError);
  testing::spit(dir / "long.ckpt", bytes + "x");
  EXPECT_THROW(load_checkpoint(dir / "long.ckpt"), DataError);
  std::string magic = bytes;
  magic[0] = 'X';
  testing::spit(dir / "magic.ckpt", magic);
  EXPECT_THROW(load_checkpoint(dir / "magic.ckpt"), DataError);
  std::string version = bytes;
  version[8] = static_cast<char>(version[8] + 1);
  testing::spit(dir / "version.ckpt", version);
  EXPECT_THROW(load_checkpoint(dir / "version.ckpt"), DataError);
  EXPECT_THROW(load_checkpoint(dir / "missing.ckpt"), DataError);
}

TEST(Checkpoint, ConfigHashMismatch) {
  testing::TempDir dir("ckpt");
  const Checkpoint c = sample(false);
  save_checkpoint(dir / "m.ckpt", c);
  PipelineConfig other = c.cfg;
  other.n_ch = 8;
  EXPECT_THROW(load_checkpoint(dir / "m.ckpt", other), DataError);
  // Training-only keys do not affect the model hash.
  other = c.cfg;
  other.learning_rate = 0.5;
  EXPECT_NO_THROW(load_checkpoint(dir / "m.ckpt", other));
}

}  // namespace
}  // namespace kws
