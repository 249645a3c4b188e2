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
#ifndef KWSDET_ENCODER_HPP_
#define KWSDET_ENCODER_HPP_

#include <vector>

#include "kwsdet/common.hpp"
#include "kwsdet/config.hpp"
#include "kwsdet/dataset.hpp"

namespace kws {

/// Ground truth for one clip.
///   Y:    T x heat_channels Gaussian heatmap, exactly 1 at word centres.
///   L, O: length and sub-frame offset at word centres, 0 elsewhere.
///   mask: centres where the regression losses apply.
///   N:    number of keywords (unknown-class words excluded).
struct TargetTensors {
  Matrix Y;
  Vector L;
  Vector O;
  std::vector<bool> mask;
  int N = 0;
};

/// Model outputs with the same shapes as the targets: Y_hat in (0, 1),
/// L_hat >= 0, O_hat in (0, 1).
struct PredictionTensors {
  Matrix Y_hat;
  Vector L_hat;
  Vector O_hat;
};

/// Keywords are words with cls < num_keywords.
int count_keywords(const std::vector<AlignedWord>& words, int num_keywords);

/// Same-class bumps combine by pointwise max; each bump has
/// sigma = gamma * len (frames) and is truncated at radius ceil(3 sigma).
/// Without the unknown class, unknown words are dropped entirely; with
/// regress_unknown off they contribute heat but no regression targets.
TargetTensors encode_targets(const std::vector<AlignedWord>& words, const PipelineConfig& cfg);

}  // namespace kws

#endif  // KWSDET_ENCODER_HPP_
