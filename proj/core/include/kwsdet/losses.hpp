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
#ifndef KWSDET_LOSSES_HPP_
#define KWSDET_LOSSES_HPP_

#include <vector>

#include "kwsdet/common.hpp"
#include "kwsdet/config.hpp"
#include "kwsdet/encoder.hpp"

namespace kws {

inline constexpr double kProbEpsilon = 1e-7;

struct HeatmapLoss {
  double value = 0.0;
  Matrix grad;  // dL_h / dY_hat
};

struct RegressionLoss {
  double value = 0.0;
  Vector grad;
};

struct LossBreakdown {
  double L_h = 0.0;
  double L_len = 0.0;
  double L_offset = 0.0;
  double L_total = 0.0;
  int N_used = 1;
};

/// Penalty-reduced focal loss over every heatmap cell, normalised by
/// max(N, 1). Predictions are clamped to [1e-7, 1 - 1e-7]; clamped cells
/// carry zero gradient.
HeatmapLoss focal_heatmap_loss(const Matrix& Y_hat, const Matrix& Y, int N, double alpha,
                               double beta);

/// (1 / max(N, 1)) * sum over masked t of |pred_t - target_t|. The
/// subgradient at exact ties is 0.
RegressionLoss l1_length_loss(const Vector& L_hat, const Vector& L, const std::vector<bool>& mask,
                              int N);
RegressionLoss l1_offset_loss(const Vector& O_hat, const Vector& O, const std::vector<bool>& mask,
                              int N);

LossBreakdown total_loss(double L_h, double L_len, double L_offset, int N_used,
                         const PipelineConfig& cfg);

/// Gradients of L_total with respect to each prediction tensor.
struct PredictionGrads {
  Matrix dY_hat;
  Vector dL_hat;
  Vector dO_hat;
};

/// All three terms, combined and differentiated, for one clip.
LossBreakdown detector_loss(const PredictionTensors& preds, const TargetTensors& targets,
                            const PipelineConfig& cfg, PredictionGrads* grads);

}  // namespace kws

#endif  // KWSDET_LOSSES_HPP_
