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
#include "kwsdet/losses.hpp"

#include <algorithm>
#include <cmath>

namespace kws {
namespace {

RegressionLoss masked_l1(const Vector& pred, const Vector& target, const std::vector<bool>& mask,
                         int N, const char* what) {
  if (pred.size() != target.size() || static_cast<std::size_t>(pred.size()) != mask.size()) {
    throw ShapeError(std::string(what) + ": shape mismatch");
  }
  const double inv_n = 1.0 / std::max(N, 1);
  RegressionLoss out;
  out.grad = Vector::Zero(pred.size());
  for (Eigen::Index t = 0; t < pred.size(); ++t) {
    if (!mask[static_cast<std::size_t>(t)]) continue;
    const double d = pred[t] - target[t];
    out.value += std::abs(d);
    out.grad[t] = d > 0 ? inv_n : (d < 0 ? -inv_n : 0.0);
  }
  out.value *= inv_n;
  return out;
}

}  // namespace

HeatmapLoss focal_heatmap_loss(const Matrix& Y_hat, const Matrix& Y, int N, double alpha,
                               double beta) {
  if (Y_hat.rows() != Y.rows() || Y_hat.cols() != Y.cols()) {
    throw ShapeError("focal_heatmap_loss: shape mismatch");
  }
  if (N < 0) throw ShapeError("focal_heatmap_loss: N must be >= 0");
  const double inv_n = 1.0 / std::max(N, 1);
  HeatmapLoss out;
  out.grad = Matrix::Zero(Y.rows(), Y.cols());
  double sum = 0.0;
  for (Eigen::Index t = 0; t < Y.rows(); ++t) {
    for (Eigen::Index c = 0; c < Y.cols(); ++c) {
      const double y = Y(t, c);
      if (!(y >= 0.0 && y <= 1.0)) throw ShapeError("focal_heatmap_loss: Y outside [0, 1]");
      const double raw = Y_hat(t, c);
      const double p = std::clamp(raw, kProbEpsilon, 1.0 - kProbEpsilon);
      const bool inside = raw == p;
      double term = 0.0;
      double dterm = 0.0;
      if (y == 1.0) {
        const double q = 1.0 - p;
        term = std::pow(q, alpha) * std::log(p);
        dterm = -alpha * std::pow(q, alpha - 1.0) * std::log(p) + std::pow(q, alpha) / p;
      } else {
        const double penalty = std::pow(1.0 - y, beta);
        const double lq = std::log1p(-p);
        term = penalty * std::pow(p, alpha) * lq;
        dterm = penalty * (alpha * std::pow(p, alpha - 1.0) * lq - std::pow(p, alpha) / (1.0 - p));
      }
      sum += term;
      out.grad(t, c) = inside ? -inv_n * dterm : 0.0;
    }
  }
  out.value = -inv_n * sum;
  return out;
}

RegressionLoss l1_length_loss(const Vector& L_hat, const Vector& L, const std::vector<bool>& mask,
                              int N) {
  return masked_l1(L_hat, L, mask, N, "l1_length_loss");
}

RegressionLoss l1_offset_loss(const Vector& O_hat, const Vector& O, const std::vector<bool>& mask,
                              int N) {
  return masked_l1(O_hat, O, mask, N, "l1_offset_loss");
}

LossBreakdown total_loss(double L_h, double L_len, double L_offset, int N_used,
                         const PipelineConfig& cfg) {
  LossBreakdown b;
  b.L_h = L_h;
  b.L_len = L_len;
  b.L_offset = L_offset;
  b.L_total = L_h + cfg.lambda_len * L_len + cfg.lambda_offset * L_offset;
  b.N_used = N_used;
  return b;
}

LossBreakdown detector_loss(const PredictionTensors& preds, const TargetTensors& targets,
                            const PipelineConfig& cfg, PredictionGrads* grads) {
  const auto heat = focal_heatmap_loss(preds.Y_hat, targets.Y, targets.N, cfg.focal_alpha,
                                       cfg.focal_beta);
  const auto len = l1_length_loss(preds.L_hat, targets.L, targets.mask, targets.N);
  const auto ofs = l1_offset_loss(preds.O_hat, targets.O, targets.mask, targets.N);
  if (grads != nullptr) {
    grads->dY_hat = heat.grad;
    grads->dL_hat = cfg.lambda_len * len.grad;
    grads->dO_hat = cfg.lambda_offset * ofs.grad;
  }
  return total_loss(heat.value, len.value, ofs.value, std::max(targets.N, 1), cfg);
}

}  // namespace kws
