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
#ifndef KWSDET_MODEL_HPP_
#define KWSDET_MODEL_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "kwsdet/common.hpp"
#include "kwsdet/config.hpp"
#include "kwsdet/encoder.hpp"

namespace kws {

enum class HeadKind : std::uint8_t { kDetection = 0, kClassification = 1 };

/// Shape of the micro-backbone: a 1x1 input projection, `depth` stride-2
/// residual blocks, `depth` nearest-neighbour upsampling blocks with skip
/// connections, then either three detection heads or a pooled classifier.
struct ArchSpec {
  int freq_bins = 256;
  int n_ch = 64;
  int depth = 3;
  int kernel = 3;
  int heat_channels = 21;  // detection: C+1 (or C without unknown)
  int num_classes = 0;     // classification: C+2
  HeadKind head = HeadKind::kDetection;

  bool operator==(const ArchSpec&) const = default;
};

ArchSpec detection_arch(const PipelineConfig& cfg);
/// Classifier over C keywords + unknown + background.
ArchSpec classification_arch(const PipelineConfig& cfg);

/// One 1D convolution stored in the flat parameter vector. Weights are a
/// (kernel * c_in) x c_out row-major block, tap-major.
struct ConvLayer {
  std::size_t w_off = 0;
  std::size_t b_off = 0;
  int c_in = 0;
  int c_out = 0;
  int kernel = 1;
  int stride = 1;

  std::size_t num_weights() const {
    return static_cast<std::size_t>(kernel) * c_in * c_out;
  }
};

struct Layout {
  ConvLayer proj;
  std::vector<ConvLayer> down;  // stride 2
  std::vector<ConvLayer> res;
  std::vector<ConvLayer> up;    // up[i] restores level i from level i+1
  std::vector<ConvLayer> head_hidden;  // heat, length, offset
  std::vector<ConvLayer> head_out;
  ConvLayer classifier;
  std::size_t size = 0;
};

Layout make_layout(const ArchSpec& arch);

struct DetectorParams {
  ArchSpec arch;
  Layout layout;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool operator==(const DetectorParams& o) const {
    return arch == o.arch && values == o.values;
  }
};

/// He-normal weights, zero biases, heatmap output bias logit(0.01) and a
/// length bias giving an initial length of ~8 frames. Throws ConfigError
/// for invalid shapes. Deterministic in the seed.
DetectorParams init_params(const ArchSpec& arch, std::uint64_t seed);

/// Human-readable layer list with the parameter count.
std::string describe(const DetectorParams& params);

/// Activations kept for the backward pass.
struct ForwardCache {
  Matrix x;
  Matrix z0;
  std::vector<Matrix> e;   // e[0] = silu(z0), e[i+1] = block output
  std::vector<Matrix> za;  // stride-2 conv pre-activations
  std::vector<Matrix> a;
  std::vector<Matrix> zr;
  std::vector<Matrix> zu;  // up[i] pre-activations
  std::vector<Matrix> u;   // u[i] = silu(zu[i]) + e[i]; u[depth] = e[depth]
  std::vector<Matrix> zh;  // head hidden pre-activations
  std::vector<Matrix> g;
  std::vector<Matrix> out; // head output pre-activations
  PredictionTensors preds;
  // Classification only.
  Eigen::RowVectorXd pooled;
  Eigen::RowVectorXd probs;
};

/// Detection forward on a T x freq_bins input. T must be divisible by
/// 2^depth.
PredictionTensors forward(const DetectorParams& params, const Matrix& input,
                          ForwardCache* cache = nullptr);

/// Parameter gradients of sum(dY * Y_hat) + sum(dL * L_hat) + sum(dO * O_hat).
std::vector<double> backward(const DetectorParams& params, const ForwardCache& cache,
                             const Matrix& dY_hat, const Vector& dL_hat, const Vector& dO_hat);

/// Softmax class scores for a short window (any number of frames >= 1).
Eigen::RowVectorXd classification_head_forward(const DetectorParams& params, const Matrix& window,
                                               ForwardCache* cache = nullptr);

/// Parameter gradients given d(loss)/d(logits).
std::vector<double> classification_backward(const DetectorParams& params,
                                            const ForwardCache& cache,
                                            const Eigen::RowVectorXd& dlogits);

/// Input frame range [lo, hi] that can influence detection output frame t.
std::pair<int, int> receptive_field(const ArchSpec& arch, int T, int t);

}  // namespace kws

#endif  // KWSDET_MODEL_HPP_
