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
#include "kwsdet/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace kws {

int count_keywords(const std::vector<AlignedWord>& words, int num_keywords) {
  return static_cast<int>(std::count_if(words.begin(), words.end(), [&](const AlignedWord& w) {
    return w.cls >= 0 && w.cls < num_keywords;
  }));
}

TargetTensors encode_targets(const std::vector<AlignedWord>& words, const PipelineConfig& cfg) {
  const int T = cfg.temporal_resolution;
  const int C = cfg.num_keywords;
  TargetTensors tt;
  tt.Y = Matrix::Zero(T, cfg.heat_channels());
  tt.L = Vector::Zero(T);
  tt.O = Vector::Zero(T);
  tt.mask.assign(static_cast<std::size_t>(T), false);

  std::vector<bool> taken(static_cast<std::size_t>(T), false);
  for (const auto& w : words) {
    if (w.cls < 0 || w.cls > C) {
      throw DataError("word '" + w.text + "' has class " + std::to_string(w.cls) +
                      " outside [0, C]");
    }
    const bool unknown = w.cls == C;
    if (unknown && !cfg.use_unknown_class) continue;
    const int loc = w.loc();
    if (loc < 0 || loc >= T) {
      throw DataError("word '" + w.text + "' centre outside [0, T)");
    }
    if (!(w.len > 0)) throw DataError("word '" + w.text + "' has non-positive length");
    if (taken[static_cast<std::size_t>(loc)]) {
      throw DataError("duplicate word centre at frame " + std::to_string(loc));
    }
    taken[static_cast<std::size_t>(loc)] = true;

    const double sigma = w.len * cfg.gamma;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    const int lo = std::max(0, loc - radius);
    const int hi = std::min(T - 1, loc + radius);
    for (int t = lo; t <= hi; ++t) {
      const double d = t - loc;
      const double g = std::exp(-d * d / (2.0 * sigma * sigma));
      double& y = tt.Y(t, w.cls);
      y = std::max(y, g);
    }
    if (!unknown || cfg.regress_unknown) {
      tt.L[loc] = w.len;
      tt.O[loc] = w.ofs();
      tt.mask[static_cast<std::size_t>(loc)] = true;
    }
  }
  tt.N = count_keywords(words, C);
  return tt;
}

}  // namespace kws
