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
#ifndef KWSDET_TESTS_LAYOUTS_HPP_
#define KWSDET_TESTS_LAYOUTS_HPP_

#include <random>
#include <vector>

#include "kwsdet/dataset.hpp"
#include "test_util.hpp"

namespace kws::testing {

// Random clip layout in frame units: disjoint intervals of length >= 2,
// at most `max_words` words, classes drawn from [0, C] (C is unknown).
inline std::vector<AlignedWord> random_layout(std::mt19937_64& rng, int T, int C, int max_words) {
  std::vector<AlignedWord> out;
  const int target = uniform_int(rng, 0, max_words);
  double cursor = uniform(rng, 0.0, 3.0);
  while (static_cast<int>(out.size()) < target) {
    const double len = uniform(rng, 2.0, 9.0);
    if (cursor + len > T) break;
    AlignedWord w;
    w.cls = uniform_int(rng, 0, C);
    w.text = "w" + std::to_string(out.size());
    w.len = len;
    w.loc_pc = cursor + len / 2;
    w.start_s = cursor;
    w.end_s = cursor + len;
    out.push_back(w);
    cursor += len + uniform(rng, 0.0, 2.0);
  }
  return out;
}

}  // namespace kws::testing

#endif  // KWSDET_TESTS_LAYOUTS_HPP_
