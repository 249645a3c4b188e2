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
#ifndef KWSDET_CHECKPOINT_HPP_
#define KWSDET_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kwsdet/config.hpp"
#include "kwsdet/model.hpp"

namespace kws {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;
  bool operator==(const AdamState&) const = default;
};

struct Checkpoint {
  PipelineConfig cfg;
  std::string ablation = "none";
  std::vector<std::string> keywords;  // class names, index = class
  DetectorParams params;
  int epoch = 0;  // completed epochs
  std::int64_t step = 0;
  std::optional<AdamState> adam;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary container: magic, version, config hash, config text, ablation,
/// keyword names, arch, counters, flat parameters, optional optimiser moments.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

/// Throws DataError on a truncated, corrupt or foreign file, or when the
/// stored config hash disagrees with the stored config.
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// As above, and additionally requires the model-relevant config keys to
/// match `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const PipelineConfig& expected);

}  // namespace kws

#endif  // KWSDET_CHECKPOINT_HPP_
