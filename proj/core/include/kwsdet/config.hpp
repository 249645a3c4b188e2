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
#ifndef KWSDET_CONFIG_HPP_
#define KWSDET_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace kws {

/// Every hyper-parameter of the pipeline. Defaults are the published
/// detector settings; the micro-backbone and evaluation keys are local
/// choices. Treat as immutable once validated.
struct PipelineConfig {
  // Audio front end.
  int sample_rate_hz = 16000;
  double input_len_s = 5.11;
  int hop_length = 160;
  int win_length = 400;
  int filter_length = 510;
  bool log_spectrogram = true;
  bool normalize_spectrogram = true;

  // Targets and decoding.
  int temporal_resolution = 128;  // T
  int num_keywords = 20;          // C
  double gamma = 0.125;
  bool use_unknown_class = true;
  bool regress_unknown = true;
  int max_detections = 30;  // M
  int peak_radius = 1;

  // Loss.
  double focal_alpha = 2.0;
  double focal_beta = 4.0;
  double lambda_len = 0.1;
  double lambda_offset = 1.0;

  // Optimisation.
  int batch_size = 64;
  double learning_rate = 0.00125;
  double augment_prob = 0.2;
  int epochs = 30;

  // Micro-backbone.
  int n_ch = 64;
  int depth = 3;
  int kernel_size = 3;

  // Evaluation and baseline.
  double frr_match_iou = 0.5;
  double detect_threshold = 0.1;  // score floor applied by detect
  double window_len_s = 0.5;
  double merge_threshold = 0.5;

  /// Heatmap channels: C+1 with the auxiliary unknown class, else C.
  int heat_channels() const { return num_keywords + (use_unknown_class ? 1 : 0); }
  int freq_bins() const { return filter_length / 2 + 1; }

  bool operator==(const PipelineConfig&) const = default;
};

/// Keys accepted in config files and as `--key value` overrides.
std::vector<std::string> config_keys();

/// Parse `key=value` lines (with `#` comments) on top of the defaults.
/// When `use_unknown_class` is false and `max_detections` is not given,
/// M falls back to 3.
PipelineConfig parse_config(std::string_view text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Set one key from its textual value. Throws ConfigError on unknown keys
/// or unparsable values; does not validate.
void set_config_value(PipelineConfig& cfg, std::string_view key, std::string_view value);
bool is_config_key(std::string_view key);

/// Throws ConfigError naming the offending key.
void validate(const PipelineConfig& cfg);

/// Full `key=value` dump in a stable order; parses back to an equal config.
std::string serialize_config(const PipelineConfig& cfg);

/// Hash over the keys that change what a trained model computes.
std::uint64_t model_config_hash(const PipelineConfig& cfg);

}  // namespace kws

#endif  // KWSDET_CONFIG_HPP_
