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
#include "kwsdet/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <variant>

#include "kwsdet/common.hpp"

namespace kws {
namespace {

using Member = std::variant<int PipelineConfig::*, double PipelineConfig::*,
                            bool PipelineConfig::*>;

struct Field {
  const char* name;
  const char* alias;  // may be nullptr
  Member member;
  bool model_relevant;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> kFields = {
      {"sample_rate_hz", nullptr, &PipelineConfig::sample_rate_hz, true},
      {"input_len_s", "r", &PipelineConfig::input_len_s, true},
      {"hop_length", nullptr, &PipelineConfig::hop_length, true},
      {"win_length", nullptr, &PipelineConfig::win_length, true},
      {"filter_length", nullptr, &PipelineConfig::filter_length, true},
      {"log_spectrogram", nullptr, &PipelineConfig::log_spectrogram, true},
      {"normalize_spectrogram", nullptr, &PipelineConfig::normalize_spectrogram, true},
      {"temporal_resolution", "T", &PipelineConfig::temporal_resolution, true},
      {"num_keywords", "C", &PipelineConfig::num_keywords, true},
      {"gamma", nullptr, &PipelineConfig::gamma, false},
      {"use_unknown_class", nullptr, &PipelineConfig::use_unknown_class, true},
      {"regress_unknown", nullptr, &PipelineConfig::regress_unknown, false},
      {"max_detections", "M", &PipelineConfig::max_detections, false},
      {"peak_radius", nullptr, &PipelineConfig::peak_radius, false},
      {"focal_alpha", nullptr, &PipelineConfig::focal_alpha, false},
      {"focal_beta", nullptr, &PipelineConfig::focal_beta, false},
      {"lambda_len", nullptr, &PipelineConfig::lambda_len, false},
      {"lambda_offset", nullptr, &PipelineConfig::lambda_offset, false},
      {"batch_size", nullptr, &PipelineConfig::batch_size, false},
      {"learning_rate", nullptr, &PipelineConfig::learning_rate, false},
      {"augment_prob", nullptr, &PipelineConfig::augment_prob, false},
      {"epochs", nullptr, &PipelineConfig::epochs, false},
      {"n_ch", "N_ch", &PipelineConfig::n_ch, true},
      {"depth", nullptr, &PipelineConfig::depth, true},
      {"kernel_size", nullptr, &PipelineConfig::kernel_size, true},
      {"frr_match_iou", nullptr, &PipelineConfig::frr_match_iou, false},
      {"detect_threshold", nullptr, &PipelineConfig::detect_threshold, false},
      {"window_len_s", "L_in", &PipelineConfig::window_len_s, false},
      {"merge_threshold", nullptr, &PipelineConfig::merge_threshold, false},
  };
  return kFields;
}

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

const Field* find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (key == f.name || (f.alias != nullptr && key == f.alias)) return &f;
  }
  return nullptr;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_value(const PipelineConfig& cfg, const Member& m) {
  return std::visit(
      [&](auto ptr) -> std::string {
        using T = std::decay_t<decltype(cfg.*ptr)>;
        if constexpr (std::is_same_v<T, bool>) {
          return (cfg.*ptr) ? "true" : "false";
        } else if constexpr (std::is_same_v<T, int>) {
          return std::to_string(cfg.*ptr);
        } else {
          return format_double(cfg.*ptr);
        }
      },
      m);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw ConfigError("invalid value for " + std::string(key) + ": '" +
                    std::string(value) + "'");
}

void require(bool ok, const char* key, const std::string& what) {
  if (!ok) throw ConfigError(std::string(key) + " out of range: " + what);
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.emplace_back(f.name);
  return keys;
}

bool is_config_key(std::string_view key) { return find_field(key) != nullptr; }

void set_config_value(PipelineConfig& cfg, std::string_view key, std::string_view value) {
  const Field* f = find_field(key);
  if (f == nullptr) throw ConfigError("unknown config key: " + std::string(key));
  value = trim(value);
  std::visit(
      [&](auto ptr) {
        using T = std::decay_t<decltype(cfg.*ptr)>;
        if constexpr (std::is_same_v<T, bool>) {
          if (value == "true" || value == "1" || value == "yes") {
            cfg.*ptr = true;
          } else if (value == "false" || value == "0" || value == "no") {
            cfg.*ptr = false;
          } else {
            bad_value(key, value);
          }
        } else {
          T parsed{};
          auto res = std::from_chars(value.data(), value.data() + value.size(), parsed);
          if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
            bad_value(key, value);
          }
          cfg.*ptr = parsed;
        }
      },
      f->member);
}

void validate(const PipelineConfig& cfg) {
  require(cfg.sample_rate_hz > 0, "sample_rate_hz", "must be > 0");
  require(cfg.input_len_s > 0, "input_len_s", "must be > 0");
  require(cfg.hop_length > 0, "hop_length", "must be > 0");
  require(cfg.win_length > 0, "win_length", "must be > 0");
  require(cfg.filter_length >= cfg.win_length, "filter_length", "must be >= win_length");
  require(cfg.temporal_resolution > 0, "temporal_resolution", "T must be > 0");
  require(cfg.num_keywords >= 1, "num_keywords", "C must be >= 1");
  require(cfg.gamma > 0 && cfg.gamma <= 1, "gamma", "must lie in (0, 1]");
  require(cfg.max_detections >= 1, "max_detections", "M must be >= 1");
  require(cfg.peak_radius >= 1, "peak_radius", "must be >= 1");
  require(cfg.focal_alpha >= 0, "focal_alpha", "must be >= 0");
  require(cfg.focal_beta >= 0, "focal_beta", "must be >= 0");
  require(cfg.lambda_len >= 0, "lambda_len", "must be >= 0");
  require(cfg.lambda_offset >= 0, "lambda_offset", "must be >= 0");
  require(cfg.batch_size >= 1, "batch_size", "must be >= 1");
  require(cfg.learning_rate > 0, "learning_rate", "must be > 0");
  require(cfg.augment_prob >= 0 && cfg.augment_prob <= 1, "augment_prob",
          "must lie in [0, 1]");
  require(cfg.epochs >= 0, "epochs", "must be >= 0");
  require(cfg.n_ch >= 1, "n_ch", "must be >= 1");
  require(cfg.depth >= 0, "depth", "must be >= 0");
  require(cfg.kernel_size >= 1 && cfg.kernel_size % 2 == 1, "kernel_size",
          "must be a positive odd integer");
  require(cfg.frr_match_iou > 0 && cfg.frr_match_iou <= 1, "frr_match_iou",
          "must lie in (0, 1]");
  require(cfg.detect_threshold >= 0 && cfg.detect_threshold <= 1, "detect_threshold",
          "must lie in [0, 1]");
  require(cfg.window_len_s > 0, "window_len_s", "must be > 0");
  require(cfg.merge_threshold >= 0 && cfg.merge_threshold <= 1, "merge_threshold",
          "must lie in [0, 1]");
  const double raw_frames =
      cfg.input_len_s * cfg.sample_rate_hz / static_cast<double>(cfg.hop_length);
  require(raw_frames >= cfg.temporal_resolution, "temporal_resolution",
          "input_len_s * sample_rate_hz / hop_length must be >= T");
}

PipelineConfig parse_config(std::string_view text) {
  PipelineConfig cfg;
  std::set<std::string> given;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const auto key = trim(line.substr(0, eq));
    set_config_value(cfg, key, line.substr(eq + 1));
    given.insert(find_field(key)->name);
  }
  if (!cfg.use_unknown_class && !given.contains("max_detections")) {
    cfg.max_detections = 3;
  }
  validate(cfg);
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const PipelineConfig& cfg) {
  std::string out;
  for (const auto& f : fields()) {
    out += f.name;
    out += '=';
    out += format_value(cfg, f.member);
    out += '\n';
  }
  return out;
}

std::uint64_t model_config_hash(const PipelineConfig& cfg) {
  std::string canon;
  for (const auto& f : fields()) {
    if (!f.model_relevant) continue;
    canon += f.name;
    canon += '=';
    canon += format_value(cfg, f.member);
    canon += ';';
  }
  return fnv1a64(canon);
}

}  // namespace kws
