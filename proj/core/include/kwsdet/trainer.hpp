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
#ifndef KWSDET_TRAINER_HPP_
#define KWSDET_TRAINER_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kwsdet/baseline.hpp"
#include "kwsdet/checkpoint.hpp"
#include "kwsdet/dataset.hpp"
#include "kwsdet/encoder.hpp"
#include "kwsdet/losses.hpp"

namespace kws {

enum class Ablation { kNone, kNoUnknown, kClsHead };

/// "none", "no-unknown" or "cls-head"; anything else is a ConfigError.
Ablation parse_ablation(std::string_view name);
std::string ablation_name(Ablation a);
/// no-unknown drops the auxiliary class and sets M = 3.
PipelineConfig apply_ablation(PipelineConfig cfg, Ablation a);

struct AdamOptions {
  double lr = 0.00125;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update; allocates the moments on first use.
void adam_step(std::vector<double>& params, const std::vector<double>& grad, AdamState& state,
               const AdamOptions& opt);

/// SplitMix64 mix of a base seed with stream identifiers.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

struct TrainingExample {
  Matrix features;  // T x freq_bins
  std::vector<AlignedWord> words;  // clip-relative
  TargetTensors targets;
};

/// Produces length-normalised, optionally augmented training clips.
/// Fixed-length clips without augmentation come from a feature cache.
class ExampleSource {
 public:
  ExampleSource(std::vector<Utterance> utts, const PipelineConfig& cfg, int threads = 1);

  std::size_t size() const { return utts_.size(); }
  const Utterance& utterance(std::size_t i) const { return utts_[i]; }
  /// Deterministic in (i, seed). With `augment` false no augmentation and
  /// no random crop is applied.
  TrainingExample make(std::size_t i, std::uint64_t seed, bool augment) const;

 private:
  std::vector<Utterance> utts_;
  PipelineConfig cfg_;
  std::vector<Matrix> cache_;  // empty matrix when not cacheable
};

struct StepRecord {
  int epoch = 0;
  std::int64_t step = 0;
  int batch = 0;
  LossBreakdown loss;  // means over the batch; cls-head stores cross-entropy in L_total
  double grad_norm = 0.0;
};

struct TrainOptions {
  std::uint64_t seed = 0;
  Ablation ablation = Ablation::kNone;
  std::vector<std::string> keyword_names;  // stored in checkpoints; default kw0, kw1, ...
  std::filesystem::path out_dir;  // empty: nothing is written
  std::optional<std::filesystem::path> resume_from;
  int threads = 1;
  int max_epochs = -1;  // stop after this many epochs in this call (-1: cfg.epochs)
  std::function<void(const StepRecord&)> on_step;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<StepRecord> log;
  double seconds = 0.0;
};

/// Trains the detector (or, for cls-head, the window classifier) on
/// `train`. Writes `epoch_NNN.ckpt`, `model.ckpt` and `train_log.tsv` to
/// out_dir when set. Throws NumericError, after dumping the batch to
/// `nan_batch.tsv`, when the loss or gradient stops being finite.
TrainResult train_model(const std::vector<Utterance>& train, const PipelineConfig& cfg,
                        const TrainOptions& opts);

/// Windows of one clip with their training labels.
struct LabeledWindows {
  std::vector<Window> windows;
  std::vector<int> labels;
};
LabeledWindows label_clip_windows(const std::vector<AlignedWord>& words, double clip_s,
                                  double L_in, double L_step, double max_x, int num_keywords);

/// Step used to cut training windows for the classifier ablation.
inline constexpr double kClassifierTrainStep = 0.2;

std::string format_step_record(const StepRecord& r);
std::string step_log_header();

}  // namespace kws

#endif  // KWSDET_TRAINER_HPP_
