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
#ifndef KWSDET_FEATURES_HPP_
#define KWSDET_FEATURES_HPP_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "kwsdet/common.hpp"
#include "kwsdet/config.hpp"

namespace kws {

struct AudioClip {
  std::vector<double> samples;  // mono, nominally in [-1, 1]
  int sample_rate_hz = 16000;

  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

/// 16-bit PCM mono WAV. Reading rejects other encodings and channel counts.
AudioClip read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const AudioClip& clip);
/// Header-only probe; returns the duration in seconds.
double wav_duration_s(const std::filesystem::path& path);

/// Throws DataError unless the clip's rate matches the configured rate.
void check_sample_rate(const AudioClip& clip, const PipelineConfig& cfg);

/// Maps continuous frame coordinates to seconds. Frame cell j spans
/// [j / fps, (j + 1) / fps) relative to `origin_s`.
struct FrameClock {
  double frames_per_second = 25.0;
  double origin_s = 0.0;

  double frame_of_time(double t_s) const { return (t_s - origin_s) * frames_per_second; }
  double time_of_frame(double frame) const { return origin_s + frame / frames_per_second; }
};

struct Spectrogram {
  Matrix data;  // frames x freq_bins, magnitudes >= 0
  double frames_per_second = 0.0;
  double origin_offset_s = 0.0;

  int frames() const { return static_cast<int>(data.rows()); }
  int bins() const { return static_cast<int>(data.cols()); }
  FrameClock clock() const { return {frames_per_second, origin_offset_s}; }
};

/// Frame clock of the T-frame model input for a given configuration.
FrameClock model_clock(const PipelineConfig& cfg);
/// Number of raw STFT frames for a clip of input_len_s seconds.
int raw_frame_count(const PipelineConfig& cfg);
/// Pooling kernel used to reduce raw frames to T.
int pool_kernel(const PipelineConfig& cfg);

/// Hann-windowed magnitude STFT, window zero-padded to filter_length.
Spectrogram stft_magnitude(const AudioClip& clip, const PipelineConfig& cfg);

enum class LengthMode { kRepeatPad, kRandomCrop, kCenterCrop };

/// Start sample of the window chosen by a crop (0 when padding).
std::int64_t crop_start(std::size_t num_samples, std::size_t target_samples,
                        LengthMode mode, std::uint64_t rng_seed);

/// Clips shorter than the target are tiled; longer ones are cropped
/// (repeat_pad keeps the prefix).
AudioClip normalize_length(const AudioClip& clip, double target_s, LengthMode mode,
                           std::uint64_t rng_seed);

enum class AugmentKind { kAdditiveNoise, kPitchShift };

struct AugmentParams {
  double snr_db = 20.0;     // additive noise; +inf means no noise
  double semitones = 0.0;   // pitch shift, within [-2, 2]
};

AudioClip augment(const AudioClip& clip, AugmentKind kind, const AugmentParams& params,
                  std::uint64_t rng_seed);

/// Average pooling along time with kernel ceil(frames / T). Pools that
/// start past the last frame are zero.
Spectrogram reduce_to_T(const Spectrogram& spec, int T);

/// Optional log(1 + x) and per-utterance mean/variance normalisation.
Matrix prepare_input(const Spectrogram& reduced, const PipelineConfig& cfg);

/// stft_magnitude -> reduce_to_T -> prepare_input. The clip must already be
/// input_len_s long.
Matrix compute_features(const AudioClip& clip, const PipelineConfig& cfg);

}  // namespace kws

#endif  // KWSDET_FEATURES_HPP_
