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
#include "kwsdet/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <string>

namespace kws {
namespace {

// FFTW planning is not thread-safe; plans are created once per size under a
// lock and executed through the new-array interface afterwards.
class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    double* in = fftw_alloc_real(static_cast<std::size_t>(n));
    fftw_complex* out = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    plan_ = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
  }
  ~RealFft() { fftw_destroy_plan(plan_); }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  void execute(double* in, fftw_complex* out) const { fftw_execute_dft_r2c(plan_, in, out); }
  int size() const { return n_; }

 private:
  int n_;
  fftw_plan plan_;
};

const RealFft& fft_for(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<RealFft>> plans;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = plans[n];
  if (!slot) slot = std::make_unique<RealFft>(n);
  return *slot;
}

struct FftwBuffer {
  explicit FftwBuffer(int n)
      : in(fftw_alloc_real(static_cast<std::size_t>(n))),
        out(fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1))) {}
  ~FftwBuffer() {
    fftw_free(in);
    fftw_free(out);
  }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  double* in;
  fftw_complex* out;
};

// Periodic Hann window.
std::vector<double> hann(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
  }
  return w;
}

double interp(const std::vector<double>& x, double pos) {
  if (pos <= 0.0) return x.front();
  const auto last = static_cast<double>(x.size() - 1);
  if (pos >= last) return x.back();
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return x[i] * (1.0 - frac) + x[i + 1] * frac;
}

double mean_power(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

AudioClip pitch_shift(const AudioClip& clip, double semitones) {
  if (semitones == 0.0) return clip;
  const std::vector<double>& x = clip.samples;
  const std::size_t n = x.size();
  const double ratio = std::pow(2.0, semitones / 12.0);

  // Resample: pitch moves by `ratio`, duration by 1 / ratio.
  const auto m = static_cast<std::size_t>(std::floor((static_cast<double>(n) - 1.0) / ratio)) + 1;
  std::vector<double> y(m);
  for (std::size_t j = 0; j < m; ++j) y[j] = interp(x, static_cast<double>(j) * ratio);

  // Overlap-add time stretch back to n samples.
  constexpr int kWin = 512;
  constexpr int kHop = 128;
  const std::vector<double> w = hann(kWin);
  std::vector<double> out(n, 0.0);
  std::vector<double> wsum(n, 0.0);
  const double scale = static_cast<double>(m) / static_cast<double>(n);
  const std::size_t frames = n / kHop + 2;
  for (std::size_t k = 0; k < frames; ++k) {
    const auto centre_out = static_cast<double>(k * kHop);
    const double centre_in = centre_out * scale;
    for (int i = 0; i < kWin; ++i) {
      const double p_out = centre_out - kWin / 2 + i;
      if (p_out < 0 || p_out >= static_cast<double>(n)) continue;
      const double p_in = std::round(centre_in) - kWin / 2 + i;
      if (p_in < 0 || p_in >= static_cast<double>(m)) continue;
      const auto o = static_cast<std::size_t>(p_out);
      out[o] += w[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(p_in)];
      wsum[o] += w[static_cast<std::size_t>(i)];
    }
  }
  AudioClip result{std::vector<double>(n), clip.sample_rate_hz};
  for (std::size_t i = 0; i < n; ++i) {
    result.samples[i] = wsum[i] > 1e-8 ? out[i] / wsum[i] : interp(y, static_cast<double>(i) * scale);
  }
  return result;
}

}  // namespace

void check_sample_rate(const AudioClip& clip, const PipelineConfig& cfg) {
  if (clip.sample_rate_hz != cfg.sample_rate_hz) {
    throw DataError("sample rate " + std::to_string(clip.sample_rate_hz) +
                    " Hz does not match configured " + std::to_string(cfg.sample_rate_hz) +
                    " Hz");
  }
}

int raw_frame_count(const PipelineConfig& cfg) {
  const auto n = static_cast<long>(std::lround(cfg.input_len_s * cfg.sample_rate_hz));
  if (n < cfg.win_length) return 0;
  return static_cast<int>(1 + (n - cfg.win_length) / cfg.hop_length);
}

int pool_kernel(const PipelineConfig& cfg) {
  const int frames = raw_frame_count(cfg);
  return std::max(1, (frames + cfg.temporal_resolution - 1) / cfg.temporal_resolution);
}

FrameClock model_clock(const PipelineConfig& cfg) {
  return {static_cast<double>(cfg.sample_rate_hz) / (cfg.hop_length * pool_kernel(cfg)), 0.0};
}

Spectrogram stft_magnitude(const AudioClip& clip, const PipelineConfig& cfg) {
  const auto len = static_cast<long>(clip.samples.size());
  if (len < cfg.win_length) {
    throw ShapeError("clip too short for STFT: " + std::to_string(len) + " samples < win_length " +
                     std::to_string(cfg.win_length));
  }
  const int frames = static_cast<int>(1 + (len - cfg.win_length) / cfg.hop_length);
  const int nfft = cfg.filter_length;
  const int bins = nfft / 2 + 1;
  const int pad = (nfft - cfg.win_length) / 2;
  const std::vector<double> window = hann(cfg.win_length);
  const RealFft& fft = fft_for(nfft);
  FftwBuffer buf(nfft);

  Spectrogram spec;
  spec.data.resize(frames, bins);
  spec.frames_per_second = static_cast<double>(clip.sample_rate_hz) / cfg.hop_length;
  for (int f = 0; f < frames; ++f) {
    std::fill(buf.in, buf.in + nfft, 0.0);
    const std::size_t start = static_cast<std::size_t>(f) * cfg.hop_length;
    for (int i = 0; i < cfg.win_length; ++i) {
      buf.in[pad + i] = clip.samples[start + static_cast<std::size_t>(i)] *
                        window[static_cast<std::size_t>(i)];
    }
    fft.execute(buf.in, buf.out);
    for (int k = 0; k < bins; ++k) spec.data(f, k) = std::hypot(buf.out[k][0], buf.out[k][1]);
  }
  return spec;
}

std::int64_t crop_start(std::size_t num_samples, std::size_t target_samples, LengthMode mode,
                        std::uint64_t rng_seed) {
  if (num_samples <= target_samples) return 0;
  const std::size_t slack = num_samples - target_samples;
  switch (mode) {
    case LengthMode::kRepeatPad:
      return 0;
    case LengthMode::kCenterCrop:
      return static_cast<std::int64_t>(slack / 2);
    case LengthMode::kRandomCrop: {
      std::mt19937_64 rng(rng_seed);
      std::uniform_int_distribution<std::size_t> dist(0, slack);
      return static_cast<std::int64_t>(dist(rng));
    }
  }
  return 0;
}

AudioClip normalize_length(const AudioClip& clip, double target_s, LengthMode mode,
                           std::uint64_t rng_seed) {
  if (clip.samples.empty()) throw ShapeError("normalize_length: empty clip");
  const auto target = static_cast<std::size_t>(std::llround(target_s * clip.sample_rate_hz));
  AudioClip out{std::vector<double>(target), clip.sample_rate_hz};
  const std::size_t n = clip.samples.size();
  if (n <= target) {
    for (std::size_t i = 0; i < target; ++i) out.samples[i] = clip.samples[i % n];
  } else {
    const auto start = static_cast<std::size_t>(crop_start(n, target, mode, rng_seed));
    std::copy_n(clip.samples.begin() + static_cast<std::ptrdiff_t>(start), target,
                out.samples.begin());
  }
  return out;
}

AudioClip augment(const AudioClip& clip, AugmentKind kind, const AugmentParams& params,
                  std::uint64_t rng_seed) {
  switch (kind) {
    case AugmentKind::kAdditiveNoise: {
      if (std::isnan(params.snr_db)) throw std::invalid_argument("augment: SNR is NaN");
      if (std::isinf(params.snr_db) && params.snr_db > 0) return clip;
      if (std::isinf(params.snr_db)) throw std::invalid_argument("augment: SNR must not be -inf");
      const double noise_power = mean_power(clip.samples) / std::pow(10.0, params.snr_db / 10.0);
      const double sd = std::sqrt(noise_power);
      std::mt19937_64 rng(rng_seed);
      std::normal_distribution<double> gauss(0.0, 1.0);
      AudioClip out = clip;
      for (double& s : out.samples) s += sd * gauss(rng);
      return out;
    }
    case AugmentKind::kPitchShift:
      if (!(params.semitones >= -2.0 && params.semitones <= 2.0)) {
        throw std::invalid_argument("augment: pitch shift must lie in [-2, 2] semitones");
      }
      return pitch_shift(clip, params.semitones);
  }
  return clip;
}

Spectrogram reduce_to_T(const Spectrogram& spec, int T) {
  if (T <= 0) throw ShapeError("reduce_to_T: T must be positive");
  const int frames = spec.frames();
  if (frames < T) {
    throw ShapeError("reduce_to_T: " + std::to_string(frames) + " frames < T=" + std::to_string(T));
  }
  const int kernel = (frames + T - 1) / T;
  Spectrogram out;
  out.data = Matrix::Zero(T, spec.bins());
  out.frames_per_second = spec.frames_per_second / kernel;
  out.origin_offset_s = spec.origin_offset_s;
  for (int j = 0; j < T; ++j) {
    const int begin = j * kernel;
    const int end = std::min(frames, begin + kernel);
    if (begin >= end) continue;
    out.data.row(j) = spec.data.middleRows(begin, end - begin).colwise().mean();
  }
  return out;
}

Matrix prepare_input(const Spectrogram& reduced, const PipelineConfig& cfg) {
  Matrix x = reduced.data;
  if (cfg.log_spectrogram) x = x.array().log1p().matrix();
  if (cfg.normalize_spectrogram) {
    const double mean = x.mean();
    x.array() -= mean;
    const double var = x.squaredNorm() / static_cast<double>(x.size());
    const double sd = std::sqrt(var);
    if (sd > 1e-8) x /= sd;
  }
  return x;
}

Matrix compute_features(const AudioClip& clip, const PipelineConfig& cfg) {
  check_sample_rate(clip, cfg);
  return prepare_input(reduce_to_T(stft_magnitude(clip, cfg), cfg.temporal_resolution), cfg);
}

}  // namespace kws
