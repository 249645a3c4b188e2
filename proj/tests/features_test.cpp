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

#include <gtest/gtest.h>

#include <complex>
#include <numbers>

#include "test_util.hpp"

namespace kws {
namespace {

AudioClip sine(double hz, double seconds, double amp = 0.5, int sr = 16000) {
  AudioClip c{std::vector<double>(static_cast<std::size_t>(std::llround(seconds * sr))), sr};
  for (std::size_t i = 0; i < c.samples.size(); ++i) {
    c.samples[i] = amp * std::sin(2 * std::numbers::pi * hz * static_cast<double>(i) / sr);
  }
  return c;
}

// Direct DFT magnitude of one analysis frame. The position of the window
// inside the zero-padded frame only changes phase, so it is irrelevant here.
std::vector<double> dft_frame(const std::vector<double>& x, std::size_t start, int win, int nfft) {
  std::vector<double> frame(static_cast<std::size_t>(nfft), 0.0);
  for (int i = 0; i < win; ++i) {
    const double w = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * i / win);
    frame[static_cast<std::size_t>(i)] = w * x[start + static_cast<std::size_t>(i)];
  }
  std::vector<double> mag(static_cast<std::size_t>(nfft / 2 + 1));
  for (int k = 0; k <= nfft / 2; ++k) {
    std::complex<double> acc = 0;
    for (int n = 0; n < nfft; ++n) {
      acc += frame[static_cast<std::size_t>(n)] *
             std::polar(1.0, -2 * std::numbers::pi * k * n / nfft);
    }
    mag[static_cast<std::size_t>(k)] = std::abs(acc);
  }
  return mag;
}

TEST(Stft, FrameCountForDefaultClip) {
  const PipelineConfig cfg;
  const AudioClip clip{std::vector<double>(81760, 0.0), 16000};
  const Spectrogram s = stft_magnitude(clip, cfg);
  EXPECT_EQ(s.frames(), 509);
  EXPECT_EQ(s.bins(), 256);
  EXPECT_EQ(raw_frame_count(cfg), 509);
  EXPECT_EQ(pool_kernel(cfg), 4);
  EXPECT_DOUBLE_EQ(s.frames_per_second, 100.0);
}

TEST(Stft, ZeroClipGivesZeroSpectrogram) {
  const AudioClip clip{std::vector<double>(5000, 0.0), 16000};
  const Spectrogram s = stft_magnitude(clip, PipelineConfig{});
  EXPECT_EQ(s.data.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Stft, TooShortClipThrows) {
  const AudioClip clip{std::vector<double>(399, 0.1), 16000};
  EXPECT_THROW(stft_magnitude(clip, PipelineConfig{}), ShapeError);
}

TEST(Stft, SinePeaksAtExpectedBin) {
  const Spectrogram s = stft_magnitude(sine(1000.0, 0.5), PipelineConfig{});
  for (int f = 0; f < s.frames(); ++f) {
    Eigen::Index arg = 0;
    s.data.row(f).maxCoeff(&arg);
    EXPECT_EQ(arg, 32) << "frame " << f;  // round(1000 * 510 / 16000)
  }
}

TEST(Stft, MatchesDirectDftOracle) {
  std::mt19937_64 rng(3);
  AudioClip clip{std::vector<double>(2400), 16000};
  for (double& v : clip.samples) v = testing::uniform(rng, -1, 1);
  const PipelineConfig cfg;
  const Spectrogram s = stft_magnitude(clip, cfg);
  ASSERT_EQ(s.frames(), 1 + (2400 - 400) / 160);
  for (int f : {0, 3, s.frames() - 1}) {
    const auto ref = dft_frame(clip.samples, static_cast<std::size_t>(f) * 160, 400, 510);
    for (int k = 0; k < 256; ++k) {
      EXPECT_NEAR(s.data(f, k), ref[static_cast<std::size_t>(k)], 1e-9 * (1 + ref[static_cast<std::size_t>(k)]));
    }
  }
  EXPECT_GE(s.data.minCoeff(), 0.0);
}

TEST(LengthNormalization, RepeatPadTiles) {
  AudioClip clip{std::vector<double>(32000), 16000};
  for (std::size_t i = 0; i < clip.samples.size(); ++i) clip.samples[i] = static_cast<double>(i);
  const AudioClip out = normalize_length(clip, 5.11, LengthMode::kRepeatPad, 0);
  ASSERT_EQ(out.samples.size(), 81760u);
  for (std::size_t i = 0; i < out.samples.size(); i += 997) {
    EXPECT_EQ(out.samples[i], static_cast<double>(i % 32000));
  }
}

TEST(LengthNormalization, RandomCropIsSeeded) {
  std::mt19937_64 rng(5);
  AudioClip clip{std::vector<double>(160000), 16000};
  for (double& v : clip.samples) v = testing::uniform(rng, -1, 1);
  const AudioClip a = normalize_length(clip, 5.11, LengthMode::kRandomCrop, 42);
  const AudioClip b = normalize_length(clip, 5.11, LengthMode::kRandomCrop, 42);
  EXPECT_EQ(a.samples, b.samples);
  ASSERT_EQ(a.samples.size(), 81760u);
  const auto start = static_cast<std::size_t>(crop_start(160000, 81760, LengthMode::kRandomCrop, 42));
  EXPECT_EQ(a.samples.front(), clip.samples[start]);
  const AudioClip c = normalize_length(clip, 5.11, LengthMode::kCenterCrop, 0);
  EXPECT_EQ(c.samples.front(), clip.samples[(160000 - 81760) / 2]);
}

TEST(LengthNormalization, ExactLengthIsIdentity) {
  const AudioClip clip = sine(440.0, 5.11);
  for (auto mode : {LengthMode::kRepeatPad, LengthMode::kRandomCrop, LengthMode::kCenterCrop}) {
    EXPECT_EQ(normalize_length(clip, 5.11, mode, 9).samples, clip.samples);
  }
}

TEST(Augment, InfiniteSnrIsIdentity) {
  const AudioClip clip = sine(440.0, 0.5);
  const AudioClip out = augment(clip, AugmentKind::kAdditiveNoise,
                                {std::numeric_limits<double>::infinity(), 0.0}, 1);
  EXPECT_EQ(out.samples, clip.samples);
}

TEST(Augment, ZeroDbNoiseOnUnitPowerSignal) {
  // Unit power: amplitude sqrt(2) sine.
  const AudioClip clip = sine(440.0, 5.0, std::sqrt(2.0));
  const AudioClip out = augment(clip, AugmentKind::kAdditiveNoise, {0.0, 0.0}, 17);
  double p = 0;
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    const double d = out.samples[i] - clip.samples[i];
    p += d * d;
  }
  p /= static_cast<double>(clip.samples.size());
  EXPECT_NEAR(p, 1.0, 0.05);
}

TEST(Augment, ZeroSemitonesIsIdentity) {
  const AudioClip clip = sine(440.0, 0.5);
  const AudioClip out = augment(clip, AugmentKind::kPitchShift, {20.0, 0.0}, 1);
  ASSERT_EQ(out.samples.size(), clip.samples.size());
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    EXPECT_NEAR(out.samples[i], clip.samples[i], 1e-12);
  }
}

TEST(Augment, PitchShiftMovesPitchAndKeepsDuration) {
  const AudioClip clip = sine(1000.0, 1.0);
  const AudioClip out = augment(clip, AugmentKind::kPitchShift, {20.0, 2.0}, 1);
  EXPECT_EQ(out.samples.size(), clip.samples.size());
  const Spectrogram s = stft_magnitude(out, PipelineConfig{});
  const int mid = s.frames() / 2;
  Eigen::Index arg = 0;
  s.data.row(mid).maxCoeff(&arg);
  // 1000 Hz * 2^(2/12) = 1122.5 Hz -> bin 35.8
  EXPECT_NEAR(static_cast<double>(arg), 36.0, 1.0);
}

TEST(Augment, InvalidParamsThrow) {
  const AudioClip clip = sine(440.0, 0.5);
  EXPECT_THROW(augment(clip, AugmentKind::kPitchShift, {20.0, 2.5}, 1), std::invalid_argument);
  EXPECT_THROW(augment(clip, AugmentKind::kAdditiveNoise, {std::nan(""), 0.0}, 1),
               std::invalid_argument);
}

TEST(ReduceToT, DefaultPooling) {
  Spectrogram s;
  s.data = Matrix(509, 2);
  for (int f = 0; f < 509; ++f) s.data.row(f).setConstant(f);
  s.frames_per_second = 100.0;
  const Spectrogram r = reduce_to_T(s, 128);
  EXPECT_EQ(r.frames(), 128);
  EXPECT_DOUBLE_EQ(r.frames_per_second, 25.0);
  EXPECT_DOUBLE_EQ(r.data(0, 0), 1.5);          // mean of 0..3
  EXPECT_DOUBLE_EQ(r.data(126, 0), 505.5);      // 504..507
  EXPECT_DOUBLE_EQ(r.data(127, 0), 508.0);      // partial pool: frame 508 only
}

TEST(ReduceToT, IdentityAndConstant) {
  std::mt19937_64 rng(1);
  Spectrogram s;
  s.data = testing::random_matrix(rng, 128, 5, 0, 1);
  s.frames_per_second = 25.0;
  EXPECT_EQ(reduce_to_T(s, 128).data, s.data);
  Spectrogram c;
  c.data = Matrix::Constant(509, 4, 0.7);
  c.frames_per_second = 100;
  const Spectrogram r = reduce_to_T(c, 128);
  EXPECT_TRUE(r.data.isApproxToConstant(0.7, 1e-15));
  EXPECT_DOUBLE_EQ(r.frames_per_second, 25.0);
  EXPECT_THROW(reduce_to_T(c, 510), ShapeError);
}

TEST(FrameClock, RoundTripWithinOneFrame) {
  const FrameClock clock = model_clock(PipelineConfig{});
  EXPECT_DOUBLE_EQ(clock.frames_per_second, 25.0);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    const double t = testing::uniform(rng, 0, 5.11);
    const double frame = std::floor(clock.frame_of_time(t));
    EXPECT_LT(std::abs(clock.time_of_frame(frame) - t), 1.0 / clock.frames_per_second);
    EXPECT_NEAR(clock.time_of_frame(clock.frame_of_time(t)), t, 1e-12);
  }
}

TEST(Features, PreparedInputShapeAndNormalisation) {
  const PipelineConfig cfg;
  const Matrix x = compute_features(sine(700.0, 5.11), cfg);
  EXPECT_EQ(x.rows(), 128);
  EXPECT_EQ(x.cols(), 256);
  EXPECT_NEAR(x.mean(), 0.0, 1e-10);
  EXPECT_NEAR(std::sqrt(x.squaredNorm() / static_cast<double>(x.size())), 1.0, 1e-10);
  const AudioClip wrong_rate{std::vector<double>(81760, 0.0), 8000};
  EXPECT_THROW(compute_features(wrong_rate, cfg), DataError);
}

TEST(Wav, RoundTripAndRejection) {
  testing::TempDir dir("wav");
  const AudioClip clip = sine(300.0, 0.25);
  write_wav(dir / "a.wav", clip);
  const AudioClip back = read_wav(dir / "a.wav");
  ASSERT_EQ(back.samples.size(), clip.samples.size());
  EXPECT_EQ(back.sample_rate_hz, 16000);
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    EXPECT_NEAR(back.samples[i], clip.samples[i], 1.0 / 32767);
  }
  EXPECT_DOUBLE_EQ(wav_duration_s(dir / "a.wav"), 0.25);
  testing::spit(dir / "bad.wav", "RIFF....WAVEjunk");
  EXPECT_THROW(read_wav(dir / "bad.wav"), DataError);
  EXPECT_THROW(read_wav(dir / "missing.wav"), DataError);
}

}  // namespace
}  // namespace kws
