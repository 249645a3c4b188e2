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
#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

#include "kwsdet/features.hpp"

namespace kws {
namespace {

struct WavInfo {
  int sample_rate = 0;
  std::uint32_t data_bytes = 0;
  std::streamoff data_offset = 0;
};

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::ofstream& out, std::uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                                 static_cast<char>((v >> 16) & 0xff),
                                 static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

void put16(std::ofstream& out, std::uint16_t v) {
  const std::array<char, 2> b = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b.data(), 2);
}

WavInfo read_header(std::ifstream& in, const std::filesystem::path& path) {
  auto fail = [&](const std::string& why) -> DataError {
    return DataError(path.string() + ": " + why);
  };
  unsigned char riff[12];
  if (!in.read(reinterpret_cast<char*>(riff), 12)) throw fail("truncated WAV header");
  if (std::memcmp(riff, "RIFF", 4) != 0 || std::memcmp(riff + 8, "WAVE", 4) != 0) {
    throw fail("not a RIFF/WAVE file");
  }
  WavInfo info;
  bool have_fmt = false;
  unsigned char chunk[8];
  while (in.read(reinterpret_cast<char*>(chunk), 8)) {
    const std::uint32_t size = le32(chunk + 4);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      std::vector<unsigned char> fmt(size);
      if (size < 16 || !in.read(reinterpret_cast<char*>(fmt.data()), size)) {
        throw fail("bad fmt chunk");
      }
      const auto format = le16(fmt.data());
      const auto channels = le16(fmt.data() + 2);
      const auto bits = le16(fmt.data() + 14);
      if (format != 1 || bits != 16) throw fail("only 16-bit PCM WAV is supported");
      if (channels != 1) throw fail("only mono WAV is supported");
      info.sample_rate = static_cast<int>(le32(fmt.data() + 4));
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw fail("data chunk before fmt chunk");
      info.data_bytes = size;
      info.data_offset = in.tellg();
      return info;
    } else {
      in.seekg(size + (size & 1u), std::ios::cur);
    }
    if (size & 1u && std::memcmp(chunk, "fmt ", 4) == 0) in.seekg(1, std::ios::cur);
  }
  throw fail("missing data chunk");
}

}  // namespace

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open audio file: " + path.string());
  const WavInfo info = read_header(in, path);
  const std::size_t n = info.data_bytes / 2;
  std::vector<unsigned char> raw(n * 2);
  if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw DataError(path.string() + ": truncated data chunk");
  }
  AudioClip clip;
  clip.sample_rate_hz = info.sample_rate;
  clip.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = static_cast<std::int16_t>(le16(raw.data() + 2 * i));
    clip.samples[i] = v / 32768.0;
  }
  return clip;
}

double wav_duration_s(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open audio file: " + path.string());
  const WavInfo info = read_header(in, path);
  return static_cast<double>(info.data_bytes / 2) / info.sample_rate;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write audio file: " + path.string());
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  out.write("RIFF", 4);
  put32(out, 36 + data_bytes);
  out.write("WAVEfmt ", 8);
  put32(out, 16);
  put16(out, 1);
  put16(out, 1);
  put32(out, static_cast<std::uint32_t>(clip.sample_rate_hz));
  put32(out, static_cast<std::uint32_t>(clip.sample_rate_hz) * 2);
  put16(out, 2);
  put16(out, 16);
  out.write("data", 4);
  put32(out, data_bytes);
  std::vector<char> pcm(clip.samples.size() * 2);
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    const double s = std::clamp(clip.samples[i], -1.0, 32767.0 / 32768.0);
    const auto v = static_cast<std::int16_t>(std::lround(s * 32768.0));
    const auto u = static_cast<std::uint16_t>(v);
    pcm[2 * i] = static_cast<char>(u & 0xff);
    pcm[2 * i + 1] = static_cast<char>((u >> 8) & 0xff);
  }
  out.write(pcm.data(), static_cast<std::streamsize>(pcm.size()));
  if (!out) throw DataError("failed writing audio file: " + path.string());
}

}  // namespace kws
