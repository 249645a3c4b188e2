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
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include "kwsdet/dataset.hpp"

namespace kws {
namespace {

constexpr const char* kNames[] = {"alpha", "bravo",  "charlie", "delta",   "echo",   "foxtrot",
                                  "golf",  "hotel",  "india",   "juliett", "kilo",   "lima",
                                  "mike",  "oscar",  "papa",    "quebec",  "romeo",  "sierra",
                                  "tango", "victor", "whiskey", "xray",    "yankee", "zulu"};

constexpr double kMinKeywordS = 0.3;
constexpr double kMaxKeywordS = 0.5;
constexpr double kFadeS = 0.005;

struct PlannedWord {
  std::string text;
  int cls;  // -1 for filler
  std::vector<double> tones_hz;
  double len_s;
  double amplitude;
};

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Sum of equal-length tone segments with raised-cosine edges.
void render_word(const PlannedWord& w, std::size_t begin, std::size_t end, int sr,
                 std::mt19937_64& rng, std::vector<double>& out) {
  const std::size_t n = end - begin;
  const std::size_t k = w.tones_hz.size();
  const auto fade = static_cast<std::size_t>(kFadeS * sr);
  for (std::size_t t = 0; t < k; ++t) {
    const std::size_t b = begin + n * t / k;
    const std::size_t e = begin + n * (t + 1) / k;
    const double phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    const double omega = 2.0 * std::numbers::pi * w.tones_hz[t] / sr;
    for (std::size_t i = b; i < e; ++i) {
      const std::size_t from_start = i - b;
      const std::size_t to_end = e - 1 - i;
      double env = 1.0;
      const std::size_t edge = std::min(from_start, to_end);
      if (edge < fade) env = 0.5 - 0.5 * std::cos(std::numbers::pi * edge / fade);
      out[i] += w.amplitude * env * std::sin(omega * static_cast<double>(from_start) + phase);
    }
  }
}

std::string format_seconds(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<KeywordPattern> synth_keyword_patterns(const SynthSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x6b6579776f726473ULL);
  // Tone grid spaced well beyond one STFT bin (~31 Hz).
  std::vector<double> grid;
  for (double f = 400.0; f <= 3400.0; f += 150.0) grid.push_back(f);
  std::vector<KeywordPattern> out;
  for (int c = 0; c < spec.num_keywords; ++c) {
    KeywordPattern p;
    p.name = c < static_cast<int>(std::size(kNames)) ? kNames[c] : "kw" + std::to_string(c);
    const int tones = 2 + static_cast<int>(rng() % 2);
    std::vector<double> pool = grid;
    std::shuffle(pool.begin(), pool.end(), rng);
    p.tones_hz.assign(pool.begin(), pool.begin() + tones);
    p.base_len_s = uniform(rng, kMinKeywordS, kMaxKeywordS);
    out.push_back(std::move(p));
  }
  return out;
}

void generate_synthetic_corpus(const SynthSpec& spec, std::uint64_t seed,
                               const std::filesystem::path& out_dir) {
  if (spec.num_keywords < 1) throw ConfigError("synthetic corpus needs at least one keyword");
  if (spec.num_utterances < 1) throw ConfigError("synthetic corpus needs at least one utterance");
  if (spec.words_per_utterance < 1) throw ConfigError("words_per_utterance must be >= 1");
  if (spec.keyword_rate < 0 || spec.keyword_rate > 1) throw ConfigError("keyword_rate out of range");
  if (spec.max_edge_silence_s < 0 || 2 * spec.max_edge_silence_s >= spec.utterance_s) {
    throw ConfigError("max_edge_silence_s out of range");
  }
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "audio");
  fs::create_directories(out_dir / "splits");

  const auto patterns = synth_keyword_patterns(spec, seed);
  std::vector<std::string> names;
  for (const auto& p : patterns) names.push_back(p.name);
  const KeywordSet keywords(names);
  keywords.save(out_dir / "keywords.txt");
  {
    std::ofstream pf(out_dir / "patterns.tsv", std::ios::binary | std::ios::trunc);
    for (const auto& p : patterns) {
      pf << p.name << '\t' << format_seconds(p.base_len_s);
      for (double f : p.tones_hz) pf << '\t' << f;
      pf << '\n';
    }
  }

  const int sr = spec.sample_rate_hz;
  const auto total = static_cast<std::size_t>(std::llround(spec.utterance_s * sr));
  std::mt19937_64 rng(seed);
  std::ofstream align(out_dir / "alignments.tsv", std::ios::binary | std::ios::trunc);
  if (!align) throw DataError("cannot write " + (out_dir / "alignments.tsv").string());
  std::vector<std::string> ids;

  for (int u = 0; u < spec.num_utterances; ++u) {
    char idbuf[32];
    std::snprintf(idbuf, sizeof(idbuf), "utt_%05d", u);
    const std::string id = idbuf;
    ids.push_back(id);

    const double lead = uniform(rng, 0.0, spec.max_edge_silence_s + 1e-12);
    const double trail = uniform(rng, 0.0, spec.max_edge_silence_s + 1e-12);
    const double speech = spec.utterance_s - lead - trail;

    std::vector<PlannedWord> words;
    double keyword_total = 0.0;
    for (int i = 0; i < spec.words_per_utterance; ++i) {
      PlannedWord w;
      const bool is_kw = uniform(rng, 0.0, 1.0) < spec.keyword_rate;
      const int cls = static_cast<int>(rng() % static_cast<std::uint64_t>(spec.num_keywords));
      const double jitter = uniform(rng, 0.9, 1.1);
      const double amp = uniform(rng, 0.2, 0.4);
      // Keywords may take at most 70% of the speech span; fillers absorb the rest.
      const double kw_len =
          std::clamp(patterns[static_cast<std::size_t>(cls)].base_len_s * jitter, kMinKeywordS,
                     kMaxKeywordS);
      const bool room = keyword_total + kw_len <= 0.7 * speech;
      if (is_kw && room) {
        const auto& p = patterns[static_cast<std::size_t>(cls)];
        w = {p.name, cls, p.tones_hz, kw_len, amp};
        keyword_total += kw_len;
      } else {
        const int tones = 1 + static_cast<int>(rng() % 3);
        std::vector<double> hz;
        for (int t = 0; t < tones; ++t) hz.push_back(uniform(rng, 250.0, 3500.0));
        w = {"filler", -1, std::move(hz), 0.0, amp};
      }
      words.push_back(std::move(w));
    }
    if (std::none_of(words.begin(), words.end(), [](const PlannedWord& w) { return w.cls < 0; })) {
      keyword_total -= words.back().len_s;
      words.back().cls = -1;
      words.back().text = "filler";
    }
    std::vector<double> weights;
    double weight_sum = 0.0;
    for (const auto& w : words) {
      weights.push_back(w.cls < 0 ? uniform(rng, 0.5, 1.5) : 0.0);
      weight_sum += weights.back();
    }
    const double filler_time = speech - keyword_total;
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (words[i].cls < 0) words[i].len_s = filler_time * weights[i] / weight_sum;
    }

    std::vector<double> signal(total, 0.0);
    double t = lead;
    for (std::size_t i = 0; i < words.size(); ++i) {
      const double end_t = i + 1 == words.size() ? lead + speech : t + words[i].len_s;
      const auto b = static_cast<std::size_t>(std::llround(t * sr));
      const auto e = std::min(total, static_cast<std::size_t>(std::llround(end_t * sr)));
      render_word(words[i], b, e, sr, rng, signal);
      align << id << '\t' << "audio/" << id << ".wav" << '\t' << words[i].text << '\t'
            << format_seconds(static_cast<double>(b) / sr) << '\t'
            << format_seconds(static_cast<double>(e) / sr) << '\n';
      t = end_t;
    }

    double power = 0.0;
    for (double s : signal) power += s * s;
    power /= static_cast<double>(total);
    const double noise_sd = std::sqrt(power / std::pow(10.0, spec.snr_db / 10.0));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& s : signal) s += noise_sd * gauss(rng);

    write_wav(out_dir / "audio" / (id + ".wav"), AudioClip{std::move(signal), sr});
  }
  align.close();

  const DatasetSplit split = split_dataset(ids, spec.split, seed);
  write_id_list(out_dir / "splits" / "train.txt", split.train);
  write_id_list(out_dir / "splits" / "dev.txt", split.dev);
  write_id_list(out_dir / "splits" / "test.txt", split.test);
}

}  // namespace kws
