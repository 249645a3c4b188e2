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
#ifndef KWSDET_DATASET_HPP_
#define KWSDET_DATASET_HPP_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kwsdet/config.hpp"
#include "kwsdet/features.hpp"

namespace kws {

/// Ordered keyword (or key phrase) names; class c is names[c] and the
/// unknown class is size(). Matching is case-insensitive on whole words.
class KeywordSet {
 public:
  KeywordSet() = default;
  explicit KeywordSet(std::vector<std::string> names);

  static KeywordSet load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  int size() const { return static_cast<int>(names_.size()); }
  int unknown_class() const { return size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(int cls) const;

  /// Class of a single word or an already-joined phrase; unknown if absent.
  int classify(const std::string& text) const;
  /// Longest keyword phrase matching words[pos...], if any: (class, words used).
  std::optional<std::pair<int, int>> match_at(const std::vector<std::string>& words,
                                              std::size_t pos) const;

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<std::string>> tokens_;  // lower-cased words per name
};

/// A word occurrence. Positions are in model frames relative to the clip
/// the word was mapped into; start_s/end_s stay in source-audio seconds.
struct AlignedWord {
  std::string text;
  int cls = 0;
  double start_s = 0.0;
  double end_s = 0.0;
  double loc_pc = 0.0;
  double len = 0.0;

  int loc() const { return static_cast<int>(std::floor(loc_pc)); }
  double ofs() const { return loc_pc - std::floor(loc_pc); }
  bool operator==(const AlignedWord&) const = default;
};

struct Utterance {
  std::string id;
  std::filesystem::path audio_path;
  std::vector<AlignedWord> words;  // sorted by loc_pc
  double duration_s = 0.0;
  bool operator==(const Utterance&) const = default;
};

/// Recompute frame-space positions of every word under `clock`.
void assign_frames(std::vector<AlignedWord>& words, const FrameClock& clock);

/// Throws DataError when a clip-level word list breaks the target
/// invariants (centre inside [0, T), positive length, distinct centres).
void check_clip_words(const std::vector<AlignedWord>& words, int T);

/// Words of an utterance mapped into a length-normalised clip that starts
/// at `start_s` in the source audio: tiled when the source is shorter than
/// the clip, otherwise the words whose centres fall in the window, clipped.
std::vector<AlignedWord> words_for_clip(const Utterance& utt, double start_s, double clip_s,
                                        const PipelineConfig& cfg);

/// Tab-separated `utterance_id  audio_path  word  start_s  end_s`. Audio
/// paths are relative to the file's directory.
std::vector<Utterance> load_alignments(const std::filesystem::path& path,
                                       const KeywordSet& keywords, const PipelineConfig& cfg);
std::vector<Utterance> load_alignments(const std::filesystem::path& path,
                                       const KeywordSet& keywords, const FrameClock& clock);
void write_alignments(const std::filesystem::path& path, const std::vector<Utterance>& utts);

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> dev;
  std::vector<std::string> test;
};

/// Seeded shuffle, then consecutive slices of round(n * f) utterances (the
/// last non-empty fraction takes the remainder). One to three fractions.
DatasetSplit split_dataset(const std::vector<std::string>& ids,
                           const std::vector<double>& fractions, std::uint64_t seed);

void write_id_list(const std::filesystem::path& path, const std::vector<std::string>& ids);
std::vector<std::string> read_id_list(const std::filesystem::path& path);

/// Corpus directory: audio/*.wav, alignments.tsv, keywords.txt,
/// splits/{train,dev,test}.txt.
struct Corpus {
  std::filesystem::path root;
  KeywordSet keywords;
  std::vector<Utterance> utterances;
  DatasetSplit split;

  std::vector<Utterance> select(const std::vector<std::string>& ids) const;
  std::vector<Utterance> split_utterances(const std::string& name) const;
};

Corpus load_corpus(const std::filesystem::path& root, const PipelineConfig& cfg);

/// Tone-pattern stand-in for speech: keywords are fixed 2-3 tone sequences,
/// filler words are random tone sequences, and words abut without gaps.
struct SynthSpec {
  int num_keywords = 3;
  int num_utterances = 200;
  double utterance_s = 5.11;
  int words_per_utterance = 12;
  double keyword_rate = 0.25;
  double snr_db = 20.0;
  double max_edge_silence_s = 0.0;  // leading/trailing silence, each side
  std::vector<double> split = {0.8, 0.1, 0.1};
  int sample_rate_hz = 16000;
};

struct KeywordPattern {
  std::string name;
  std::vector<double> tones_hz;
  double base_len_s = 0.4;
};

/// Deterministic keyword patterns for a spec and seed.
std::vector<KeywordPattern> synth_keyword_patterns(const SynthSpec& spec, std::uint64_t seed);

/// Writes a corpus to `out_dir` (created if needed). Byte-identical for a
/// fixed spec and seed.
void generate_synthetic_corpus(const SynthSpec& spec, std::uint64_t seed,
                               const std::filesystem::path& out_dir);

}  // namespace kws

#endif  // KWSDET_DATASET_HPP_
