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
#include "kwsdet/dataset.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace kws {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(lower(w));
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    out.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

double parse_seconds(const std::string& s, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw DataError(where + ": bad time value '" + s + "'");
  }
  return v;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct RawWord {
  std::string text;
  double start_s;
  double end_s;
};

}  // namespace

KeywordSet::KeywordSet(std::vector<std::string> names) : names_(std::move(names)) {
  std::set<std::string> seen;
  for (const auto& n : names_) {
    auto toks = split_words(n);
    if (toks.empty()) throw ConfigError("keyword names must be non-empty");
    std::string joined;
    for (const auto& t : toks) joined += (joined.empty() ? "" : " ") + t;
    if (!seen.insert(joined).second) throw ConfigError("duplicate keyword: " + n);
    tokens_.push_back(std::move(toks));
  }
}

KeywordSet KeywordSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open keyword list: " + path.string());
  std::vector<std::string> names;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    names.push_back(line);
  }
  return KeywordSet(std::move(names));
}

void KeywordSet::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write keyword list: " + path.string());
  for (const auto& n : names_) out << n << '\n';
}

const std::string& KeywordSet::name(int cls) const {
  static const std::string kUnknown = "<unknown>";
  if (cls < 0 || cls >= size()) return kUnknown;
  return names_[static_cast<std::size_t>(cls)];
}

int KeywordSet::classify(const std::string& text) const {
  const auto toks = split_words(text);
  for (std::size_t c = 0; c < tokens_.size(); ++c) {
    if (tokens_[c] == toks) return static_cast<int>(c);
  }
  return unknown_class();
}

std::optional<std::pair<int, int>> KeywordSet::match_at(const std::vector<std::string>& words,
                                                        std::size_t pos) const {
  std::optional<std::pair<int, int>> best;
  for (std::size_t c = 0; c < tokens_.size(); ++c) {
    const auto& toks = tokens_[c];
    // A record may itself hold the whole phrase ("talk about").
    if (pos < words.size() && split_words(words[pos]) == toks && toks.size() > 1) {
      if (!best || best->second < 1) best = std::make_pair(static_cast<int>(c), 1);
      continue;
    }
    if (pos + toks.size() > words.size()) continue;
    bool ok = true;
    for (std::size_t k = 0; k < toks.size() && ok; ++k) ok = lower(words[pos + k]) == toks[k];
    const int used = static_cast<int>(toks.size());
    if (ok && (!best || used > best->second)) best = std::make_pair(static_cast<int>(c), used);
  }
  return best;
}

void assign_frames(std::vector<AlignedWord>& words, const FrameClock& clock) {
  for (auto& w : words) {
    const double a = clock.frame_of_time(w.start_s);
    const double b = clock.frame_of_time(w.end_s);
    w.loc_pc = 0.5 * (a + b);
    w.len = b - a;
  }
}

void check_clip_words(const std::vector<AlignedWord>& words, int T) {
  std::set<int> locs;
  for (const auto& w : words) {
    if (!(w.len > 0)) throw DataError("word '" + w.text + "' has non-positive length");
    if (!(w.loc_pc >= 0 && w.loc_pc < T)) {
      throw DataError("word '" + w.text + "' centre " + format_double(w.loc_pc) +
                      " outside [0, T)");
    }
    if (!locs.insert(w.loc()).second) {
      throw DataError("two words share centre frame " + std::to_string(w.loc()));
    }
  }
}

std::vector<AlignedWord> words_for_clip(const Utterance& utt, double start_s, double clip_s,
                                        const PipelineConfig& cfg) {
  const FrameClock clock = model_clock(cfg);
  std::vector<AlignedWord> out;
  const double src = utt.duration_s;
  if (src + 1e-9 < clip_s) {
    // Tiled: copy every word per repetition, clipped to the clip end.
    for (double shift = 0.0; shift < clip_s; shift += src) {
      for (const auto& w : utt.words) {
        AlignedWord c = w;
        c.start_s = w.start_s + shift;
        c.end_s = std::min(w.end_s + shift, clip_s);
        if (0.5 * (c.start_s + c.end_s) >= clip_s || c.end_s <= c.start_s) continue;
        out.push_back(c);
      }
    }
  } else {
    for (const auto& w : utt.words) {
      const double centre = 0.5 * (w.start_s + w.end_s);
      if (centre < start_s || centre >= start_s + clip_s) continue;
      AlignedWord c = w;
      c.start_s = std::max(w.start_s, start_s) - start_s;
      c.end_s = std::min(w.end_s, start_s + clip_s) - start_s;
      out.push_back(c);
    }
  }
  assign_frames(out, clock);
  const double T = cfg.temporal_resolution;
  std::erase_if(out, [&](const AlignedWord& w) { return w.loc_pc >= T || w.loc_pc < 0; });
  std::stable_sort(out.begin(), out.end(),
                   [](const AlignedWord& a, const AlignedWord& b) { return a.loc_pc < b.loc_pc; });
  // Two centres in one frame would break the target encoding; keep the first.
  std::vector<AlignedWord> unique;
  for (auto& w : out) {
    if (!unique.empty() && unique.back().loc() == w.loc()) continue;
    unique.push_back(std::move(w));
  }
  return unique;
}

std::vector<Utterance> load_alignments(const std::filesystem::path& path,
                                       const KeywordSet& keywords, const PipelineConfig& cfg) {
  return load_alignments(path, keywords, model_clock(cfg));
}

std::vector<Utterance> load_alignments(const std::filesystem::path& path,
                                       const KeywordSet& keywords, const FrameClock& clock) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open alignment file: " + path.string());
  const auto base = path.parent_path();

  std::vector<std::string> order;
  std::map<std::string, std::pair<std::string, std::vector<RawWord>>> records;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::string where = path.filename().string() + ":" + std::to_string(line_no);
    const auto cols = split_tabs(line);
    if (cols.size() != 5) throw DataError(where + ": expected 5 tab-separated fields");
    RawWord w{cols[2], parse_seconds(cols[3], where), parse_seconds(cols[4], where)};
    if (w.text.empty()) throw DataError(where + ": empty word");
    if (!(w.end_s > w.start_s)) throw DataError(where + ": degenerate interval");
    auto [it, inserted] = records.try_emplace(cols[0]);
    if (inserted) {
      order.push_back(cols[0]);
      it->second.first = cols[1];
    } else if (it->second.first != cols[1]) {
      throw DataError(where + ": audio path differs from earlier records of " + cols[0]);
    }
    it->second.second.push_back(std::move(w));
  }

  std::vector<Utterance> utts;
  utts.reserve(order.size());
  for (const auto& id : order) {
    auto& [audio, raw] = records.at(id);
    Utterance u;
    u.id = id;
    u.audio_path = base / audio;
    if (!std::filesystem::exists(u.audio_path)) {
      throw DataError("audio file missing for " + id + ": " + u.audio_path.string());
    }
    u.duration_s = wav_duration_s(u.audio_path);
    std::stable_sort(raw.begin(), raw.end(),
                     [](const RawWord& a, const RawWord& b) { return a.start_s < b.start_s; });
    std::vector<std::string> texts;
    for (const auto& r : raw) {
      if (r.start_s < -1e-9 || r.end_s > u.duration_s + 1e-6) {
        throw DataError(id + ": word '" + r.text + "' interval outside audio duration");
      }
      texts.push_back(r.text);
    }
    for (std::size_t i = 0; i < raw.size();) {
      AlignedWord w;
      if (auto m = keywords.match_at(texts, i)) {
        const auto used = static_cast<std::size_t>(m->second);
        w.cls = m->first;
        for (std::size_t k = 0; k < used; ++k) w.text += (k ? " " : "") + raw[i + k].text;
        w.start_s = raw[i].start_s;
        w.end_s = raw[i + used - 1].end_s;
        i += used;
      } else {
        w.cls = keywords.unknown_class();
        w.text = raw[i].text;
        w.start_s = raw[i].start_s;
        w.end_s = raw[i].end_s;
        ++i;
      }
      u.words.push_back(std::move(w));
    }
    assign_frames(u.words, clock);
    std::stable_sort(u.words.begin(), u.words.end(), [](const AlignedWord& a, const AlignedWord& b) {
      return a.loc_pc < b.loc_pc;
    });
    utts.push_back(std::move(u));
  }
  return utts;
}

void write_alignments(const std::filesystem::path& path, const std::vector<Utterance>& utts) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write alignment file: " + path.string());
  const auto base = path.parent_path();
  for (const auto& u : utts) {
    auto rel = u.audio_path.lexically_relative(base);
    if (rel.empty()) rel = u.audio_path;
    for (const auto& w : u.words) {
      out << u.id << '\t' << rel.generic_string() << '\t' << w.text << '\t'
          << format_double(w.start_s) << '\t' << format_double(w.end_s) << '\n';
    }
  }
  if (!out) throw DataError("failed writing alignment file: " + path.string());
}

DatasetSplit split_dataset(const std::vector<std::string>& ids,
                           const std::vector<double>& fractions, std::uint64_t seed) {
  if (ids.empty()) throw DataError("split_dataset: empty corpus");
  if (fractions.empty() || fractions.size() > 3) {
    throw ConfigError("split_dataset: expected 1 to 3 fractions");
  }
  double sum = 0.0;
  for (double f : fractions) {
    if (f < 0) throw ConfigError("split_dataset: negative fraction");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split_dataset: fractions must sum to 1");

  std::vector<std::string> shuffled = ids;
  std::mt19937_64 rng(seed);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);

  std::size_t last_nonzero = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (fractions[i] > 0) last_nonzero = i;
  }
  std::array<std::vector<std::string>*, 3> parts{};
  DatasetSplit split;
  parts = {&split.train, &split.dev, &split.test};
  if (fractions.size() == 2) parts = {&split.train, &split.test, nullptr};

  const std::size_t n = shuffled.size();
  std::size_t pos = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    std::size_t count = i == last_nonzero
                            ? n - pos
                            : std::min(n - pos, static_cast<std::size_t>(std::llround(
                                                    static_cast<double>(n) * fractions[i])));
    if (i > last_nonzero) count = 0;
    parts[i]->assign(shuffled.begin() + static_cast<std::ptrdiff_t>(pos),
                     shuffled.begin() + static_cast<std::ptrdiff_t>(pos + count));
    pos += count;
  }
  return split;
}

void write_id_list(const std::filesystem::path& path, const std::vector<std::string>& ids) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write id list: " + path.string());
  for (const auto& id : ids) out << id << '\n';
}

std::vector<std::string> read_id_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open id list: " + path.string());
  std::vector<std::string> ids;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

std::vector<Utterance> Corpus::select(const std::vector<std::string>& ids) const {
  std::map<std::string, const Utterance*> by_id;
  for (const auto& u : utterances) by_id[u.id] = &u;
  std::vector<Utterance> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError("utterance id not in alignments: " + id);
    out.push_back(*it->second);
  }
  return out;
}

std::vector<Utterance> Corpus::split_utterances(const std::string& name) const {
  if (name == "train") return select(split.train);
  if (name == "dev") return select(split.dev);
  if (name == "test") return select(split.test);
  if (name == "all") return utterances;
  throw ConfigError("unknown split: " + name);
}

Corpus load_corpus(const std::filesystem::path& root, const PipelineConfig& cfg) {
  Corpus c;
  c.root = root;
  c.keywords = KeywordSet::load(root / "keywords.txt");
  c.utterances = load_alignments(root / "alignments.tsv", c.keywords, cfg);
  const auto splits = root / "splits";
  auto read_opt = [&](const char* name) {
    const auto p = splits / name;
    return std::filesystem::exists(p) ? read_id_list(p) : std::vector<std::string>{};
  };
  c.split.train = read_opt("train.txt");
  c.split.dev = read_opt("dev.txt");
  c.split.test = read_opt("test.txt");
  return c;
}

}  // namespace kws
