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
#include "kwsdet/checkpoint.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <sstream>

namespace kws {
namespace {

constexpr std::array<char, 8> kMagic = {'K', 'W', 'S', 'D', 'E', 'T', 'C', 'K'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  template <typename T>
  void pod(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void doubles(const std::vector<double>& v) {
    pod<std::uint64_t>(v.size());
    out_.write(reinterpret_cast<const char*>(v.data()),
               static_cast<std::streamsize>(v.size() * sizeof(double)));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::string bytes, std::string name) : bytes_(std::move(bytes)), name_(std::move(name)) {}
  template <typename T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::vector<double> doubles() {
    const auto n = pod<std::uint64_t>();
    if (n > (bytes_.size() - pos_) / sizeof(double)) fail("array length exceeds file size");
    std::vector<double> v(n);
    std::memcpy(v.data(), bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }
  [[noreturn]] void fail(const std::string& what) const {
    throw DataError("checkpoint " + name_ + ": " + what);
  }

 private:
  void need(std::size_t n) const {
    if (n > bytes_.size() - pos_) fail("truncated");
  }
  std::string bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ostringstream buf(std::ios::binary);
  Writer w(buf);
  buf.write(kMagic.data(), kMagic.size());
  w.pod(kCheckpointVersion);
  w.pod(model_config_hash(ckpt.cfg));
  w.str(serialize_config(ckpt.cfg));
  w.str(ckpt.ablation);
  w.pod<std::uint64_t>(ckpt.keywords.size());
  for (const auto& k : ckpt.keywords) w.str(k);
  const ArchSpec& a = ckpt.params.arch;
  for (int v : {a.freq_bins, a.n_ch, a.depth, a.kernel, a.heat_channels, a.num_classes,
                static_cast<int>(a.head)}) {
    w.pod<std::int32_t>(v);
  }
  w.pod<std::int32_t>(ckpt.epoch);
  w.pod<std::int64_t>(ckpt.step);
  w.doubles(ckpt.params.values);
  w.pod<std::uint8_t>(ckpt.adam ? 1 : 0);
  if (ckpt.adam) {
    w.pod<std::int64_t>(ckpt.adam->t);
    w.doubles(ckpt.adam->m);
    w.doubles(ckpt.adam->v);
  }
  // Write-then-rename so an interrupted save never leaves a torn file.
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    const std::string bytes = buf.str();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("short write on checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  Reader r(ss.str(), path.string());
  std::array<char, 8> magic{};
  for (char& c : magic) c = r.pod<char>();
  if (magic != kMagic) r.fail("not a kwsdet checkpoint");
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion) r.fail("unsupported version " + std::to_string(version));
  const auto hash = r.pod<std::uint64_t>();
  Checkpoint ck;
  try {
    ck.cfg = parse_config(r.str());
    validate(ck.cfg);
  } catch (const ConfigError& e) {
    r.fail(std::string("bad embedded config: ") + e.what());
  }
  if (model_config_hash(ck.cfg) != hash) r.fail("config hash mismatch");
  ck.ablation = r.str();
  const auto n_keywords = r.pod<std::uint64_t>();
  if (n_keywords != static_cast<std::uint64_t>(ck.cfg.num_keywords)) r.fail("keyword list size mismatch");
  for (std::uint64_t i = 0; i < n_keywords; ++i) ck.keywords.push_back(r.str());
  ArchSpec a;
  a.freq_bins = r.pod<std::int32_t>();
  a.n_ch = r.pod<std::int32_t>();
  a.depth = r.pod<std::int32_t>();
  a.kernel = r.pod<std::int32_t>();
  a.heat_channels = r.pod<std::int32_t>();
  a.num_classes = r.pod<std::int32_t>();
  const auto head = r.pod<std::int32_t>();
  if (head != 0 && head != 1) r.fail("unknown head kind");
  a.head = static_cast<HeadKind>(head);
  ck.epoch = r.pod<std::int32_t>();
  ck.step = r.pod<std::int64_t>();
  try {
    ck.params.layout = make_layout(a);
  } catch (const ConfigError& e) {
    r.fail(std::string("bad architecture: ") + e.what());
  }
  ck.params.arch = a;
  ck.params.values = r.doubles();
  if (ck.params.values.size() != ck.params.layout.size) r.fail("parameter count mismatch");
  if (r.pod<std::uint8_t>() != 0) {
    AdamState s;
    s.t = r.pod<std::int64_t>();
    s.m = r.doubles();
    s.v = r.doubles();
    if (s.m.size() != ck.params.size() || s.v.size() != ck.params.size()) {
      r.fail("optimizer state size mismatch");
    }
    ck.adam = std::move(s);
  }
  if (!r.done()) r.fail("trailing bytes");
  return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const PipelineConfig& expected) {
  Checkpoint ck = load_checkpoint(path);
  if (model_config_hash(ck.cfg) != model_config_hash(expected)) {
    throw DataError("checkpoint " + path.string() +
                    " was trained with a different model configuration");
  }
  return ck;
}

}  // namespace kws
