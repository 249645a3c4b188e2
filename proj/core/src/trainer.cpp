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
#include "kwsdet/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "kwsdet/parallel.hpp"

namespace kws {
namespace {

// Samples per gradient chunk. Chunks are summed in index order, so the
// reduction is identical for any worker count.
constexpr std::size_t kChunk = 8;
constexpr double kNoiseSnrLoDb = 10.0;
constexpr double kNoiseSnrHiDb = 30.0;
constexpr double kMaxSemitones = 2.0;

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double l2_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

struct SampleResult {
  std::string utterance_id;
  std::uint64_t seed = 0;
  double loss = 0.0;
};

struct BatchResult {
  std::vector<double> grad;
  LossBreakdown loss;
  std::vector<SampleResult> samples;
};

void add_into(std::vector<double>& acc, const std::vector<double>& g) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
}

// Reduces per-chunk results in chunk order.
template <typename PerSample>
BatchResult run_batch(std::size_t param_count, const std::vector<std::size_t>& batch, int threads,
                      PerSample&& per_sample) {
  const std::size_t chunks = (batch.size() + kChunk - 1) / kChunk;
  std::vector<BatchResult> parts(chunks);
  parallel_for(chunks, threads, [&](std::size_t c) {
    BatchResult& part = parts[c];
    part.grad.assign(param_count, 0.0);
    part.loss.L_h = part.loss.L_len = part.loss.L_offset = part.loss.L_total = 0.0;
    const std::size_t end = std::min(batch.size(), (c + 1) * kChunk);
    for (std::size_t k = c * kChunk; k < end; ++k) per_sample(k, part);
  });
  BatchResult total;
  total.grad.assign(param_count, 0.0);
  total.loss.L_h = total.loss.L_len = total.loss.L_offset = total.loss.L_total = 0.0;
  total.loss.N_used = 0;
  for (auto& p : parts) {
    add_into(total.grad, p.grad);
    total.loss.L_h += p.loss.L_h;
    total.loss.L_len += p.loss.L_len;
    total.loss.L_offset += p.loss.L_offset;
    total.loss.L_total += p.loss.L_total;
    total.loss.N_used += p.loss.N_used;
    for (auto& s : p.samples) total.samples.push_back(std::move(s));
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (double& g : total.grad) g *= inv;
  total.loss.L_h *= inv;
  total.loss.L_len *= inv;
  total.loss.L_offset *= inv;
  total.loss.L_total *= inv;
  return total;
}

void dump_batch(const std::filesystem::path& out_dir, int epoch, std::int64_t step,
                const BatchResult& b) {
  if (out_dir.empty()) return;
  std::ofstream out(out_dir / "nan_batch.tsv", std::ios::trunc);
  out << "# epoch " << epoch << " step " << step << '\n';
  out << "utterance_id\tseed\tloss\n";
  for (const auto& s : b.samples) out << s.utterance_id << '\t' << s.seed << '\t' << fmt(s.loss) << '\n';
}

struct WindowItem {
  std::size_t utt = 0;
  Window window;
  int label = 0;
};

}  // namespace

Ablation parse_ablation(std::string_view name) {
  if (name == "none") return Ablation::kNone;
  if (name == "no-unknown") return Ablation::kNoUnknown;
  if (name == "cls-head") return Ablation::kClsHead;
  throw ConfigError("unknown ablation '" + std::string(name) +
                    "' (expected none, no-unknown or cls-head)");
}

std::string ablation_name(Ablation a) {
  switch (a) {
    case Ablation::kNone:
      return "none";
    case Ablation::kNoUnknown:
      return "no-unknown";
    case Ablation::kClsHead:
      return "cls-head";
  }
  return "none";
}

PipelineConfig apply_ablation(PipelineConfig cfg, Ablation a) {
  if (a == Ablation::kNoUnknown) {
    cfg.use_unknown_class = false;
    cfg.max_detections = 3;
  }
  return cfg;
}

void adam_step(std::vector<double>& params, const std::vector<double>& grad, AdamState& s,
               const AdamOptions& opt) {
  if (grad.size() != params.size()) throw ShapeError("adam_step: gradient size mismatch");
  if (s.m.empty()) {
    s.m.assign(params.size(), 0.0);
    s.v.assign(params.size(), 0.0);
  }
  if (s.m.size() != params.size()) throw ShapeError("adam_step: state size mismatch");
  ++s.t;
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(s.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.m[i] = opt.beta1 * s.m[i] + (1 - opt.beta1) * grad[i];
    s.v[i] = opt.beta2 * s.v[i] + (1 - opt.beta2) * grad[i] * grad[i];
    params[i] -= opt.lr * (s.m[i] / c1) / (std::sqrt(s.v[i] / c2) + opt.eps);
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(mix(seed) ^ a) ^ b) ^ c);
}

ExampleSource::ExampleSource(std::vector<Utterance> utts, const PipelineConfig& cfg, int threads)
    : utts_(std::move(utts)), cfg_(cfg), cache_(utts_.size()) {
  parallel_for(utts_.size(), threads, [&](std::size_t i) {
    const Utterance& u = utts_[i];
    if (u.duration_s > cfg_.input_len_s + 1e-9) return;
    AudioClip clip = read_wav(u.audio_path);
    check_sample_rate(clip, cfg_);
    clip = normalize_length(clip, cfg_.input_len_s, LengthMode::kRepeatPad, 0);
    cache_[i] = compute_features(clip, cfg_);
  });
}

TrainingExample ExampleSource::make(std::size_t i, std::uint64_t seed, bool randomize) const {
  const Utterance& u = utts_.at(i);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool noise = randomize && unit(rng) < cfg_.augment_prob;
  const bool pitch = randomize && unit(rng) < cfg_.augment_prob;
  const double snr = kNoiseSnrLoDb + (kNoiseSnrHiDb - kNoiseSnrLoDb) * unit(rng);
  const double semitones = kMaxSemitones * (2.0 * unit(rng) - 1.0);
  const std::uint64_t sub = rng();

  TrainingExample ex;
  double start_s = 0.0;
  if (!noise && !pitch && cache_[i].size() > 0) {
    ex.features = cache_[i];
  } else {
    AudioClip clip = read_wav(u.audio_path);
    check_sample_rate(clip, cfg_);
    const auto target = static_cast<std::size_t>(std::llround(cfg_.input_len_s * clip.sample_rate_hz));
    const LengthMode mode = randomize ? LengthMode::kRandomCrop : LengthMode::kRepeatPad;
    start_s = static_cast<double>(crop_start(clip.samples.size(), target, mode, sub)) /
              clip.sample_rate_hz;
    clip = normalize_length(clip, cfg_.input_len_s, mode, sub);
    if (noise) clip = kws::augment(clip, AugmentKind::kAdditiveNoise, {snr, 0.0}, sub ^ 1);
    if (pitch) clip = kws::augment(clip, AugmentKind::kPitchShift, {snr, semitones}, sub ^ 2);
    ex.features = compute_features(clip, cfg_);
  }
  ex.words = words_for_clip(u, start_s, cfg_.input_len_s, cfg_);
  ex.targets = encode_targets(ex.words, cfg_);
  return ex;
}

LabeledWindows label_clip_windows(const std::vector<AlignedWord>& words, double clip_s,
                                  double L_in, double L_step, double max_x, int num_keywords) {
  const WindowPlan plan = plan_windows(clip_s, L_in, L_step, max_x);
  LabeledWindows out;
  out.windows = plan.windows;
  for (const auto& w : plan.windows) out.labels.push_back(window_label(words, w, num_keywords));
  return out;
}

std::string step_log_header() { return "epoch\tstep\tbatch\tL_h\tL_len\tL_offset\tL_total\tgrad_norm"; }

std::string format_step_record(const StepRecord& r) {
  return std::to_string(r.epoch) + '\t' + std::to_string(r.step) + '\t' + std::to_string(r.batch) +
         '\t' + fmt(r.loss.L_h) + '\t' + fmt(r.loss.L_len) + '\t' + fmt(r.loss.L_offset) + '\t' +
         fmt(r.loss.L_total) + '\t' + fmt(r.grad_norm);
}

TrainResult train_model(const std::vector<Utterance>& train, const PipelineConfig& base_cfg,
                        const TrainOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const PipelineConfig cfg = apply_ablation(base_cfg, opts.ablation);
  validate(cfg);
  if (train.empty()) throw DataError("training set is empty");
  const bool cls_head = opts.ablation == Ablation::kClsHead;

  TrainResult result;
  Checkpoint& ck = result.checkpoint;
  ck.cfg = cfg;
  ck.ablation = ablation_name(opts.ablation);
  ck.keywords = opts.keyword_names;
  if (ck.keywords.empty()) {
    for (int c = 0; c < cfg.num_keywords; ++c) ck.keywords.push_back("kw" + std::to_string(c));
  }
  if (static_cast<int>(ck.keywords.size()) != cfg.num_keywords) {
    throw ConfigError("num_keywords does not match the keyword list");
  }
  if (opts.resume_from) {
    ck = load_checkpoint(*opts.resume_from, cfg);
    if (ck.ablation != ablation_name(opts.ablation)) {
      throw ConfigError("checkpoint was trained with ablation '" + ck.ablation + "'");
    }
    if (!ck.adam) throw DataError("checkpoint has no optimizer state to resume from");
  } else {
    const ArchSpec arch = cls_head ? classification_arch(cfg) : detection_arch(cfg);
    ck.params = init_params(arch, derive_seed(opts.seed, 0x1417));
    ck.adam = AdamState{};
  }
  const AdamOptions adam{cfg.learning_rate};

  // Everything that can fail on bad data happens before the first step.
  ExampleSource source(train, cfg, opts.threads);

  std::vector<WindowItem> windows;
  std::vector<Matrix> clip_features;
  if (cls_head) {
    const double max_x = max_keyword_length_s(train, cfg.num_keywords);
    if (max_x <= 0) throw DataError("training set contains no keywords");
    clip_features.resize(source.size());
    for (std::size_t i = 0; i < source.size(); ++i) {
      TrainingExample ex = source.make(i, 0, false);
      const LabeledWindows lw = label_clip_windows(ex.words, cfg.input_len_s, cfg.window_len_s,
                                                   kClassifierTrainStep, max_x, cfg.num_keywords);
      for (std::size_t k = 0; k < lw.windows.size(); ++k) {
        windows.push_back({i, lw.windows[k], lw.labels[k]});
      }
      clip_features[i] = std::move(ex.features);
    }
  }
  const FrameClock clock = model_clock(cfg);

  std::ofstream log;
  if (!opts.out_dir.empty()) {
    std::filesystem::create_directories(opts.out_dir);
    const auto path = opts.out_dir / "train_log.tsv";
    const bool append = opts.resume_from.has_value() && std::filesystem::exists(path);
    log.open(path, append ? std::ios::app : std::ios::trunc);
    if (!log) throw DataError("cannot write " + path.string());
    if (!append) log << step_log_header() << '\n';
  }

  const std::size_t n_items = cls_head ? windows.size() : source.size();
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
  int end_epoch = cfg.epochs;
  if (opts.max_epochs >= 0) end_epoch = std::min(end_epoch, ck.epoch + opts.max_epochs);

  for (int epoch = ck.epoch; epoch < end_epoch; ++epoch) {
    std::vector<std::size_t> order(n_items);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 shuffle_rng(derive_seed(opts.seed, 1, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    for (std::size_t b0 = 0; b0 < n_items; b0 += batch_size) {
      const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(b0),
                                           order.begin() + static_cast<std::ptrdiff_t>(
                                                               std::min(n_items, b0 + batch_size)));
      BatchResult br;
      if (!cls_head) {
        br = run_batch(ck.params.size(), batch, opts.threads, [&](std::size_t k, BatchResult& part) {
          const std::uint64_t s =
              derive_seed(opts.seed, 2, static_cast<std::uint64_t>(epoch), b0 + k);
          const TrainingExample ex = source.make(batch[k], s, cfg.augment_prob > 0);
          ForwardCache cache;
          const PredictionTensors preds = forward(ck.params, ex.features, &cache);
          PredictionGrads pg;
          const LossBreakdown lb = detector_loss(preds, ex.targets, cfg, &pg);
          add_into(part.grad, backward(ck.params, cache, pg.dY_hat, pg.dL_hat, pg.dO_hat));
          part.loss.L_h += lb.L_h;
          part.loss.L_len += lb.L_len;
          part.loss.L_offset += lb.L_offset;
          part.loss.L_total += lb.L_total;
          part.samples.push_back({source.utterance(batch[k]).id, s, lb.L_total});
        });
      } else {
        br = run_batch(ck.params.size(), batch, opts.threads, [&](std::size_t k, BatchResult& part) {
          const WindowItem& item = windows[batch[k]];
          ForwardCache cache;
          const Matrix x = window_frames(clip_features[item.utt], clock, item.window);
          const Eigen::RowVectorXd p = classification_head_forward(ck.params, x, &cache);
          Eigen::RowVectorXd dlogits = p;
          dlogits[item.label] -= 1.0;
          add_into(part.grad, classification_backward(ck.params, cache, dlogits));
          const double ce = -std::log(std::max(p[item.label], 1e-300));
          part.loss.L_total += ce;
          part.samples.push_back({source.utterance(item.utt).id, b0 + k, ce});
        });
      }

      StepRecord rec;
      rec.epoch = epoch;
      rec.step = ck.step + 1;
      rec.batch = static_cast<int>(batch.size());
      rec.loss = br.loss;
      rec.loss.N_used = br.loss.N_used;
      rec.grad_norm = l2_norm(br.grad);
      if (!std::isfinite(br.loss.L_total) || !all_finite(br.grad)) {
        dump_batch(opts.out_dir, epoch, rec.step, br);
        throw NumericError("non-finite loss or gradient at epoch " + std::to_string(epoch) +
                           ", step " + std::to_string(rec.step) +
                           (opts.out_dir.empty() ? std::string()
                                                 : "; batch written to nan_batch.tsv"));
      }
      adam_step(ck.params.values, br.grad, *ck.adam, adam);
      ck.step = rec.step;
      result.log.push_back(rec);
      if (log) log << format_step_record(rec) << '\n' << std::flush;
      if (opts.on_step) opts.on_step(rec);
    }
    ck.epoch = epoch + 1;
    if (!opts.out_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof(name), "epoch_%03d.ckpt", ck.epoch);
      save_checkpoint(opts.out_dir / name, ck);
      save_checkpoint(opts.out_dir / "model.ckpt", ck);
    }
  }
  if (!opts.out_dir.empty() && !std::filesystem::exists(opts.out_dir / "model.ckpt")) {
    save_checkpoint(opts.out_dir / "model.ckpt", ck);
  }
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace kws
