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
#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "kwsdet/baseline.hpp"
#include "kwsdet/checkpoint.hpp"
#include "kwsdet/config.hpp"
#include "kwsdet/dataset.hpp"
#include "kwsdet/decoder.hpp"
#include "kwsdet/metrics.hpp"
#include "kwsdet/pipeline.hpp"
#include "kwsdet/trainer.hpp"

namespace kws::cli {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + p.string());
  out << text;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Content hash over the named inputs, in the given order.
std::string inputs_hash(const std::vector<fs::path>& files) {
  std::uint64_t h = fnv1a64("");
  for (const auto& f : files) {
    h = fnv1a64(f.filename().string(), h);
    if (fs::is_regular_file(f)) h = fnv1a64(read_file(f), h);
  }
  return hex64(h);
}

std::vector<fs::path> corpus_inputs(const fs::path& root) {
  return {root / "alignments.tsv", root / "keywords.txt", root / "splits" / "train.txt",
          root / "splits" / "dev.txt", root / "splits" / "test.txt"};
}

struct Manifest {
  Manifest(std::string cmd, std::vector<std::string> argv, std::uint64_t s, std::string cfg = {})
      : command(std::move(cmd)), args(std::move(argv)), seed(s), config(std::move(cfg)) {}

  std::string command;
  std::vector<std::string> args;
  std::uint64_t seed = 0;
  std::string config;
  std::vector<fs::path> inputs;
  std::vector<std::string> outputs;
  std::string started = utc_now();

  void write(const fs::path& dir) const {
    ordered_json j;
    j["command"] = command;
    j["args"] = args;
    j["seed"] = seed;
    j["config"] = config;
    j["inputs_hash"] = inputs_hash(inputs);
    std::vector<std::string> in;
    for (const auto& p : inputs) in.push_back(p.string());
    j["inputs"] = in;
    j["outputs"] = outputs;
    j["started_utc"] = started;
    j["finished_utc"] = utc_now();
    write_file(dir / "manifest.json", j.dump(2) + "\n");
  }
};

// `--key value` / `--key=value` config overrides left over by CLI11.
void apply_overrides(PipelineConfig& cfg, const std::vector<std::string>& extras) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& tok = extras[i];
    if (tok.rfind("--", 0) != 0) throw ConfigError("unexpected argument '" + tok + "'");
    std::string key = tok.substr(2);
    std::string value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.resize(eq);
    } else {
      if (i + 1 >= extras.size()) throw ConfigError("option --" + key + " needs a value");
      value = extras[++i];
    }
    std::replace(key.begin(), key.end(), '-', '_');
    if (!is_config_key(key)) throw ConfigError("unknown option --" + key);
    set_config_value(cfg, key, value);
  }
}

PipelineConfig base_config(const std::string& config_path) {
  return config_path.empty() ? PipelineConfig{} : load_config(config_path);
}

struct Common {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  int threads = 1;
};

void add_common(CLI::App* sub, Common& c, bool out_required = true) {
  sub->add_option("--config", c.config, "key=value config file")->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "random seed");
  auto* o = sub->add_option("--out", c.out, "output directory");
  if (out_required) o->required();
  sub->add_option("--threads", c.threads, "worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);
  sub->allow_extras();
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> v;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + item + "' in " + what);
    }
  }
  if (v.empty()) throw ConfigError(what + " is empty");
  return v;
}

// Corpus keywords define C; the rest of the config comes from file/flags.
PipelineConfig corpus_config(const Common& c, const std::vector<std::string>& extras,
                             const fs::path& data, KeywordSet& keywords) {
  PipelineConfig cfg = base_config(c.config);
  apply_overrides(cfg, extras);
  keywords = KeywordSet::load(data / "keywords.txt");
  cfg.num_keywords = keywords.size();
  validate(cfg);
  return cfg;
}

fs::path detections_file(const fs::path& p) {
  return fs::is_directory(p) ? p / "detections.jsonl" : p;
}

int cmd_gen_data(const Common& c, const std::vector<std::string>& extras, const SynthSpec& spec,
                 const std::vector<std::string>& args, std::ostream& out) {
  if (!extras.empty()) throw ConfigError("gen-data takes no config overrides ('" + extras[0] + "')");
  Manifest m{"gen-data", args, c.seed};
  generate_synthetic_corpus(spec, c.seed, c.out);
  m.outputs = {"alignments.tsv", "keywords.txt", "patterns.tsv", "audio/", "splits/"};
  m.write(c.out);
  out << "wrote " << spec.num_utterances << " utterances with " << spec.num_keywords
      << " keywords to " << c.out << '\n';
  return kExitOk;
}

int cmd_train(const Common& c, const std::vector<std::string>& extras, const std::string& data,
              const std::string& ablation, const std::string& resume,
              const std::vector<std::string>& args, std::ostream& out) {
  KeywordSet keywords;
  PipelineConfig cfg = corpus_config(c, extras, data, keywords);
  TrainOptions opts;
  opts.seed = c.seed;
  opts.ablation = parse_ablation(ablation);
  opts.keyword_names = keywords.names();
  opts.out_dir = c.out;
  opts.threads = c.threads;
  if (!resume.empty()) opts.resume_from = resume;
  const Corpus corpus = load_corpus(data, cfg);
  const auto train = corpus.split_utterances("train");
  if (train.empty()) throw DataError("corpus has an empty train split");

  Manifest m{"train", args, c.seed, serialize_config(apply_ablation(cfg, opts.ablation))};
  m.inputs = corpus_inputs(data);
  if (!resume.empty()) m.inputs.push_back(resume);
  fs::create_directories(c.out);
  int last_epoch = -1;
  opts.on_step = [&](const StepRecord& r) {
    if (r.epoch != last_epoch) {
      last_epoch = r.epoch;
      out << "epoch " << r.epoch + 1 << " step " << r.step << " loss " << r.loss.L_total << '\n';
    }
  };
  const TrainResult res = train_model(train, cfg, opts);
  m.outputs = {"model.ckpt", "train_log.tsv"};
  m.write(c.out);
  out << "trained " << res.checkpoint.epoch << " epochs, " << res.checkpoint.step << " steps in "
      << res.seconds << " s";
  if (!res.log.empty()) out << "; final loss " << res.log.back().loss.L_total;
  out << '\n';
  return kExitOk;
}

// Config for inference: checkpoint (or --config) plus overrides; the model
// keys must agree with the checkpoint.
PipelineConfig inference_config(const Common& c, const std::vector<std::string>& extras,
                                const Checkpoint& ck) {
  PipelineConfig cfg = c.config.empty() ? ck.cfg : load_config(c.config);
  apply_overrides(cfg, extras);
  validate(cfg);
  if (model_config_hash(cfg) != model_config_hash(ck.cfg)) {
    throw DataError("config hash mismatch: the checkpoint was trained with a different model "
                    "configuration");
  }
  return cfg;
}

int cmd_detect(const Common& c, const std::vector<std::string>& extras, const std::string& ckpt,
               const std::string& data, const std::string& split,
               const std::vector<std::string>& audio, const std::vector<std::string>& args,
               std::ostream& out) {
  const Checkpoint ck = load_checkpoint(ckpt);
  if (ck.params.arch.head != HeadKind::kDetection) {
    throw ConfigError("checkpoint holds a window classifier; use the baseline command");
  }
  const PipelineConfig cfg = inference_config(c, extras, ck);
  const KeywordSet keywords(ck.keywords);
  Manifest m{"detect", args, c.seed, serialize_config(cfg)};
  m.inputs = {ckpt};

  std::vector<Utterance> utts;
  if (!data.empty()) {
    if (!audio.empty()) throw ConfigError("give either --data or --audio, not both");
    const KeywordSet corpus_kw = KeywordSet::load(fs::path(data) / "keywords.txt");
    if (corpus_kw.names() != keywords.names()) {
      throw DataError("corpus keywords differ from the checkpoint's keywords");
    }
    utts = load_corpus(data, cfg).split_utterances(split);
    for (const auto& p : corpus_inputs(data)) m.inputs.push_back(p);
  } else {
    if (audio.empty()) throw ConfigError("detect needs --data or --audio");
    for (const auto& a : audio) {
      Utterance u;
      u.id = fs::path(a).stem().string();
      u.audio_path = a;
      u.duration_s = wav_duration_s(a);
      utts.push_back(std::move(u));
      m.inputs.push_back(a);
    }
  }
  fs::create_directories(c.out);
  const DetectRun run = detect_utterances(ck.params, utts, keywords, cfg, c.threads);
  write_detections(fs::path(c.out) / "detections.jsonl", run.records);
  ordered_json timing;
  timing["audio_s"] = run.audio_s;
  timing["process_s"] = run.process_s;
  timing["rtf"] = rtf(run.process_s, run.audio_s);
  write_file(fs::path(c.out) / "timing.json", timing.dump(2) + "\n");
  m.outputs = {"detections.jsonl", "timing.json"};
  m.write(c.out);
  out << run.records.size() << " detections for " << utts.size() << " utterances, RTF "
      << rtf(run.process_s, run.audio_s) << '\n';
  return kExitOk;
}

void write_report(const fs::path& dir, const EvalReport& report, const std::string& name,
                  std::ostream& out) {
  write_file(dir / "report.json", report.to_json() + "\n");
  const std::string table = report.to_table(name);
  write_file(dir / "report.txt", table);
  out << table;
}

int cmd_eval(const Common& c, const std::vector<std::string>& extras, const std::string& dets,
             const std::string& data, const std::string& split, const std::string& timing,
             const std::string& name, const std::vector<std::string>& args, std::ostream& out) {
  KeywordSet keywords;
  const PipelineConfig cfg = corpus_config(c, extras, data, keywords);
  const Corpus corpus = load_corpus(data, cfg);
  const auto utts = corpus.split_utterances(split);
  const fs::path det_path = detections_file(dets);
  const auto recs = read_detections(det_path);
  EvalReport report = evaluate_records(recs, utts, keywords, cfg);
  report.metadata["split"] = split;
  Manifest m{"eval", args, c.seed, serialize_config(cfg)};
  m.inputs = corpus_inputs(data);
  m.inputs.push_back(det_path);
  if (!timing.empty()) {
    const auto j = nlohmann::json::parse(read_file(timing));
    report.rtf = rtf(j.at("process_s").get<double>(), j.at("audio_s").get<double>());
    m.inputs.push_back(timing);
  }
  fs::create_directories(c.out);
  write_report(c.out, report, name, out);
  m.outputs = {"report.json", "report.txt"};
  m.write(c.out);
  return kExitOk;
}

int cmd_baseline(const Common& c, const std::vector<std::string>& extras, const std::string& ckpt,
                 const std::string& data, const std::string& steps_text, double window,
                 double max_x, const std::vector<std::string>& args, std::ostream& out) {
  const Checkpoint ck = load_checkpoint(ckpt);
  if (ck.params.arch.head != HeadKind::kClassification) {
    throw ConfigError("baseline needs a window-classifier checkpoint (train --ablation cls-head)");
  }
  const PipelineConfig cfg = inference_config(c, extras, ck);
  const KeywordSet keywords(ck.keywords);
  const Corpus corpus = load_corpus(data, cfg);
  if (corpus.keywords.names() != keywords.names()) {
    throw DataError("corpus keywords differ from the checkpoint's keywords");
  }
  const auto dev = corpus.split_utterances("dev");
  const auto test = corpus.split_utterances("test");
  if (dev.empty()) throw DataError("baseline step search needs a non-empty dev split");
  const double L_in = window > 0 ? window : cfg.window_len_s;
  const double mx =
      max_x > 0 ? max_x : max_keyword_length_s(corpus.split_utterances("train"), cfg.num_keywords);

  const StepSearch search = grid_search_step(
      [&](double step) {
        const DetectRun r = classify_utterances(ck.params, dev, keywords, cfg, L_in, step, mx,
                                                c.threads);
        return evaluate_records(r.records, dev, keywords, cfg).map.map;
      },
      parse_list(steps_text, "--steps"), L_in, mx);

  fs::create_directories(c.out);
  const DetectRun run =
      classify_utterances(ck.params, test, keywords, cfg, L_in, search.best_step, mx, c.threads);
  write_detections(fs::path(c.out) / "detections.jsonl", run.records);
  EvalReport report = evaluate_records(run.records, test, keywords, cfg);
  report.classification_accuracy = trimmed_window_accuracy(ck.params, test, cfg, L_in, c.threads);
  std::ostringstream tried;
  for (std::size_t i = 0; i < search.steps.size(); ++i) {
    tried << (i ? "," : "") << search.steps[i] << ":" << search.scores[i];
  }
  std::ostringstream fmt;
  fmt << search.best_step;
  report.metadata["baseline_step_s"] = fmt.str();
  fmt.str("");
  fmt << L_in;
  report.metadata["window_len_s"] = fmt.str();
  report.metadata["dev_map_by_step"] = tried.str();
  report.metadata["split"] = "test";
  write_report(c.out, report, "sliding-window", out);
  Manifest m{"baseline", args, c.seed, serialize_config(cfg)};
  m.inputs = corpus_inputs(data);
  m.inputs.push_back(ckpt);
  m.outputs = {"detections.jsonl", "report.json", "report.txt"};
  m.write(c.out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"kwsdet: anchor-free keyword detection", "kwsdet"};
  app.require_subcommand(1);

  Common gen_c, train_c, det_c, eval_c, base_c;

  SynthSpec spec;
  std::string split_text = "0.8,0.1,0.1";
  auto* gen = app.add_subcommand("gen-data", "write a synthetic tone-pattern corpus");
  add_common(gen, gen_c);
  gen->add_option("--classes", spec.num_keywords, "number of keywords")->check(CLI::PositiveNumber);
  gen->add_option("--utterances", spec.num_utterances)->check(CLI::PositiveNumber);
  gen->add_option("--words", spec.words_per_utterance, "words per utterance")
      ->check(CLI::PositiveNumber);
  gen->add_option("--keyword-rate", spec.keyword_rate)->check(CLI::Range(0.0, 1.0));
  gen->add_option("--snr", spec.snr_db, "noise SNR in dB");
  gen->add_option("--edge-silence", spec.max_edge_silence_s, "max leading/trailing silence (s)");
  gen->add_option("--duration", spec.utterance_s, "utterance length (s)");
  gen->add_option("--split", split_text, "train,dev,test fractions");

  std::string data, ablation = "none", resume;
  auto* train = app.add_subcommand("train", "train a detector or an ablation variant");
  add_common(train, train_c);
  train->add_option("--data", data, "corpus directory")->required()->check(CLI::ExistingDirectory);
  train->add_option("--ablation", ablation, "none | no-unknown | cls-head");
  train->add_option("--resume", resume, "checkpoint to continue from")->check(CLI::ExistingFile);

  std::string ckpt, det_data, split = "test";
  std::vector<std::string> audio;
  auto* det = app.add_subcommand("detect", "run a trained detector");
  add_common(det, det_c);
  det->add_option("--checkpoint", ckpt)->required()->check(CLI::ExistingFile);
  det->add_option("--data", det_data, "corpus directory")->check(CLI::ExistingDirectory);
  det->add_option("--split", split, "train | dev | test | all");
  det->add_option("--audio", audio, "WAV files")->check(CLI::ExistingFile);

  std::string dets, eval_data, eval_split = "test", timing, name = "model";
  auto* ev = app.add_subcommand("eval", "score detections against ground truth");
  add_common(ev, eval_c);
  ev->add_option("--detections", dets, "detections.jsonl or its directory")
      ->required()
      ->check(CLI::ExistingPath);
  ev->add_option("--data", eval_data, "corpus directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--split", eval_split, "train | dev | test | all");
  ev->add_option("--timing", timing, "timing.json from detect, enables RTF")
      ->check(CLI::ExistingFile);
  ev->add_option("--name", name, "model name in the table");

  std::string base_ckpt, base_data, steps = "0.1,0.2,0.3,0.4";
  double window = 0.0, max_x = 0.0;
  auto* base = app.add_subcommand("baseline", "sliding-window classifier baseline");
  add_common(base, base_c);
  base->add_option("--checkpoint", base_ckpt, "cls-head checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  base->add_option("--data", base_data, "corpus directory")->required()->check(CLI::ExistingDirectory);
  base->add_option("--steps", steps, "comma-separated step grid (s)");
  base->add_option("--window", window, "window length L_in (s); default window_len_s");
  base->add_option("--max-x", max_x, "longest keyword (s); default from the train split");

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      spec.split = parse_list(split_text, "--split");
      return cmd_gen_data(gen_c, gen->remaining(), spec, args, out);
    }
    if (train->parsed()) {
      return cmd_train(train_c, train->remaining(), data, ablation, resume, args, out);
    }
    if (det->parsed()) {
      return cmd_detect(det_c, det->remaining(), ckpt, det_data, split, audio, args, out);
    }
    if (ev->parsed()) {
      return cmd_eval(eval_c, ev->remaining(), dets, eval_data, eval_split, timing, name, args,
                      out);
    }
    if (base->parsed()) {
      return cmd_baseline(base_c, base->remaining(), base_ckpt, base_data, steps, window, max_x,
                          args, out);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace kws::cli
