// tools/cli.cc

// Copyright 2026 The BeamSpeech Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "beamspeech/audio_io.h"
#include "beamspeech/checkpoint.h"
#include "beamspeech/corpus.h"
#include "beamspeech/keyvalue.h"
#include "beamspeech/pipeline.h"
#include "json.hpp"

namespace beamspeech::cli {

namespace {

namespace fs = std::filesystem;

// Bad flags or flag combinations detected after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Applies BEAMSPEECH_SEED when it is set.
void ApplySeedEnv(std::uint64_t &seed) {
  if (const char *env = std::getenv("BEAMSPEECH_SEED"); env && *env) {
    try {
      seed = ParseUint("BEAMSPEECH_SEED", env);
    } catch (const std::invalid_argument &e) {
      throw UsageError(e.what());
    }
  }
}

std::string Stem(const std::string &path) { return fs::path(path).stem().string(); }

// ---------------------------------------------------------------- corpus

struct CorpusArgs {
  std::string out, config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> train, dev, eval, channels;
  std::optional<std::string> noise;
  std::optional<double> snr_min, snr_max;
};

int CmdCorpus(const CorpusArgs &a, std::ostream &out) {
  CorpusConfig cfg;
  if (!a.config.empty()) {
    try {
      cfg = ParseCorpusConfig(ReadTextFile(a.config));
    } catch (const std::invalid_argument &e) {
      throw UsageError(a.config + ": " + e.what());
    }
  }
  ApplySeedEnv(cfg.seed);
  if (a.seed) cfg.seed = *a.seed;
  if (a.train) cfg.num_train = *a.train;
  if (a.dev) cfg.num_dev = *a.dev;
  if (a.eval) cfg.num_eval = *a.eval;
  if (a.channels) cfg.num_channels = *a.channels;
  if (a.noise) cfg.noise = ParseNoiseKind(*a.noise);
  if (a.snr_min) cfg.snr_min_db = *a.snr_min;
  if (a.snr_max) cfg.snr_max_db = *a.snr_max;
  BuildCorpus(cfg, a.out);
  out << "wrote " << cfg.num_train << " train, " << cfg.num_dev << " dev, " << cfg.num_eval
      << " eval utterances to " << a.out << '\n';
  return kExitOk;
}

// ----------------------------------------------------------------- train

struct RunArgs {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  bool mask_ref_fixed = false;
  std::optional<std::size_t> epochs;
  std::optional<std::string> corpus, out;
};

RunConfig ResolveRunConfig(const RunArgs &a) {
  try {
    RunConfig cfg;
    if (!a.config.empty()) cfg = LoadRunConfig(a.config);
    ApplySeedEnv(cfg.seed);
    for (const auto &kv : a.sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
      auto trim = [](std::string s) {
        while (!s.empty() && s.front() == ' ') s.erase(s.begin());
        while (!s.empty() && s.back() == ' ') s.pop_back();
        return s;
      };
      cfg.Set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
    }
    if (a.seed) cfg.seed = *a.seed;
    if (a.variant) cfg.variant = *a.variant;
    if (a.mask_ref_fixed) cfg.mask_ref_fixed = true;
    if (a.epochs) cfg.epochs = *a.epochs;
    if (a.corpus) cfg.corpus = *a.corpus;
    if (a.out) cfg.out = *a.out;
    cfg.Validate();
    return cfg;
  } catch (const std::invalid_argument &e) {
    throw UsageError(e.what());
  }
}

int CmdTrain(const RunArgs &a, std::ostream &out) {
  RunConfig cfg = ResolveRunConfig(a);
  // filter_net is sized for the corpus' microphone count.
  cfg.filter_channels =
      ParseCorpusConfig(ReadTextFile((fs::path(cfg.corpus) / "corpus.cfg").string())).num_channels;
  const Vocabulary vocab = LoadCorpusVocabulary(cfg.corpus);
  Model model = Model::Create(cfg, vocab);
  const auto train = LoadSplit(cfg.corpus, "train", model.stft, vocab);
  const auto dev = LoadSplit(cfg.corpus, "dev", model.stft, vocab);
  fs::create_directories(cfg.out);
  WriteTextFile((fs::path(cfg.out) / "run.cfg").string(), DumpRunConfig(cfg));
  Train(model, train, dev, cfg.out, [&out](const EpochMetrics &m) { out << MetricsJson(m) << '\n'; });
  out << "final checkpoint: " << (fs::path(cfg.out) / CheckpointName(cfg.epochs)).string() << '\n';
  return kExitOk;
}

// --------------------------------------------------------------- enhance

struct EnhanceArgs {
  std::string model, in, out, speech;
  std::size_t ref = 0;
};

void DumpSpectrogram(const fs::path &dir, const std::string &name, const ComplexTensor &spec) {
  WriteSpectrogramPgm((dir / (name + ".pgm")).string(), spec);
  WriteSpectrogramCsv((dir / (name + ".csv")).string(), spec);
}

int CmdEnhance(const EnhanceArgs &a, std::ostream &out) {
  if (a.model.empty() && a.speech.empty())
    throw UsageError("enhance needs --model, or --speech for oracle masks");
  const Waveform input = ReadAudio(a.in);
  input.Validate();
  fs::create_directories(a.out);
  const fs::path dir(a.out);

  StftOptions opts;
  ComplexTensor enhanced;
  if (!a.speech.empty()) {
    // Oracle masks from the known speech images; the model is not used.
    Utterance utt;
    utt.noisy = input;
    utt.speech = ReadAudio(a.speech);
    if (utt.speech.num_channels() != input.num_channels() ||
        utt.speech.num_samples() != input.num_samples() || utt.speech.sample_rate != input.sample_rate)
      throw std::runtime_error("--speech does not match the input's layout");
    utt.noise = input;
    for (std::size_t c = 0; c < input.num_channels(); ++c)
      for (std::size_t n = 0; n < input.num_samples(); ++n)
        utt.noise.samples[c][n] -= utt.speech.samples[c][n];
    if (a.model.empty()) {
      opts = input.sample_rate == 16000 ? StftOptions::Full16k() : StftOptions::Tiny();
      opts.sample_rate = input.sample_rate;
    } else {
      opts = LoadModel(a.model).model.stft;
    }
    if (a.ref >= input.num_channels()) throw UsageError("--ref is out of range");
    const SnrReport snr = OracleMvdrSnr(utt, opts, a.ref);
    const MaskPair masks = OracleMasks(utt, opts, a.ref);
    Tape tape;
    enhanced = MvdrWithMasks(ConstantC(tape, Stft(input, opts).coeffs), tape.Constant(masks.speech),
                             tape.Constant(masks.noise), a.ref)
                   .value();
    out << std::fixed << std::setprecision(2) << "best input SNR " << snr.best_input_db
        << " dB, oracle MVDR output SNR " << snr.output_db << " dB, gain " << snr.gain_db()
        << " dB\n";
  } else {
    const LoadedModel lm = LoadModel(a.model);
    const Model &model = lm.model;
    opts = model.stft;
    if (input.sample_rate != opts.sample_rate)
      throw std::runtime_error("input sample rate does not match the model");
    Tape tape;
    ParamScope ps(tape, model.params);
    enhanced = RunFrontEnd(ps, model, Stft(input, opts)).enhance.enhanced.value();
  }

  const MultichannelStft X = Stft(input, opts);
  for (std::size_t c = 0; c < X.channels(); ++c)
    DumpSpectrogram(dir, "channel" + std::to_string(c + 1), X.Channel(c));
  DumpSpectrogram(dir, "enhanced", enhanced);
  Waveform w;
  w.sample_rate = input.sample_rate;
  w.samples = {Istft(enhanced, opts, input.num_samples())};
  WriteWav((dir / "enhanced.wav").string(), w, WavFormat::kFloat32);
  out << "wrote " << (dir / "enhanced.wav").string() << " and spectrograms for "
      << X.channels() << " channel(s), " << X.frames() << " frames x " << X.bins() << " bins\n";
  return kExitOk;
}

// ------------------------------------------------------------- recognize

struct RecognizeArgs {
  std::string model, corpus, split = "eval", out, channels;
};

void CheckVocabulary(const Model &model, const Vocabulary &corpus_vocab) {
  if (model.vocab.alphabet() != corpus_vocab.alphabet())
    throw std::runtime_error("corpus vocabulary '" + corpus_vocab.alphabet() +
                             "' differs from the model's '" + model.vocab.alphabet() + "'");
}

int CmdRecognize(const RecognizeArgs &a, std::ostream &out) {
  const LoadedModel lm = LoadModel(a.model);
  const Model &model = lm.model;
  const Vocabulary vocab = LoadCorpusVocabulary(a.corpus);
  CheckVocabulary(model, vocab);
  auto data = LoadSplit(a.corpus, a.split, model.stft, vocab);
  if (!a.channels.empty()) {
    const auto sel = ParseChannelSpec(a.channels);
    for (auto &ex : data) ex.stft = ex.stft.Select(sel);
  }
  std::vector<HypothesisRecord> records;
  for (const auto &ex : data) records.push_back(Recognize(model, ex));
  WriteHypotheses(a.out, records);
  out << "wrote " << records.size() << " hypotheses to " << a.out << '\n';
  return kExitOk;
}

// ----------------------------------------------------------------- score

struct ScoreArgs {
  std::string corpus, refs;
  std::vector<std::string> splits;
  std::vector<std::string> hyps;
  bool per_utt = false;
};

using RefMap = std::map<std::string, std::string>;

RefMap ReadRefs(const std::string &path) {
  // Either a corpus manifest (6 fields) or a hypothesis dump (3 fields).
  RefMap refs;
  std::istringstream in(ReadTextFile(path));
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    const auto fields = std::count(line.begin(), line.end(), '\t') + 1;
    if (fields == 6) {
      for (const auto &e : ReadManifest(path)) refs[e.id] = e.transcript;
      return refs;
    }
    break;
  }
  for (const auto &r : ReadHypotheses(path)) refs[r.utterance] = r.text;
  return refs;
}

struct Tally {
  std::size_t edits = 0;
  std::size_t ref_chars = 0;
  double cer() const { return ref_chars ? static_cast<double>(edits) / ref_chars : 0.0; }
};

Labels CodePoints(const std::string &text, std::map<std::string, int> &ids) {
  Labels out;
  for (const auto &ch : SplitUtf8(text)) out.push_back(ids.emplace(ch, static_cast<int>(ids.size())).first->second);
  return out;
}

int CmdScore(const ScoreArgs &a, std::ostream &out) {
  if (a.corpus.empty() == a.refs.empty()) throw UsageError("score needs exactly one of --corpus or --refs");
  std::map<std::string, RefMap> refsets;
  std::vector<std::string> columns;
  const std::string default_split = a.refs.empty() ? (a.splits.empty() ? "eval" : a.splits.front())
                                                   : Stem(a.refs);
  if (!a.refs.empty()) {
    refsets[default_split] = ReadRefs(a.refs);
    columns.push_back(default_split);
  } else {
    for (const auto &s : a.splits.empty() ? std::vector<std::string>{"eval"} : a.splits) {
      RefMap m;
      for (const auto &e : ReadManifest((fs::path(a.corpus) / (s + ".tsv")).string())) m[e.id] = e.transcript;
      refsets[s] = std::move(m);
      columns.push_back(s);
    }
  }

  std::vector<std::string> rows;
  std::map<std::pair<std::string, std::string>, Tally> table;
  std::map<std::string, int> ids;
  for (const auto &spec : a.hyps) {
    // [label[@split]=]path
    std::string label, split = default_split, path = spec;
    if (const auto eq = spec.find('='); eq != std::string::npos) {
      label = spec.substr(0, eq);
      path = spec.substr(eq + 1);
      if (const auto at = label.find('@'); at != std::string::npos) {
        split = label.substr(at + 1);
        label = label.substr(0, at);
      }
    }
    if (label.empty()) label = Stem(path);
    if (!refsets.count(split)) throw UsageError("split '" + split + "' was not loaded; add --split " + split);
    const RefMap &refs = refsets[split];
    if (refs.empty()) throw std::runtime_error("no references for split " + split);
    std::map<std::string, std::string> hyp;
    for (const auto &r : ReadHypotheses(path)) {
      if (!refs.count(r.utterance))
        throw std::runtime_error(path + ": no reference for utterance " + r.utterance);
      hyp[r.utterance] = r.text;
    }
    if (std::find(rows.begin(), rows.end(), label) == rows.end()) rows.push_back(label);
    Tally &t = table[{label, split}];
    for (const auto &[id, ref_text] : refs) {
      const Labels ref = CodePoints(ref_text, ids);
      const auto it = hyp.find(id);
      const Labels h = it == hyp.end() ? Labels{} : CodePoints(it->second, ids);
      const std::size_t e = ref.empty() ? h.size() : EditDistance(h, ref);
      t.edits += e;
      t.ref_chars += ref.size();
      if (a.per_utt)
        out << label << '\t' << split << '\t' << id << '\t' << std::fixed << std::setprecision(4)
            << (ref.empty() ? 0.0 : static_cast<double>(e) / ref.size()) << '\n';
    }
  }

  out << std::left << std::setw(16) << "CER [%]";
  for (const auto &c : columns) out << std::right << std::setw(10) << c;
  out << '\n';
  for (const auto &r : rows) {
    out << std::left << std::setw(16) << r;
    for (const auto &c : columns) {
      const auto it = table.find({r, c});
      if (it == table.end())
        out << std::right << std::setw(10) << "-";
      else
        out << std::right << std::setw(10) << std::fixed << std::setprecision(2) << 100.0 * it->second.cer();
    }
    out << '\n';
  }
  return kExitOk;
}

// -------------------------------------------------------------- channels

struct ChannelsArgs {
  std::string model, corpus, split = "dev";
  std::vector<std::string> specs;
};

int CmdChannels(const ChannelsArgs &a, std::ostream &out) {
  const LoadedModel lm = LoadModel(a.model);
  const Model &model = lm.model;
  if (model.variant() != BeamformerVariant::kMaskMvdr)
    throw std::runtime_error("channels: unsupported for " + VariantName(model.variant()) +
                             " checkpoints; the mask_mvdr beamformer is required");
  const Vocabulary vocab = LoadCorpusVocabulary(a.corpus);
  CheckVocabulary(model, vocab);
  const auto data = LoadSplit(a.corpus, a.split, model.stft, vocab);
  if (data.empty()) throw std::runtime_error("channels: empty split " + a.split);
  const std::size_t C = data.front().stft.channels();
  std::vector<std::string> specs = a.specs;
  if (specs.empty()) {
    std::string all, rev;
    for (std::size_t c = 0; c < C; ++c) {
      specs.push_back(std::to_string(c + 1));
      all += (c ? "_" : "") + std::to_string(c + 1);
      rev += (c ? "_" : "") + std::to_string(C - c);
    }
    if (C > 1) {
      specs.push_back(all);
      specs.push_back(rev);
    }
  }
  out << std::left << std::setw(16) << "channels" << "accuracy\n";
  for (const auto &spec : specs) {
    std::vector<std::size_t> sel;
    try {
      sel = ParseChannelSpec(spec);
    } catch (const std::invalid_argument &e) {
      throw UsageError(e.what());
    }
    for (std::size_t c : sel)
      if (c >= C) throw UsageError("channel " + std::to_string(c + 1) + " exceeds the " + std::to_string(C) + " recorded");
    const EvalResult r = Evaluate(model, data, sel);
    out << std::left << std::setw(16) << spec << std::fixed << std::setprecision(4) << r.tokens.accuracy()
        << '\n';
  }
  return kExitOk;
}

// --------------------------------------------------------------- inspect

int CmdInspect(const std::string &path, std::ostream &out) {
  nlohmann::ordered_json j;
  const fs::path p(path);
  if (fs::is_directory(p)) {
    const auto cfg = ParseCorpusConfig(ReadTextFile((p / "corpus.cfg").string()));
    j["kind"] = "corpus";
    j["alphabet"] = cfg.alphabet;
    j["channels"] = cfg.num_channels;
    j["sample_rate"] = cfg.sample_rate;
    j["noise"] = NoiseKindName(cfg.noise);
    for (const char *split : kSplitNames)
      j["splits"][split] = ReadManifest((p / (std::string(split) + ".tsv")).string()).size();
  } else if (p.extension() == ".wav" || p.extension() == ".raw") {
    const Waveform w = ReadAudio(path);
    j["kind"] = "audio";
    j["channels"] = w.num_channels();
    j["sample_rate"] = w.sample_rate;
    j["samples"] = w.num_samples();
    j["seconds"] = static_cast<double>(w.num_samples()) / w.sample_rate;
  } else {
    const LoadedModel lm = LoadModel(path);
    j["kind"] = "checkpoint";
    j["epoch"] = lm.epoch;
    j["variant"] = lm.model.config.variant;
    j["profile"] = ProfileName(lm.model.config.profile);
    j["alphabet"] = lm.model.vocab.alphabet();
    j["optimizer_eps"] = lm.eps;
    j["num_parameters"] = lm.model.params.NumScalars();
    for (const auto &[name, t] : lm.model.params.all()) j["parameters"][name] = t.shape();
  }
  out << j.dump(2) << '\n';
  return kExitOk;
}

}  // namespace

int Run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"beamspeech: multichannel end-to-end speech recognition toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  CorpusArgs corpus_args;
  auto *corpus = app.add_subcommand("corpus", "Generate a synthetic multichannel corpus");
  corpus->add_option("--out", corpus_args.out, "Output directory")->required();
  corpus->add_option("--config", corpus_args.config, "Corpus key = value file");
  corpus->add_option("--seed", corpus_args.seed, "Corpus seed");
  corpus->add_option("--train", corpus_args.train, "Training utterances");
  corpus->add_option("--dev", corpus_args.dev, "Development utterances");
  corpus->add_option("--eval", corpus_args.eval, "Evaluation utterances");
  corpus->add_option("--channels", corpus_args.channels, "Microphones per scene")->check(CLI::PositiveNumber);
  corpus->add_option("--noise", corpus_args.noise, "white, babble or point");
  corpus->add_option("--snr-min", corpus_args.snr_min, "Lowest SNR in dB");
  corpus->add_option("--snr-max", corpus_args.snr_max, "Highest SNR in dB");

  RunArgs run_args;
  auto *train = app.add_subcommand("train", "Train a model on a corpus");
  train->add_option("--config", run_args.config, "Run key = value file");
  train->add_option("--set", run_args.sets, "Override one config key (key=value)");
  train->add_option("--seed", run_args.seed, "Random seed");
  train->add_option("--variant", run_args.variant, "noisy, filter_net or mask_mvdr");
  train->add_flag("--mask-ref-fixed", run_args.mask_ref_fixed, "Pin the MVDR reference channel");
  train->add_option("--epochs", run_args.epochs, "Training epochs");
  train->add_option("--corpus", run_args.corpus, "Corpus directory");
  train->add_option("--out", run_args.out, "Output directory for checkpoints and metrics");

  EnhanceArgs enhance_args;
  auto *enhance = app.add_subcommand("enhance", "Enhance a multichannel recording");
  enhance->add_option("--model", enhance_args.model, "Checkpoint");
  enhance->add_option("--in", enhance_args.in, "Input WAV or raw audio")->required();
  enhance->add_option("--out", enhance_args.out, "Output directory")->required();
  enhance->add_option("--speech", enhance_args.speech,
                      "Speech images of the input; enables oracle-mask MVDR");
  enhance->add_option("--ref", enhance_args.ref, "Reference channel for oracle MVDR (0-based)");

  RecognizeArgs rec_args;
  auto *recognize = app.add_subcommand("recognize", "Decode a corpus split");
  recognize->add_option("--model", rec_args.model, "Checkpoint")->required();
  recognize->add_option("--corpus", rec_args.corpus, "Corpus directory")->required();
  recognize->add_option("--split", rec_args.split, "train, dev or eval");
  recognize->add_option("--out", rec_args.out, "Hypothesis TSV")->required();
  recognize->add_option("--channels", rec_args.channels, "Channel order such as 2_1");

  ScoreArgs score_args;
  auto *score = app.add_subcommand("score", "Character error rates of hypothesis files");
  score->add_option("--corpus", score_args.corpus, "Corpus directory holding the references");
  score->add_option("--refs", score_args.refs, "Reference file (manifest or hypothesis TSV)");
  score->add_option("--split", score_args.splits, "Splits to score against (default eval)");
  score->add_option("--hyp", score_args.hyps, "[label[@split]=]hypothesis TSV")->required();
  score->add_flag("--per-utt", score_args.per_utt, "Also print one line per utterance");

  ChannelsArgs ch_args;
  auto *channels = app.add_subcommand("channels", "Accuracy for channel subsets and orders");
  channels->add_option("--model", ch_args.model, "mask_mvdr checkpoint")->required();
  channels->add_option("--corpus", ch_args.corpus, "Corpus directory")->required();
  channels->add_option("--split", ch_args.split, "Split to evaluate (default dev)");
  channels->add_option("--spec", ch_args.specs, "Channel list such as 2_1 (repeatable)");

  std::string inspect_path;
  auto *inspect = app.add_subcommand("inspect", "Summarize a checkpoint, corpus or audio file");
  inspect->add_option("path", inspect_path, "Checkpoint, corpus directory or audio file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*corpus) return CmdCorpus(corpus_args, out);
    if (*train) return CmdTrain(run_args, out);
    if (*enhance) return CmdEnhance(enhance_args, out);
    if (*recognize) return CmdRecognize(rec_args, out);
    if (*score) return CmdScore(score_args, out);
    if (*channels) return CmdChannels(ch_args, out);
    if (*inspect) return CmdInspect(inspect_path, out);
  } catch (const UsageError &e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError &e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const ShapeError &e) {
    // Model and data disagree, e.g. a channel count the network cannot take.
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument &e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace beamspeech::cli
