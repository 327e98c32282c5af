// src/pipeline/pipeline.cc

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

#include "beamspeech/pipeline.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "beamspeech/audio_io.h"
#include "beamspeech/checkpoint.h"
#include "beamspeech/keyvalue.h"
#include "json.hpp"

namespace beamspeech {

namespace fs = std::filesystem;

StftOptions MakeStftOptions(const RunConfig &cfg) {
  StftOptions o;
  o.sample_rate = cfg.sample_rate;
  o.frame_length = cfg.frame_length;
  o.frame_shift = cfg.frame_shift;
  o.fft_size = cfg.fft_size;
  o.Validate();
  return o;
}

BeamformerConfig MakeBeamformerConfig(const RunConfig &cfg) {
  BeamformerConfig b;
  b.variant = ParseVariant(cfg.variant);
  b.num_bins = cfg.fft_size / 2 + 1;
  b.mask_layers = cfg.mask_layers;
  b.mask_cells = cfg.mask_cells;
  b.mask_proj = cfg.mask_proj;
  b.ref_dim = cfg.ref_dim;
  b.beta = cfg.beta;
  b.mask_ref_fixed = cfg.mask_ref_fixed;
  b.ref_channel = cfg.ref_channel;
  b.filter_layers = cfg.filter_layers;
  b.filter_cells = cfg.filter_cells;
  b.filter_proj = cfg.filter_proj;
  b.filter_channels = cfg.filter_channels;
  b.mvdr.load_scale = cfg.diag_load;
  b.mvdr.load_floor = cfg.load_floor;
  return b;
}

RecognizerConfig MakeRecognizerConfig(const RunConfig &cfg, std::size_t vocab_size) {
  RecognizerConfig r;
  r.input_dim = cfg.num_mel;
  r.vocab_size = vocab_size;
  r.enc_layers = cfg.enc_layers;
  r.enc_cells = cfg.enc_cells;
  r.enc_proj = cfg.enc_proj;
  r.subsample = cfg.subsample;
  r.embed_dim = cfg.embed_dim;
  r.dec_cells = cfg.dec_cells;
  r.att_dim = cfg.att_dim;
  r.conv_filters = cfg.conv_filters;
  r.conv_width = cfg.conv_width;
  r.alpha = cfg.alpha;
  r.ctc_weight = cfg.ctc_weight;
  return r;
}

BeamOptions MakeBeamOptions(const RunConfig &cfg) {
  BeamOptions b;
  b.beam = cfg.beam;
  b.ctc_weight = cfg.decode_ctc_weight;
  b.length_penalty = cfg.length_penalty;
  b.length_gating = cfg.length_gating;
  b.min_ratio = cfg.min_ratio;
  b.max_ratio = cfg.max_ratio;
  return b;
}

Model Model::Create(const RunConfig &cfg, const Vocabulary &vocab) {
  cfg.Validate();
  if (vocab.size() <= static_cast<std::size_t>(kFirstChar))
    throw std::invalid_argument("model: vocabulary has no characters");
  Model m;
  m.config = cfg;
  m.vocab = vocab;
  m.stft = MakeStftOptions(cfg);
  m.mel = MakeMelFilterbank(cfg.num_mel, m.stft);
  m.bf = MakeBeamformerConfig(cfg);
  m.rec = MakeRecognizerConfig(cfg, vocab.size());
  m.norm = {Tensor({cfg.num_mel}, 0.0), Tensor({cfg.num_mel}, 1.0)};
  RegisterBeamformer(m.params, m.bf);
  RegisterRecognizer(m.params, m.rec);
  m.params.InitUniform(cfg.init_range, cfg.seed);
  return m;
}

// ------------------------------------------------------------- checkpoints

namespace {

Tensor StringToTensor(const std::string &s) {
  Tensor t({s.size()});
  for (std::size_t i = 0; i < s.size(); ++i) t[i] = static_cast<unsigned char>(s[i]);
  return t;
}

std::string TensorToString(const Tensor &t) {
  std::string s;
  for (double v : t.vec()) s.push_back(static_cast<char>(static_cast<unsigned char>(v)));
  return s;
}

}  // namespace

void SaveModel(const std::string &path, const Model &model, const AdaDelta *opt,
               std::size_t epoch) {
  RecordMap extra;
  extra["meta/norm/mean"] = model.norm.mean;
  extra["meta/norm/std"] = model.norm.std;
  extra["meta/epoch"] = Tensor::Scalar(static_cast<double>(epoch));
  extra["meta/alphabet"] = StringToTensor(model.vocab.alphabet());
  SaveCheckpoint(path, model.params, opt, extra);
  WriteTextFile(path + ".cfg", DumpRunConfig(model.config) + "# alphabet: " +
                                   model.vocab.alphabet() + "\n");
}

LoadedModel LoadModel(const std::string &path) {
  if (!fs::exists(path)) throw std::runtime_error("checkpoint not found: " + path);
  if (!fs::exists(path + ".cfg")) throw std::runtime_error("missing config sidecar " + path + ".cfg");
  RunConfig cfg;
  try {
    cfg = LoadRunConfig(path + ".cfg");
  } catch (const std::invalid_argument &e) {
    throw std::runtime_error(path + ".cfg: " + e.what());
  }
  LoadedCheckpoint ck = LoadCheckpoint(path);
  for (const char *key : {"meta/norm/mean", "meta/norm/std", "meta/epoch", "meta/alphabet"})
    if (!ck.extra.count(key)) throw std::runtime_error(path + ": missing record " + key);
  LoadedModel out;
  out.model = Model::Create(cfg, Vocabulary::FromAlphabet(TensorToString(ck.extra["meta/alphabet"])));
  for (const auto &[name, value] : out.model.params.all()) {
    if (!ck.params.Has(name)) throw std::runtime_error(path + ": missing parameter " + name);
    if (ck.params.Get(name).shape() != value.shape())
      throw std::runtime_error(path + ": shape mismatch for " + name);
  }
  if (ck.params.all().size() != out.model.params.all().size())
    throw std::runtime_error(path + ": unexpected parameters for this configuration");
  out.model.params = ck.params;
  out.model.norm = {ck.extra["meta/norm/mean"], ck.extra["meta/norm/std"]};
  if (out.model.norm.mean.size() != cfg.num_mel || out.model.norm.std.size() != cfg.num_mel)
    throw std::runtime_error(path + ": normalizer size mismatch");
  out.acc_grad = std::move(ck.acc_grad);
  out.acc_update = std::move(ck.acc_update);
  out.eps = ck.eps;
  out.epoch = static_cast<std::size_t>(ck.extra["meta/epoch"].item());
  return out;
}

// ------------------------------------------------------------------ data

Vocabulary LoadCorpusVocabulary(const std::string &corpus_dir) {
  return Vocabulary::Load((fs::path(corpus_dir) / "vocab.txt").string());
}

Example MakeExample(const std::string &id, const std::string &transcript, const Waveform &w,
                    const StftOptions &opts, const Vocabulary &vocab) {
  if (w.sample_rate != opts.sample_rate)
    throw std::runtime_error(id + ": sample rate " + std::to_string(w.sample_rate) +
                             " does not match the model's " + std::to_string(opts.sample_rate));
  Example ex;
  ex.id = id;
  ex.transcript = transcript;
  ex.chars = vocab.Encode(transcript);
  if (ex.chars.empty()) throw std::runtime_error(id + ": empty transcript");
  ex.stft = Stft(w, opts);
  return ex;
}

std::vector<Example> LoadSplit(const std::string &corpus_dir, const std::string &split,
                               const StftOptions &opts, const Vocabulary &vocab) {
  const auto entries = ReadManifest((fs::path(corpus_dir) / (split + ".tsv")).string());
  std::vector<Example> out;
  out.reserve(entries.size());
  for (const auto &e : entries) {
    try {
      out.push_back(MakeExample(e.id, e.transcript, ReadWav((fs::path(corpus_dir) / e.wav).string()),
                                opts, vocab));
    } catch (const std::invalid_argument &err) {
      throw std::runtime_error(e.id + ": " + err.what());
    }
  }
  return out;
}

// ------------------------------------------------------------- front end

FrontEnd RunFrontEnd(ParamScope &ps, const Model &model, const MultichannelStft &x, InputPath path,
                     std::size_t noisy_channel) {
  Tape &tape = ps.tape();
  FrontEnd out;
  if (path == InputPath::kNoisy) {
    if (noisy_channel >= x.channels())
      throw ShapeError("front_end", "channel " + std::to_string(noisy_channel) + " of " +
                                        std::to_string(x.channels()));
    out.enhance.enhanced = ConstantC(tape, x.Channel(noisy_channel));
  } else {
    out.enhance = Enhance(ps, model.bf, ConstantC(tape, x.coeffs));
  }
  out.features =
      ApplyNormalizer(LogMel(PowerSpectrum(out.enhance.enhanced), model.mel), model.norm);
  return out;
}

Tensor RawLogMel(const Model &model, const MultichannelStft &x, std::size_t channel) {
  Tape tape;
  return LogMel(PowerSpectrum(ConstantC(tape, x.Channel(channel))), model.mel).value();
}

NormStats FitModelNormalizer(const Model &model, const std::vector<Example> &train) {
  std::vector<Tensor> feats;
  feats.reserve(train.size());
  for (const auto &ex : train) feats.push_back(RawLogMel(model, ex.stft, 0));
  return FitNormalizer(feats);
}

LossParts ExampleLoss(ParamScope &ps, const Model &model, const Example &ex, InputPath path,
                      std::size_t noisy_channel) {
  FrontEnd fe = RunFrontEnd(ps, model, ex.stft, path, noisy_channel);
  return JointLoss(ps, model.rec, fe.features, ex.chars, model.rec.ctc_weight);
}

TokenCount TeacherForcedCount(ParamScope &ps, const Model &model, Var features,
                              const Labels &chars) {
  Var h = Encode(ps, model.rec, features);
  const EncoderCache cache = PrepareAttention(ps, h);
  DecoderState state = InitialDecoderState(ps.tape(), model.rec, h.shape()[0]);
  TokenCount count;
  int prev = kSos;
  for (int target : DecoderTargets(chars)) {
    StepOutput step = DecodeStep(ps, model.rec, cache, state, prev);
    const Tensor &lp = step.log_probs.value();
    const std::size_t best =
        static_cast<std::size_t>(std::max_element(lp.vec().begin(), lp.vec().end()) - lp.vec().begin());
    count.correct += static_cast<int>(best) + kEos == target ? 1 : 0;
    ++count.total;
    state = step.state;
    prev = target;
  }
  return count;
}

EvalResult Evaluate(const Model &model, const std::vector<Example> &data,
                    const std::vector<std::size_t> &channels) {
  EvalResult r;
  if (data.empty()) return r;
  double loss = 0.0;
  for (const auto &ex : data) {
    Example sel;
    const Example *use = &ex;
    if (!channels.empty()) {
      sel = ex;
      sel.stft = ex.stft.Select(channels);
      use = &sel;
    }
    Tape tape;
    ParamScope ps(tape, model.params);
    FrontEnd fe = RunFrontEnd(ps, model, use->stft);
    loss += JointLoss(ps, model.rec, fe.features, ex.chars, model.rec.ctc_weight).total.value().item();
    const TokenCount c = TeacherForcedCount(ps, model, fe.features, ex.chars);
    r.tokens.correct += c.correct;
    r.tokens.total += c.total;
  }
  r.loss = loss / static_cast<double>(data.size());
  return r;
}

HypothesisRecord Recognize(const Model &model, const Example &ex) {
  Tape tape;
  ParamScope ps(tape, model.params);
  FrontEnd fe = RunFrontEnd(ps, model, ex.stft);
  Var h = Encode(ps, model.rec, fe.features);
  const BeamResult r = BeamSearch(ps, model.rec, h, MakeBeamOptions(model.config));
  return {ex.id, r.best.score, model.vocab.Decode(r.best.tokens)};
}

// -------------------------------------------------------------- training

std::string CheckpointName(std::size_t epoch) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "ckpt_epoch%02zu.bspk", epoch);
  return buf;
}

std::string MetricsJson(const EpochMetrics &m) {
  nlohmann::json j;
  j["epoch"] = m.epoch;
  if (std::isfinite(m.train_loss))
    j["train_loss"] = m.train_loss;
  else
    j["train_loss"] = nullptr;
  j["dev_loss"] = m.dev_loss;
  j["dev_accuracy"] = m.dev_accuracy;
  j["eps"] = m.eps;
  return j.dump();
}

void Train(Model &model, const std::vector<Example> &train, const std::vector<Example> &dev,
           const std::string &out_dir, const std::function<void(const EpochMetrics &)> &on_epoch) {
  if (train.empty()) throw std::runtime_error("train: empty training set");
  if (dev.empty()) throw std::runtime_error("train: empty dev set");
  const RunConfig &cfg = model.config;
  fs::create_directories(out_dir);
  const std::string metrics_path = (fs::path(out_dir) / "metrics.jsonl").string();
  std::ofstream metrics(metrics_path, std::ios::trunc);
  if (!metrics) throw std::runtime_error("cannot write " + metrics_path);

  model.norm = FitModelNormalizer(model, train);
  AdaDelta opt({cfg.rho, cfg.eps, cfg.clip_norm});

  auto report = [&](EpochMetrics m) {
    const EvalResult dev_eval = Evaluate(model, dev);
    m.dev_loss = dev_eval.loss;
    m.dev_accuracy = dev_eval.tokens.accuracy();
    m.eps = opt.options().eps;
    metrics << MetricsJson(m) << '\n';
    metrics.flush();
    SaveModel((fs::path(out_dir) / CheckpointName(m.epoch)).string(), model, &opt, m.epoch);
    if (on_epoch) on_epoch(m);
    return m.dev_loss;
  };

  double prev_dev = report({0, std::numeric_limits<double>::quiet_NaN(), 0, 0, 0});
  bool decaying = false;
  const bool mixed = cfg.multi_condition && model.variant() != BeamformerVariant::kNoisy;
  std::vector<std::size_t> order(train.size());

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    if (decaying) opt.set_eps(opt.options().eps * cfg.eps_decay);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(cfg.seed * 1000003ULL + epoch);
    std::shuffle(order.begin(), order.end(), rng);

    double total = 0.0;
    std::size_t count = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      GradMap grads;
      for (std::size_t k = start; k < stop; ++k) {
        const Example &ex = train[order[k]];
        // Multi-condition: alternate positions feed one raw channel.
        const bool raw = model.variant() == BeamformerVariant::kNoisy || (mixed && k % 2 == 1);
        const std::size_t channel =
            model.variant() == BeamformerVariant::kNoisy ? 0 : (k / 2 + epoch) % ex.stft.channels();
        Tape tape;
        ParamScope ps(tape, model.params);
        Var loss = ExampleLoss(ps, model, ex, raw ? InputPath::kNoisy : InputPath::kModel, channel).total;
        const double v = loss.value().item();
        if (!std::isfinite(v))
          throw NumericError("training loss is not finite at epoch " + std::to_string(epoch) +
                                 ", utterance " + ex.id,
                             static_cast<long>(epoch));
        total += v;
        ++count;
        tape.Backward(loss);
        AccumulateGrads(grads, ps.Gradients(), 1.0 / static_cast<double>(stop - start));
      }
      opt.Step(model.params, grads);
    }
    const double dev_loss = report({epoch, total / static_cast<double>(count), 0, 0, 0});
    if (dev_loss > prev_dev) decaying = true;
    prev_dev = dev_loss;
  }
}

// ------------------------------------------------------------ evaluation

namespace {

double EnergyOf(const std::vector<double> &x) {
  long double s = 0.0L;
  for (double v : x) s += static_cast<long double>(v) * v;
  return static_cast<double>(s);
}

}  // namespace

SnrReport OracleMvdrSnr(const Utterance &utt, const StftOptions &opts, std::size_t ref_channel,
                        const MvdrOptions &mvdr) {
  const MultichannelStft X = Stft(utt.noisy, opts);
  const MultichannelStft S = Stft(utt.speech, opts);
  const MultichannelStft N = Stft(utt.noise, opts);
  const MaskPair masks = OracleMasks(utt, opts, ref_channel);
  const std::size_t C = X.channels();
  const std::size_t len = utt.noisy.num_samples();

  SnrReport r;
  r.best_input_db = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < C; ++c) {
    const double s = EnergyOf(Istft(S.Channel(c), opts, len));
    const double n = EnergyOf(Istft(N.Channel(c), opts, len));
    r.best_input_db = std::max(r.best_input_db, 10.0 * std::log10(s / n));
  }

  Tape tape;
  Tensor u({C}, 0.0);
  u[ref_channel] = 1.0;
  const CVar x = ConstantC(tape, X.coeffs);
  const CVar g = MvdrFilter(EstimatePsd(x, tape.Constant(masks.speech)),
                            EstimatePsd(x, tape.Constant(masks.noise)), tape.Constant(u), mvdr);
  const ComplexTensor s_out = FilterAndSum(ConstantC(tape, S.coeffs), g).value();
  const ComplexTensor n_out = FilterAndSum(ConstantC(tape, N.coeffs), g).value();
  r.output_db = 10.0 * std::log10(EnergyOf(Istft(s_out, opts, len)) /
                                  EnergyOf(Istft(n_out, opts, len)));
  return r;
}

std::vector<std::size_t> ParseChannelSpec(const std::string &spec) {
  std::vector<std::size_t> out;
  std::stringstream ss(spec);
  for (std::string item; std::getline(ss, item, '_');) {
    const std::size_t c = static_cast<std::size_t>(ParseUint("channels", item));
    if (c == 0) throw std::invalid_argument("channels: indices are 1-based");
    if (std::find(out.begin(), out.end(), c - 1) != out.end())
      throw std::invalid_argument("channels: repeated channel " + item);
    out.push_back(c - 1);
  }
  if (out.empty()) throw std::invalid_argument("channels: empty specification");
  return out;
}

}  // namespace beamspeech
