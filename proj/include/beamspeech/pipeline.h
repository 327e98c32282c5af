// include/beamspeech/pipeline.h

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

//
// End-to-end wiring: multichannel STFT -> beamformer -> power -> log-Mel ->
// normalization -> recognizer, plus datasets, checkpoints, training and
// evaluation loops shared by the command-line tools.

#ifndef BEAMSPEECH_PIPELINE_H_
#define BEAMSPEECH_PIPELINE_H_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "beamspeech/beamformer.h"
#include "beamspeech/corpus.h"
#include "beamspeech/optimizer.h"
#include "beamspeech/recognizer.h"
#include "beamspeech/run_config.h"
#include "beamspeech/signal.h"

namespace beamspeech {

StftOptions MakeStftOptions(const RunConfig &cfg);
BeamformerConfig MakeBeamformerConfig(const RunConfig &cfg);
RecognizerConfig MakeRecognizerConfig(const RunConfig &cfg, std::size_t vocab_size);
BeamOptions MakeBeamOptions(const RunConfig &cfg);

struct Model {
  RunConfig config;
  Vocabulary vocab;
  StftOptions stft;
  MelFilterbank mel;
  BeamformerConfig bf;
  RecognizerConfig rec;
  NormStats norm;  // identity (mean 0, std 1) until fitted
  ParameterStore params;

  // Registers every parameter and draws them from U(-init_range, init_range)
  // with the config seed. Throws std::invalid_argument on a bad config.
  static Model Create(const RunConfig &cfg, const Vocabulary &vocab);
  BeamformerVariant variant() const { return bf.variant; }
};

// Writes `path` (parameters, optimizer state, meta/norm/{mean,std},
// meta/epoch) and `path + ".cfg"` (the run config plus an alphabet line).
void SaveModel(const std::string &path, const Model &model, const AdaDelta *opt = nullptr,
               std::size_t epoch = 0);
struct LoadedModel {
  Model model;
  GradMap acc_grad;
  GradMap acc_update;
  double eps = -1.0;
  std::size_t epoch = 0;
};
// Throws std::runtime_error when the files are missing or inconsistent.
LoadedModel LoadModel(const std::string &path);

struct Example {
  std::string id;
  std::string transcript;
  Labels chars;
  MultichannelStft stft;  // [T, F, C]
};

// Reads <corpus>/<split>.tsv and the audio it names. Throws
// std::runtime_error on missing files or a sample-rate mismatch.
std::vector<Example> LoadSplit(const std::string &corpus_dir, const std::string &split,
                               const StftOptions &opts, const Vocabulary &vocab);
Example MakeExample(const std::string &id, const std::string &transcript, const Waveform &w,
                    const StftOptions &opts, const Vocabulary &vocab);
Vocabulary LoadCorpusVocabulary(const std::string &corpus_dir);

// Which signal feeds the recognizer: the configured front end, or one raw
// channel bypassing the beamformer.
enum class InputPath { kModel, kNoisy };

struct FrontEnd {
  EnhanceResult enhance;  // enhanced is the channel itself on the noisy path
  Var features;           // normalized log-Mel [T, D_O]
};

FrontEnd RunFrontEnd(ParamScope &ps, const Model &model, const MultichannelStft &x,
                     InputPath path = InputPath::kModel, std::size_t noisy_channel = 0);

// Unnormalized log-Mel features of one raw channel.
Tensor RawLogMel(const Model &model, const MultichannelStft &x, std::size_t channel);

// Fits the normalizer on channel-0 log-Mel features of `train`.
NormStats FitModelNormalizer(const Model &model, const std::vector<Example> &train);

LossParts ExampleLoss(ParamScope &ps, const Model &model, const Example &ex,
                      InputPath path = InputPath::kModel, std::size_t noisy_channel = 0);

struct TokenCount {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total ? static_cast<double>(correct) / total : 0.0; }
};

// Teacher-forced argmax accuracy of the decoder over characters and eos.
TokenCount TeacherForcedCount(ParamScope &ps, const Model &model, Var features,
                              const Labels &chars);

struct EvalResult {
  double loss = 0.0;  // mean joint loss per utterance
  TokenCount tokens;
};

// `channels` selects and orders input channels (0-based); empty keeps all.
EvalResult Evaluate(const Model &model, const std::vector<Example> &data,
                    const std::vector<std::size_t> &channels = {});

HypothesisRecord Recognize(const Model &model, const Example &ex);

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // NaN at epoch 0
  double dev_loss = 0.0;
  double dev_accuracy = 0.0;
  double eps = 0.0;
};

// One JSON object per line.
std::string MetricsJson(const EpochMetrics &m);

// Trains `model` in place for config.epochs epochs. Writes
// <out_dir>/metrics.jsonl and <out_dir>/ckpt_epochNN.bspk (epoch 0 is the
// initial model). A non-finite training loss throws NumericError before the
// current epoch's checkpoint is written.
void Train(Model &model, const std::vector<Example> &train, const std::vector<Example> &dev,
           const std::string &out_dir,
           const std::function<void(const EpochMetrics &)> &on_epoch = {});

std::string CheckpointName(std::size_t epoch);

// SNR of the MVDR output built from oracle masks on `ref_channel`, against
// the best input channel. Speech and noise images are filtered separately.
struct SnrReport {
  double best_input_db = 0.0;
  double output_db = 0.0;
  double gain_db() const { return output_db - best_input_db; }
};
SnrReport OracleMvdrSnr(const Utterance &utt, const StftOptions &opts, std::size_t ref_channel = 0,
                        const MvdrOptions &mvdr = {});

// Parses "2_1" style channel lists (1-based, '_' separated) into 0-based
// indices. Throws std::invalid_argument on bad syntax or repeats.
std::vector<std::size_t> ParseChannelSpec(const std::string &spec);

}  // namespace beamspeech

#endif  // BEAMSPEECH_PIPELINE_H_
