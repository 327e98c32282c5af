// include/beamspeech/recognizer.h

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
// Attention encoder-decoder over log-Mel features: a subsampling BLSTM
// encoder, location-aware attention, an LSTM decoder, an auxiliary CTC head
// sharing the encoder, and beam search with CTC rescoring.
//
// Token ids: 0 blank (CTC only), 1 sos, 2 eos, 3.. characters. The decoder
// predicts over {eos, characters} at output index id - 2; the CTC head
// predicts over {blank, characters} with blank at index 0 and character id at
// index id - 2.

#ifndef BEAMSPEECH_RECOGNIZER_H_
#define BEAMSPEECH_RECOGNIZER_H_

#include <limits>
#include <set>
#include <string>
#include <vector>

#include "beamspeech/nn.h"

namespace beamspeech {

inline constexpr int kBlank = 0;
inline constexpr int kSos = 1;
inline constexpr int kEos = 2;
inline constexpr int kFirstChar = 3;

using Labels = std::vector<int>;

// Character vocabulary with the three reserved entries.
class Vocabulary {
 public:
  Vocabulary() = default;
  // Each UTF-8 code point of `alphabet` becomes one character token.
  static Vocabulary FromAlphabet(const std::string &alphabet);
  // One token per line; lines 0-2 must be the reserved entries.
  static Vocabulary Load(const std::string &path);
  void Save(const std::string &path) const;

  std::size_t size() const { return tokens_.size(); }
  std::size_t num_chars() const { return tokens_.size() - kFirstChar; }
  const std::string &token(int id) const { return tokens_.at(id); }
  // Throws std::invalid_argument on a character outside the vocabulary.
  Labels Encode(const std::string &text) const;
  // Characters only; reserved ids are skipped.
  std::string Decode(const Labels &ids) const;
  std::string alphabet() const;

 private:
  std::vector<std::string> tokens_;
};

std::vector<std::string> SplitUtf8(const std::string &text);

struct RecognizerConfig {
  std::size_t input_dim = 12;  // D_O
  std::size_t vocab_size = 11; // reserved + characters

  std::size_t enc_layers = 2;
  std::size_t enc_cells = 16;
  std::size_t enc_proj = 16;  // D_H
  std::set<std::size_t> subsample = {0, 1};

  std::size_t embed_dim = 16;
  std::size_t dec_cells = 16;    // D_S
  std::size_t att_dim = 16;      // D_W
  std::size_t conv_filters = 4;  // D_F
  std::size_t conv_width = 11;
  double alpha = 2.0;

  double ctc_weight = 0.1;

  std::size_t num_outputs() const { return vocab_size - 2; }
};

void RegisterRecognizer(ParameterStore &store, const RecognizerConfig &cfg);

// Encoder length for T input frames after the configured subsampling.
std::size_t EncodedLength(std::size_t frames, const RecognizerConfig &cfg);

// feats [T, D_O] -> H [L, D_H]. Throws ShapeError when L would be 0.
Var Encode(ParamScope &ps, const RecognizerConfig &cfg, Var feats);

struct AttentionOutput {
  Var weights;  // a_n [L]
  Var context;  // c_n [1, D_H]
};

struct EncoderCache {
  Var states;     // H [L, D_H]
  Var projected;  // H V^H + b [L, D_W]
};

EncoderCache PrepareAttention(ParamScope &ps, Var states);

// Location-aware attention for decoder state s [1, D_S] given a_{n-1} [L].
AttentionOutput Attend(ParamScope &ps, const RecognizerConfig &cfg, const EncoderCache &enc,
                       Var prev_weights, Var state);

struct DecoderState {
  LstmState lstm;  // invalid h means the zero initial state
  Var weights;     // a_{n-1} [L]
  Var context;     // c_{n-1} [1, D_H]
};

DecoderState InitialDecoderState(Tape &tape, const RecognizerConfig &cfg, std::size_t length);

struct StepOutput {
  DecoderState state;
  Var log_probs;  // [1, vocab_size - 2] over {eos, characters}
};

// s_n = LSTM([c_{n-1}; embed(y_{n-1})]), (a_n, c_n) = attend(a_{n-1}, s_n),
// log P(y_n) = log_softmax(W [s_n; c_n] + b).
StepOutput DecodeStep(ParamScope &ps, const RecognizerConfig &cfg, const EncoderCache &enc,
                      const DecoderState &prev, int prev_token);

// Appends eos to character ids.
Labels DecoderTargets(const Labels &chars);

// Teacher-forced -sum_n log P(y*_n | y*_{<n}) for targets ending with eos.
Var AttentionLoss(ParamScope &ps, const RecognizerConfig &cfg, Var states, const Labels &targets);

// CTC head log-probabilities [L, vocab_size - 2].
Var CtcLogProbs(ParamScope &ps, Var states);

// -log sum over alignments, as one fused tape op on log-probabilities
// [L, K]. `chars` are character ids (>= 3). Throws NumericError when no
// alignment exists.
Var CtcLoss(Var log_probs, const Labels &chars);

// Log-likelihood of `chars` under log-probabilities [L, K]; -inf when no
// alignment exists.
double CtcLogLikelihood(const Tensor &log_probs, const Labels &chars);

struct LossParts {
  Var total;
  Var attention;
  Var ctc;
};

// (1 - lambda) * attention + lambda * ctc, both from the same encoder pass.
LossParts JointLoss(ParamScope &ps, const RecognizerConfig &cfg, Var feats, const Labels &chars,
                    double ctc_weight);

struct BeamOptions {
  std::size_t beam = 20;
  double ctc_weight = 0.1;
  double length_penalty = 0.3;
  // Hypothesis length gating relative to L; off by default.
  bool length_gating = false;
  double min_ratio = 0.3;
  double max_ratio = 0.75;
  // Hard cap on emitted tokens (including eos); 0 means L.
  std::size_t max_len = 0;
};

struct Hypothesis {
  Labels tokens;  // starts with sos; ends with eos when terminated
  double att_score = 0.0;
  double ctc_score = 0.0;
  double score = 0.0;
  bool terminated = false;
};

struct BeamResult {
  Hypothesis best;
  // Set when no hypothesis terminated with a finite score.
  bool unterminated = false;
};

// Final score: att_score + ctc_weight * ctc_score + length_penalty * (tokens
// after sos, eos included). Ties go to the smaller token sequence, then to the
// earlier hypothesis.
BeamResult BeamSearch(ParamScope &ps, const RecognizerConfig &cfg, Var states,
                      const BeamOptions &opts = {});

// Scores a complete character sequence exactly as BeamSearch scores it.
double ScoreSequence(ParamScope &ps, const RecognizerConfig &cfg, Var states, const Labels &chars,
                     const BeamOptions &opts);

std::size_t EditDistance(const Labels &a, const Labels &b);
// Levenshtein distance over |ref|; throws on an empty reference.
double CharacterErrorRate(const Labels &hyp, const Labels &ref);

struct HypothesisRecord {
  std::string utterance;
  double score;
  std::string text;
};

void WriteHypotheses(const std::string &path, const std::vector<HypothesisRecord> &records);
std::vector<HypothesisRecord> ReadHypotheses(const std::string &path);

}  // namespace beamspeech

#endif  // BEAMSPEECH_RECOGNIZER_H_
