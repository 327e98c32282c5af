// src/recognizer/recognizer.cc

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

#include "beamspeech/recognizer.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace beamspeech {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double LogAdd(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// Blank-augmented label sequence over CTC head indices.
std::vector<std::size_t> Extend(const Labels &chars, std::size_t K) {
  std::vector<std::size_t> ext(2 * chars.size() + 1, 0);
  for (std::size_t u = 0; u < chars.size(); ++u) {
    if (chars[u] < kFirstChar || static_cast<std::size_t>(chars[u] - 2) >= K)
      throw std::invalid_argument("ctc: token id " + std::to_string(chars[u]) +
                                  " is not a character of a " + std::to_string(K + 2) +
                                  "-token vocabulary");
    ext[2 * u + 1] = static_cast<std::size_t>(chars[u] - 2);
  }
  return ext;
}

// Log forward variables, alpha[t][s] including the emission at t.
std::vector<std::vector<double>> CtcAlpha(const Tensor &lp, const std::vector<std::size_t> &ext) {
  const std::size_t L = lp.dim(0), S = ext.size();
  std::vector<std::vector<double>> a(L, std::vector<double>(S, kNegInf));
  a[0][0] = lp.at(0, ext[0]);
  if (S > 1) a[0][1] = lp.at(0, ext[1]);
  for (std::size_t t = 1; t < L; ++t)
    for (std::size_t s = 0; s < S; ++s) {
      double acc = a[t - 1][s];
      if (s >= 1) acc = LogAdd(acc, a[t - 1][s - 1]);
      if (s >= 2 && ext[s] != 0 && ext[s] != ext[s - 2]) acc = LogAdd(acc, a[t - 1][s - 2]);
      if (acc != kNegInf) a[t][s] = acc + lp.at(t, ext[s]);
    }
  return a;
}

double CtcTotal(const std::vector<std::vector<double>> &a) {
  const auto &last = a.back();
  const std::size_t S = last.size();
  return S > 1 ? LogAdd(last[S - 1], last[S - 2]) : last[0];
}

void CheckTargets(const Labels &targets, std::size_t vocab) {
  if (targets.empty() || targets.back() != kEos)
    throw std::invalid_argument("attention_loss: targets must be nonempty and end with eos");
  for (std::size_t n = 0; n + 1 < targets.size(); ++n)
    if (targets[n] < kFirstChar || static_cast<std::size_t>(targets[n]) >= vocab)
      throw std::invalid_argument("attention_loss: unknown token id " +
                                  std::to_string(targets[n]) + " at position " +
                                  std::to_string(n));
}

}  // namespace

// ---------------------------------------------------------------- vocabulary

std::vector<std::string> SplitUtf8(const std::string &text) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < text.size();) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    std::size_t n = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
    if (n == 0 || i + n > text.size()) throw std::invalid_argument("invalid UTF-8 in '" + text + "'");
    out.push_back(text.substr(i, n));
    i += n;
  }
  return out;
}

Vocabulary Vocabulary::FromAlphabet(const std::string &alphabet) {
  Vocabulary v;
  v.tokens_ = {"<blank>", "<sos>", "<eos>"};
  for (const auto &ch : SplitUtf8(alphabet)) {
    if (std::find(v.tokens_.begin(), v.tokens_.end(), ch) != v.tokens_.end())
      throw std::invalid_argument("vocabulary: duplicate character '" + ch + "'");
    v.tokens_.push_back(ch);
  }
  if (v.tokens_.size() == kFirstChar) throw std::invalid_argument("vocabulary: empty alphabet");
  return v;
}

Labels Vocabulary::Encode(const std::string &text) const {
  Labels ids;
  for (const auto &ch : SplitUtf8(text)) {
    auto it = std::find(tokens_.begin() + kFirstChar, tokens_.end(), ch);
    if (it == tokens_.end()) throw std::invalid_argument("vocabulary: unknown character '" + ch + "'");
    ids.push_back(static_cast<int>(it - tokens_.begin()));
  }
  return ids;
}

std::string Vocabulary::Decode(const Labels &ids) const {
  std::string out;
  for (int id : ids)
    if (id >= kFirstChar && static_cast<std::size_t>(id) < tokens_.size()) out += tokens_[id];
  return out;
}

std::string Vocabulary::alphabet() const {
  std::string out;
  for (std::size_t i = kFirstChar; i < tokens_.size(); ++i) out += tokens_[i];
  return out;
}

// ------------------------------------------------------------------ encoder

void RegisterRecognizer(ParameterStore &store, const RecognizerConfig &cfg) {
  if (cfg.vocab_size <= kFirstChar)
    throw std::invalid_argument("recognizer: vocabulary needs at least one character");
  if (cfg.conv_width % 2 == 0) throw std::invalid_argument("recognizer: conv width must be odd");
  RegisterBlstmStack(store, "rec/enc", cfg.input_dim, cfg.enc_cells, cfg.enc_proj, cfg.enc_layers);
  RegisterLinear(store, "rec/att/vh", cfg.enc_proj, cfg.att_dim);  // V^H and b
  store.Add("rec/att/vs", Tensor({cfg.dec_cells, cfg.att_dim}));
  store.Add("rec/att/vf", Tensor({cfg.conv_filters, cfg.att_dim}));
  store.Add("rec/att/w", Tensor({cfg.att_dim, 1}));
  store.Add("rec/att/conv", Tensor({cfg.conv_filters, cfg.conv_width}));
  store.Add("rec/dec/embed", Tensor({cfg.vocab_size, cfg.embed_dim}));
  RegisterLstm(store, "rec/dec/lstm", cfg.enc_proj + cfg.embed_dim, cfg.dec_cells);
  RegisterLinear(store, "rec/dec/out", cfg.dec_cells + cfg.enc_proj, cfg.num_outputs());
  RegisterLinear(store, "rec/ctc", cfg.enc_proj, cfg.num_outputs());
}

std::size_t EncodedLength(std::size_t frames, const RecognizerConfig &cfg) {
  for (std::size_t l = 0; l < cfg.enc_layers; ++l)
    if (cfg.subsample.count(l)) frames /= 2;
  return frames;
}

Var Encode(ParamScope &ps, const RecognizerConfig &cfg, Var feats) {
  const Shape s = feats.shape();
  if (s.size() != 2 || s[1] != cfg.input_dim)
    throw ShapeError("encode", "expected [T, " + std::to_string(cfg.input_dim) + "], got " +
                                   ShapeString(s));
  const std::size_t L = EncodedLength(s[0], cfg);
  if (L == 0)
    throw ShapeError("encode", std::to_string(s[0]) + " frames leave no encoder state after subsampling");
  Var h = BlstmStack(ps, "rec/enc", cfg.enc_layers, ad::Reshape(feats, {s[0], 1, s[1]}), cfg.subsample);
  return ad::Reshape(h, {L, cfg.enc_proj});
}

// ---------------------------------------------------------------- attention

EncoderCache PrepareAttention(ParamScope &ps, Var states) {
  return {states, Linear(ps, "rec/att/vh", states)};
}

AttentionOutput Attend(ParamScope &ps, const RecognizerConfig &cfg, const EncoderCache &enc,
                       Var prev_weights, Var state) {
  const std::size_t L = enc.states.dim(0);
  if (prev_weights.shape() != Shape{L})
    throw ShapeError("attend", "previous weights " + ShapeString(prev_weights.shape()) +
                                   " for L = " + std::to_string(L));
  Var f = ad::Conv1d(prev_weights, ps("rec/att/conv"));  // [L, D_F]
  Var pre = enc.projected + ad::MatMul(state, ps("rec/att/vs")) + ad::MatMul(f, ps("rec/att/vf"));
  Var k = ad::MatMul(ad::Tanh(pre), ps("rec/att/w"));  // [L, 1]
  Var a = ad::Softmax(ad::Reshape(k, {1, L}), cfg.alpha);
  return {ad::Reshape(a, {L}), ad::MatMul(a, enc.states)};
}

// ------------------------------------------------------------------ decoder

DecoderState InitialDecoderState(Tape &tape, const RecognizerConfig &cfg, std::size_t length) {
  DecoderState st;
  st.weights = tape.Constant(Tensor({length}, 1.0 / static_cast<double>(length)));
  st.context = tape.Constant(Tensor({1, cfg.enc_proj}, 0.0));
  return st;
}

StepOutput DecodeStep(ParamScope &ps, const RecognizerConfig &cfg, const EncoderCache &enc,
                      const DecoderState &prev, int prev_token) {
  if (prev_token < kSos || static_cast<std::size_t>(prev_token) >= cfg.vocab_size)
    throw std::invalid_argument("decode_step: invalid previous token " + std::to_string(prev_token));
  Var emb = ad::Take(ps("rec/dec/embed"), {static_cast<std::size_t>(prev_token)});
  LstmState lstm = LstmStep(ps, "rec/dec/lstm", ad::Concat({prev.context, emb}, 1), prev.lstm);
  AttentionOutput att = Attend(ps, cfg, enc, prev.weights, lstm.h);
  Var logits = Linear(ps, "rec/dec/out", ad::Concat({lstm.h, att.context}, 1));
  return {{lstm, att.weights, att.context}, ad::LogSoftmax(logits)};
}

Labels DecoderTargets(const Labels &chars) {
  Labels t = chars;
  t.push_back(kEos);
  return t;
}

Var AttentionLoss(ParamScope &ps, const RecognizerConfig &cfg, Var states, const Labels &targets) {
  CheckTargets(targets, cfg.vocab_size);
  EncoderCache enc = PrepareAttention(ps, states);
  DecoderState st = InitialDecoderState(ps.tape(), cfg, states.dim(0));
  int prev = kSos;
  std::vector<Var> rows;
  std::vector<std::size_t> picks;
  for (int y : targets) {
    StepOutput out = DecodeStep(ps, cfg, enc, st, prev);
    rows.push_back(out.log_probs);
    picks.push_back(static_cast<std::size_t>(y - 2));
    st = out.state;
    prev = y;
  }
  return -ad::Sum(ad::PickPerRow(ad::Concat(rows, 0), picks));
}

// --------------------------------------------------------------------- CTC

Var CtcLogProbs(ParamScope &ps, Var states) { return ad::LogSoftmax(Linear(ps, "rec/ctc", states)); }

double CtcLogLikelihood(const Tensor &log_probs, const Labels &chars) {
  if (log_probs.rank() != 2) throw ShapeError("ctc", "expected [L, K], got " + ShapeString(log_probs.shape()));
  const auto ext = Extend(chars, log_probs.dim(1));
  return CtcTotal(CtcAlpha(log_probs, ext));
}

Var CtcLoss(Var log_probs, const Labels &chars) {
  const Tensor &lp = log_probs.value();
  if (lp.rank() != 2) throw ShapeError("ctc", "expected [L, K], got " + ShapeString(lp.shape()));
  const std::size_t L = lp.dim(0), K = lp.dim(1);
  const auto ext = Extend(chars, K);
  auto alpha = CtcAlpha(lp, ext);
  const double total = CtcTotal(alpha);
  if (!std::isfinite(total))
    throw NumericError("ctc: no alignment of " + std::to_string(chars.size()) + " labels in " +
                       std::to_string(L) + " frames");
  return log_probs.tape()->Record(
      Tensor::Scalar(-total), {log_probs},
      [lp, ext, alpha = std::move(alpha), total](const Tensor &g, std::vector<Tensor *> &in) {
        const std::size_t L = lp.dim(0), S = ext.size();
        auto allowed = [&](std::size_t s) { return ext[s] != 0 && ext[s] != ext[s - 2]; };
        // beta[s]: log mass of completions after frame t, emission at t excluded.
        std::vector<double> beta(S, kNegInf), next(S);
        beta[S - 1] = 0.0;
        if (S > 1) beta[S - 2] = 0.0;
        for (std::size_t tt = L; tt-- > 0;) {
          if (tt + 1 < L) {
            for (std::size_t s = 0; s < S; ++s) {
              double acc = beta[s] == kNegInf ? kNegInf : beta[s] + lp.at(tt + 1, ext[s]);
              if (s + 1 < S && beta[s + 1] != kNegInf)
                acc = LogAdd(acc, beta[s + 1] + lp.at(tt + 1, ext[s + 1]));
              if (s + 2 < S && allowed(s + 2) && beta[s + 2] != kNegInf)
                acc = LogAdd(acc, beta[s + 2] + lp.at(tt + 1, ext[s + 2]));
              next[s] = acc;
            }
            beta.swap(next);
          }
          for (std::size_t s = 0; s < S; ++s) {
            const double v = alpha[tt][s] + beta[s];
            if (v != kNegInf) in[0]->at(tt, ext[s]) -= g[0] * std::exp(v - total);
          }
        }
      });
}

LossParts JointLoss(ParamScope &ps, const RecognizerConfig &cfg, Var feats, const Labels &chars,
                    double ctc_weight) {
  Var h = Encode(ps, cfg, feats);
  LossParts out;
  out.attention = AttentionLoss(ps, cfg, h, DecoderTargets(chars));
  out.ctc = CtcLoss(CtcLogProbs(ps, h), chars);
  out.total = out.attention * (1.0 - ctc_weight) + out.ctc * ctc_weight;
  return out;
}

// -------------------------------------------------------------- beam search

namespace {

struct Live {
  Labels tokens;
  double att;
  DecoderState state;
};

struct Candidate {
  double rank;
  std::size_t parent;
  int token;
};

bool Better(double sa, const Labels &a, double sb, const Labels &b) {
  if (sa != sb) return sa > sb;
  return a < b;
}

}  // namespace

BeamResult BeamSearch(ParamScope &ps, const RecognizerConfig &cfg, Var states,
                      const BeamOptions &opts) {
  if (opts.beam == 0) throw std::invalid_argument("beam_search: beam must be >= 1");
  Tape &tape = ps.tape();
  const std::size_t L = states.dim(0), K = cfg.num_outputs();
  const Tensor ctc = CtcLogProbs(ps, states).value();
  EncoderCache enc = PrepareAttention(ps, states);

  std::size_t max_len = opts.max_len ? opts.max_len : L;
  std::size_t min_len = 1;
  if (opts.length_gating) {
    max_len = std::min(max_len, std::max<std::size_t>(1, std::floor(opts.max_ratio * L)));
    min_len = std::max<std::size_t>(1, std::ceil(opts.min_ratio * L));
  }

  std::vector<Live> live = {{{kSos}, 0.0, InitialDecoderState(tape, cfg, L)}};
  std::vector<Hypothesis> ended;
  for (std::size_t step = 1; step <= max_len && !live.empty(); ++step) {
    std::vector<Candidate> cands;
    std::vector<DecoderState> next_state(live.size());
    std::vector<Tensor> lps(live.size());
    for (std::size_t i = 0; i < live.size(); ++i) {
      StepOutput out = DecodeStep(ps, cfg, enc, live[i].state, live[i].tokens.back());
      next_state[i] = out.state;
      lps[i] = out.log_probs.value();
      for (std::size_t k = 0; k < K; ++k) {
        const int token = static_cast<int>(k) + 2;
        const double att = live[i].att + lps[i][k];
        if (token == kEos) {
          if (step < min_len) continue;
          Hypothesis h;
          h.tokens = live[i].tokens;
          h.tokens.push_back(kEos);
          h.att_score = att;
          h.ctc_score = CtcLogLikelihood(ctc, Labels(h.tokens.begin() + 1, h.tokens.end() - 1));
          h.score = att + opts.ctc_weight * h.ctc_score + opts.length_penalty * step;
          h.terminated = true;
          ended.push_back(std::move(h));
        } else if (step < max_len) {
          cands.push_back({att + opts.length_penalty * step, i, token});
        }
      }
    }
    auto child = [&](const Candidate &c) {
      Labels t = live[c.parent].tokens;
      t.push_back(c.token);
      return t;
    };
    std::stable_sort(cands.begin(), cands.end(), [&](const Candidate &a, const Candidate &b) {
      return Better(a.rank, child(a), b.rank, child(b));
    });
    if (cands.size() > opts.beam) cands.resize(opts.beam);
    std::vector<Live> next;
    for (const auto &c : cands)
      next.push_back({child(c), live[c.parent].att + lps[c.parent][c.token - 2], next_state[c.parent]});
    live = std::move(next);
  }

  BeamResult result;
  const Hypothesis *best = nullptr;
  for (const auto &h : ended)
    if (std::isfinite(h.score) && (!best || Better(h.score, h.tokens, best->score, best->tokens)))
      best = &h;
  if (best) {
    result.best = *best;
    return result;
  }
  result.unterminated = true;
  if (!live.empty()) {
    result.best.tokens = live.front().tokens;
    result.best.att_score = live.front().att;
    result.best.score = live.front().att + opts.length_penalty * (live.front().tokens.size() - 1);
  } else {
    result.best.tokens = {kSos};
  }
  return result;
}

double ScoreSequence(ParamScope &ps, const RecognizerConfig &cfg, Var states, const Labels &chars,
                     const BeamOptions &opts) {
  const double att = -AttentionLoss(ps, cfg, states, DecoderTargets(chars)).value().item();
  const double ctc = CtcLogLikelihood(CtcLogProbs(ps, states).value(), chars);
  return att + opts.ctc_weight * ctc + opts.length_penalty * static_cast<double>(chars.size() + 1);
}

// --------------------------------------------------------------- evaluation

std::size_t EditDistance(const Labels &a, const Labels &b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] != b[j - 1])});
    prev.swap(cur);
  }
  return prev[b.size()];
}

double CharacterErrorRate(const Labels &hyp, const Labels &ref) {
  if (ref.empty()) throw std::invalid_argument("cer: empty reference");
  return static_cast<double>(EditDistance(hyp, ref)) / static_cast<double>(ref.size());
}

}  // namespace beamspeech
