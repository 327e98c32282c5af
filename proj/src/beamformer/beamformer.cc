// src/beamformer/beamformer.cc

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

#include "beamspeech/beamformer.h"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace beamspeech {

namespace {

std::atomic<std::uint64_t> g_zero_mass{0};

const std::string kMaskSpeech = "bf/mask_s";
const std::string kMaskNoise = "bf/mask_n";
const std::string kFilter = "bf/filter";

void CheckRank(const char *op, const Shape &s, std::size_t rank, const char *what) {
  if (s.size() != rank)
    throw ShapeError(op, std::string(what) + " must have rank " + std::to_string(rank) +
                             ", got " + ShapeString(s));
}

Tensor Identity(std::size_t C) {
  Tensor eye(Shape{C, C}, 0.0);
  for (std::size_t c = 0; c < C; ++c) eye.at(c, c) = 1.0;
  return eye;
}

Var OneHot(Tape &tape, std::size_t C, std::size_t k) {
  if (k >= C)
    throw ShapeError("reference", "reference channel " + std::to_string(k) + " with C = " +
                                      std::to_string(C));
  Tensor u(Shape{C}, 0.0);
  u[k] = 1.0;
  return tape.Constant(u);
}

// [T, F, C] -> [T, F, 1] slices stacked back along the channel axis.
Var StackChannels(const std::vector<Var> &parts) {
  std::vector<Var> cols;
  for (const Var &p : parts) {
    const Shape s = p.shape();
    cols.push_back(ad::Reshape(p, {s[0], s[1], 1}));
  }
  return ad::Concat(cols, 2);
}

// Shared mask network for one of speech / noise.
std::pair<Var, Var> MaskStack(ParamScope &ps, const std::string &prefix,
                              const BeamformerConfig &cfg, Var input) {
  Var z = BlstmStack(ps, prefix, cfg.mask_layers, input);
  Var m = ad::Sigmoid(Linear(ps, prefix + "/out", z));
  return {m, z};
}

}  // namespace

std::string VariantName(BeamformerVariant v) {
  switch (v) {
    case BeamformerVariant::kNoisy: return "noisy";
    case BeamformerVariant::kFilterNet: return "filter_net";
    case BeamformerVariant::kMaskMvdr: return "mask_mvdr";
  }
  return "unknown";
}

BeamformerVariant ParseVariant(const std::string &name) {
  if (name == "noisy") return BeamformerVariant::kNoisy;
  if (name == "filter_net") return BeamformerVariant::kFilterNet;
  if (name == "mask_mvdr") return BeamformerVariant::kMaskMvdr;
  throw std::invalid_argument("unknown beamformer variant '" + name +
                              "' (expected noisy, filter_net or mask_mvdr)");
}

void RegisterBeamformer(ParameterStore &store, const BeamformerConfig &cfg) {
  const std::size_t F = cfg.num_bins;
  switch (cfg.variant) {
    case BeamformerVariant::kNoisy:
      return;
    case BeamformerVariant::kFilterNet: {
      const std::size_t C = cfg.filter_channels;
      RegisterBlstmStack(store, kFilter, 2 * F * C, cfg.filter_cells, cfg.filter_proj,
                         cfg.filter_layers);
      for (std::size_t c = 0; c < C; ++c) {
        RegisterLinear(store, kFilter + "/re" + std::to_string(c), cfg.filter_proj, F);
        RegisterLinear(store, kFilter + "/im" + std::to_string(c), cfg.filter_proj, F);
      }
      return;
    }
    case BeamformerVariant::kMaskMvdr:
      for (const auto &prefix : {kMaskSpeech, kMaskNoise}) {
        RegisterBlstmStack(store, prefix, 2 * F, cfg.mask_cells, cfg.mask_proj, cfg.mask_layers);
        RegisterLinear(store, prefix + "/out", cfg.mask_proj, F);
      }
      RegisterLinear(store, "bf/ref/q", 2 * cfg.mask_proj, cfg.ref_dim);
      store.Add("bf/ref/r/W", Tensor({2 * F, cfg.ref_dim}));
      store.Add("bf/ref/v/W", Tensor({cfg.ref_dim, 1}));
      return;
  }
}

CVar FilterAndSum(const CVar &x, const CVar &g) {
  const Shape xs = x.shape(), gs = g.shape();
  CheckRank("filter_and_sum", xs, 3, "x");
  if (gs.size() != 2 && gs.size() != 3)
    throw ShapeError("filter_and_sum", "filter must be [F,C] or [T,F,C], got " + ShapeString(gs));
  if (gs.back() != xs[2])
    throw ShapeError("filter_and_sum", "filter has " + std::to_string(gs.back()) +
                                           " channels, input has " + std::to_string(xs[2]));
  // conj(g) x = (gr xr + gi xi) + i (gr xi - gi xr)
  Var re = g.re * x.re + g.im * x.im;
  Var im = g.re * x.im - g.im * x.re;
  return {ad::SumAxis(re, 2), ad::SumAxis(im, 2)};
}

CVar FilterNetForward(ParamScope &ps, const BeamformerConfig &cfg, const CVar &x) {
  const Shape s = x.shape();
  CheckRank("filter_net", s, 3, "x");
  const std::size_t T = s[0], F = s[1], C = s[2];
  if (C != cfg.filter_channels)
    throw ShapeError("filter_net", "network was built for " +
                                       std::to_string(cfg.filter_channels) +
                                       " channels, input has " + std::to_string(C));
  if (F != cfg.num_bins)
    throw ShapeError("filter_net", "expected " + std::to_string(cfg.num_bins) + " bins, got " +
                                       std::to_string(F));
  Var feats = ad::Concat({ad::Reshape(x.re, {T, F * C}), ad::Reshape(x.im, {T, F * C})}, 1);
  Var z = BlstmStack(ps, kFilter, cfg.filter_layers, ad::Reshape(feats, {T, 1, 2 * F * C}));
  z = ad::Reshape(z, {T, cfg.filter_proj});
  std::vector<Var> re, im;
  for (std::size_t c = 0; c < C; ++c) {
    re.push_back(ad::Tanh(Linear(ps, kFilter + "/re" + std::to_string(c), z)));
    im.push_back(ad::Tanh(Linear(ps, kFilter + "/im" + std::to_string(c), z)));
  }
  return {StackChannels(re), StackChannels(im)};
}

MaskNetOutput MaskNetForward(ParamScope &ps, const BeamformerConfig &cfg, const CVar &x) {
  const Shape s = x.shape();
  CheckRank("mask_net", s, 3, "x");
  if (s[1] != cfg.num_bins)
    throw ShapeError("mask_net", "expected " + std::to_string(cfg.num_bins) + " bins, got " +
                                     std::to_string(s[1]));
  // [T, C, 2F]: real parts then imaginary parts of one channel per row.
  Var input = ad::Concat({ad::Permute(x.re, {0, 2, 1}), ad::Permute(x.im, {0, 2, 1})}, 2);
  auto [ms, zs] = MaskStack(ps, kMaskSpeech, cfg, input);
  auto [mn, zn] = MaskStack(ps, kMaskNoise, cfg, input);
  return {ms, mn, zs, zn};
}

Var AverageMasks(Var masks) {
  const Shape s = masks.shape();
  CheckRank("average_masks", s, 3, "masks");
  return ad::MeanAxis(masks, 1);
}

std::uint64_t PsdZeroMassCount() { return g_zero_mass.load(); }
void ResetPsdZeroMassCount() { g_zero_mass.store(0); }

CVar EstimatePsd(const CVar &x, Var mask) {
  const Shape xs = x.shape(), ms = mask.shape();
  CheckRank("estimate_psd", xs, 3, "x");
  if (ms.size() != 2 || ms[0] != xs[0] || ms[1] != xs[1])
    throw ShapeError("estimate_psd", "mask " + ShapeString(ms) + " vs x " + ShapeString(xs));
  const std::size_t T = xs[0], F = xs[1];
  Var xr = ad::Permute(x.re, {1, 0, 2});  // [F, T, C]
  Var xi = ad::Permute(x.im, {1, 0, 2});
  Var mt = ad::Transpose(mask);           // [F, T]
  Var m3 = ad::Reshape(mt, {F, T, 1});
  Var ar = xr * m3, ai = xi * m3;
  // sum_t a_t x_t^H as A^T conj(X).
  Var re = ad::BatchMatMul(ar, xr, true) + ad::BatchMatMul(ai, xi, true);
  Var im = ad::BatchMatMul(ai, xr, true) - ad::BatchMatMul(ar, xi, true);
  Var mass = ad::SumAxis(mt, 1);
  for (std::size_t f = 0; f < F; ++f)
    if (mass.value()[f] < kPsdEpsilon) ++g_zero_mass;
  Var denom = ad::Reshape(ad::AddScalar(mass, kPsdEpsilon), {F, 1, 1});
  return {re / denom, im / denom};
}

CVar MvdrFilter(const CVar &psd_speech, const CVar &psd_noise, Var u, const MvdrOptions &opts) {
  const Shape ss = psd_speech.shape(), ns = psd_noise.shape();
  CheckRank("mvdr_filter", ss, 3, "speech PSD");
  if (ns != ss || ss[1] != ss[2])
    throw ShapeError("mvdr_filter", "speech PSD " + ShapeString(ss) + " vs noise PSD " +
                                        ShapeString(ns));
  const std::size_t F = ss[0], C = ss[1];
  if (u.shape() != Shape{C})
    throw ShapeError("mvdr_filter", "reference " + ShapeString(u.shape()) + " for C = " +
                                        std::to_string(C));
  Tape &tape = *u.tape();
  Var tr_n = ad::SumAxis(ad::Diagonal(psd_noise.re), 1);
  Var load = ad::Reshape(ad::AddScalar(tr_n * (opts.load_scale / C), opts.load_floor), {F, 1, 1});
  CVar loaded{psd_noise.re + load * tape.Constant(Identity(C)), psd_noise.im};
  CVar m = ad::CMatMul(ad::CInverse(loaded), psd_speech);
  CVar tr{ad::SumAxis(ad::Diagonal(m.re), 1), ad::SumAxis(ad::Diagonal(m.im), 1)};
  for (std::size_t f = 0; f < F; ++f)
    if (std::hypot(tr.re.value()[f], tr.im.value()[f]) < 1e-12)
      throw NumericError("mvdr_filter: near-zero trace at frequency " + std::to_string(f),
                         static_cast<long>(f));
  Var u_col = ad::Reshape(u, {C, 1});
  CVar num{ad::Reshape(ad::BatchMatMul(m.re, u_col), {F, C}),
           ad::Reshape(ad::BatchMatMul(m.im, u_col), {F, C})};
  return ad::CDiv(num, {ad::Reshape(tr.re, {F, 1}), ad::Reshape(tr.im, {F, 1})});
}

Var ReferenceAttention(ParamScope &ps, const BeamformerConfig &cfg, Var speech_state,
                       Var noise_state, const CVar &psd_speech) {
  const Shape zs = speech_state.shape();
  CheckRank("reference_attention", zs, 3, "speech state");
  const std::size_t C = zs[1];
  Tape &tape = ps.tape();
  if (C == 1) return tape.Constant(Tensor::Vector({1.0}));
  if (cfg.mask_ref_fixed) return OneHot(tape, C, cfg.ref_channel);
  const Shape psd = psd_speech.shape();
  if (psd.size() != 3 || psd[1] != C || psd[2] != C)
    throw ShapeError("reference_attention", "PSD " + ShapeString(psd) + " for C = " +
                                                std::to_string(C));
  // q_c: time-averaged speech and noise states, [C, 2 D_Z].
  Var q = ad::Concat({ad::MeanAxis(speech_state, 0), ad::MeanAxis(noise_state, 0)}, 1);
  // r_c: mean over c' != c of phi_S[f, c, c'], real parts then imaginary, [C, 2F].
  const double inv = 1.0 / static_cast<double>(C - 1);
  auto off_diag = [&](Var part) {
    return ad::Transpose((ad::SumAxis(part, 2) - ad::Diagonal(part)) * inv);
  };
  Var r = ad::Concat({off_diag(psd_speech.re), off_diag(psd_speech.im)}, 1);
  Var h = ad::Tanh(Linear(ps, "bf/ref/q", q) + ad::MatMul(r, ps("bf/ref/r/W")));
  Var k = ad::MatMul(h, ps("bf/ref/v/W"));  // [C, 1]
  return ad::Reshape(ad::Softmax(ad::Reshape(k, {1, C}), cfg.beta), {C});
}

EnhanceResult Enhance(ParamScope &ps, const BeamformerConfig &cfg, const CVar &x) {
  const Shape s = x.shape();
  CheckRank("enhance", s, 3, "x");
  const std::size_t T = s[0], F = s[1];
  EnhanceResult out;
  switch (cfg.variant) {
    case BeamformerVariant::kNoisy:
      out.enhanced = {ad::Reshape(ad::Slice(x.re, 2, 0, 1), {T, F}),
                      ad::Reshape(ad::Slice(x.im, 2, 0, 1), {T, F})};
      return out;
    case BeamformerVariant::kFilterNet:
      out.filter = FilterNetForward(ps, cfg, x);
      out.enhanced = FilterAndSum(x, out.filter);
      return out;
    case BeamformerVariant::kMaskMvdr: {
      MaskNetOutput masks = MaskNetForward(ps, cfg, x);
      out.speech_mask = AverageMasks(masks.speech_mask);
      out.noise_mask = AverageMasks(masks.noise_mask);
      CVar phi_s = EstimatePsd(x, out.speech_mask);
      CVar phi_n = EstimatePsd(x, out.noise_mask);
      out.reference =
          ReferenceAttention(ps, cfg, masks.speech_state, masks.noise_state, phi_s);
      out.filter = MvdrFilter(phi_s, phi_n, out.reference, cfg.mvdr);
      out.enhanced = FilterAndSum(x, out.filter);
      return out;
    }
  }
  throw std::logic_error("enhance: unhandled variant");
}

CVar MvdrWithMasks(const CVar &x, Var speech_mask, Var noise_mask, std::size_t ref_channel,
                   const MvdrOptions &opts) {
  const std::size_t C = x.shape().at(2);
  CVar g = MvdrFilter(EstimatePsd(x, speech_mask), EstimatePsd(x, noise_mask),
                      OneHot(*speech_mask.tape(), C, ref_channel), opts);
  return FilterAndSum(x, g);
}

}  // namespace beamspeech
