// include/beamspeech/beamformer.h

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
// Neural beamformers mapping a multichannel STFT [T, F, C] to one enhanced
// channel [T, F]: a filter estimation network that emits time-variant filters
// directly, and a mask-driven MVDR beamformer with a learned soft choice of
// the reference microphone.

#ifndef BEAMSPEECH_BEAMFORMER_H_
#define BEAMSPEECH_BEAMFORMER_H_

#include <cstdint>
#include <string>

#include "beamspeech/complex_ops.h"
#include "beamspeech/nn.h"

namespace beamspeech {

enum class BeamformerVariant { kNoisy, kFilterNet, kMaskMvdr };

std::string VariantName(BeamformerVariant v);
// Accepts "noisy", "filter_net" and "mask_mvdr".
BeamformerVariant ParseVariant(const std::string &name);

struct MvdrOptions {
  // Phi_N + (scale * Re tr(Phi_N) / C + floor) I is inverted.
  double load_scale = 1e-7;
  double load_floor = 1e-10;
};

struct BeamformerConfig {
  BeamformerVariant variant = BeamformerVariant::kMaskMvdr;
  std::size_t num_bins = 33;  // F

  // Mask networks (one stack for speech, one for noise).
  std::size_t mask_layers = 2;
  std::size_t mask_cells = 16;
  std::size_t mask_proj = 16;  // D_Z

  // Reference attention.
  std::size_t ref_dim = 16;  // D_V
  double beta = 2.0;
  bool mask_ref_fixed = false;
  std::size_t ref_channel = 0;

  // Filter estimation network; its output heads fix the channel count.
  std::size_t filter_layers = 2;
  std::size_t filter_cells = 16;
  std::size_t filter_proj = 16;
  std::size_t filter_channels = 2;

  MvdrOptions mvdr;
};

// Registers every parameter the configured variant needs under "bf/".
void RegisterBeamformer(ParameterStore &store, const BeamformerConfig &cfg);

// x_hat[t,f] = sum_c conj(g[t,f,c]) x[t,f,c]. g is [T,F,C] (time-variant) or
// [F,C] (time-invariant, broadcast over t).
CVar FilterAndSum(const CVar &x, const CVar &g);

// Time-variant filters [T, F, C] with entries in (-1, 1). Throws ShapeError
// when C differs from the number of trained output heads.
CVar FilterNetForward(ParamScope &ps, const BeamformerConfig &cfg, const CVar &x);

struct MaskNetOutput {
  Var speech_mask;  // [T, C, F]
  Var noise_mask;   // [T, C, F]
  Var speech_state; // [T, C, D_Z]
  Var noise_state;  // [T, C, D_Z]
};

// Runs the shared mask networks on every channel of x [T, F, C]; channels are
// independent batch rows.
MaskNetOutput MaskNetForward(ParamScope &ps, const BeamformerConfig &cfg, const CVar &x);

// Mean over the channel axis of [T, C, F] masks -> [T, F].
Var AverageMasks(Var masks);

// Process-wide count of frequencies whose mask mass fell below the epsilon.
std::uint64_t PsdZeroMassCount();
void ResetPsdZeroMassCount();

inline constexpr double kPsdEpsilon = 1e-10;

// Phi[f] = sum_t m[t,f] x[t,f] x[t,f]^H / (sum_t m[t,f] + eps) for x [T,F,C]
// and m [T,F]; result [F,C,C].
CVar EstimatePsd(const CVar &x, Var mask);

// g(f) = (Phi_N^-1 Phi_S / tr(Phi_N^-1 Phi_S)) u with loading on Phi_N.
// u is a real [C] vector. Returns [F,C]. Throws NumericError carrying f when
// |tr| < 1e-12.
CVar MvdrFilter(const CVar &psd_speech, const CVar &psd_noise, Var u,
                const MvdrOptions &opts = {});

// Soft reference weights u [C] from per-channel mask-net states [T,C,D_Z]
// and the speech PSD [F,C,C]. With C = 1 the result is [1].
Var ReferenceAttention(ParamScope &ps, const BeamformerConfig &cfg, Var speech_state,
                       Var noise_state, const CVar &psd_speech);

struct EnhanceResult {
  CVar enhanced;     // [T, F]
  CVar filter;       // [F, C] or [T, F, C]; invalid for the noisy variant
  Var speech_mask;   // averaged [T, F], mask_mvdr only
  Var noise_mask;
  Var reference;     // u [C], mask_mvdr only
};

// x is [T, F, C]. The noisy variant returns channel 0 untouched.
EnhanceResult Enhance(ParamScope &ps, const BeamformerConfig &cfg, const CVar &x);

// MVDR from externally supplied masks [T, F] with a fixed reference channel;
// used for oracle-mask evaluation.
CVar MvdrWithMasks(const CVar &x, Var speech_mask, Var noise_mask, std::size_t ref_channel,
                   const MvdrOptions &opts = {});

}  // namespace beamspeech

#endif  // BEAMSPEECH_BEAMFORMER_H_
