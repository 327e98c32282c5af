// include/beamspeech/run_config.h

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
// Every knob of a run in one flat struct, serialized as "key = value" text.
// Setting `profile` first resets all model dimensions and front-end options
// to that profile's defaults; explicit keys then override them.

#ifndef BEAMSPEECH_RUN_CONFIG_H_
#define BEAMSPEECH_RUN_CONFIG_H_

#include <cstdint>
#include <set>
#include <string>

namespace beamspeech {

enum class Profile { kTiny, kFullDoc };

std::string ProfileName(Profile p);
// "tiny" or "full-doc".
Profile ParseProfile(const std::string &name);

struct RunConfig {
  // Paths and identity.
  std::string corpus = "corpus";
  std::string out = "run";
  std::uint64_t seed = 1;
  Profile profile = Profile::kTiny;

  // Model variant.
  std::string variant = "mask_mvdr";
  bool mask_ref_fixed = false;
  std::size_t ref_channel = 0;

  // Front end; frame sizes in samples.
  int sample_rate = 8000;
  std::size_t frame_length = 64;
  std::size_t frame_shift = 32;
  std::size_t fft_size = 64;
  std::size_t num_mel = 12;

  // Beamformer.
  std::size_t mask_layers = 2;
  std::size_t mask_cells = 16;
  std::size_t mask_proj = 16;
  std::size_t ref_dim = 16;
  double beta = 2.0;
  std::size_t filter_layers = 2;
  std::size_t filter_cells = 16;
  std::size_t filter_proj = 16;
  std::size_t filter_channels = 2;
  double diag_load = 1e-7;
  double load_floor = 1e-10;

  // Recognizer.
  std::size_t enc_layers = 2;
  std::size_t enc_cells = 16;
  std::size_t enc_proj = 16;
  std::set<std::size_t> subsample = {0, 1};
  std::size_t embed_dim = 16;
  std::size_t dec_cells = 16;
  std::size_t att_dim = 16;
  std::size_t conv_filters = 4;
  std::size_t conv_width = 11;
  double alpha = 2.0;
  double ctc_weight = 0.1;

  // Decoding.
  std::size_t beam = 20;
  double decode_ctc_weight = 0.1;
  double length_penalty = 0.3;
  bool length_gating = false;
  double min_ratio = 0.3;
  double max_ratio = 0.75;

  // Training.
  double init_range = 0.1;
  double rho = 0.95;
  double eps = 1e-8;
  double eps_decay = 0.01;
  double clip_norm = 5.0;
  std::size_t epochs = 15;
  std::size_t batch_size = 2;
  bool multi_condition = true;

  // Resets model and front-end fields to the defaults of `p`.
  void ApplyProfile(Profile p);
  // Sets one key from text; throws std::invalid_argument on an unknown key
  // or a malformed value.
  void Set(const std::string &key, const std::string &value);
  // Throws std::invalid_argument on inconsistent values.
  void Validate() const;
};

// Canonical text with every key; Parse(Dump(c)) reproduces c exactly.
std::string DumpRunConfig(const RunConfig &cfg);
RunConfig ParseRunConfig(const std::string &text);
RunConfig LoadRunConfig(const std::string &path);

}  // namespace beamspeech

#endif  // BEAMSPEECH_RUN_CONFIG_H_
