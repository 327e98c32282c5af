// src/pipeline/run_config.cc

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

#include "beamspeech/run_config.h"

#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "beamspeech/keyvalue.h"

namespace beamspeech {

namespace {

struct Field {
  const char *key;
  std::function<std::string()> get;
  std::function<void(const std::string &)> set;
};

Field SizeField(const char *key, std::size_t &v) {
  return {key, [&v] { return std::to_string(v); },
          [&v, key](const std::string &s) { v = ParseUint(key, s); }};
}
Field DoubleField(const char *key, double &v) {
  return {key, [&v] { return FormatDouble(v); },
          [&v, key](const std::string &s) { v = ParseDouble(key, s); }};
}
Field BoolField(const char *key, bool &v) {
  return {key, [&v] { return std::string(v ? "true" : "false"); },
          [&v, key](const std::string &s) { v = ParseBool(key, s); }};
}
Field StringField(const char *key, std::string &v) {
  return {key, [&v] { return v; }, [&v](const std::string &s) { v = s; }};
}

std::string JoinSet(const std::set<std::size_t> &s) {
  std::string out;
  for (std::size_t v : s) out += (out.empty() ? "" : ",") + std::to_string(v);
  return out;
}

std::set<std::size_t> ParseSet(const std::string &key, const std::string &text) {
  std::set<std::size_t> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    while (!item.empty() && item.front() == ' ') item.erase(item.begin());
    while (!item.empty() && item.back() == ' ') item.pop_back();
    if (!item.empty()) out.insert(ParseUint(key, item));
  }
  return out;
}

// Profile first: it resets other fields when set.
std::vector<Field> Fields(RunConfig &c) {
  return {
      {"profile", [&c] { return ProfileName(c.profile); },
       [&c](const std::string &s) { c.ApplyProfile(ParseProfile(s)); }},
      StringField("corpus", c.corpus),
      StringField("out", c.out),
      {"seed", [&c] { return std::to_string(c.seed); },
       [&c](const std::string &s) { c.seed = ParseUint("seed", s); }},
      StringField("variant", c.variant),
      BoolField("mask_ref_fixed", c.mask_ref_fixed),
      SizeField("ref_channel", c.ref_channel),
      {"sample_rate", [&c] { return std::to_string(c.sample_rate); },
       [&c](const std::string &s) { c.sample_rate = static_cast<int>(ParseInt("sample_rate", s)); }},
      SizeField("frame_length", c.frame_length),
      SizeField("frame_shift", c.frame_shift),
      SizeField("fft_size", c.fft_size),
      SizeField("num_mel", c.num_mel),
      SizeField("mask_layers", c.mask_layers),
      SizeField("mask_cells", c.mask_cells),
      SizeField("mask_proj", c.mask_proj),
      SizeField("ref_dim", c.ref_dim),
      DoubleField("beta", c.beta),
      SizeField("filter_layers", c.filter_layers),
      SizeField("filter_cells", c.filter_cells),
      SizeField("filter_proj", c.filter_proj),
      SizeField("filter_channels", c.filter_channels),
      DoubleField("diag_load", c.diag_load),
      DoubleField("load_floor", c.load_floor),
      SizeField("enc_layers", c.enc_layers),
      SizeField("enc_cells", c.enc_cells),
      SizeField("enc_proj", c.enc_proj),
      {"subsample", [&c] { return JoinSet(c.subsample); },
       [&c](const std::string &s) { c.subsample = ParseSet("subsample", s); }},
      SizeField("embed_dim", c.embed_dim),
      SizeField("dec_cells", c.dec_cells),
      SizeField("att_dim", c.att_dim),
      SizeField("conv_filters", c.conv_filters),
      SizeField("conv_width", c.conv_width),
      DoubleField("alpha", c.alpha),
      DoubleField("ctc_weight", c.ctc_weight),
      SizeField("beam", c.beam),
      DoubleField("decode_ctc_weight", c.decode_ctc_weight),
      DoubleField("length_penalty", c.length_penalty),
      BoolField("length_gating", c.length_gating),
      DoubleField("min_ratio", c.min_ratio),
      DoubleField("max_ratio", c.max_ratio),
      DoubleField("init_range", c.init_range),
      DoubleField("rho", c.rho),
      DoubleField("eps", c.eps),
      DoubleField("eps_decay", c.eps_decay),
      DoubleField("clip_norm", c.clip_norm),
      SizeField("epochs", c.epochs),
      SizeField("batch_size", c.batch_size),
      BoolField("multi_condition", c.multi_condition),
  };
}

}  // namespace

std::string ProfileName(Profile p) { return p == Profile::kTiny ? "tiny" : "full-doc"; }

Profile ParseProfile(const std::string &name) {
  if (name == "tiny") return Profile::kTiny;
  if (name == "full-doc") return Profile::kFullDoc;
  throw std::invalid_argument("unknown profile '" + name + "' (tiny, full-doc)");
}

void RunConfig::ApplyProfile(Profile p) {
  const RunConfig d;  // tiny defaults
  profile = p;
  if (p == Profile::kTiny) {
    sample_rate = d.sample_rate;
    frame_length = d.frame_length;
    frame_shift = d.frame_shift;
    fft_size = d.fft_size;
    num_mel = d.num_mel;
    mask_layers = d.mask_layers;
    mask_cells = mask_proj = ref_dim = d.mask_cells;
    filter_layers = d.filter_layers;
    filter_cells = filter_proj = d.filter_cells;
    enc_layers = d.enc_layers;
    enc_cells = enc_proj = embed_dim = dec_cells = att_dim = d.enc_cells;
    conv_filters = d.conv_filters;
    conv_width = d.conv_width;
    subsample = d.subsample;
    return;
  }
  // 25 ms / 10 ms Hamming frames at 16 kHz, 40 log-Mel features, 320-unit
  // networks, a 4-layer encoder subsampled after layers 1 and 2, 10
  // attention filters of width 101 and 3-layer beamformer networks.
  sample_rate = 16000;
  frame_length = 400;
  frame_shift = 160;
  fft_size = 512;
  num_mel = 40;
  mask_layers = filter_layers = 3;
  mask_cells = mask_proj = ref_dim = filter_cells = filter_proj = 320;
  enc_layers = 4;
  enc_cells = enc_proj = embed_dim = dec_cells = att_dim = 320;
  subsample = {0, 1};
  conv_filters = 10;
  conv_width = 101;
}

void RunConfig::Set(const std::string &key, const std::string &value) {
  for (auto &f : Fields(*this))
    if (key == f.key) {
      f.set(value);
      return;
    }
  throw std::invalid_argument("unknown config key '" + key + "'");
}

void RunConfig::Validate() const {
  auto fail = [](const std::string &m) { throw std::invalid_argument("config: " + m); };
  if (variant != "noisy" && variant != "filter_net" && variant != "mask_mvdr")
    fail("variant must be noisy, filter_net or mask_mvdr");
  if (sample_rate <= 0 || frame_length == 0 || frame_shift == 0 || fft_size < frame_length)
    fail("bad STFT geometry");
  if (num_mel == 0 || mask_layers == 0 || enc_layers == 0 || filter_layers == 0) fail("zero size");
  if (conv_width % 2 == 0) fail("conv_width must be odd");
  for (std::size_t l : subsample)
    if (l >= enc_layers) fail("subsample layer index out of range");
  if (!(ctc_weight >= 0.0 && ctc_weight <= 1.0)) fail("ctc_weight must lie in [0, 1]");
  if (!(rho > 0.0 && rho < 1.0)) fail("rho must lie in (0, 1)");
  if (!(eps > 0.0) || !(eps_decay > 0.0)) fail("eps and eps_decay must be positive");
  if (!(init_range >= 0.0)) fail("init_range must be >= 0");
  if (beam == 0 || batch_size == 0) fail("beam and batch_size must be positive");
  if (!(diag_load >= 0.0) || !(load_floor > 0.0)) fail("bad diagonal loading");
}

std::string DumpRunConfig(const RunConfig &cfg) {
  RunConfig copy = cfg;
  std::string out;
  for (auto &f : Fields(copy)) out += std::string(f.key) + " = " + f.get() + "\n";
  return out;
}

RunConfig ParseRunConfig(const std::string &text) {
  RunConfig cfg;
  const auto pairs = ParseKeyValueText(text);
  // The profile resets dimensions, so it is applied before everything else.
  for (const auto &[k, v] : pairs)
    if (k == "profile") cfg.Set(k, v);
  for (const auto &[k, v] : pairs)
    if (k != "profile") cfg.Set(k, v);
  return cfg;
}

RunConfig LoadRunConfig(const std::string &path) { return ParseRunConfig(ReadTextFile(path)); }

}  // namespace beamspeech
