// include/beamspeech/corpus.h

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
// Synthetic multichannel corpus: character-driven tone patterns observed by a
// small array with integer-sample delays, mixed with noise at a target SNR
// measured on channel 0.

#ifndef BEAMSPEECH_CORPUS_H_
#define BEAMSPEECH_CORPUS_H_

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "beamspeech/signal.h"

namespace beamspeech {

enum class NoiseKind { kWhite, kBabble, kPointSource };

std::string NoiseKindName(NoiseKind k);
NoiseKind ParseNoiseKind(const std::string &name);

inline constexpr double kInfiniteSnr = std::numeric_limits<double>::infinity();

struct SceneSpec {
  std::size_t num_channels = 2;
  int sample_rate = 8000;
  std::vector<std::size_t> delays;  // source delay per channel, samples
  std::vector<double> gains;        // source gain per channel
  NoiseKind noise = NoiseKind::kPointSource;
  // Point-source noise only: its own per-channel delays.
  std::vector<std::size_t> noise_delays;
  double snr_db = 0.0;  // +inf means no noise
  std::uint64_t seed = 0;

  // Throws std::invalid_argument on inconsistent sizes, negative gains or a
  // NaN / -inf SNR.
  void Validate() const;
};

struct Utterance {
  std::string id;
  std::string transcript;
  SceneSpec scene;
  Waveform clean;   // dry source, one channel
  Waveform speech;  // per-channel source images
  Waveform noise;   // per-channel noise images, scaled to the SNR
  Waveform noisy;   // speech + noise
};

// Per-character tone pattern parameters for `alphabet`: character i is two
// simultaneous tones whose frequencies depend only on i.
struct ToneTable {
  std::vector<double> low_hz;
  std::vector<double> high_hz;
};
ToneTable MakeToneTable(std::size_t alphabet_size, int sample_rate);

// The dry source for a transcript (character order as in `alphabet`);
// segment timing and amplitudes are drawn from `seed`.
std::vector<double> SynthesizeSource(const std::string &transcript, const std::string &alphabet,
                                     int sample_rate, std::uint64_t seed);

Utterance SynthUtterance(const SceneSpec &scene, const std::string &transcript,
                         const std::string &alphabet);

// 10 log10(sum speech^2 / sum noise^2) on one channel.
double MeasureSnrDb(const Waveform &speech, const Waveform &noise, std::size_t channel = 0);

struct MaskPair {
  Tensor speech;  // [T, F]
  Tensor noise;   // [T, F]
};

// Ideal ratio masks |S|^2 / (|S|^2 + |N|^2) on the reference channel. A bin
// with no noise energy gets a speech mask of 1, even when it is silent.
MaskPair OracleMasks(const Utterance &utt, const StftOptions &opts, std::size_t channel = 0);

struct CorpusConfig {
  std::uint64_t seed = 1;
  std::size_t num_train = 1000;
  std::size_t num_dev = 100;
  std::size_t num_eval = 100;
  std::size_t num_channels = 2;
  int sample_rate = 8000;
  std::size_t min_chars = 3;
  std::size_t max_chars = 6;
  std::string alphabet = "abcdefgh";
  NoiseKind noise = NoiseKind::kPointSource;
  double snr_min_db = -6.0;
  double snr_max_db = 0.0;
  std::size_t max_delay = 3;        // source delays drawn from [0, max_delay]
  std::size_t max_noise_delay = 6;  // noise delays drawn from [0, max_noise_delay]
};

// Scene and transcript of utterance `index` in `split` (0 train, 1 dev,
// 2 eval), a pure function of the configuration.
std::uint64_t UtteranceSeed(std::uint64_t corpus_seed, int split, std::size_t index);
SceneSpec MakeScene(const CorpusConfig &cfg, std::uint64_t utt_seed);
std::string MakeTranscript(const CorpusConfig &cfg, std::uint64_t utt_seed);
Utterance GenerateUtterance(const CorpusConfig &cfg, int split, std::size_t index);

struct ManifestEntry {
  std::string id;
  std::string wav;  // relative to the corpus directory
  std::string transcript;
  std::uint64_t seed = 0;
  std::size_t channels = 0;
  double snr_db = 0.0;
};

inline const char *const kSplitNames[3] = {"train", "dev", "eval"};

// Writes <out>/<split>.tsv manifests, <out>/wav/<id>.wav (noisy) and
// <out>/wav/<id>.speech.wav (source images), both 32-bit float, plus
// <out>/corpus.cfg and <out>/vocab.txt.
void BuildCorpus(const CorpusConfig &cfg, const std::string &out_dir);

std::vector<ManifestEntry> ReadManifest(const std::string &path);
void WriteManifest(const std::string &path, const std::vector<ManifestEntry> &entries);

// key = value serialization of a corpus configuration.
std::string CorpusConfigText(const CorpusConfig &cfg);
CorpusConfig ParseCorpusConfig(const std::string &text);

}  // namespace beamspeech

#endif  // BEAMSPEECH_CORPUS_H_
