// src/corpus/corpus.cc

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

#include "beamspeech/corpus.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "beamspeech/audio_io.h"
#include "beamspeech/keyvalue.h"
#include "beamspeech/recognizer.h"

namespace beamspeech {

namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Sensor noise added to a point source, relative to the interferer power.
constexpr double kSensorNoiseDb = -25.0;

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double Uniform(std::mt19937_64 &rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::size_t UniformInt(std::mt19937_64 &rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Raised-cosine on/off ramps of `ramp` samples.
double Envelope(std::size_t n, std::size_t len, std::size_t ramp) {
  if (ramp == 0) return 1.0;
  const std::size_t k = std::min(n, len - 1 - n);
  if (k >= ramp) return 1.0;
  return 0.5 - 0.5 * std::cos(kPi * (static_cast<double>(k) + 0.5) / ramp);
}

void AddTone(std::vector<double> &out, std::size_t start, std::size_t len, double hz,
             double amp, double phase, int sample_rate, std::size_t ramp) {
  for (std::size_t n = 0; n < len && start + n < out.size(); ++n)
    out[start + n] += amp * Envelope(n, len, ramp) *
                      std::sin(2.0 * kPi * hz * static_cast<double>(n) / sample_rate + phase);
}

// Babble-like signal: overlapping streams of short random two-tone segments.
std::vector<double> Babble(std::size_t num_samples, int sample_rate, std::mt19937_64 &rng) {
  std::vector<double> out(num_samples, 0.0);
  const double nyq = sample_rate / 2.0;
  const std::size_t ramp = static_cast<std::size_t>(0.008 * sample_rate);
  for (int stream = 0; stream < 3; ++stream) {
    std::size_t t = UniformInt(rng, 0, static_cast<std::size_t>(0.05 * sample_rate));
    while (t < num_samples) {
      const std::size_t len = UniformInt(rng, static_cast<std::size_t>(0.05 * sample_rate),
                                         static_cast<std::size_t>(0.12 * sample_rate));
      const double amp = Uniform(rng, 0.5, 1.0);
      for (int k = 0; k < 2; ++k)
        AddTone(out, t, len, Uniform(rng, 150.0, 0.9 * nyq), amp, Uniform(rng, 0.0, 2 * kPi),
                sample_rate, ramp);
      t += len - ramp;
    }
  }
  return out;
}

std::vector<double> White(std::size_t num_samples, std::mt19937_64 &rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> out(num_samples);
  for (auto &v : out) v = g(rng);
  return out;
}

double Energy(const std::vector<double> &x) {
  long double s = 0.0L;
  for (double v : x) s += static_cast<long double>(v) * v;
  return static_cast<double>(s);
}

// Noise images before SNR scaling, one per channel.
std::vector<std::vector<double>> NoiseImages(const SceneSpec &scene, std::size_t num_samples) {
  std::mt19937_64 rng(SplitMix64(scene.seed ^ 0x6e6f697365ULL));
  const std::size_t C = scene.num_channels;
  std::vector<std::vector<double>> out(C);
  switch (scene.noise) {
    case NoiseKind::kWhite:
      for (auto &ch : out) ch = White(num_samples, rng);
      break;
    case NoiseKind::kBabble:
      for (auto &ch : out) ch = Babble(num_samples, scene.sample_rate, rng);
      break;
    case NoiseKind::kPointSource: {
      const std::size_t max_d =
          *std::max_element(scene.noise_delays.begin(), scene.noise_delays.end());
      const auto source = Babble(num_samples + max_d, scene.sample_rate, rng);
      const double sensor = std::sqrt(Energy(source) / source.size() *
                                      std::pow(10.0, kSensorNoiseDb / 10.0));
      for (std::size_t c = 0; c < C; ++c) {
        out[c].resize(num_samples);
        const auto floor = White(num_samples, rng);
        for (std::size_t n = 0; n < num_samples; ++n)
          out[c][n] = source[n + max_d - scene.noise_delays[c]] + sensor * floor[n];
      }
      break;
    }
  }
  return out;
}

}  // namespace

std::string NoiseKindName(NoiseKind k) {
  switch (k) {
    case NoiseKind::kWhite: return "white";
    case NoiseKind::kBabble: return "babble";
    case NoiseKind::kPointSource: return "point";
  }
  return "?";
}

NoiseKind ParseNoiseKind(const std::string &name) {
  if (name == "white") return NoiseKind::kWhite;
  if (name == "babble") return NoiseKind::kBabble;
  if (name == "point") return NoiseKind::kPointSource;
  throw std::invalid_argument("unknown noise kind '" + name + "' (white, babble, point)");
}

void SceneSpec::Validate() const {
  if (num_channels == 0) throw std::invalid_argument("scene: need at least one channel");
  if (sample_rate <= 0) throw std::invalid_argument("scene: sample rate must be positive");
  if (delays.size() != num_channels || gains.size() != num_channels)
    throw std::invalid_argument("scene: need one delay and one gain per channel");
  for (double g : gains)
    if (!(g >= 0.0) || !std::isfinite(g)) throw std::invalid_argument("scene: bad gain");
  if (noise == NoiseKind::kPointSource && noise_delays.size() != num_channels)
    throw std::invalid_argument("scene: point-source noise needs one delay per channel");
  if (std::isnan(snr_db) || snr_db == -HUGE_VAL)
    throw std::invalid_argument("scene: SNR must be finite or +inf");
}

ToneTable MakeToneTable(std::size_t alphabet_size, int sample_rate) {
  // Primary tones equally spaced in mel; the secondary tone of character i
  // sits half a step above the primary of character (i + 3) mod n.
  ToneTable t;
  const double top = HzToMel(0.45 * sample_rate);
  const double bottom = HzToMel(150.0);
  const double n = static_cast<double>(alphabet_size);
  const double step = (top - bottom) / (n + 0.5);
  for (std::size_t i = 0; i < alphabet_size; ++i) {
    t.low_hz.push_back(MelToHz(bottom + (i + 0.25) * step));
    t.high_hz.push_back(MelToHz(bottom + (((i + 3) % alphabet_size) + 0.75) * step));
  }
  return t;
}

std::vector<double> SynthesizeSource(const std::string &transcript, const std::string &alphabet,
                                     int sample_rate, std::uint64_t seed) {
  const Vocabulary vocab = Vocabulary::FromAlphabet(alphabet);
  const Labels ids = vocab.Encode(transcript);
  if (ids.empty()) throw std::invalid_argument("synth: empty transcript");
  const ToneTable table = MakeToneTable(vocab.num_chars(), sample_rate);
  std::mt19937_64 rng(SplitMix64(seed));
  const auto ms = [&](double v) { return static_cast<std::size_t>(v * sample_rate / 1000.0); };

  struct Segment {
    std::size_t start, len;
    double amp, phase_lo, phase_hi;
    int ch;
  };
  std::vector<Segment> segs;
  std::size_t t = UniformInt(rng, ms(40), ms(80));
  for (int id : ids) {
    Segment s;
    s.start = t;
    s.len = UniformInt(rng, ms(64), ms(96));
    s.amp = Uniform(rng, 0.3, 0.5);
    s.phase_lo = Uniform(rng, 0.0, 2 * kPi);
    s.phase_hi = Uniform(rng, 0.0, 2 * kPi);
    s.ch = id - kFirstChar;
    segs.push_back(s);
    t += s.len + UniformInt(rng, ms(16), ms(32));
  }
  std::vector<double> out(t + UniformInt(rng, ms(40), ms(80)), 0.0);
  for (const auto &s : segs) {
    AddTone(out, s.start, s.len, table.low_hz[s.ch], s.amp, s.phase_lo, sample_rate, ms(8));
    AddTone(out, s.start, s.len, table.high_hz[s.ch], 0.6 * s.amp, s.phase_hi, sample_rate, ms(8));
  }
  return out;
}

Utterance SynthUtterance(const SceneSpec &scene, const std::string &transcript,
                         const std::string &alphabet) {
  scene.Validate();
  Utterance u;
  u.transcript = transcript;
  u.scene = scene;
  const auto src = SynthesizeSource(transcript, alphabet, scene.sample_rate, scene.seed);
  const std::size_t N = src.size();
  const std::size_t C = scene.num_channels;
  u.clean.sample_rate = u.speech.sample_rate = u.noise.sample_rate = u.noisy.sample_rate =
      scene.sample_rate;
  u.clean.samples = {src};
  u.speech.samples.assign(C, std::vector<double>(N, 0.0));
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t n = scene.delays[c]; n < N; ++n)
      u.speech.samples[c][n] = scene.gains[c] * src[n - scene.delays[c]];

  u.noise.samples.assign(C, std::vector<double>(N, 0.0));
  if (std::isfinite(scene.snr_db)) {
    auto images = NoiseImages(scene, N);
    const double ps = Energy(u.speech.samples[0]);
    const double pn = Energy(images[0]);
    const double scale = pn > 0.0 ? std::sqrt(ps / (pn * std::pow(10.0, scene.snr_db / 10.0))) : 0.0;
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t n = 0; n < N; ++n) u.noise.samples[c][n] = scale * images[c][n];
  }
  u.noisy.samples = u.speech.samples;
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t n = 0; n < N; ++n) u.noisy.samples[c][n] += u.noise.samples[c][n];
  return u;
}

double MeasureSnrDb(const Waveform &speech, const Waveform &noise, std::size_t channel) {
  const double pn = Energy(noise.samples.at(channel));
  if (pn == 0.0) return HUGE_VAL;
  return 10.0 * std::log10(Energy(speech.samples.at(channel)) / pn);
}

MaskPair OracleMasks(const Utterance &utt, const StftOptions &opts, std::size_t channel) {
  const auto S = Stft(utt.speech.Channel(channel), opts).Channel(0);
  const auto N = Stft(utt.noise.Channel(channel), opts).Channel(0);
  MaskPair m{Tensor(S.re.shape()), Tensor(S.re.shape())};
  for (std::size_t i = 0; i < S.re.size(); ++i) {
    const double s = S.re[i] * S.re[i] + S.im[i] * S.im[i];
    const double n = N.re[i] * N.re[i] + N.im[i] * N.im[i];
    m.speech[i] = (s + n) > 0.0 ? s / (s + n) : (n == 0.0 ? 1.0 : 0.0);
    m.noise[i] = 1.0 - m.speech[i];
  }
  return m;
}

std::uint64_t UtteranceSeed(std::uint64_t corpus_seed, int split, std::size_t index) {
  return SplitMix64(SplitMix64(corpus_seed) ^ (static_cast<std::uint64_t>(split) << 40) ^ index);
}

SceneSpec MakeScene(const CorpusConfig &cfg, std::uint64_t utt_seed) {
  std::mt19937_64 rng(SplitMix64(utt_seed ^ 0x7363656e65ULL));
  SceneSpec s;
  s.num_channels = cfg.num_channels;
  s.sample_rate = cfg.sample_rate;
  s.noise = cfg.noise;
  s.seed = utt_seed;
  s.snr_db = cfg.snr_min_db == cfg.snr_max_db ? cfg.snr_min_db
                                               : Uniform(rng, cfg.snr_min_db, cfg.snr_max_db);
  // Redraw until the noise arrives from a different direction than the
  // source, otherwise no spatial filter can separate them.
  for (;;) {
    s.delays.clear();
    s.gains.clear();
    s.noise_delays.clear();
    for (std::size_t c = 0; c < cfg.num_channels; ++c) {
      s.delays.push_back(UniformInt(rng, 0, cfg.max_delay));
      s.gains.push_back(c == 0 ? 1.0 : Uniform(rng, 0.7, 1.0));
      s.noise_delays.push_back(UniformInt(rng, 0, cfg.max_noise_delay));
    }
    if (cfg.num_channels < 2 || cfg.noise != NoiseKind::kPointSource) break;
    bool separable = false;
    for (std::size_t c = 1; c < cfg.num_channels; ++c) {
      const long ds = static_cast<long>(s.delays[c]) - static_cast<long>(s.delays[0]);
      const long dn = static_cast<long>(s.noise_delays[c]) - static_cast<long>(s.noise_delays[0]);
      if (std::labs(ds - dn) >= 2) separable = true;
    }
    if (separable || (cfg.max_delay + cfg.max_noise_delay) < 2) break;
  }
  if (cfg.noise != NoiseKind::kPointSource) s.noise_delays.clear();
  return s;
}

std::string MakeTranscript(const CorpusConfig &cfg, std::uint64_t utt_seed) {
  std::mt19937_64 rng(SplitMix64(utt_seed ^ 0x74657874ULL));
  const auto chars = SplitUtf8(cfg.alphabet);
  const std::size_t len = UniformInt(rng, cfg.min_chars, cfg.max_chars);
  std::string out;
  for (std::size_t i = 0; i < len; ++i) out += chars[UniformInt(rng, 0, chars.size() - 1)];
  return out;
}

Utterance GenerateUtterance(const CorpusConfig &cfg, int split, std::size_t index) {
  const std::uint64_t seed = UtteranceSeed(cfg.seed, split, index);
  Utterance u = SynthUtterance(MakeScene(cfg, seed), MakeTranscript(cfg, seed), cfg.alphabet);
  char id[64];
  std::snprintf(id, sizeof(id), "%s_%04zu", kSplitNames[split], index);
  u.id = id;
  return u;
}

void WriteManifest(const std::string &path, const std::vector<ManifestEntry> &entries) {
  std::ostringstream out;
  for (const auto &e : entries)
    out << e.id << '\t' << e.wav << '\t' << e.transcript << '\t' << e.seed << '\t' << e.channels
        << '\t' << FormatDouble(e.snr_db) << '\n';
  WriteTextFile(path, out.str());
}

std::vector<ManifestEntry> ReadManifest(const std::string &path) {
  std::istringstream in(ReadTextFile(path));
  std::vector<ManifestEntry> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    for (;;) {
      const auto tab = line.find('\t', pos);
      f.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    const std::string where = path + ":" + std::to_string(line_no);
    if (f.size() != 6) throw std::runtime_error(where + ": expected 6 tab-separated fields");
    try {
      out.push_back({f[0], f[1], f[2], ParseUint("seed", f[3]),
                     static_cast<std::size_t>(ParseUint("channels", f[4])),
                     ParseDouble("snr", f[5])});
    } catch (const std::invalid_argument &e) {
      throw std::runtime_error(where + ": " + e.what());
    }
  }
  return out;
}

std::string CorpusConfigText(const CorpusConfig &c) {
  std::ostringstream o;
  o << "seed = " << c.seed << '\n'
    << "num_train = " << c.num_train << '\n'
    << "num_dev = " << c.num_dev << '\n'
    << "num_eval = " << c.num_eval << '\n'
    << "num_channels = " << c.num_channels << '\n'
    << "sample_rate = " << c.sample_rate << '\n'
    << "min_chars = " << c.min_chars << '\n'
    << "max_chars = " << c.max_chars << '\n'
    << "alphabet = " << c.alphabet << '\n'
    << "noise = " << NoiseKindName(c.noise) << '\n'
    << "snr_min_db = " << FormatDouble(c.snr_min_db) << '\n'
    << "snr_max_db = " << FormatDouble(c.snr_max_db) << '\n'
    << "max_delay = " << c.max_delay << '\n'
    << "max_noise_delay = " << c.max_noise_delay << '\n';
  return o.str();
}

CorpusConfig ParseCorpusConfig(const std::string &text) {
  CorpusConfig c;
  for (const auto &[k, v] : ParseKeyValueText(text)) {
    if (k == "seed") c.seed = ParseUint(k, v);
    else if (k == "num_train") c.num_train = ParseUint(k, v);
    else if (k == "num_dev") c.num_dev = ParseUint(k, v);
    else if (k == "num_eval") c.num_eval = ParseUint(k, v);
    else if (k == "num_channels") c.num_channels = ParseUint(k, v);
    else if (k == "sample_rate") c.sample_rate = static_cast<int>(ParseInt(k, v));
    else if (k == "min_chars") c.min_chars = ParseUint(k, v);
    else if (k == "max_chars") c.max_chars = ParseUint(k, v);
    else if (k == "alphabet") c.alphabet = v;
    else if (k == "noise") c.noise = ParseNoiseKind(v);
    else if (k == "snr_min_db") c.snr_min_db = ParseDouble(k, v);
    else if (k == "snr_max_db") c.snr_max_db = ParseDouble(k, v);
    else if (k == "max_delay") c.max_delay = ParseUint(k, v);
    else if (k == "max_noise_delay") c.max_noise_delay = ParseUint(k, v);
    else throw std::invalid_argument("unknown corpus key '" + k + "'");
  }
  return c;
}

void BuildCorpus(const CorpusConfig &cfg, const std::string &out_dir) {
  if (cfg.num_channels == 0 || cfg.min_chars == 0 || cfg.min_chars > cfg.max_chars ||
      cfg.alphabet.empty() || cfg.snr_min_db > cfg.snr_max_db)
    throw std::invalid_argument("corpus: invalid configuration");
  fs::create_directories(fs::path(out_dir) / "wav");
  WriteTextFile((fs::path(out_dir) / "corpus.cfg").string(), CorpusConfigText(cfg));
  Vocabulary::FromAlphabet(cfg.alphabet).Save((fs::path(out_dir) / "vocab.txt").string());
  const std::size_t counts[3] = {cfg.num_train, cfg.num_dev, cfg.num_eval};
  for (int split = 0; split < 3; ++split) {
    std::vector<ManifestEntry> entries;
    for (std::size_t i = 0; i < counts[split]; ++i) {
      const Utterance u = GenerateUtterance(cfg, split, i);
      const std::string wav = "wav/" + u.id + ".wav";
      WriteWav((fs::path(out_dir) / wav).string(), u.noisy, WavFormat::kFloat32);
      WriteWav((fs::path(out_dir) / ("wav/" + u.id + ".speech.wav")).string(), u.speech,
               WavFormat::kFloat32);
      entries.push_back({u.id, wav, u.transcript, u.scene.seed, u.scene.num_channels,
                         u.scene.snr_db});
    }
    WriteManifest((fs::path(out_dir) / (std::string(kSplitNames[split]) + ".tsv")).string(),
                  entries);
  }
}

}  // namespace beamspeech
