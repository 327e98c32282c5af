// tests/corpus_test.cc

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

#include <cmath>
#include <filesystem>
#include <set>

#include "beamspeech/audio_io.h"
#include "beamspeech/corpus.h"
#include "beamspeech/keyvalue.h"
#include "beamspeech/recognizer.h"
#include "doctest.h"

using namespace beamspeech;
namespace fs = std::filesystem;

namespace {

SceneSpec Scene(std::size_t C, double snr, NoiseKind kind, std::uint64_t seed) {
  SceneSpec s;
  s.num_channels = C;
  s.snr_db = snr;
  s.noise = kind;
  s.seed = seed;
  for (std::size_t c = 0; c < C; ++c) {
    s.delays.push_back(c * 2);
    s.gains.push_back(1.0 - 0.1 * c);
    s.noise_delays.push_back(5 - c);
  }
  return s;
}

double SumSq(const std::vector<double> &x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

fs::path TempDir(const std::string &name) {
  auto p = fs::temp_directory_path() / ("beamspeech_corpus_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("scene validation") {
  SceneSpec s = Scene(2, 0.0, NoiseKind::kPointSource, 1);
  CHECK_NOTHROW(s.Validate());
  s.gains.pop_back();
  CHECK_THROWS_AS(s.Validate(), std::invalid_argument);
  s = Scene(2, std::nan(""), NoiseKind::kWhite, 1);
  CHECK_THROWS_AS(s.Validate(), std::invalid_argument);
  s = Scene(2, -HUGE_VAL, NoiseKind::kWhite, 1);
  CHECK_THROWS_AS(s.Validate(), std::invalid_argument);
  s = Scene(2, 0.0, NoiseKind::kPointSource, 1);
  s.noise_delays.clear();
  CHECK_THROWS_AS(s.Validate(), std::invalid_argument);
  s = Scene(0, 0.0, NoiseKind::kWhite, 1);
  CHECK_THROWS_AS(s.Validate(), std::invalid_argument);
  CHECK(ParseNoiseKind(NoiseKindName(NoiseKind::kBabble)) == NoiseKind::kBabble);
  CHECK_THROWS(ParseNoiseKind("pink"));
}

TEST_CASE("tone table gives each character a distinct pattern") {
  const ToneTable t = MakeToneTable(8, 8000);
  std::set<std::pair<double, double>> pairs;
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(t.low_hz[i] > 100.0);
    CHECK(t.high_hz[i] < 4000.0);
    CHECK(t.low_hz[i] != t.high_hz[i]);
    pairs.insert({t.low_hz[i], t.high_hz[i]});
    if (i > 0) CHECK(t.low_hz[i] > t.low_hz[i - 1]);
  }
  CHECK(pairs.size() == 8);
}

TEST_CASE("source synthesis") {
  const auto a = SynthesizeSource("abc", "abcdefgh", 8000, 3);
  CHECK(a == SynthesizeSource("abc", "abcdefgh", 8000, 3));
  CHECK(a != SynthesizeSource("abc", "abcdefgh", 8000, 4));
  CHECK(a.size() > 3 * 512);
  // Lead-in and tail are silent.
  for (std::size_t n = 0; n < 320; ++n) CHECK(a[n] == 0.0);
  for (std::size_t n = a.size() - 320; n < a.size(); ++n) CHECK(a[n] == 0.0);
  // Same timing, different characters: different waveforms.
  CHECK(SynthesizeSource("abc", "abcdefgh", 8000, 3) != SynthesizeSource("abd", "abcdefgh", 8000, 3));
  CHECK_THROWS(SynthesizeSource("", "abcdefgh", 8000, 3));
  CHECK_THROWS(SynthesizeSource("xyz", "abcdefgh", 8000, 3));
}

TEST_CASE("synth_utterance: infinite SNR gives the delayed clean signal") {
  const Utterance u = SynthUtterance(Scene(3, kInfiniteSnr, NoiseKind::kPointSource, 9), "hagd",
                                     "abcdefgh");
  REQUIRE(u.noisy.num_channels() == 3);
  const auto &x = u.clean.samples[0];
  for (std::size_t c = 0; c < 3; ++c) {
    const std::size_t d = u.scene.delays[c];
    for (std::size_t n = 0; n < x.size(); ++n) {
      const double want = n >= d ? u.scene.gains[c] * x[n - d] : 0.0;
      REQUIRE(u.noisy.samples[c][n] == want);
      REQUIRE(u.noise.samples[c][n] == 0.0);
    }
  }
}

TEST_CASE("synth_utterance: one undelayed channel is clean plus noise") {
  SceneSpec s = Scene(1, 5.0, NoiseKind::kWhite, 4);
  const Utterance u = SynthUtterance(s, "abc", "abcdefgh");
  REQUIRE(u.noisy.num_channels() == 1);
  for (std::size_t n = 0; n < u.clean.num_samples(); ++n)
    REQUIRE(u.noisy.samples[0][n] == u.clean.samples[0][n] + u.noise.samples[0][n]);
}

TEST_CASE("synth_utterance: measured SNR matches the scene") {
  for (NoiseKind kind : {NoiseKind::kWhite, NoiseKind::kBabble, NoiseKind::kPointSource}) {
    for (double snr : {-10.0, -3.0, 0.0, 4.5, 20.0}) {
      const Utterance u = SynthUtterance(Scene(2, snr, kind, 17), "fedcba", "abcdefgh");
      CHECK(std::fabs(MeasureSnrDb(u.speech, u.noise) - snr) < 0.1);
      // Independently: noise recovered from the mixture itself.
      std::vector<double> n0(u.noisy.num_samples());
      for (std::size_t i = 0; i < n0.size(); ++i)
        n0[i] = u.noisy.samples[0][i] - u.speech.samples[0][i];
      const double measured = 10.0 * std::log10(SumSq(u.speech.samples[0]) / SumSq(n0));
      CHECK(std::fabs(measured - snr) < 0.1);
    }
  }
}

TEST_CASE("point-source noise is a delayed copy across channels") {
  SceneSpec s = Scene(2, 0.0, NoiseKind::kPointSource, 5);
  s.noise_delays = {1, 4};
  const Utterance u = SynthUtterance(s, "abc", "abcdefgh");
  // Channel 1 lags channel 0 by 3 samples up to the weak sensor noise.
  double err = 0.0, ref = 0.0;
  for (std::size_t n = 3; n < u.noise.num_samples(); ++n) {
    const double d = u.noise.samples[1][n] - u.noise.samples[0][n - 3];
    err += d * d;
    ref += u.noise.samples[0][n - 3] * u.noise.samples[0][n - 3];
  }
  CHECK(10.0 * std::log10(err / ref) < -18.0);
}

TEST_CASE("oracle masks") {
  const StftOptions opts = StftOptions::Tiny();
  SUBCASE("zero noise") {
    const Utterance u = SynthUtterance(Scene(2, kInfiniteSnr, NoiseKind::kWhite, 2), "abc", "abcdefgh");
    const MaskPair m = OracleMasks(u, opts);
    for (std::size_t i = 0; i < m.speech.size(); ++i) REQUIRE(m.speech[i] == 1.0);
  }
  SUBCASE("silent lead-in frames") {
    const Utterance u = SynthUtterance(Scene(2, 0.0, NoiseKind::kWhite, 2), "abc", "abcdefgh");
    const MaskPair m = OracleMasks(u, opts);
    // The source starts after at least 320 samples: frames 0..4 hold no speech.
    for (std::size_t t = 0; t < 5; ++t)
      for (std::size_t f = 0; f < m.speech.dim(1); ++f) REQUIRE(m.speech.at(t, f) == 0.0);
  }
  SUBCASE("complementary and bounded") {
    const Utterance u = SynthUtterance(Scene(3, -2.0, NoiseKind::kBabble, 8), "gha", "abcdefgh");
    for (std::size_t c = 0; c < 3; ++c) {
      const MaskPair m = OracleMasks(u, opts, c);
      CHECK(m.speech.dim(1) == 33);
      for (std::size_t i = 0; i < m.speech.size(); ++i) {
        REQUIRE(m.speech[i] >= 0.0);
        REQUIRE(m.speech[i] <= 1.0);
        REQUIRE(std::fabs(m.speech[i] + m.noise[i] - 1.0) < 1e-12);
      }
    }
  }
}

TEST_CASE("scene sampling") {
  CorpusConfig cfg;
  cfg.num_channels = 3;
  for (std::size_t i = 0; i < 50; ++i) {
    const std::uint64_t seed = UtteranceSeed(cfg.seed, 0, i);
    const SceneSpec s = MakeScene(cfg, seed);
    CHECK_NOTHROW(s.Validate());
    CHECK(s.gains[0] == 1.0);
    CHECK(s.snr_db >= cfg.snr_min_db);
    CHECK(s.snr_db <= cfg.snr_max_db);
    bool separable = false;
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(s.delays[c] <= cfg.max_delay);
      CHECK(s.noise_delays[c] <= cfg.max_noise_delay);
      const long ds = long(s.delays[c]) - long(s.delays[0]);
      const long dn = long(s.noise_delays[c]) - long(s.noise_delays[0]);
      if (std::labs(ds - dn) >= 2) separable = true;
    }
    CHECK(separable);
    const std::string text = MakeTranscript(cfg, seed);
    CHECK(text.size() >= cfg.min_chars);
    CHECK(text.size() <= cfg.max_chars);
    CHECK(text.find_first_not_of(cfg.alphabet) == std::string::npos);
    CHECK(MakeScene(cfg, seed).delays == s.delays);
  }
  CHECK(UtteranceSeed(1, 0, 0) != UtteranceSeed(1, 1, 0));
  CHECK(UtteranceSeed(1, 0, 0) != UtteranceSeed(2, 0, 0));
}

TEST_CASE("corpus config text round trip") {
  CorpusConfig c;
  c.seed = 99;
  c.alphabet = "xyz";
  c.snr_min_db = -7.25;
  c.noise = NoiseKind::kBabble;
  const CorpusConfig d = ParseCorpusConfig(CorpusConfigText(c));
  CHECK(CorpusConfigText(d) == CorpusConfigText(c));
  CHECK(d.snr_min_db == -7.25);
  CHECK_THROWS_AS(ParseCorpusConfig("bogus = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(ParseCorpusConfig("seed = -1\n"), std::invalid_argument);
  CHECK(ParseCorpusConfig("# only a comment\n\nseed = 5  # trailing\n").seed == 5);
}

TEST_CASE("build_corpus is deterministic and regenerable") {
  CorpusConfig cfg;
  cfg.seed = 7;
  cfg.num_train = 4;
  cfg.num_dev = 2;
  cfg.num_eval = 3;
  const fs::path a = TempDir("a"), b = TempDir("b"), c = TempDir("c");
  BuildCorpus(cfg, a.string());
  BuildCorpus(cfg, b.string());
  cfg.seed = 8;
  BuildCorpus(cfg, c.string());
  cfg.seed = 7;

  const std::size_t counts[3] = {4, 2, 3};
  for (int split = 0; split < 3; ++split) {
    const std::string name = std::string(kSplitNames[split]) + ".tsv";
    const std::string ma = ReadTextFile((a / name).string());
    CHECK(ma == ReadTextFile((b / name).string()));
    CHECK(ma != ReadTextFile((c / name).string()));
    const auto entries = ReadManifest((a / name).string());
    REQUIRE(entries.size() == counts[split]);
    for (const auto &e : entries) {
      CHECK(e.channels == 2);
      CHECK(!e.transcript.empty());
      // Regenerate from the manifest seed alone.
      const Utterance u =
          SynthUtterance(MakeScene(cfg, e.seed), MakeTranscript(cfg, e.seed), cfg.alphabet);
      CHECK(u.transcript == e.transcript);
      CHECK(u.scene.snr_db == e.snr_db);
      const Waveform stored = ReadWav((a / e.wav).string());
      REQUIRE(stored.num_channels() == 2);
      REQUIRE(stored.num_samples() == u.noisy.num_samples());
      bool same = true;
      for (std::size_t ch = 0; ch < 2; ++ch)
        for (std::size_t n = 0; n < stored.num_samples(); ++n)
          same = same && static_cast<float>(u.noisy.samples[ch][n]) ==
                             static_cast<float>(stored.samples[ch][n]);
      CHECK(same);
    }
  }
  CHECK(ReadTextFile((a / "corpus.cfg").string()) == CorpusConfigText(cfg));
  CHECK(Vocabulary::Load((a / "vocab.txt").string()).alphabet() == cfg.alphabet);
  for (const auto &p : {a, b, c}) fs::remove_all(p);
}

TEST_CASE("manifest parsing errors") {
  const fs::path d = TempDir("bad");
  fs::create_directories(d);
  WriteTextFile((d / "m.tsv").string(), "id\twav\tabc\t12\n");
  CHECK_THROWS_AS(ReadManifest((d / "m.tsv").string()), std::runtime_error);
  WriteTextFile((d / "m.tsv").string(), "id\twav\tabc\tx\t2\t0\n");
  CHECK_THROWS_AS(ReadManifest((d / "m.tsv").string()), std::runtime_error);
  std::vector<ManifestEntry> e = {{"u1", "wav/u1.wav", "abc", 42, 2, -3.5}};
  WriteManifest((d / "m.tsv").string(), e);
  const auto r = ReadManifest((d / "m.tsv").string());
  REQUIRE(r.size() == 1);
  CHECK(r[0].seed == 42);
  CHECK(r[0].snr_db == -3.5);
  fs::remove_all(d);
}
