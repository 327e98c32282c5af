// tests/signal_test.cc

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
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "beamspeech/audio_io.h"
#include "beamspeech/signal.h"
#include "doctest.h"
#include "test_util.h"

using namespace beamspeech;
using beamspeech::testing::GradientErrors;
using beamspeech::testing::RandomTensor;

namespace {

Waveform Noise(std::size_t channels, std::size_t n, int rate, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-0.5, 0.5);
  Waveform w;
  w.sample_rate = rate;
  w.samples.assign(channels, std::vector<double>(n));
  for (auto &ch : w.samples)
    for (auto &x : ch) x = d(rng);
  return w;
}

// O(N^2) one-sided DFT of a zero-padded windowed frame.
std::vector<std::complex<double>> NaiveDft(const std::vector<double> &frame, std::size_t nfft) {
  std::vector<std::complex<double>> out(nfft / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t n = 0; n < frame.size(); ++n)
      acc += frame[n] * std::polar(1.0, -2.0 * std::numbers::pi * k * n / nfft);
    out[k] = acc;
  }
  return out;
}

std::string TempPath(const std::string &name) {
  return (std::filesystem::temp_directory_path() / ("beamspeech_" + name)).string();
}

}  // namespace

TEST_CASE("stft frame count and bins") {
  auto full = StftOptions::Full16k();
  CHECK(full.num_bins() == 257);
  CHECK(full.frame_length == 400);
  CHECK(full.frame_shift == 160);
  auto ms = StftOptions::FromMilliseconds(16000, 25, 10);
  CHECK(ms.frame_length == 400);
  CHECK(ms.fft_size == 512);
  CHECK(StftOptions::Tiny().num_bins() == 33);

  auto w = Noise(2, 16000, 16000, 1);
  auto s = Stft(w, full);
  CHECK(s.bins() == 257);
  CHECK(s.channels() == 2);
  CHECK(s.frames() == 1 + (16000 - 400) / 160);
  // The final partial frame is dropped.
  CHECK(NumFrames(400 + 159, full) == 1);
  CHECK(NumFrames(400 + 160, full) == 2);
  // Shorter than a frame: one zero-padded frame.
  CHECK(NumFrames(100, full) == 1);
}

TEST_CASE("stft errors") {
  Waveform empty;
  CHECK_THROWS(Stft(empty, StftOptions::Tiny()));
  Waveform zero_len;
  zero_len.sample_rate = 8000;
  zero_len.samples.assign(1, {});
  CHECK_THROWS(Stft(zero_len, StftOptions::Tiny()));
  Waveform ragged = Noise(2, 100, 8000, 2);
  ragged.samples[1].pop_back();
  CHECK_THROWS(Stft(ragged, StftOptions::Tiny()));
  CHECK_THROWS(Stft(Noise(1, 100, 16000, 3), StftOptions::Tiny()));
}

TEST_CASE("stft of zeros is zero") {
  Waveform w;
  w.sample_rate = 8000;
  w.samples.assign(3, std::vector<double>(500, 0.0));
  auto s = Stft(w, StftOptions::Tiny());
  for (double v : s.coeffs.re.vec()) CHECK(v == 0.0);
  for (double v : s.coeffs.im.vec()) CHECK(v == 0.0);
}

TEST_CASE("stft matches naive dft and finds the 1 kHz peak") {
  auto opts = StftOptions::Full16k();
  Waveform w;
  w.sample_rate = 16000;
  w.samples.assign(1, std::vector<double>(4000));
  for (std::size_t n = 0; n < 4000; ++n)
    w.samples[0][n] = 0.7 * std::sin(2.0 * std::numbers::pi * 1000.0 * n / 16000.0 + 0.3);
  auto s = Stft(w, opts);
  const auto win = HammingWindow(opts.frame_length);
  const std::size_t expect_bin = std::lround(1000.0 * opts.fft_size / 16000.0);
  for (std::size_t t = 0; t < s.frames(); ++t) {
    std::vector<double> frame(opts.frame_length);
    for (std::size_t n = 0; n < frame.size(); ++n)
      frame[n] = w.samples[0][t * opts.frame_shift + n] * win[n];
    auto ref = NaiveDft(frame, opts.fft_size);
    std::size_t best = 0;
    for (std::size_t f = 0; f < s.bins(); ++f) {
      std::complex<double> got(s.coeffs.re.at(t, f, 0), s.coeffs.im.at(t, f, 0));
      CHECK(std::abs(got - ref[f]) < 1e-9);
      if (std::norm(ref[f]) > std::norm(ref[best])) best = f;
    }
    CHECK(best == expect_bin);
  }
}

TEST_CASE("stft is linear") {
  auto opts = StftOptions::Tiny();
  auto a = Noise(2, 700, 8000, 4), b = Noise(2, 700, 8000, 5), mix = a;
  for (int c = 0; c < 2; ++c)
    for (std::size_t n = 0; n < 700; ++n)
      mix.samples[c][n] = 0.3 * a.samples[c][n] - 1.7 * b.samples[c][n];
  auto sa = Stft(a, opts), sb = Stft(b, opts), sm = Stft(mix, opts);
  double err = 0.0;
  for (std::size_t i = 0; i < sm.coeffs.re.size(); ++i) {
    err = std::max(err, std::abs(sm.coeffs.re[i] - (0.3 * sa.coeffs.re[i] - 1.7 * sb.coeffs.re[i])));
    err = std::max(err, std::abs(sm.coeffs.im[i] - (0.3 * sa.coeffs.im[i] - 1.7 * sb.coeffs.im[i])));
  }
  CHECK(err < 1e-10);
}

TEST_CASE("parseval on one-sided power") {
  for (auto opts : {StftOptions::Tiny(), StftOptions::Full16k()}) {
    auto w = Noise(1, opts.frame_length * 4, opts.sample_rate, 6);
    auto s = Stft(w, opts);
    const auto win = HammingWindow(opts.frame_length);
    const std::size_t F = s.bins();
    for (std::size_t t = 0; t < s.frames(); ++t) {
      double energy = 0.0;
      for (std::size_t n = 0; n < opts.frame_length; ++n) {
        const double v = w.samples[0][t * opts.frame_shift + n] * win[n];
        energy += v * v;
      }
      double power = 0.0;
      for (std::size_t f = 0; f < F; ++f) {
        const double p = std::pow(s.coeffs.re.at(t, f, 0), 2) + std::pow(s.coeffs.im.at(t, f, 0), 2);
        power += (f == 0 || f == F - 1) ? p : 2.0 * p;
      }
      power /= static_cast<double>(opts.fft_size);
      CHECK(std::abs(power - energy) < 1e-8 * std::max(1.0, energy));
    }
  }
}

TEST_CASE("istft roundtrip") {
  for (auto opts : {StftOptions::Tiny(), StftOptions::Full16k()}) {
    const std::size_t N = opts.frame_length * 10 + 37;
    auto w = Noise(1, N, opts.sample_rate, 7);
    auto s = Stft(w, opts);
    auto y = Istft(s.Channel(0), opts, N);
    REQUIRE(y.size() == N);
    // Interior: samples covered by frames other than the first and last.
    const std::size_t lo = opts.frame_length, hi = (s.frames() - 1) * opts.frame_shift;
    double num = 0.0, den = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      num += std::pow(y[i] - w.samples[0][i], 2);
      den += std::pow(w.samples[0][i], 2);
    }
    CHECK(std::sqrt(num / den) < 1e-8);
    // stft -> istft -> stft on interior frames.
    Waveform back;
    back.sample_rate = opts.sample_rate;
    back.samples = {y};
    auto s2 = Stft(back, opts);
    double n2 = 0.0, d2 = 0.0;
    for (std::size_t t = 1; t + 1 < s.frames(); ++t)
      for (std::size_t f = 0; f < s.bins(); ++f) {
        n2 += std::pow(s2.coeffs.re.at(t, f, 0) - s.coeffs.re.at(t, f, 0), 2) +
              std::pow(s2.coeffs.im.at(t, f, 0) - s.coeffs.im.at(t, f, 0), 2);
        d2 += std::pow(s.coeffs.re.at(t, f, 0), 2) + std::pow(s.coeffs.im.at(t, f, 0), 2);
      }
    CHECK(std::sqrt(n2 / d2) < 1e-8);
  }
}

TEST_CASE("istft edge cases") {
  auto opts = StftOptions::Tiny();
  ComplexTensor zero(Shape{5, 33});
  for (double v : Istft(zero, opts)) CHECK(v == 0.0);
  CHECK(Istft(zero, opts).size() == 4 * 32 + 64);
  CHECK_THROWS(Istft(ComplexTensor(Shape{5, 17}), opts));

  // One frame: the windowed frame comes back divided by window^2, i.e. the
  // original samples.
  auto w = Noise(1, 64, 8000, 8);
  auto y = Istft(Stft(w, opts).Channel(0), opts);
  REQUIRE(y.size() == 64);
  for (std::size_t n = 0; n < 64; ++n) CHECK(std::abs(y[n] - w.samples[0][n]) < 1e-12);
}

TEST_CASE("power spectrum") {
  Tape tape;
  CVar x{tape.Constant(Tensor::Vector({0.0, 3.0, -1.5})), tape.Constant(Tensor::Vector({0.0, 4.0, 2.0}))};
  auto p = PowerSpectrum(x).value();
  CHECK(p[0] == 0.0);
  CHECK(p[1] == doctest::Approx(25.0).epsilon(1e-15));
  std::mt19937_64 rng(9);
  auto re = RandomTensor({6, 5}, rng), im = RandomTensor({6, 5}, rng);
  auto pr = PowerSpectrum({tape.Constant(re), tape.Constant(im)}).value();
  for (std::size_t i = 0; i < re.size(); ++i)
    CHECK(std::abs(pr[i] - std::pow(std::abs(std::complex<double>(re[i], im[i])), 2)) < 1e-12);
}

TEST_CASE("mel filterbank") {
  CHECK(HzToMel(0.0) == 0.0);
  CHECK(MelToHz(HzToMel(1234.5)) == doctest::Approx(1234.5).epsilon(1e-12));
  CHECK(HzToMel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
  for (auto [opts, D] : {std::pair{StftOptions::Full16k(), std::size_t{40}},
                         std::pair{StftOptions::Tiny(), std::size_t{12}}}) {
    auto fb = MakeMelFilterbank(D, opts);
    CHECK(fb.weights.dim(0) == D);
    CHECK(fb.weights.dim(1) == opts.num_bins());
    CHECK(fb.f_max_hz == opts.sample_rate / 2.0);
    for (double v : fb.weights.vec()) CHECK(v >= 0.0);
    for (std::size_t b = 0; b < opts.num_bins(); ++b) {
      double col = 0.0;
      for (std::size_t k = 0; k < D; ++k) col += fb.weights.at(k, b);
      CHECK(col > 0.0);
    }
  }
  CHECK_THROWS(MakeMelFilterbank(0, StftOptions::Tiny()));
  CHECK_THROWS(MakeMelFilterbank(4, StftOptions::Tiny(), 3000.0, 2000.0));
}

TEST_CASE("log mel") {
  auto opts = StftOptions::Tiny();
  auto fb = MakeMelFilterbank(12, opts);
  {
    Tape tape;
    auto out = LogMel(tape.Constant(Tensor(Shape{3, 33}, 0.0)), fb).value();
    for (double v : out.vec()) CHECK(v == doctest::Approx(std::log(1e-10)));
  }
  // Hand-set 3-filter bank on a 4-bin frame.
  MelFilterbank hand{Tensor({3, 4}, {1.0, 0.5, 0.0, 0.0,  //
                                     0.0, 0.5, 1.0, 0.0,  //
                                     0.0, 0.0, 0.25, 2.0}),
                     0.0, 0.0};
  Tape tape;
  auto out = LogMel(tape.Constant(Tensor({1, 4}, {2.0, 4.0, 1.0, 3.0})), hand).value();
  CHECK(out[0] == doctest::Approx(std::log(2.0 + 2.0)));
  CHECK(out[1] == doctest::Approx(std::log(2.0 + 1.0)));
  CHECK(out[2] == doctest::Approx(std::log(0.25 + 6.0)));
  CHECK_THROWS_AS(LogMel(tape.Constant(Tensor(Shape{1, 5}, 1.0)), hand), ShapeError);

  // Gradient through power spectrum and log-Mel.
  std::mt19937_64 rng(10);
  auto err = GradientErrors(
      [&](Tape &, const std::vector<Var> &v) {
        Var w = v[2];
        return ad::Sum(LogMel(PowerSpectrum({v[0], v[1]}), fb) * w);
      },
      {RandomTensor({4, 33}, rng), RandomTensor({4, 33}, rng), RandomTensor({4, 12}, rng)});
  for (double e : err) CHECK(e < 1e-6);
}

TEST_CASE("normalizer") {
  {
    auto st = FitNormalizer({Tensor({2, 1}, {0.0, 2.0})});
    CHECK(st.mean[0] == 1.0);
    CHECK(st.std[0] == 1.0);
    auto z = ApplyNormalizer(Tensor({2, 1}, {0.0, 2.0}), st);
    CHECK(z[0] == -1.0);
    CHECK(z[1] == 1.0);
  }
  {
    auto st = FitNormalizer({Tensor({3, 2}, 5.0), Tensor({2, 2}, 5.0)});
    CHECK(st.std[0] == kStdFloor);
    const Tensor z = ApplyNormalizer(Tensor({4, 2}, 5.0), st);
    for (double v : z.vec()) CHECK(v == 0.0);
  }
  CHECK_THROWS(FitNormalizer({}));
  CHECK_THROWS(FitNormalizer({Tensor({1, 3}, 1.0)}));
  CHECK_THROWS(FitNormalizer({Tensor({2, 3}, 1.0), Tensor({2, 4}, 1.0)}));

  std::mt19937_64 rng(11);
  std::vector<Tensor> corpus;
  for (int i = 0; i < 7; ++i) {
    auto t = RandomTensor({std::size_t(10 + 3 * i), 6}, rng, -3.0, 9.0);
    for (std::size_t r = 0; r < t.dim(0); ++r) t.at(r, 2) = 1e4 + 1e-2 * t.at(r, 2);
    corpus.push_back(t);
  }
  auto st = FitNormalizer(corpus);
  // Recompute statistics of the normalized corpus independently.
  std::vector<double> sum(6, 0.0), sq(6, 0.0);
  std::size_t n = 0;
  std::vector<Tensor> normed;
  for (const auto &t : corpus) normed.push_back(ApplyNormalizer(t, st));
  for (const auto &z : normed) {
    for (std::size_t r = 0; r < z.dim(0); ++r)
      for (std::size_t d = 0; d < 6; ++d) sum[d] += z.at(r, d);
    n += z.dim(0);
  }
  for (const auto &z : normed)
    for (std::size_t r = 0; r < z.dim(0); ++r)
      for (std::size_t d = 0; d < 6; ++d) sq[d] += std::pow(z.at(r, d) - sum[d] / n, 2);
  for (std::size_t d = 0; d < 6; ++d) {
    CHECK(std::abs(sum[d] / n) < 1e-9);
    CHECK(std::abs(sq[d] / n - 1.0) < 1e-9);
  }
  // Idempotent under fixed stats, and the tape version agrees.
  auto once = ApplyNormalizer(corpus[0], st);
  Tape tape;
  auto on_tape = ApplyNormalizer(tape.Constant(corpus[0]), st).value();
  CHECK(MaxAbsDiff(once, on_tape) < 1e-15);
  CHECK(MaxAbsDiff(ApplyNormalizer(corpus[0], st), once) == 0.0);
}

TEST_CASE("wav and raw io") {
  auto w = Noise(3, 321, 8000, 12);
  {
    const auto p = TempPath("f32.wav");
    WriteWav(p, w, WavFormat::kFloat32);
    auto r = ReadWav(p);
    CHECK(r.sample_rate == 8000);
    REQUIRE(r.num_channels() == 3);
    REQUIRE(r.num_samples() == 321);
    for (int c = 0; c < 3; ++c)
      for (std::size_t n = 0; n < 321; ++n)
        CHECK(r.samples[c][n] == static_cast<double>(static_cast<float>(w.samples[c][n])));
    std::filesystem::remove(p);
  }
  {
    const auto p = TempPath("pcm.wav");
    auto loud = w;
    loud.samples[0][0] = 1.5;
    loud.samples[0][1] = -2.0;
    WriteWav(p, loud, WavFormat::kPcm16);
    auto r = ReadWav(p);
    CHECK(r.samples[0][0] == 32767.0 / 32768.0);
    CHECK(r.samples[0][1] == -1.0);
    for (int c = 0; c < 3; ++c)
      for (std::size_t n = 2; n < 321; ++n)
        CHECK(std::abs(r.samples[c][n] - w.samples[c][n]) <= 0.5 / 32768.0 + 1e-15);
    std::filesystem::remove(p);
  }
  {
    const auto p = TempPath("planar.raw");
    WriteAudio(p, w);
    auto r = ReadAudio(p);
    CHECK(r.sample_rate == 8000);
    CHECK(r.samples == w.samples);
    std::filesystem::remove(p);
    std::filesystem::remove(p + ".hdr");
  }
  {
    const auto p = TempPath("junk.wav");
    std::ofstream(p) << "not audio at all";
    CHECK_THROWS(ReadWav(p));
    std::filesystem::remove(p);
  }
  CHECK_THROWS(ReadWav(TempPath("does_not_exist.wav")));
}

TEST_CASE("spectrogram export") {
  auto opts = StftOptions::Tiny();
  auto s = Stft(Noise(1, 800, 8000, 13), opts).Channel(0);
  const auto pgm = TempPath("spec.pgm"), csv = TempPath("spec.csv");
  WriteSpectrogramPgm(pgm, s);
  WriteSpectrogramCsv(csv, s);
  std::ifstream in(pgm, std::ios::binary);
  std::string magic;
  std::size_t width = 0, height = 0, maxval = 0;
  in >> magic >> width >> height >> maxval;
  in.get();
  CHECK(magic == "P5");
  CHECK(width == s.re.dim(0));
  CHECK(height == 33);
  CHECK(maxval == 255);
  std::string pixels((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(pixels.size() == width * height);
  std::ifstream c(csv);
  std::size_t lines = 0;
  for (std::string line; std::getline(c, line);) ++lines;
  CHECK(lines == 1 + s.re.size());
  std::filesystem::remove(pgm);
  std::filesystem::remove(csv);
}
