// src/signal/features.cc

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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "beamspeech/signal.h"

namespace beamspeech {

Var PowerSpectrum(const CVar &x) { return ad::Square(x.re) + ad::Square(x.im); }

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank MakeMelFilterbank(std::size_t num_filters, const StftOptions &opts,
                                double f_min_hz, double f_max_hz) {
  opts.Validate();
  const double nyquist = opts.sample_rate / 2.0;
  if (f_max_hz <= 0.0) f_max_hz = nyquist;
  if (num_filters == 0) throw std::invalid_argument("mel: need at least one filter");
  if (f_min_hz < 0.0 || f_min_hz >= f_max_hz || f_max_hz > nyquist)
    throw std::invalid_argument("mel: need 0 <= f_min < f_max <= nyquist");
  const std::size_t F = opts.num_bins();
  const double bin_hz = static_cast<double>(opts.sample_rate) / opts.fft_size;
  // Outer edges sit half a bin beyond [f_min, f_max] so the boundary bins get
  // a nonzero weight instead of landing exactly on a triangle foot.
  const double lo_mel = HzToMel(f_min_hz - 0.5 * bin_hz);
  const double hi_mel = HzToMel(f_max_hz + 0.5 * bin_hz);
  std::vector<double> edge(num_filters + 2);
  for (std::size_t k = 0; k < edge.size(); ++k)
    edge[k] = MelToHz(lo_mel + (hi_mel - lo_mel) * k / (num_filters + 1));

  MelFilterbank fb{Tensor(Shape{num_filters, F}, 0.0), f_min_hz, f_max_hz};
  for (std::size_t k = 0; k < num_filters; ++k) {
    const double lo = edge[k], mid = edge[k + 1], hi = edge[k + 2];
    const double height = 2.0 / (hi - lo);
    for (std::size_t b = 0; b < F; ++b) {
      const double f = b * bin_hz;
      if (f < f_min_hz || f > f_max_hz) continue;
      double w = 0.0;
      if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
      else if (f > mid && f < hi) w = (hi - f) / (hi - mid);
      fb.weights.at(k, b) = height * w;
    }
  }
  return fb;
}

Var LogMel(Var power, const MelFilterbank &fb, double floor) {
  const Shape s = power.shape();
  if (s.size() != 2 || s[1] != fb.weights.dim(1))
    throw ShapeError("log_mel", "power " + ShapeString(s) + " vs filterbank " +
                                    ShapeString(fb.weights.shape()));
  Var w = power.tape()->Constant(fb.weights);
  Var mel = ad::BatchMatMul(ad::Reshape(power, {1, s[0], s[1]}), w, false, true);
  return ad::Log(ad::ClampMin(ad::Reshape(mel, {s[0], fb.num_filters()}), floor));
}

NormStats FitNormalizer(const std::vector<Tensor> &corpus) {
  if (corpus.empty()) throw std::invalid_argument("fit_normalizer: empty corpus");
  const std::size_t D = corpus[0].dim(corpus[0].rank() - 1);
  std::vector<long double> sum(D, 0.0L);
  std::size_t frames = 0;
  for (const auto &x : corpus) {
    if (x.rank() != 2 || x.dim(1) != D)
      throw ShapeError("fit_normalizer", "expected [T, " + std::to_string(D) + "], got " +
                                             ShapeString(x.shape()));
    for (std::size_t t = 0; t < x.dim(0); ++t)
      for (std::size_t d = 0; d < D; ++d) sum[d] += x.at(t, d);
    frames += x.dim(0);
  }
  if (frames < 2) throw std::invalid_argument("fit_normalizer: need at least two frames");
  NormStats st{Tensor(Shape{D}, 0.0), Tensor(Shape{D}, 0.0)};
  for (std::size_t d = 0; d < D; ++d) st.mean[d] = static_cast<double>(sum[d] / frames);
  // Two-pass variance for accuracy.
  std::vector<long double> sq(D, 0.0L);
  for (const auto &x : corpus)
    for (std::size_t t = 0; t < x.dim(0); ++t)
      for (std::size_t d = 0; d < D; ++d) {
        const long double c = x.at(t, d) - st.mean[d];
        sq[d] += c * c;
      }
  for (std::size_t d = 0; d < D; ++d)
    st.std[d] = std::max(std::sqrt(static_cast<double>(sq[d] / frames)), kStdFloor);
  return st;
}

Var ApplyNormalizer(Var feats, const NormStats &stats) {
  Tape &tape = *feats.tape();
  return (feats - tape.Constant(stats.mean)) / tape.Constant(stats.std);
}

Tensor ApplyNormalizer(const Tensor &feats, const NormStats &stats) {
  const std::size_t D = stats.mean.size();
  if (feats.rank() != 2 || feats.dim(1) != D)
    throw ShapeError("apply_normalizer", "feats " + ShapeString(feats.shape()) +
                                             " vs stats [" + std::to_string(D) + "]");
  Tensor out = feats;
  for (std::size_t t = 0; t < feats.dim(0); ++t)
    for (std::size_t d = 0; d < D; ++d)
      out.at(t, d) = (feats.at(t, d) - stats.mean[d]) / stats.std[d];
  return out;
}

std::vector<double> MagnitudeDb(const ComplexTensor &spec) {
  std::vector<double> db(spec.re.size());
  for (std::size_t i = 0; i < db.size(); ++i) {
    const double p = spec.re[i] * spec.re[i] + spec.im[i] * spec.im[i];
    db[i] = 10.0 * std::log10(std::max(p, kLogMelFloor));
  }
  return db;
}

namespace {

void CheckSpec2d(const char *op, const ComplexTensor &spec) {
  if (spec.re.rank() != 2)
    throw ShapeError(op, "expected [T, F], got " + ShapeString(spec.re.shape()));
}

}  // namespace

void WriteSpectrogramCsv(const std::string &path, const ComplexTensor &spec) {
  CheckSpec2d("spectrogram_csv", spec);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const auto db = MagnitudeDb(spec);
  const std::size_t F = spec.re.dim(1);
  out << "frame,bin,magnitude_db\n" << std::setprecision(10);
  for (std::size_t i = 0; i < db.size(); ++i) out << i / F << ',' << i % F << ',' << db[i] << '\n';
}

void WriteSpectrogramPgm(const std::string &path, const ComplexTensor &spec,
                         double dynamic_range_db) {
  CheckSpec2d("spectrogram_pgm", spec);
  const std::size_t T = spec.re.dim(0), F = spec.re.dim(1);
  const auto db = MagnitudeDb(spec);
  const double top = *std::max_element(db.begin(), db.end());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P5\n" << T << ' ' << F << "\n255\n";
  for (std::size_t row = 0; row < F; ++row) {
    const std::size_t f = F - 1 - row;
    for (std::size_t t = 0; t < T; ++t) {
      const double v = std::clamp((db[t * F + f] - (top - dynamic_range_db)) / dynamic_range_db,
                                  0.0, 1.0);
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * v))));
    }
  }
}

}  // namespace beamspeech
