// include/beamspeech/signal.h

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
// Short-time Fourier analysis/synthesis and the log-Mel feature front end.

#ifndef BEAMSPEECH_SIGNAL_H_
#define BEAMSPEECH_SIGNAL_H_

#include <cstddef>
#include <string>
#include <vector>

#include "beamspeech/complex_ops.h"

namespace beamspeech {

// Planar multichannel audio; channel c is samples[c].
struct Waveform {
  std::vector<std::vector<double>> samples;
  int sample_rate = 16000;

  std::size_t num_channels() const { return samples.size(); }
  std::size_t num_samples() const { return samples.empty() ? 0 : samples[0].size(); }
  // Throws if channel lengths differ or there is no channel.
  void Validate() const;
  Waveform Channel(std::size_t c) const;
  Waveform Select(const std::vector<std::size_t> &channels) const;
};

struct StftOptions {
  int sample_rate = 16000;
  std::size_t frame_length = 400;  // samples
  std::size_t frame_shift = 160;   // samples
  std::size_t fft_size = 512;

  std::size_t num_bins() const { return fft_size / 2 + 1; }
  // 25 ms / 10 ms Hamming analysis at 16 kHz with a 512-point FFT (F = 257).
  static StftOptions Full16k();
  // 8 kHz, 64-sample frames with a 32-sample shift and a 64-point FFT (F = 33).
  static StftOptions Tiny();
  // Frame and shift in milliseconds; fft_size is the next power of two >= frame.
  static StftOptions FromMilliseconds(int sample_rate, double frame_ms, double shift_ms);
  void Validate() const;
};

// Symmetric Hamming window: 0.54 - 0.46 cos(2 pi n / (N - 1)).
std::vector<double> HammingWindow(std::size_t length);

// Number of analysis frames, 1 + floor((N - frame) / shift). A signal shorter
// than one frame is zero padded to a single frame; the final partial frame is
// otherwise dropped.
std::size_t NumFrames(std::size_t num_samples, const StftOptions &opts);

struct MultichannelStft {
  ComplexTensor coeffs;  // [T, F, C]
  StftOptions opts;

  std::size_t frames() const { return coeffs.re.dim(0); }
  std::size_t bins() const { return coeffs.re.dim(1); }
  std::size_t channels() const { return coeffs.re.dim(2); }
  // Coefficients of one channel as [T, F].
  ComplexTensor Channel(std::size_t c) const;
  MultichannelStft Select(const std::vector<std::size_t> &channels) const;
};

MultichannelStft Stft(const Waveform &w, const StftOptions &opts);

// Overlap-add synthesis of a single-channel [T, F] spectrogram, using the
// analysis window again at synthesis and dividing by the summed squared
// window. `num_samples` of 0 means (T - 1) * shift + frame.
std::vector<double> Istft(const ComplexTensor &spec, const StftOptions &opts,
                          std::size_t num_samples = 0);

// |x|^2 elementwise on the tape.
Var PowerSpectrum(const CVar &x);

struct MelFilterbank {
  Tensor weights;  // [D_O, F]
  double f_min_hz = 0.0;
  double f_max_hz = 0.0;

  std::size_t num_filters() const { return weights.dim(0); }
};

double HzToMel(double hz);
double MelToHz(double mel);

// Triangular filters with centers equally spaced on the mel scale
// 2595 log10(1 + f/700) between f_min and f_max. Each triangle is scaled to
// unit area in Hz (height 2 / (f_hi - f_lo)). f_max <= 0 selects Nyquist.
MelFilterbank MakeMelFilterbank(std::size_t num_filters, const StftOptions &opts,
                                double f_min_hz = 0.0, double f_max_hz = 0.0);

inline constexpr double kLogMelFloor = 1e-10;

// log(max(power * weights^T, floor)) for power [T, F] -> [T, D_O].
Var LogMel(Var power, const MelFilterbank &fb, double floor = kLogMelFloor);

struct NormStats {
  Tensor mean;  // [D]
  Tensor std;   // [D]
};

inline constexpr double kStdFloor = 1e-10;

// Global per-dimension mean and (population) standard deviation over all
// frames of all [T, D] sequences. Needs at least two frames in total.
NormStats FitNormalizer(const std::vector<Tensor> &corpus);
Var ApplyNormalizer(Var feats, const NormStats &stats);
Tensor ApplyNormalizer(const Tensor &feats, const NormStats &stats);

// Spectrogram dumps for visual inspection: rows of (t, f, magnitude_db) and an
// 8-bit PGM with width T, height F and low frequencies at the bottom.
void WriteSpectrogramCsv(const std::string &path, const ComplexTensor &spec);
void WriteSpectrogramPgm(const std::string &path, const ComplexTensor &spec,
                         double dynamic_range_db = 80.0);
std::vector<double> MagnitudeDb(const ComplexTensor &spec);

}  // namespace beamspeech

#endif  // BEAMSPEECH_SIGNAL_H_
