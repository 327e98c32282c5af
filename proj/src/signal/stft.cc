// src/signal/stft.cc

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

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "beamspeech/signal.h"

namespace beamspeech {

namespace {

// The FFTW planner is not reentrant; plan execution on fresh arrays is.
std::mutex &PlannerMutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard<std::mutex> lock(PlannerMutex());
    fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), out_, in_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard<std::mutex> lock(PlannerMutex());
      fftw_destroy_plan(fwd_);
      fftw_destroy_plan(inv_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft &) = delete;
  RealFft &operator=(const RealFft &) = delete;

  double *time() { return in_; }
  fftw_complex *freq() { return out_; }
  void Forward() { fftw_execute(fwd_); }
  // Unnormalized: the result is n times the inverse DFT.
  void Inverse() { fftw_execute(inv_); }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  double *in_;
  fftw_complex *out_;
  fftw_plan fwd_;
  fftw_plan inv_;
};

}  // namespace

void Waveform::Validate() const {
  if (samples.empty()) throw std::invalid_argument("waveform: no channels");
  if (sample_rate <= 0) throw std::invalid_argument("waveform: sample rate must be positive");
  for (const auto &ch : samples)
    if (ch.size() != samples[0].size())
      throw std::invalid_argument("waveform: channel lengths differ");
}

Waveform Waveform::Channel(std::size_t c) const { return Select({c}); }

Waveform Waveform::Select(const std::vector<std::size_t> &channels) const {
  Waveform out;
  out.sample_rate = sample_rate;
  for (std::size_t c : channels) {
    if (c >= samples.size())
      throw std::out_of_range("waveform: channel " + std::to_string(c) + " out of range");
    out.samples.push_back(samples[c]);
  }
  return out;
}

StftOptions StftOptions::Full16k() { return {16000, 400, 160, 512}; }

StftOptions StftOptions::Tiny() { return {8000, 64, 32, 64}; }

StftOptions StftOptions::FromMilliseconds(int sample_rate, double frame_ms, double shift_ms) {
  if (sample_rate <= 0 || frame_ms <= 0 || shift_ms <= 0)
    throw std::invalid_argument("stft: frame, shift and sample rate must be positive");
  StftOptions o;
  o.sample_rate = sample_rate;
  o.frame_length = static_cast<std::size_t>(std::lround(frame_ms * 1e-3 * sample_rate));
  o.frame_shift = static_cast<std::size_t>(std::lround(shift_ms * 1e-3 * sample_rate));
  o.fft_size = 1;
  while (o.fft_size < o.frame_length) o.fft_size *= 2;
  o.Validate();
  return o;
}

void StftOptions::Validate() const {
  if (sample_rate <= 0) throw std::invalid_argument("stft: sample rate must be positive");
  if (frame_length < 2 || frame_shift == 0)
    throw std::invalid_argument("stft: frame length must be >= 2 and shift >= 1");
  if (fft_size < frame_length || fft_size % 2 != 0)
    throw std::invalid_argument("stft: fft size must be even and >= frame length");
}

std::vector<double> HammingWindow(std::size_t length) {
  std::vector<double> w(length, 1.0);
  if (length < 2) return w;
  for (std::size_t n = 0; n < length; ++n)
    w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (length - 1));
  return w;
}

std::size_t NumFrames(std::size_t num_samples, const StftOptions &opts) {
  if (num_samples <= opts.frame_length) return 1;
  return 1 + (num_samples - opts.frame_length) / opts.frame_shift;
}

ComplexTensor MultichannelStft::Channel(std::size_t c) const {
  const std::size_t T = frames(), F = bins(), C = channels();
  if (c >= C) throw std::out_of_range("stft: channel out of range");
  ComplexTensor out(Shape{T, F});
  for (std::size_t i = 0; i < T * F; ++i) {
    out.re[i] = coeffs.re[i * C + c];
    out.im[i] = coeffs.im[i * C + c];
  }
  return out;
}

MultichannelStft MultichannelStft::Select(const std::vector<std::size_t> &channels) const {
  const std::size_t T = frames(), F = bins(), C = channels.size(), C0 = this->channels();
  if (C == 0) throw std::invalid_argument("stft: empty channel selection");
  MultichannelStft out{ComplexTensor(Shape{T, F, C}), opts};
  for (std::size_t k = 0; k < C; ++k) {
    if (channels[k] >= C0) throw std::out_of_range("stft: channel out of range");
    for (std::size_t i = 0; i < T * F; ++i) {
      out.coeffs.re[i * C + k] = coeffs.re[i * C0 + channels[k]];
      out.coeffs.im[i * C + k] = coeffs.im[i * C0 + channels[k]];
    }
  }
  return out;
}

MultichannelStft Stft(const Waveform &w, const StftOptions &opts) {
  w.Validate();
  opts.Validate();
  if (w.num_samples() == 0) throw std::invalid_argument("stft: empty waveform");
  if (w.sample_rate != opts.sample_rate)
    throw std::invalid_argument("stft: waveform rate " + std::to_string(w.sample_rate) +
                                " does not match analysis rate " +
                                std::to_string(opts.sample_rate));
  const std::size_t N = w.num_samples(), C = w.num_channels();
  const std::size_t T = NumFrames(N, opts), F = opts.num_bins(), L = opts.frame_length;
  const auto win = HammingWindow(L);
  MultichannelStft out{ComplexTensor(Shape{T, F, C}), opts};
  RealFft fft(opts.fft_size);
  for (std::size_t c = 0; c < C; ++c) {
    const auto &x = w.samples[c];
    for (std::size_t t = 0; t < T; ++t) {
      double *buf = fft.time();
      const std::size_t start = t * opts.frame_shift;
      for (std::size_t n = 0; n < opts.fft_size; ++n) {
        const std::size_t idx = start + n;
        buf[n] = (n < L && idx < N) ? x[idx] * win[n] : 0.0;
      }
      fft.Forward();
      const fftw_complex *X = fft.freq();
      for (std::size_t f = 0; f < F; ++f) {
        out.coeffs.re[(t * F + f) * C + c] = X[f][0];
        out.coeffs.im[(t * F + f) * C + c] = X[f][1];
      }
    }
  }
  return out;
}

std::vector<double> Istft(const ComplexTensor &spec, const StftOptions &opts,
                          std::size_t num_samples) {
  opts.Validate();
  if (spec.re.rank() != 2 || spec.im.shape() != spec.re.shape())
    throw ShapeError("istft", "expected [T, F], got " + ShapeString(spec.re.shape()));
  const std::size_t T = spec.re.dim(0), F = spec.re.dim(1), L = opts.frame_length;
  if (F != opts.num_bins())
    throw std::invalid_argument("istft: " + std::to_string(F) + " bins do not match fft size " +
                                std::to_string(opts.fft_size));
  const std::size_t natural = (T - 1) * opts.frame_shift + L;
  const std::size_t N = num_samples == 0 ? natural : num_samples;
  const auto win = HammingWindow(L);
  std::vector<double> acc(std::max(N, natural), 0.0), norm(acc.size(), 0.0);
  RealFft fft(opts.fft_size);
  const double scale = 1.0 / static_cast<double>(opts.fft_size);
  for (std::size_t t = 0; t < T; ++t) {
    fftw_complex *X = fft.freq();
    for (std::size_t f = 0; f < F; ++f) {
      X[f][0] = spec.re[t * F + f];
      X[f][1] = spec.im[t * F + f];
    }
    // A real signal has real DC and Nyquist bins.
    X[0][1] = 0.0;
    X[F - 1][1] = 0.0;
    fft.Inverse();
    const double *frame = fft.time();
    const std::size_t start = t * opts.frame_shift;
    for (std::size_t n = 0; n < L; ++n) {
      acc[start + n] += frame[n] * scale * win[n];
      norm[start + n] += win[n] * win[n];
    }
  }
  std::vector<double> out(N, 0.0);
  for (std::size_t i = 0; i < N; ++i)
    if (norm[i] > 1e-12) out[i] = acc[i] / norm[i];
  return out;
}

}  // namespace beamspeech
