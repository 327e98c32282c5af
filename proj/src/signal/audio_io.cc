// src/signal/audio_io.cc

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

#include "beamspeech/audio_io.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace beamspeech {

namespace {

static_assert(std::endian::native == std::endian::little,
              "audio I/O assumes a little-endian host");

template <typename T>
void Put(std::ostream &out, T v) {
  out.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

template <typename T>
T Get(const std::string &buf, std::size_t pos) {
  if (pos + sizeof(T) > buf.size()) throw std::runtime_error("wav: truncated file");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  return v;
}

std::string Slurp(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool EndsWith(const std::string &s, const std::string &suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

Waveform ReadWav(const std::string &path) {
  const std::string buf = Slurp(path);
  if (buf.size() < 12 || buf.compare(0, 4, "RIFF") != 0 || buf.compare(8, 4, "WAVE") != 0)
    throw std::runtime_error(path + ": not a RIFF/WAVE file");
  std::uint16_t tag = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t data_pos = 0, data_len = 0;
  bool have_fmt = false, have_data = false;
  for (std::size_t pos = 12; pos + 8 <= buf.size();) {
    const std::string id = buf.substr(pos, 4);
    const std::uint32_t len = Get<std::uint32_t>(buf, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      tag = Get<std::uint16_t>(buf, body);
      channels = Get<std::uint16_t>(buf, body + 2);
      rate = Get<std::uint32_t>(buf, body + 4);
      bits = Get<std::uint16_t>(buf, body + 14);
      // WAVE_FORMAT_EXTENSIBLE keeps the real tag in the subformat GUID.
      if (tag == 0xFFFE && len >= 26) tag = Get<std::uint16_t>(buf, body + 24);
      have_fmt = true;
    } else if (id == "data") {
      data_pos = body;
      data_len = std::min<std::size_t>(len, buf.size() - body);
      have_data = true;
    }
    pos = body + len + (len & 1);
  }
  if (!have_fmt || !have_data) throw std::runtime_error(path + ": missing fmt or data chunk");
  if (channels == 0 || rate == 0) throw std::runtime_error(path + ": bad fmt chunk");
  const bool pcm16 = tag == 1 && bits == 16, f32 = tag == 3 && bits == 32;
  if (!pcm16 && !f32)
    throw std::runtime_error(path + ": unsupported encoding (tag " + std::to_string(tag) +
                             ", " + std::to_string(bits) + " bits)");
  const std::size_t width = bits / 8, frames = data_len / (width * channels);
  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.samples.assign(channels, std::vector<double>(frames));
  for (std::size_t n = 0; n < frames; ++n)
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t at = data_pos + (n * channels + c) * width;
      w.samples[c][n] = pcm16 ? Get<std::int16_t>(buf, at) / 32768.0
                              : static_cast<double>(Get<float>(buf, at));
    }
  return w;
}

void WriteWav(const std::string &path, const Waveform &w, WavFormat format) {
  w.Validate();
  const std::uint16_t C = static_cast<std::uint16_t>(w.num_channels());
  const std::uint16_t bits = format == WavFormat::kPcm16 ? 16 : 32;
  const std::uint32_t N = static_cast<std::uint32_t>(w.num_samples());
  const std::uint32_t data_len = N * C * (bits / 8);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write("RIFF", 4);
  Put<std::uint32_t>(out, 36 + data_len);
  out.write("WAVEfmt ", 8);
  Put<std::uint32_t>(out, 16);
  Put<std::uint16_t>(out, format == WavFormat::kPcm16 ? 1 : 3);
  Put<std::uint16_t>(out, C);
  Put<std::uint32_t>(out, static_cast<std::uint32_t>(w.sample_rate));
  Put<std::uint32_t>(out, static_cast<std::uint32_t>(w.sample_rate) * C * (bits / 8));
  Put<std::uint16_t>(out, static_cast<std::uint16_t>(C * (bits / 8)));
  Put<std::uint16_t>(out, bits);
  out.write("data", 4);
  Put<std::uint32_t>(out, data_len);
  for (std::uint32_t n = 0; n < N; ++n)
    for (std::uint16_t c = 0; c < C; ++c) {
      const double x = w.samples[c][n];
      if (format == WavFormat::kPcm16) {
        const double q = std::lround(std::clamp(x, -1.0, 1.0) * 32768.0);
        Put<std::int16_t>(out, static_cast<std::int16_t>(std::clamp(q, -32768.0, 32767.0)));
      } else {
        Put<float>(out, static_cast<float>(x));
      }
    }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Waveform ReadRaw(const std::string &path) {
  std::ifstream hdr(path + ".hdr");
  if (!hdr) throw std::runtime_error("cannot open " + path + ".hdr");
  std::map<std::string, long long> kv;
  for (std::string line; std::getline(hdr, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    kv[trim(line.substr(0, eq))] = std::stoll(trim(line.substr(eq + 1)));
  }
  for (const char *k : {"sample_rate", "channels", "samples"})
    if (!kv.count(k)) throw std::runtime_error(path + ".hdr: missing " + k);
  const std::size_t C = kv["channels"], N = kv["samples"];
  const std::string buf = Slurp(path);
  if (buf.size() != C * N * sizeof(double))
    throw std::runtime_error(path + ": size does not match header");
  Waveform w;
  w.sample_rate = static_cast<int>(kv["sample_rate"]);
  w.samples.assign(C, std::vector<double>(N));
  for (std::size_t c = 0; c < C; ++c)
    std::memcpy(w.samples[c].data(), buf.data() + c * N * sizeof(double), N * sizeof(double));
  return w;
}

void WriteRaw(const std::string &path, const Waveform &w) {
  w.Validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto &ch : w.samples)
    out.write(reinterpret_cast<const char *>(ch.data()), ch.size() * sizeof(double));
  std::ofstream hdr(path + ".hdr");
  hdr << "sample_rate = " << w.sample_rate << "\nchannels = " << w.num_channels()
      << "\nsamples = " << w.num_samples() << "\n";
  if (!out || !hdr) throw std::runtime_error("write failed: " + path);
}

Waveform ReadAudio(const std::string &path) {
  if (EndsWith(path, ".raw")) return ReadRaw(path);
  return ReadWav(path);
}

void WriteAudio(const std::string &path, const Waveform &w) {
  if (EndsWith(path, ".raw")) WriteRaw(path, w);
  else WriteWav(path, w);
}

}  // namespace beamspeech
