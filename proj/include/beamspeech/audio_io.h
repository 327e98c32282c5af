// include/beamspeech/audio_io.h

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
// Multichannel audio files: RIFF/WAVE (16-bit PCM or 32-bit IEEE float,
// interleaved on disk) and raw planar float64 with a text sidecar.

#ifndef BEAMSPEECH_AUDIO_IO_H_
#define BEAMSPEECH_AUDIO_IO_H_

#include <string>

#include "beamspeech/signal.h"

namespace beamspeech {

enum class WavFormat { kPcm16, kFloat32 };

// Throws std::runtime_error on I/O failure or an unsupported encoding.
Waveform ReadWav(const std::string &path);
// PCM16 clips to [-1, 1] and rounds to the nearest step of 1/32768.
void WriteWav(const std::string &path, const Waveform &w,
              WavFormat format = WavFormat::kFloat32);

// Raw planar float64: `path` holds channel 0 samples, then channel 1, ...
// little-endian; `path + ".hdr"` holds "sample_rate = R", "channels = C" and
// "samples = N" lines.
Waveform ReadRaw(const std::string &path);
void WriteRaw(const std::string &path, const Waveform &w);

// Dispatches on extension: ".wav" or ".raw".
Waveform ReadAudio(const std::string &path);
void WriteAudio(const std::string &path, const Waveform &w);

}  // namespace beamspeech

#endif  // BEAMSPEECH_AUDIO_IO_H_
