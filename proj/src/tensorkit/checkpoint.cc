// src/tensorkit/checkpoint.cc

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

#include "beamspeech/checkpoint.h"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace beamspeech {
namespace {

void PutU64(std::ostream &os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

void PutF64(std::ostream &os, double v) { PutU64(os, std::bit_cast<std::uint64_t>(v)); }

bool GetU64(std::istream &is, std::uint64_t *v) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char *>(b), 8)) return false;
  *v = 0;
  for (int i = 0; i < 8; ++i) *v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return true;
}

std::uint64_t MustU64(std::istream &is, const std::string &path) {
  std::uint64_t v;
  if (!GetU64(is, &v)) throw std::runtime_error("checkpoint " + path + ": truncated record");
  return v;
}

bool StartsWith(const std::string &s, const std::string &prefix) {
  return s.compare(0, prefix.size(), prefix) == 0;
}

}  // namespace

void WriteRecords(const std::string &path, const RecordMap &records) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os.write(kCheckpointMagic, 5);
  for (const auto &[name, t] : records) {
    PutU64(os, name.size());
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    PutU64(os, t.rank());
    for (auto d : t.shape()) PutU64(os, d);
    for (double v : t.vec()) PutF64(os, v);
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

RecordMap ReadRecords(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path);
  char magic[5];
  if (!is.read(magic, 5) || std::memcmp(magic, kCheckpointMagic, 5) != 0)
    throw std::runtime_error("checkpoint " + path + ": bad magic (expected BSPK1)");
  RecordMap out;
  std::uint64_t name_len;
  while (GetU64(is, &name_len)) {
    if (name_len > (1u << 20)) throw std::runtime_error("checkpoint " + path + ": bad name length");
    std::string name(name_len, '\0');
    if (!is.read(name.data(), static_cast<std::streamsize>(name_len)))
      throw std::runtime_error("checkpoint " + path + ": truncated name");
    std::uint64_t rank = MustU64(is, path);
    if (rank == 0 || rank > 8) throw std::runtime_error("checkpoint " + path + ": bad rank");
    Shape shape(rank);
    for (auto &d : shape) d = MustU64(is, path);
    std::vector<double> data(NumElements(shape));
    for (auto &v : data) v = std::bit_cast<double>(MustU64(is, path));
    if (!out.emplace(name, Tensor(shape, std::move(data))).second)
      throw std::runtime_error("checkpoint " + path + ": duplicate record " + name);
  }
  return out;
}

void SaveCheckpoint(const std::string &path, const ParameterStore &params,
                    const AdaDelta *optimizer, const RecordMap &extra) {
  RecordMap records = extra;
  for (const auto &[name, t] : params.all()) records.emplace(name, t);
  if (optimizer) {
    for (const auto &[name, t] : optimizer->acc_grad())
      records.emplace(std::string(kOptimizerPrefix) + name + "/acc_grad", t);
    for (const auto &[name, t] : optimizer->acc_update())
      records.emplace(std::string(kOptimizerPrefix) + name + "/acc_update", t);
    records.emplace(std::string(kOptimizerPrefix) + "eps",
                    Tensor::Scalar(optimizer->options().eps));
  }
  WriteRecords(path, records);
}

LoadedCheckpoint LoadCheckpoint(const std::string &path, const std::string &extra_prefix) {
  LoadedCheckpoint out;
  const std::string opt = kOptimizerPrefix;
  for (auto &[name, t] : ReadRecords(path)) {
    if (StartsWith(name, opt)) {
      std::string rest = name.substr(opt.size());
      if (rest == "eps") {
        out.eps = t.item();
      } else if (rest.size() > 9 && rest.ends_with("/acc_grad")) {
        out.acc_grad.emplace(rest.substr(0, rest.size() - 9), t);
      } else if (rest.size() > 11 && rest.ends_with("/acc_update")) {
        out.acc_update.emplace(rest.substr(0, rest.size() - 11), t);
      }
    } else if (!extra_prefix.empty() && StartsWith(name, extra_prefix)) {
      out.extra.emplace(name, t);
    } else {
      out.params.Add(name, t);
    }
  }
  return out;
}

}  // namespace beamspeech
