// src/recognizer/text_io.cc

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

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "beamspeech/recognizer.h"

namespace beamspeech {

Vocabulary Vocabulary::Load(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary " + path);
  Vocabulary v;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    v.tokens_.push_back(line);
  }
  if (v.tokens_.size() <= kFirstChar)
    throw std::runtime_error(path + ": need the three reserved lines and at least one character");
  if (v.tokens_[0] != "<blank>" || v.tokens_[1] != "<sos>" || v.tokens_[2] != "<eos>")
    throw std::runtime_error(path + ": lines 0-2 must be <blank>, <sos>, <eos>");
  for (std::size_t i = kFirstChar; i < v.tokens_.size(); ++i)
    if (SplitUtf8(v.tokens_[i]).size() != 1)
      throw std::runtime_error(path + ": line " + std::to_string(i) + " is not a single character");
  return v;
}

void Vocabulary::Save(const std::string &path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto &t : tokens_) out << t << '\n';
}

void WriteHypotheses(const std::string &path, const std::vector<HypothesisRecord> &records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << std::setprecision(17);
  for (const auto &r : records) out << r.utterance << '\t' << r.score << '\t' << r.text << '\n';
}

std::vector<HypothesisRecord> ReadHypotheses(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<HypothesisRecord> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty()) continue;
    const auto a = line.find('\t');
    const auto b = a == std::string::npos ? a : line.find('\t', a + 1);
    if (b == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 3 tab-separated fields");
    out.push_back({line.substr(0, a), std::stod(line.substr(a + 1, b - a - 1)), line.substr(b + 1)});
  }
  return out;
}

}  // namespace beamspeech
