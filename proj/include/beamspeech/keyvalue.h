// include/beamspeech/keyvalue.h

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
// Flat "key = value" text: one pair per line, '#' starts a comment, blank
// lines ignored. Keys are matched exactly; values keep inner spaces.

#ifndef BEAMSPEECH_KEYVALUE_H_
#define BEAMSPEECH_KEYVALUE_H_

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace beamspeech {

// Throws std::invalid_argument naming the line on a malformed line or a
// repeated key.
std::vector<std::pair<std::string, std::string>> ParseKeyValueText(const std::string &text);

// Strict scalar conversions; throw std::invalid_argument mentioning `key`.
double ParseDouble(const std::string &key, const std::string &value);
long long ParseInt(const std::string &key, const std::string &value);
std::uint64_t ParseUint(const std::string &key, const std::string &value);
bool ParseBool(const std::string &key, const std::string &value);

// Shortest text that reads back to the same double.
std::string FormatDouble(double v);

std::string ReadTextFile(const std::string &path);
void WriteTextFile(const std::string &path, const std::string &text);

}  // namespace beamspeech

#endif  // BEAMSPEECH_KEYVALUE_H_
