// include/beamspeech/checkpoint.h

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
// Checkpoint container, version 1:
//   magic   "BSPK1" (5 bytes)
//   records until end of file, each:
//     u64 name length, UTF-8 name bytes,
//     u64 rank, rank x u64 dims,
//     prod(dims) x f64 values
// All integers and floats are little-endian. Optimizer state is stored under
// the reserved "opt/" name prefix.

#ifndef BEAMSPEECH_CHECKPOINT_H_
#define BEAMSPEECH_CHECKPOINT_H_

#include <map>
#include <string>

#include "beamspeech/optimizer.h"

namespace beamspeech {

inline constexpr char kCheckpointMagic[] = "BSPK1";
inline constexpr char kOptimizerPrefix[] = "opt/";

using RecordMap = std::map<std::string, Tensor>;

void WriteRecords(const std::string &path, const RecordMap &records);
RecordMap ReadRecords(const std::string &path);

// Parameters, optional optimizer state and extra records in one file.
void SaveCheckpoint(const std::string &path, const ParameterStore &params,
                    const AdaDelta *optimizer, const RecordMap &extra = {});

struct LoadedCheckpoint {
  ParameterStore params;
  GradMap acc_grad;
  GradMap acc_update;
  double eps = -1.0;  // stored optimizer eps, or -1 when absent
  RecordMap extra;    // records outside the parameter and opt/ namespaces
};

// Records under `extra_prefix` go to `extra`; everything else outside opt/
// is a parameter.
LoadedCheckpoint LoadCheckpoint(const std::string &path,
                                const std::string &extra_prefix = "meta/");

}  // namespace beamspeech

#endif  // BEAMSPEECH_CHECKPOINT_H_
