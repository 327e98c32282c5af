// tools/cli.h

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
// The beamspeech command-line front end, callable in-process for tests.

#ifndef BEAMSPEECH_TOOLS_CLI_H_
#define BEAMSPEECH_TOOLS_CLI_H_

#include <iosfwd>

namespace beamspeech::cli {

enum ExitCode {
  kExitOk = 0,
  kExitUsage = 2,
  kExitData = 3,
  kExitNumeric = 4,
};

// Parses argv (argv[0] is the program name) and runs one command. Normal
// output goes to `out`, diagnostics to `err`.
int Run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace beamspeech::cli

#endif  // BEAMSPEECH_TOOLS_CLI_H_
