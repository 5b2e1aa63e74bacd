// Copyright 2026 The runon Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end. Subcommands: synthesize, train-lm, featurize,
// train-crf, train-s2s, tag, correct, evaluate, significance.

#ifndef RUNON_CLI_HPP_
#define RUNON_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace runon::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
};

/// `args` excludes the program name. Data goes to `out` when no --out path
/// is given; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace runon::cli

#endif  // RUNON_CLI_HPP_
