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

#ifndef RUNON_ERROR_HPP_
#define RUNON_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace runon {

/// Base class for every data error raised by the toolkit. The CLI maps these
/// to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define RUNON_DEFINE_ERROR(Name)          \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

RUNON_DEFINE_ERROR(MissingTerminalPunctuation);
RUNON_DEFINE_ERROR(InsufficientCorpus);
RUNON_DEFINE_ERROR(FractionTooHigh);
RUNON_DEFINE_ERROR(EmptyCorpus);
RUNON_DEFINE_ERROR(MalformedTree);
RUNON_DEFINE_ERROR(NoData);
RUNON_DEFINE_ERROR(DegenerateLabels);
RUNON_DEFINE_ERROR(EmptyInput);
RUNON_DEFINE_ERROR(LengthMismatch);
RUNON_DEFINE_ERROR(AlignmentError);
RUNON_DEFINE_ERROR(InvalidArgument);

#undef RUNON_DEFINE_ERROR

/// Malformed input file. The message carries "path:line: ".
class FormatError : public Error {
 public:
  FormatError(const std::string& path, std::size_t line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what) {}
  explicit FormatError(const std::string& what) : Error(what) {}
};

}  // namespace runon

#endif  // RUNON_ERROR_HPP_
