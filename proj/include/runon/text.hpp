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

// Small string helpers shared by the corpus, feature and CLI code. Case
// operations touch ASCII letters only; other bytes pass through unchanged.

#ifndef RUNON_TEXT_HPP_
#define RUNON_TEXT_HPP_

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace runon::text {

inline bool is_ascii_upper(char c) { return c >= 'A' && c <= 'Z'; }
inline bool is_ascii_lower(char c) { return c >= 'a' && c <= 'z'; }

std::string to_lower(std::string_view s);
std::string lower_first(std::string_view s);
std::string upper_first(std::string_view s);

bool starts_with_icase(std::string_view s, std::string_view prefix);

/// Splits on runs of the given separator; empty fields are dropped.
std::vector<std::string> split(std::string_view s, char sep);
/// Splits on the separator keeping empty fields.
std::vector<std::string> split_fields(std::string_view s, char sep);

std::string_view trim(std::string_view s);

std::string join(std::span<const std::string> parts, std::string_view sep);

/// Renders a tokenized sentence as plain text: tokens are joined by single
/// spaces except that closing punctuation attaches to the previous token.
std::string detokenize(std::span<const std::string> tokens);

/// Exact text form of a double (C99 hex float).
std::string hexfloat(double v);
/// Parses decimal or hex floats. Throws InvalidArgument on trailing junk.
double parse_double(std::string_view s);

}  // namespace runon::text

#endif  // RUNON_TEXT_HPP_
