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

// Corpus data model and artificial run-on synthesis.
//
// A run-on is made from two adjacent clean sentences by deleting the first
// sentence's terminal punctuation and lowercasing the first word of the
// second (unless it is a proper noun). Every token carries a gap label saying
// whether a sentence-ending period is missing right after it.

#ifndef RUNON_CORPUS_HPP_
#define RUNON_CORPUS_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "runon/tree.hpp"

namespace runon {

class Token {
 public:
  /// Throws InvalidArgument if `surface` is empty or contains whitespace.
  explicit Token(std::string surface, std::optional<std::string> pos = {});

  const std::string& surface() const { return surface_; }
  const std::optional<std::string>& pos() const { return pos_; }
  /// First character is an uppercase letter.
  bool is_capitalized() const;

  bool operator==(const Token&) const = default;

 private:
  std::string surface_;
  std::optional<std::string> pos_;
};

struct AnnotatedSentence {
  std::vector<Token> tokens;
  std::optional<ParseTree> parse;
  std::string source_id;

  /// Throws InvalidArgument for an empty sentence and MalformedTree when the
  /// parse leaves do not match the tokens one to one.
  void validate() const;

  std::size_t size() const { return tokens.size(); }
  std::vector<std::string> surfaces() const;
  bool has_pos() const;
};

/// AnnotatedSentence built from whitespace-separated tokens. Test and tool
/// convenience.
AnnotatedSentence make_sentence(std::string_view tokens,
                                std::string_view pos_tags = {},
                                std::string_view parse = {});

using Paragraph = std::vector<AnnotatedSentence>;

enum class GapLabel : std::uint8_t { kSpace = 0, kPeriod = 1 };

inline constexpr std::size_t kNumLabels = 2;

constexpr char label_code(GapLabel l) { return l == GapLabel::kPeriod ? 'P' : 'S'; }
/// Accepts S, P, SPACE and PERIOD.
std::optional<GapLabel> parse_label(std::string_view s);

struct LabeledSequence {
  AnnotatedSentence sentence;
  std::vector<GapLabel> labels;

  bool is_runon() const;
  std::size_t period_count() const;
  /// Throws LengthMismatch / InvalidArgument when the invariants fail.
  void validate() const;
};

/// Exact non-negative rational p/q.
struct Fraction {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  /// Parses "p/q", a decimal ("0.1") or a percentage ("10%").
  static Fraction parse(std::string_view s);
};

bool operator<(const Fraction& a, const Fraction& b);
inline bool operator>(const Fraction& a, const Fraction& b) { return b < a; }

struct DatasetSpec {
  std::uint64_t runon_count = 0;
  std::uint64_t nonrunon_count = 0;
  std::uint64_t seed = 0;

  Fraction target_runon_fraction() const;
  /// Splits `total` examples so the run-on share is `fraction`, rounded to
  /// the nearest sentence.
  static DatasetSpec from_fraction(std::uint64_t total, Fraction fraction,
                                   std::uint64_t seed);
};

/// Words seen lowercase at a non-initial position somewhere in a corpus.
/// Without POS tags, a capitalized word is taken to be a proper noun iff its
/// lowercase form was never seen mid-sentence.
class CaseEvidence {
 public:
  CaseEvidence() = default;
  explicit CaseEvidence(std::span<const Paragraph> corpus);
  void add(const AnnotatedSentence& s);
  bool seen_lowercase_midsentence(std::string_view word) const;

 private:
  std::unordered_set<std::string> lower_mid_;
};

bool is_proper_noun(const Token& t, const CaseEvidence* evidence);

bool is_url(std::string_view token);
/// Colon, semicolon, dash or ellipsis token. Intra-word hyphens do not count.
bool is_special_punctuation(std::string_view token);
bool is_terminal_punctuation(std::string_view token);

/// Length 5..50 inclusive and no URL or special punctuation token.
bool is_clean_sentence(const AnnotatedSentence& s);
bool is_candidate_pair(const AnnotatedSentence& a, const AnnotatedSentence& b);

/// Fuses two sentences into one artificial run-on with a single PERIOD label
/// on a's last retained token. Throws MissingTerminalPunctuation.
LabeledSequence fuse(const AnnotatedSentence& a, const AnnotatedSentence& b,
                     const CaseEvidence* evidence = nullptr);

LabeledSequence label_negative(const AnnotatedSentence& a);

/// Samples run-ons from adjacent candidate pairs and negatives from the
/// remaining clean sentences. No source sentence is used twice. Output order
/// is a seeded shuffle. Throws InsufficientCorpus.
std::vector<LabeledSequence> build_dataset(std::span<const Paragraph> corpus,
                                           const DatasetSpec& spec,
                                           const CaseEvidence* evidence = nullptr);

/// Keeps every negative and a uniform subsample of run-ons so the run-on
/// share becomes `target` (to the nearest sentence). Input order is kept.
/// Throws FractionTooHigh / InvalidArgument.
std::vector<LabeledSequence> downsample_runons(std::span<const LabeledSequence> data,
                                               Fraction target, std::uint64_t seed);

/// Splits a run-on at its PERIOD labels, restoring a "." token and the
/// capitalization of each following token.
std::vector<std::vector<std::string>> split_at_periods(const LabeledSequence& seq);

// --- I/O -------------------------------------------------------------------
//
// Corpus text: one sentence per line, "tok tok tok<TAB>POS POS POS" (the POS
// column is optional); blank lines separate paragraphs. An optional parse
// file carries one bracketed tree per sentence line, "_" for none; its blank
// lines mirror the paragraph breaks.
//
// Labeled sequences: one token per line "surface<TAB>POS<TAB>S|P" ("_" for a
// missing POS), blank line between sequences. Parses for labeled data go to
// a parallel file with one tree (or "_") per sequence.

std::vector<Paragraph> read_corpus(std::istream& text, std::istream* parses = nullptr,
                                   const std::string& name = "<corpus>");
void write_corpus(std::ostream& text, std::ostream* parses,
                  std::span<const Paragraph> corpus);

std::vector<LabeledSequence> read_labeled(std::istream& in,
                                          const std::string& name = "<labeled>");
void write_labeled(std::ostream& out, std::span<const LabeledSequence> data);

/// Attaches parses (one line per sequence) to already-read sequences.
void read_sequence_parses(std::istream& in, std::span<LabeledSequence> data,
                          const std::string& name = "<parses>");
void write_sequence_parses(std::ostream& out, std::span<const LabeledSequence> data);

}  // namespace runon

#endif  // RUNON_CORPUS_HPP_
