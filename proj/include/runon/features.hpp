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

// Gap features for the CRF labeler.
//
// Each token contributes one row describing the gap that follows it. A row
// is a list of string columns (the feature-file layout, one gap per line);
// templates then expand windows of rows into sparse indicator features.

#ifndef RUNON_FEATURES_HPP_
#define RUNON_FEATURES_HPP_

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "runon/corpus.hpp"
#include "runon/ngram.hpp"
#include "runon/tree.hpp"

namespace runon {

/// The gap between token `gap` and token `gap + 1` of `sentence`.
struct GapContext {
  const AnnotatedSentence& sentence;
  std::size_t gap;

  std::size_t size() const { return sentence.size(); }
};

struct AncestorPair {
  std::string left;
  std::string right;
  bool left_preterminal = false;
  bool right_preterminal = false;

  /// "preterminal/phrase" etc.
  std::string kind() const;
};

/// The children of the lowest common ancestor of leaves `i` and `i + 1` that
/// lie on the path to each leaf: the largest constituent containing one of
/// the two words but not the other. Throws MalformedTree when `i + 1` is not
/// a leaf index.
AncestorPair highest_uncommon_ancestors(const ParseTree& tree, std::size_t i);

/// Column layout of a feature row.
enum Column : std::size_t {
  kColToken,
  kColPos,
  kColCap,         // True / False
  kColIndex,       // i
  kColRemaining,   // N - j
  kColFraction,    // i / N, rounded half up to one decimal
  kColKgram1,      // gt / lt / na
  kColKgram2,
  kColKgram3,
  kColPerplexity,  // 1 / 0 / na
  kColAncLeft,
  kColAncRight,
  kColAncKind,
  kNumColumns,
};

inline constexpr const char* kNoParse = "noparse";

using FeatureRow = std::vector<std::string>;

/// One sequence in feature-file form.
struct FeatureSequence {
  std::vector<FeatureRow> rows;
  std::vector<GapLabel> labels;
};

/// Rows for every token of `seq`. Without a language model the perplexity
/// columns are "na".
FeatureSequence featurize(const LabeledSequence& seq, const NgramModel* lm);
FeatureSequence featurize(const AnnotatedSentence& sentence, const NgramModel* lm);

/// Feature file: one row per line, tab-separated columns, the final column
/// the gold label (SPACE / PERIOD; S / P also accepted on input), blank line
/// between sequences. Every row of a file must have the same column count.
void write_feature_file(std::ostream& out, std::span<const FeatureSequence> data);
std::vector<FeatureSequence> read_feature_file(std::istream& in,
                                               const std::string& name = "<features>");

/// A template joins the cells at (row offset, column) into one indicator
/// feature "name=v1/v2/...". Rows outside the sequence read as BOS / EOS.
struct FeatureTemplate {
  std::string name;
  std::vector<std::pair<int, std::size_t>> cells;
};

class TemplateSet {
 public:
  TemplateSet() = default;
  explicit TemplateSet(std::vector<FeatureTemplate> templates);

  /// Token, POS and capitalization windows (unigrams through trigrams over
  /// tokens i-2 .. j+2), the positional fraction, the remaining-token count,
  /// k-gram and perplexity flags, ancestor labels and kinds, and a bias.
  static TemplateSet defaults();

  std::size_t size() const { return templates_.size(); }
  const std::vector<FeatureTemplate>& templates() const { return templates_; }

  /// Feature strings for row `row` of `rows`.
  std::vector<std::string> expand(std::span<const FeatureRow> rows, std::size_t row) const;

  /// "name<TAB>offset:column,offset:column" per line.
  std::string serialize(const FeatureTemplate& t) const;
  static FeatureTemplate parse(std::string_view line);

 private:
  std::vector<FeatureTemplate> templates_;
};

/// Sparse indicator feature: template index and its value string.
struct Feature {
  std::size_t template_id;
  std::string value;

  bool operator==(const Feature&) const = default;
};
using FeatureVector = std::vector<Feature>;

/// Expanded features for one gap under the default templates.
FeatureVector extract_features(const GapContext& ctx, const NgramModel& lm);

}  // namespace runon

#endif  // RUNON_FEATURES_HPP_
