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

// Word n-gram language model with interpolated modified Kneser-Ney
// smoothing, and the perplexity features derived from it.
//
// Sentences are scored as "<s> w1 ... wn </s>"; every predicted token,
// including </s>, counts toward the per-word mean. The predicted vocabulary
// is every known word plus <unk> and </s> (never <s>).

#ifndef RUNON_NGRAM_HPP_
#define RUNON_NGRAM_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "runon/corpus.hpp"

namespace runon {

enum class Smoothing : std::uint8_t {
  /// Interpolated modified Kneser-Ney. Orders whose count-of-counts do not
  /// give usable discounts fall back to Witten-Bell.
  kModifiedKneserNey,
  kWittenBell,
  /// Unsmoothed relative frequencies. Unseen events get probability 0; meant
  /// for tests and diagnostics.
  kMaximumLikelihood,
};

std::string_view smoothing_name(Smoothing s);

struct LmConfig {
  int order = 5;
  /// Word types seen fewer times are mapped to <unk>.
  int min_count = 2;
  Smoothing smoothing = Smoothing::kModifiedKneserNey;
};

class NgramModel {
 public:
  using WordId = std::uint32_t;
  static constexpr WordId kUnk = 0;
  static constexpr WordId kBos = 1;
  static constexpr WordId kEos = 2;

  /// Per-order estimator actually in use.
  struct OrderParams {
    Smoothing method = Smoothing::kModifiedKneserNey;
    std::array<double, 3> discount{};  // D1, D2, D3+
  };

  /// Throws EmptyCorpus, InvalidArgument for order < 1.
  static NgramModel train(std::span<const std::vector<std::string>> sentences,
                          const LmConfig& config);
  static NgramModel train(std::span<const AnnotatedSentence> sentences, const LmConfig& config);

  int order() const { return config_.order; }
  const LmConfig& config() const { return config_; }
  const OrderParams& order_params(int m) const { return params_.at(static_cast<std::size_t>(m - 1)); }

  std::size_t vocab_size() const { return words_.size(); }
  /// Size of the distribution every conditional sums over.
  std::size_t predicted_vocab_size() const { return words_.size() - 1; }
  WordId id(std::string_view word) const;
  const std::string& word(WordId id) const { return words_.at(id); }
  std::vector<WordId> encode(std::span<const std::string> tokens) const;

  /// p(w | context). Only the last order-1 context words are used; a shorter
  /// context means the event is scored at a lower order.
  double prob(std::span<const WordId> context, WordId w) const;
  double log_prob(std::span<const WordId> context, WordId w) const;

  void save(std::ostream& out) const;
  /// Throws FormatError.
  static NgramModel load(std::istream& in, const std::string& name = "<lm>");

 private:
  struct ContextStats {
    std::int64_t total = 0;     // sum of counts over continuations
    std::int64_t distinct = 0;  // number of continuations
    std::array<std::int64_t, 3> by_count{};  // continuations with count 1, 2, 3+
  };

  void estimate();
  std::int64_t count(int m, std::span<const WordId> gram) const;

  LmConfig config_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> index_;
  // Per order (index m-1): n-gram -> (adjusted) count, context -> stats. Keys
  // are the packed little-endian ids.
  std::vector<std::unordered_map<std::string, std::int64_t>> counts_;
  std::vector<std::unordered_map<std::string, ContextStats>> contexts_;
  std::vector<OrderParams> params_;
};

/// Total natural-log probability of "<s> tokens </s>" and the number of
/// scored tokens (tokens.size() + 1).
struct SentenceScore {
  double log_prob = 0.0;
  std::size_t scored = 0;
};
SentenceScore score_sentence(const NgramModel& model, std::span<const std::string> tokens);

/// exp(-mean log-probability) over tokens plus the closing </s>.
double mean_perplexity(const NgramModel& model, std::span<const std::string> tokens);

/// True iff inserting ". </s> <s>" after token `gap` strictly lowers the mean
/// per-word perplexity. Requires gap < tokens.size() - 1.
bool perplexity_decrease_flag(const NgramModel& model, std::span<const std::string> tokens,
                              std::size_t gap);

enum class KgramFlag : std::uint8_t { kLess, kGreater, kNotAvailable };
std::string_view kgram_flag_name(KgramFlag f);  // "lt", "gt", "na"

/// For k = 1, 2, 3: compares p(. | k tokens ending at `gap`) against
/// p(next token | same context). kNotAvailable when fewer than k tokens
/// precede the gap or there is no next token.
std::array<KgramFlag, 3> kgram_comparison_flags(const NgramModel& model,
                                                std::span<const std::string> tokens,
                                                std::size_t gap);

/// Computes the perplexity flag for every gap of one sentence, re-scoring
/// only the positions whose context the inserted boundary changes.
class GapScorer {
 public:
  GapScorer(const NgramModel& model, std::span<const std::string> tokens);
  bool perplexity_decreases(std::size_t gap) const;
  std::array<KgramFlag, 3> kgram_flags(std::size_t gap) const;

 private:
  const NgramModel& model_;
  std::vector<NgramModel::WordId> ids_;   // <s> w1 .. wn </s>
  std::vector<double> position_log_prob_;  // log p of ids_[t], t >= 1
  double total_ = 0.0;
};

}  // namespace runon

#endif  // RUNON_NGRAM_HPP_
