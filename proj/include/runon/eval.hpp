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

// Insertion-level scoring of predicted PERIOD gaps, baselines, significance
// testing and report rendering.

#ifndef RUNON_EVAL_HPP_
#define RUNON_EVAL_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "runon/corpus.hpp"

namespace runon {

using Labels = std::vector<GapLabel>;

struct Counts {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const Counts&) const = default;
};

/// 1.25 P R / (0.25 P + R), or 0 when P + R = 0.
double f05(double precision, double recall);
/// (1 + b^2) P R / (b^2 P + R), or 0 when P + R = 0.
double f_beta(double precision, double recall, double beta);

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f05 = 0.0;
};
Metrics metrics(const Counts& c);

/// Counts for one sequence. Throws AlignmentError on a length mismatch.
Counts judge(std::span<const GapLabel> pred, std::span<const GapLabel> gold);

struct EvalReport {
  std::string system;
  std::string dataset;
  Counts counts;
  Metrics m;
  std::optional<double> p_value;
};

/// Throws AlignmentError when the streams differ in sequence count or any
/// sequence length.
EvalReport score(std::span<const Labels> pred, std::span<const Labels> gold,
                 const std::string& system = "", const std::string& dataset = "");
/// Also requires identical tokens.
EvalReport score(std::span<const LabeledSequence> pred, std::span<const LabeledSequence> gold,
                 const std::string& system = "", const std::string& dataset = "");

/// Flags each sequence with probability `rate` and puts one PERIOD at a
/// uniformly chosen non-final gap of each flagged sequence.
std::vector<Labels> random_baseline(std::span<const Labels> gold, const Fraction& rate,
                                    std::uint64_t seed);

/// Expected counts and metrics of random_baseline in closed form.
struct ExpectedScore {
  double tp = 0.0;
  double fp = 0.0;
  double fn = 0.0;
  Metrics m;
};
ExpectedScore expected_random_score(std::span<const Labels> gold, const Fraction& rate);

struct BootstrapResult {
  /// Observed A minus B for precision, recall, F0.5.
  std::array<double, 3> delta{};
  /// Share of replicates in which the observed winner fails to win
  /// strictly; 1 when the observed values tie.
  std::array<double, 3> p_value{};
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
};

/// Paired bootstrap over sequences. Replicate r draws from
/// counter_seed(seed, r), so the result does not depend on `workers`.
/// Throws AlignmentError, InvalidArgument for replicates < 1.
BootstrapResult bootstrap_significance(std::span<const Labels> pred_a, std::span<const Labels> pred_b,
                                       std::span<const Labels> gold, std::size_t replicates,
                                       std::uint64_t seed, int workers = 1);

/// Aligns a system's corrected tokens to the source tokens by longest
/// common subsequence (case-insensitive) and returns PERIOD at each gap
/// after which the system inserted terminal punctuation. Throws
/// AlignmentError when fewer than half the source tokens align.
Labels align_external(std::span<const std::string> source, std::span<const std::string> system);

/// Half-up rounding to two decimals, e.g. "0.86".
std::string format2(double v);

std::string report_csv(std::span<const EvalReport> reports);
std::string report_json(std::span<const EvalReport> reports);
/// One row per system, P / R / F0.5 columns per dataset.
std::string report_text(std::span<const EvalReport> reports);

}  // namespace runon

#endif  // RUNON_EVAL_HPP_
