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

// Two-label linear-chain CRF over gap sequences, trained with an L1 penalty.

#ifndef RUNON_CRF_HPP_
#define RUNON_CRF_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "runon/corpus.hpp"
#include "runon/features.hpp"

namespace runon {

using LabelScores = std::array<double, kNumLabels>;

/// Log-potentials of one sequence: per-position label scores plus a shared
/// label-transition matrix, transition[prev][cur].
struct Lattice {
  std::vector<LabelScores> emission;
  std::array<LabelScores, kNumLabels> transition{};

  std::size_t size() const { return emission.size(); }
};

struct ForwardBackward {
  double log_z = 0.0;
  /// Posterior p(y_t = label | x).
  std::vector<LabelScores> marginals;
  /// Pairwise posteriors p(y_{t-1} = a, y_t = b | x) for t >= 1; entry t-1.
  std::vector<std::array<LabelScores, kNumLabels>> pairwise;
};

/// Computed in log space.
ForwardBackward forward_backward(const Lattice& lattice);

/// Unnormalized log-score of one labeling.
double path_score(const Lattice& lattice, std::span<const GapLabel> labels);

/// Highest-scoring labeling. Among equal scores the lexicographically
/// smallest sequence wins (SPACE < PERIOD).
std::vector<GapLabel> viterbi(const Lattice& lattice);

struct CrfConfig {
  /// The penalty is (1 / c) * sum |w|.
  double c = 10.0;
  /// Features seen fewer times in training are dropped.
  int cutoff = 5;
  /// Decision threshold on the compared label's marginal.
  double threshold = 0.70;
  /// kSpace: PERIOD iff p(SPACE) < threshold.
  /// kPeriod: PERIOD iff p(PERIOD) > threshold.
  GapLabel compared = GapLabel::kSpace;
  int max_iterations = 300;
  double tolerance = 1e-6;
  int workers = 1;
  /// Train on data with a single label class instead of raising
  /// DegenerateLabels.
  bool allow_single_class = false;
};

struct CrfTrainingSummary {
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective;
  std::size_t features = 0;
  std::size_t nonzero_weights = 0;
};

/// Feature ids per position plus gold labels, ready for training.
struct EncodedSequence {
  std::vector<std::vector<std::uint32_t>> features;
  std::vector<GapLabel> labels;
};

/// Negative conditional log-likelihood of encoded data and its gradient.
/// Weight layout: w[2f + y] for feature f and label y, then the transition
/// matrix row-major at offset 2F. Summation order is fixed by sequence
/// chunks, so results do not depend on the worker count.
class CrfObjective {
 public:
  CrfObjective(std::span<const EncodedSequence> data, std::size_t num_features, int workers);

  std::size_t dimension() const { return 2 * num_features_ + kNumLabels * kNumLabels; }
  double operator()(std::span<const double> w, std::span<double> grad) const;

  static constexpr std::size_t kChunk = 64;

 private:
  std::span<const EncodedSequence> data_;
  std::size_t num_features_;
  int workers_;
};

class CrfModel {
 public:
  CrfModel() = default;

  /// Throws NoData when there is nothing to train on and DegenerateLabels
  /// when only one label occurs (unless config.allow_single_class).
  static CrfModel train(std::span<const FeatureSequence> data, const TemplateSet& templates,
                        const CrfConfig& config);

  /// Model with the given feature weights: weights[2f + y] for features[f],
  /// then the four transition weights. Throws LengthMismatch.
  static CrfModel from_weights(const TemplateSet& templates, std::vector<std::string> features,
                               std::vector<double> weights, const CrfConfig& config);

  const CrfConfig& config() const { return config_; }
  const TemplateSet& templates() const { return templates_; }
  const CrfTrainingSummary& summary() const { return summary_; }
  void set_threshold(double t) { config_.threshold = t; }
  void set_compared(GapLabel l) { config_.compared = l; }

  std::size_t feature_count() const { return names_.size(); }
  bool has_feature(const std::string& name) const { return index_.count(name) != 0; }
  /// Weight of (feature, label); zero for unknown features.
  double weight(const std::string& name, GapLabel label) const;
  double transition(GapLabel prev, GapLabel cur) const;
  std::size_t nonzero_weights() const;

  Lattice lattice(const FeatureSequence& seq) const;
  std::vector<LabelScores> marginals(const FeatureSequence& seq) const;
  /// Threshold decoding of the marginals; the final gap is always SPACE.
  std::vector<GapLabel> decode(const FeatureSequence& seq) const;
  std::vector<GapLabel> viterbi(const FeatureSequence& seq) const;

  void save(std::ostream& out) const;
  /// Throws FormatError.
  static CrfModel load(std::istream& in, const std::string& name = "<crf>");

 private:
  std::vector<std::uint32_t> known_features(std::span<const FeatureRow> rows,
                                            std::size_t row) const;

  CrfConfig config_;
  TemplateSet templates_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<double> weights_;  // layout as in CrfObjective
  CrfTrainingSummary summary_;
};

/// Applies the threshold rule to per-position marginals.
std::vector<GapLabel> threshold_decode(std::span<const LabelScores> marginals, double threshold,
                                       GapLabel compared);

}  // namespace runon

#endif  // RUNON_CRF_HPP_
