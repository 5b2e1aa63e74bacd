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

// Attention encoder-decoder that emits one gap label per input token.
//
// Encoder: bidirectional LSTM over word embeddings, H_k = [fwd_k; bwd_k].
// Decoder: LSTM whose input at step t is [label embedding of y_{t-1}; c_t],
// with c_t the additive-attention context computed from the previous
// decoder state. Step 0 sees a zero label vector. The output layer reads
// [s_t; c_t; H_t]. The initial decoder state is tanh(Ws [fwd_N; bwd_1] + bs).

#ifndef RUNON_SEQ2SEQ_HPP_
#define RUNON_SEQ2SEQ_HPP_

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "runon/corpus.hpp"
#include "runon/random.hpp"

namespace runon {

struct S2SConfig {
  int hidden_size = 64;
  int embedding_size = 32;
  int label_embedding_size = 8;
  /// 0 means hidden_size.
  int attention_size = 0;
  int vocab_size = 20000;
  /// Words seen fewer times map to <unk>.
  int min_count = 1;
  int max_input_length = 100;
  double dropout = 0.2;
  int batch_size = 16;
  double learning_rate = 0.1;
  double lr_decay = 0.5;
  int epochs = 10;
  double init_scale = 0.1;
  /// Gradients are rescaled to at most this global norm; 0 disables.
  double clip_norm = 5.0;
  std::uint64_t seed = 1;

  /// Throws InvalidArgument.
  void validate() const;
  int attention() const { return attention_size > 0 ? attention_size : hidden_size; }

  /// Full-scale settings: 1028 hidden units, 300-d embeddings, 100k words,
  /// dropout 0.5, batches of 128, Adagrad at 1e-4 with decay 0.5.
  static S2SConfig full_scale();
};

class S2SVocab {
 public:
  static constexpr int kUnk = 0;

  S2SVocab();
  /// Most frequent words first (ties by byte order), at most `size` entries
  /// including <unk>.
  static S2SVocab build(std::span<const LabeledSequence> data, int size, int min_count);
  static S2SVocab from_words(std::vector<std::string> words);

  int id(const std::string& word) const;
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }
  std::vector<int> encode(const AnnotatedSentence& s) const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

/// Per-token probabilities, hard labels and the attention matrix (decoder
/// steps by input positions).
struct LabelOutput {
  std::vector<std::array<double, kNumLabels>> probs;
  std::vector<GapLabel> labels;
  std::vector<std::vector<double>> attention;
  /// Tokens past max_input_length, copied through as SPACE.
  std::size_t truncated = 0;
};

template <class S>
class S2SNetwork {
 public:
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

  enum Param : std::size_t {
    kEmbedding, kEncFwdW, kEncFwdB, kEncBwdW, kEncBwdB, kInitW, kInitB, kLabelEmbedding,
    kDecW, kDecB, kAttW, kAttU, kAttB, kAttV, kOutW, kOutB, kNumParams,
  };
  static const char* param_name(std::size_t p);

  S2SNetwork() = default;
  /// Zero-initialized parameters of the right shapes.
  S2SNetwork(const S2SConfig& config, std::size_t vocab);

  void randomize(Rng& rng, double scale);
  template <class T>
  S2SNetwork<T> cast() const;

  const S2SConfig& config() const { return config_; }
  std::vector<Mat>& params() { return params_; }
  const std::vector<Mat>& params() const { return params_; }
  std::size_t vocab() const { return static_cast<std::size_t>(params_[kEmbedding].cols()); }

  struct Encoding {
    Mat fwd;  // h x N
    Mat bwd;  // h x N
    Mat states() const;  // 2h x N
  };
  /// Throws EmptyInput; ids must be < vocab().
  Encoding encode(std::span<const int> ids) const;

  /// Greedy decoding with the previous predicted label fed back.
  LabelOutput decode(std::span<const int> ids) const;

  /// Summed per-token cross-entropy under teacher forcing. With `grad`
  /// non-null the gradient is added into it (shapes as params()). With
  /// `dropout_rng` non-null dropout is applied.
  S loss(std::span<const int> ids, std::span<const GapLabel> labels, std::vector<Mat>* grad = nullptr,
         Rng* dropout_rng = nullptr) const;

  std::vector<Mat> zero_like() const;

 private:
  template <class T>
  friend class S2SNetwork;

  S2SConfig config_;
  std::vector<Mat> params_;
};

extern template class S2SNetwork<float>;
extern template class S2SNetwork<double>;

/// Largest relative error |a - n| / max(|a|, |n|, 1e-6) between the
/// analytic gradient and central differences with step h, over every
/// parameter entry.
double gradient_check(const S2SNetwork<double>& net, std::span<const int> ids,
                      std::span<const GapLabel> labels, double h = 1e-4);

class S2SModel {
 public:
  S2SModel() = default;
  S2SModel(const S2SConfig& config, S2SVocab vocab);

  const S2SConfig& config() const { return config_; }
  const S2SVocab& vocab() const { return vocab_; }
  S2SNetwork<float>& network() { return net_; }
  const S2SNetwork<float>& network() const { return net_; }

  /// Labels the first max_input_length tokens; the rest pass through as
  /// SPACE. The final token is always SPACE.
  LabelOutput label(const AnnotatedSentence& sentence) const;

  /// Mean per-token teacher-forced cross-entropy, no dropout.
  double mean_loss(std::span<const LabeledSequence> data) const;

  /// Reads "word v1 ... vd" lines into the embedding rows of known words.
  /// Returns the number of rows set. Throws FormatError on a width mismatch.
  std::size_t load_embeddings(std::istream& in, const std::string& name = "<vectors>");

  /// Binary checkpoint: magic, version, config, vocabulary, named
  /// shape-tagged little-endian float32 tensors.
  void save(std::ostream& out) const;
  static S2SModel load(std::istream& in, const std::string& name = "<s2s>");

 private:
  S2SConfig config_;
  S2SVocab vocab_;
  S2SNetwork<float> net_;
};

/// Adagrad over mini-batches with global-norm clipping.
class S2STrainer {
 public:
  S2STrainer(S2SModel& model, std::uint64_t seed);

  /// One update on `batch`; returns the mean per-token training loss.
  double step(std::span<const LabeledSequence> batch);

  double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }
  std::size_t truncated() const { return truncated_; }

 private:
  S2SModel& model_;
  std::vector<S2SNetwork<float>::Mat> accum_;
  Rng dropout_rng_;
  double lr_;
  std::size_t truncated_ = 0;
};

struct S2STrainingHistory {
  std::vector<double> train_loss;
  std::vector<double> valid_loss;
  std::vector<double> learning_rate;
  int best_epoch = -1;
  std::size_t truncated = 0;
};

/// Trains for config.epochs, halving (lr_decay) the learning rate after an
/// epoch that does not improve the validation loss and returning the
/// best-validation parameters. Without validation data the training loss is
/// used. The recorded training loss is the mean over the epoch's batches.
/// Throws NoData.
S2SModel train_s2s(std::span<const LabeledSequence> train, std::span<const LabeledSequence> valid,
                   const S2SConfig& config, S2STrainingHistory* history = nullptr,
                   const std::function<void(int epoch, double train_loss, double valid_loss)>& progress = {});

/// Tokens with "." inserted after each PERIOD gap and the next token's first
/// letter uppercased. Throws LengthMismatch.
std::vector<std::string> restore_tokens(const AnnotatedSentence& sentence,
                                        std::span<const GapLabel> labels);
/// restore_tokens rendered as text.
std::string fuse_output(const AnnotatedSentence& sentence, std::span<const GapLabel> labels);

}  // namespace runon

#endif  // RUNON_SEQ2SEQ_HPP_
