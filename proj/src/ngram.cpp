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

#include "runon/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "runon/error.hpp"
#include "runon/text.hpp"

namespace runon {

namespace {

constexpr int kMaxOrder = 8;
constexpr std::string_view kMagic = "runon-ngram";
constexpr int kFormatVersion = 1;

std::string pack(std::span<const NgramModel::WordId> ids) {
  std::string key(ids.size() * 4, '\0');
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto v = ids[i];
    key[4 * i] = static_cast<char>(v & 0xff);
    key[4 * i + 1] = static_cast<char>((v >> 8) & 0xff);
    key[4 * i + 2] = static_cast<char>((v >> 16) & 0xff);
    key[4 * i + 3] = static_cast<char>((v >> 24) & 0xff);
  }
  return key;
}

std::vector<NgramModel::WordId> unpack(std::string_view key) {
  std::vector<NgramModel::WordId> ids(key.size() / 4);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ids[i] = static_cast<NgramModel::WordId>(static_cast<unsigned char>(key[4 * i])) |
             static_cast<NgramModel::WordId>(static_cast<unsigned char>(key[4 * i + 1])) << 8 |
             static_cast<NgramModel::WordId>(static_cast<unsigned char>(key[4 * i + 2])) << 16 |
             static_cast<NgramModel::WordId>(static_cast<unsigned char>(key[4 * i + 3])) << 24;
  }
  return ids;
}

NgramModel::WordId first_id(std::string_view key) { return unpack(key.substr(0, 4)).front(); }

Smoothing parse_smoothing(std::string_view s) {
  if (s == "kneser-ney") return Smoothing::kModifiedKneserNey;
  if (s == "witten-bell") return Smoothing::kWittenBell;
  if (s == "mle") return Smoothing::kMaximumLikelihood;
  throw InvalidArgument("unknown smoothing '" + std::string(s) + "'");
}

}  // namespace

std::string_view smoothing_name(Smoothing s) {
  switch (s) {
    case Smoothing::kModifiedKneserNey:
      return "kneser-ney";
    case Smoothing::kWittenBell:
      return "witten-bell";
    case Smoothing::kMaximumLikelihood:
      return "mle";
  }
  return "?";
}

NgramModel NgramModel::train(std::span<const AnnotatedSentence> sentences, const LmConfig& config) {
  std::vector<std::vector<std::string>> words;
  words.reserve(sentences.size());
  for (const auto& s : sentences) words.push_back(s.surfaces());
  return train(words, config);
}

NgramModel NgramModel::train(std::span<const std::vector<std::string>> sentences,
                             const LmConfig& config) {
  if (config.order < 1 || config.order > kMaxOrder) {
    throw InvalidArgument("n-gram order must lie in [1, " + std::to_string(kMaxOrder) + "]");
  }
  std::size_t tokens = 0;
  std::map<std::string, std::int64_t> freq;
  for (const auto& s : sentences) {
    for (const auto& w : s) ++freq[w];
    tokens += s.size();
  }
  if (tokens == 0) throw EmptyCorpus("language model training corpus is empty");

  NgramModel m;
  m.config_ = config;
  m.words_ = {"<unk>", "<s>", "</s>"};
  for (const auto& [w, c] : freq) {
    if (c >= config.min_count && w != "<unk>" && w != "<s>" && w != "</s>") m.words_.push_back(w);
  }
  for (std::size_t i = 0; i < m.words_.size(); ++i) m.index_.emplace(m.words_[i], static_cast<WordId>(i));

  const auto order = static_cast<std::size_t>(config.order);
  m.counts_.assign(order, {});
  std::vector<WordId> padded;
  for (const auto& s : sentences) {
    padded.clear();
    padded.push_back(kBos);
    for (const auto& w : s) padded.push_back(m.id(w));
    padded.push_back(kEos);
    for (std::size_t end = 1; end < padded.size(); ++end) {
      for (std::size_t n = 1; n <= std::min(order, end + 1); ++n) {
        ++m.counts_[n - 1][pack(std::span(padded).subspan(end + 1 - n, n))];
      }
    }
  }

  if (config.smoothing == Smoothing::kModifiedKneserNey) {
    // Lower orders count distinct left extensions, except for n-grams that
    // start at the sentence boundary, which have none and keep raw counts.
    for (std::size_t n = order - 1; n >= 1; --n) {
      std::unordered_map<std::string, std::int64_t> continuation;
      for (const auto& [key, c] : m.counts_[n]) ++continuation[key.substr(4)];
      for (auto& [key, c] : m.counts_[n - 1]) {
        if (first_id(key) != kBos) c = continuation.at(key);
      }
    }
  }
  m.estimate();
  return m;
}

void NgramModel::estimate() {
  const auto order = counts_.size();
  contexts_.assign(order, {});
  params_.assign(order, {});
  for (std::size_t n = 1; n <= order; ++n) {
    std::array<std::int64_t, 4> coc{};  // count-of-counts n1..n4
    for (const auto& [key, c] : counts_[n - 1]) {
      auto& st = contexts_[n - 1][key.substr(0, key.size() - 4)];
      st.total += c;
      st.distinct += 1;
      st.by_count[static_cast<std::size_t>(std::min<std::int64_t>(c, 3) - 1)] += 1;
      if (c <= 4) coc[static_cast<std::size_t>(c - 1)] += 1;
    }
    auto& p = params_[n - 1];
    p.method = config_.smoothing;
    if (p.method != Smoothing::kModifiedKneserNey) continue;
    const auto [n1, n2, n3, n4] = coc;
    bool usable = n1 > 0 && n2 > 0 && n3 > 0;
    if (usable) {
      const double y = static_cast<double>(n1) / static_cast<double>(n1 + 2 * n2);
      p.discount[0] = 1.0 - 2.0 * y * static_cast<double>(n2) / static_cast<double>(n1);
      p.discount[1] = 2.0 - 3.0 * y * static_cast<double>(n3) / static_cast<double>(n2);
      p.discount[2] = 3.0 - 4.0 * y * static_cast<double>(n4) / static_cast<double>(n3);
      for (std::size_t k = 0; k < 3; ++k) {
        usable = usable && p.discount[k] > 0.0 && p.discount[k] <= static_cast<double>(k + 1);
      }
    }
    if (!usable) {
      p.method = Smoothing::kWittenBell;
      p.discount = {};
    }
  }
}

NgramModel::WordId NgramModel::id(std::string_view word) const {
  const auto it = index_.find(std::string(word));
  return it == index_.end() ? kUnk : it->second;
}

std::vector<NgramModel::WordId> NgramModel::encode(std::span<const std::string> tokens) const {
  std::vector<WordId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::int64_t NgramModel::count(int m, std::span<const WordId> gram) const {
  const auto& table = counts_[static_cast<std::size_t>(m - 1)];
  const auto it = table.find(pack(gram));
  return it == table.end() ? 0 : it->second;
}

double NgramModel::prob(std::span<const WordId> context, WordId w) const {
  if (w == kBos || w >= words_.size()) return 0.0;
  const std::size_t top = std::min<std::size_t>(counts_.size(), context.size() + 1);
  std::vector<WordId> gram(context.end() - static_cast<std::ptrdiff_t>(top - 1), context.end());
  gram.push_back(w);

  double p = 1.0 / static_cast<double>(predicted_vocab_size());
  for (std::size_t n = 1; n <= top; ++n) {
    const auto g = std::span<const WordId>(gram).last(n);
    const auto ctx = contexts_[n - 1].find(pack(g.first(n - 1)));
    if (ctx == contexts_[n - 1].end()) continue;
    const auto& st = ctx->second;
    const auto a = count(static_cast<int>(n), g);
    const auto total = static_cast<double>(st.total);
    const auto& par = params_[n - 1];
    switch (par.method) {
      case Smoothing::kModifiedKneserNey: {
        const double d = a == 0 ? 0.0 : par.discount[static_cast<std::size_t>(std::min<std::int64_t>(a, 3) - 1)];
        const double gamma = (par.discount[0] * static_cast<double>(st.by_count[0]) +
                              par.discount[1] * static_cast<double>(st.by_count[1]) +
                              par.discount[2] * static_cast<double>(st.by_count[2])) /
                             total;
        p = std::max(static_cast<double>(a) - d, 0.0) / total + gamma * p;
        break;
      }
      case Smoothing::kWittenBell: {
        const auto t = static_cast<double>(st.distinct);
        p = (static_cast<double>(a) + t * p) / (total + t);
        break;
      }
      case Smoothing::kMaximumLikelihood:
        p = static_cast<double>(a) / total;
        break;
    }
  }
  return p;
}

double NgramModel::log_prob(std::span<const WordId> context, WordId w) const {
  const double p = prob(context, w);
  return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
}

// Text format, one record per line:
//   runon-ngram 1
//   order N / min_count K / smoothing NAME
//   perplexity_denominator all-scored-tokens
//   vocab V, then V words
//   params n METHOD D1 D2 D3          (hex floats)
//   grams n COUNT, then COUNT lines "id id ...<TAB>count" in key order
void NgramModel::save(std::ostream& out) const {
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "order " << config_.order << '\n';
  out << "min_count " << config_.min_count << '\n';
  out << "smoothing " << smoothing_name(config_.smoothing) << '\n';
  out << "perplexity_denominator all-scored-tokens\n";
  out << "vocab " << words_.size() << '\n';
  for (const auto& w : words_) out << w << '\n';
  for (std::size_t n = 1; n <= counts_.size(); ++n) {
    const auto& p = params_[n - 1];
    out << "params " << n << ' ' << smoothing_name(p.method) << ' ' << text::hexfloat(p.discount[0])
        << ' ' << text::hexfloat(p.discount[1]) << ' ' << text::hexfloat(p.discount[2]) << '\n';
  }
  for (std::size_t n = 1; n <= counts_.size(); ++n) {
    std::vector<std::pair<std::vector<WordId>, std::int64_t>> rows;
    rows.reserve(counts_[n - 1].size());
    for (const auto& [key, c] : counts_[n - 1]) rows.emplace_back(unpack(key), c);
    std::sort(rows.begin(), rows.end());
    out << "grams " << n << ' ' << rows.size() << '\n';
    for (const auto& [ids, c] : rows) {
      for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? " " : "") << ids[i];
      out << '\t' << c << '\n';
    }
  }
}

NgramModel NgramModel::load(std::istream& in, const std::string& name) {
  std::size_t lineno = 0;
  std::string line;
  auto next = [&]() -> std::string& {
    if (!std::getline(in, line)) throw FormatError(name, lineno + 1, "unexpected end of model file");
    ++lineno;
    return line;
  };
  auto expect_field = [&](std::string_view key) -> std::string {
    const auto fields = text::split(next(), ' ');
    if (fields.size() != 2 || fields[0] != key) {
      throw FormatError(name, lineno, "expected '" + std::string(key) + " <value>'");
    }
    return fields[1];
  };
  auto to_int = [&](const std::string& s) -> std::int64_t {
    try {
      std::size_t used = 0;
      const auto v = std::stoll(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw FormatError(name, lineno, "bad integer '" + s + "'");
    }
  };

  {
    const auto fields = text::split(next(), ' ');
    if (fields.size() != 2 || fields[0] != kMagic) throw FormatError(name, lineno, "not an n-gram model file");
    if (to_int(fields[1]) != kFormatVersion) throw FormatError(name, lineno, "unsupported model version " + fields[1]);
  }
  NgramModel m;
  m.config_.order = static_cast<int>(to_int(expect_field("order")));
  if (m.config_.order < 1 || m.config_.order > kMaxOrder) throw FormatError(name, lineno, "bad order");
  m.config_.min_count = static_cast<int>(to_int(expect_field("min_count")));
  try {
    m.config_.smoothing = parse_smoothing(expect_field("smoothing"));
  } catch (const InvalidArgument& e) {
    throw FormatError(name, lineno, e.what());
  }
  expect_field("perplexity_denominator");
  const auto vocab = to_int(expect_field("vocab"));
  if (vocab < 3) throw FormatError(name, lineno, "vocabulary too small");
  for (std::int64_t i = 0; i < vocab; ++i) {
    m.words_.push_back(next());
    m.index_.emplace(m.words_.back(), static_cast<WordId>(i));
  }
  const auto order = static_cast<std::size_t>(m.config_.order);
  m.counts_.assign(order, {});
  std::vector<OrderParams> params(order);
  for (std::size_t n = 1; n <= order; ++n) {
    const auto f = text::split(next(), ' ');
    if (f.size() != 6 || f[0] != "params" || to_int(f[1]) != static_cast<std::int64_t>(n)) {
      throw FormatError(name, lineno, "expected 'params " + std::to_string(n) + " ...'");
    }
    try {
      params[n - 1].method = parse_smoothing(f[2]);
    } catch (const InvalidArgument& e) {
      throw FormatError(name, lineno, e.what());
    }
    for (std::size_t k = 0; k < 3; ++k) params[n - 1].discount[k] = std::strtod(f[3 + k].c_str(), nullptr);
  }
  for (std::size_t n = 1; n <= order; ++n) {
    const auto f = text::split(next(), ' ');
    if (f.size() != 3 || f[0] != "grams" || to_int(f[1]) != static_cast<std::int64_t>(n)) {
      throw FormatError(name, lineno, "expected 'grams " + std::to_string(n) + " <count>'");
    }
    const auto rows = to_int(f[2]);
    for (std::int64_t r = 0; r < rows; ++r) {
      const auto cols = text::split_fields(next(), '\t');
      if (cols.size() != 2) throw FormatError(name, lineno, "expected 'ids<TAB>count'");
      const auto ids = text::split(cols[0], ' ');
      if (ids.size() != n) throw FormatError(name, lineno, "n-gram has the wrong length");
      std::vector<WordId> gram;
      for (const auto& s : ids) {
        const auto v = to_int(s);
        if (v < 0 || v >= vocab) throw FormatError(name, lineno, "word id out of range");
        gram.push_back(static_cast<WordId>(v));
      }
      m.counts_[n - 1][pack(gram)] = to_int(cols[1]);
    }
  }
  m.estimate();
  // Stored parameters take precedence over the re-estimate.
  m.params_ = std::move(params);
  return m;
}

// --- Perplexity features -------------------------------------------------------

SentenceScore score_sentence(const NgramModel& model, std::span<const std::string> tokens) {
  std::vector<NgramModel::WordId> ids{NgramModel::kBos};
  const auto body = model.encode(tokens);
  ids.insert(ids.end(), body.begin(), body.end());
  ids.push_back(NgramModel::kEos);
  SentenceScore s;
  for (std::size_t t = 1; t < ids.size(); ++t) {
    s.log_prob += model.log_prob(std::span(ids).first(t), ids[t]);
    ++s.scored;
  }
  return s;
}

double mean_perplexity(const NgramModel& model, std::span<const std::string> tokens) {
  const auto s = score_sentence(model, tokens);
  return std::exp(-s.log_prob / static_cast<double>(s.scored));
}

bool perplexity_decrease_flag(const NgramModel& model, std::span<const std::string> tokens,
                              std::size_t gap) {
  return GapScorer(model, tokens).perplexity_decreases(gap);
}

std::string_view kgram_flag_name(KgramFlag f) {
  switch (f) {
    case KgramFlag::kLess:
      return "lt";
    case KgramFlag::kGreater:
      return "gt";
    case KgramFlag::kNotAvailable:
      return "na";
  }
  return "na";
}

std::array<KgramFlag, 3> kgram_comparison_flags(const NgramModel& model,
                                                std::span<const std::string> tokens,
                                                std::size_t gap) {
  return GapScorer(model, tokens).kgram_flags(gap);
}

GapScorer::GapScorer(const NgramModel& model, std::span<const std::string> tokens)
    : model_(model) {
  ids_.push_back(NgramModel::kBos);
  const auto body = model.encode(tokens);
  ids_.insert(ids_.end(), body.begin(), body.end());
  ids_.push_back(NgramModel::kEos);
  position_log_prob_.assign(ids_.size(), 0.0);
  for (std::size_t t = 1; t < ids_.size(); ++t) {
    position_log_prob_[t] = model.log_prob(std::span(ids_).first(t), ids_[t]);
    total_ += position_log_prob_[t];
  }
}

bool GapScorer::perplexity_decreases(std::size_t gap) const {
  const std::size_t n = ids_.size() - 2;  // sentence length
  if (gap + 1 >= n) throw InvalidArgument("gap index out of range");
  const NgramModel::WordId period = model_.id(".");
  const std::size_t span_back = static_cast<std::size_t>(model_.order()) - 1;

  // Token gap sits at ids_ index gap + 1. The modified sequence is
  //   <s> w0..w_gap . </s> | <s> w_gap+1 .. w_n-1 </s>
  std::vector<NgramModel::WordId> first(ids_.begin(), ids_.begin() + static_cast<std::ptrdiff_t>(gap + 2));
  double changed = 0.0;
  first.push_back(period);
  changed += model_.log_prob(std::span(first).first(first.size() - 1), period);
  first.push_back(NgramModel::kEos);
  changed += model_.log_prob(std::span(first).first(first.size() - 1), NgramModel::kEos);

  // Second sentence: positions whose window reaches back past its <s> are
  // re-scored; later positions keep their original value.
  std::vector<NgramModel::WordId> second{NgramModel::kBos};
  double replaced = 0.0;
  for (std::size_t t = gap + 2; t < ids_.size(); ++t) {
    const std::size_t offset = t - (gap + 2);  // words of the new sentence before ids_[t]
    if (offset >= span_back) break;
    changed += model_.log_prob(second, ids_[t]);
    replaced += position_log_prob_[t];
    second.push_back(ids_[t]);
  }
  const double old_mean = total_ / static_cast<double>(n + 1);
  const double new_mean = (total_ - replaced + changed) / static_cast<double>(n + 3);
  // Lower perplexity <=> higher mean log-probability.
  return new_mean > old_mean;
}

std::array<KgramFlag, 3> GapScorer::kgram_flags(std::size_t gap) const {
  std::array<KgramFlag, 3> out{KgramFlag::kNotAvailable, KgramFlag::kNotAvailable,
                               KgramFlag::kNotAvailable};
  const std::size_t n = ids_.size() - 2;
  if (gap + 1 >= n) return out;
  const NgramModel::WordId period = model_.id(".");
  const NgramModel::WordId next = ids_[gap + 2];
  for (std::size_t k = 1; k <= 3; ++k) {
    if (k > gap + 1) break;
    // Context: the k tokens ending at token `gap` (ids_ index gap + 1).
    const auto ctx = std::span(ids_).subspan(gap + 2 - k, k);
    out[k - 1] = model_.prob(ctx, period) > model_.prob(ctx, next) ? KgramFlag::kGreater
                                                                   : KgramFlag::kLess;
  }
  return out;
}

}  // namespace runon
