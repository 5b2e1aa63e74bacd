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

#include "runon/corpus.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>

#include "runon/error.hpp"
#include "runon/random.hpp"
#include "runon/text.hpp"

namespace runon {

// --- Token / sentence --------------------------------------------------------

Token::Token(std::string surface, std::optional<std::string> pos)
    : surface_(std::move(surface)), pos_(std::move(pos)) {
  if (surface_.empty()) throw InvalidArgument("token surface is empty");
  if (surface_.find_first_of(" \t\r\n") != std::string::npos) {
    throw InvalidArgument("token '" + surface_ + "' contains whitespace");
  }
}

bool Token::is_capitalized() const { return text::is_ascii_upper(surface_.front()); }

void AnnotatedSentence::validate() const {
  if (tokens.empty()) throw InvalidArgument("sentence has no tokens");
  if (!parse) return;
  const auto words = parse->leaf_words();
  if (words.size() != tokens.size()) {
    throw MalformedTree("parse has " + std::to_string(words.size()) +
                        " leaves but the sentence has " +
                        std::to_string(tokens.size()) + " tokens");
  }
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (words[i] != tokens[i].surface()) {
      throw MalformedTree("parse leaf " + std::to_string(i) + " is '" + words[i] +
                          "' but the token is '" + tokens[i].surface() + "'");
    }
  }
}

std::vector<std::string> AnnotatedSentence::surfaces() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.surface());
  return out;
}

bool AnnotatedSentence::has_pos() const {
  return !tokens.empty() &&
         std::all_of(tokens.begin(), tokens.end(), [](const Token& t) { return t.pos().has_value(); });
}

AnnotatedSentence make_sentence(std::string_view tokens, std::string_view pos_tags,
                                std::string_view parse) {
  AnnotatedSentence s;
  const auto words = text::split(tokens, ' ');
  const auto tags = text::split(pos_tags, ' ');
  if (!tags.empty() && tags.size() != words.size()) {
    throw InvalidArgument("POS tag count does not match token count");
  }
  for (std::size_t i = 0; i < words.size(); ++i) {
    s.tokens.emplace_back(words[i], tags.empty() ? std::optional<std::string>{} : tags[i]);
  }
  if (!parse.empty()) s.parse = ParseTree::parse(parse);
  s.validate();
  return s;
}

std::optional<GapLabel> parse_label(std::string_view s) {
  if (s == "S" || s == "SPACE") return GapLabel::kSpace;
  if (s == "P" || s == "PERIOD") return GapLabel::kPeriod;
  return std::nullopt;
}

// --- Labeled sequences -------------------------------------------------------

bool LabeledSequence::is_runon() const { return period_count() > 0; }

std::size_t LabeledSequence::period_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), GapLabel::kPeriod));
}

void LabeledSequence::validate() const {
  sentence.validate();
  if (labels.size() != sentence.size()) {
    throw LengthMismatch("sequence has " + std::to_string(sentence.size()) +
                         " tokens but " + std::to_string(labels.size()) + " labels");
  }
  if (labels.back() != GapLabel::kSpace) {
    throw InvalidArgument("the final token of a sequence must be labeled SPACE");
  }
}

// --- Fractions and dataset specs --------------------------------------------

bool operator<(const Fraction& a, const Fraction& b) {
  return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
}

Fraction Fraction::parse(std::string_view s) {
  s = text::trim(s);
  auto parse_int = [&](std::string_view digits) -> std::int64_t {
    if (digits.empty()) throw InvalidArgument("bad fraction '" + std::string(s) + "'");
    std::int64_t v = 0;
    for (char c : digits) {
      if (c < '0' || c > '9') throw InvalidArgument("bad fraction '" + std::string(s) + "'");
      v = v * 10 + (c - '0');
    }
    return v;
  };
  if (const auto slash = s.find('/'); slash != std::string_view::npos) {
    Fraction f{parse_int(s.substr(0, slash)), parse_int(s.substr(slash + 1))};
    if (f.den == 0) throw InvalidArgument("fraction with zero denominator");
    return f;
  }
  std::int64_t scale = 1;
  if (!s.empty() && s.back() == '%') {
    scale = 100;
    s.remove_suffix(1);
  }
  const auto dot = s.find('.');
  std::int64_t num = parse_int(s.substr(0, dot));
  std::int64_t den = scale;
  if (dot != std::string_view::npos) {
    const auto frac = s.substr(dot + 1);
    for (char c : frac) {
      if (c < '0' || c > '9') throw InvalidArgument("bad fraction '" + std::string(s) + "'");
      num = num * 10 + (c - '0');
      den *= 10;
    }
  }
  return Fraction{num, den};
}

Fraction DatasetSpec::target_runon_fraction() const {
  const auto total = runon_count + nonrunon_count;
  return Fraction{static_cast<std::int64_t>(runon_count),
                  static_cast<std::int64_t>(total == 0 ? 1 : total)};
}

DatasetSpec DatasetSpec::from_fraction(std::uint64_t total, Fraction fraction,
                                       std::uint64_t seed) {
  if (fraction.num <= 0 || fraction.den <= 0 || fraction.num > fraction.den) {
    throw InvalidArgument("run-on fraction must lie in (0, 1]");
  }
  // Nearest integer, halves rounded up.
  const auto scaled = static_cast<unsigned __int128>(total) * static_cast<std::uint64_t>(fraction.num);
  const auto den = static_cast<unsigned __int128>(fraction.den);
  const auto runons = static_cast<std::uint64_t>((2 * scaled + den) / (2 * den));
  return DatasetSpec{runons, total - runons, seed};
}

// --- Filters -----------------------------------------------------------------

CaseEvidence::CaseEvidence(std::span<const Paragraph> corpus) {
  for (const auto& para : corpus) {
    for (const auto& s : para) add(s);
  }
}

void CaseEvidence::add(const AnnotatedSentence& s) {
  for (std::size_t i = 1; i < s.tokens.size(); ++i) {
    const auto& w = s.tokens[i].surface();
    if (text::is_ascii_lower(w.front())) lower_mid_.insert(w);
  }
}

bool CaseEvidence::seen_lowercase_midsentence(std::string_view word) const {
  return lower_mid_.contains(text::to_lower(word));
}

bool is_proper_noun(const Token& t, const CaseEvidence* evidence) {
  if (t.pos()) return *t.pos() == "NNP" || *t.pos() == "NNPS";
  if (evidence == nullptr) return false;
  return t.is_capitalized() && !evidence->seen_lowercase_midsentence(t.surface());
}

bool is_url(std::string_view token) {
  return text::starts_with_icase(token, "http://") ||
         text::starts_with_icase(token, "https://") ||
         text::starts_with_icase(token, "ftp://") || text::starts_with_icase(token, "www.");
}

bool is_special_punctuation(std::string_view token) {
  if (token == ":" || token == ";" || token == "\xE2\x80\xA6") return true;  // U+2026
  // Ellipsis written with periods.
  if (token.size() >= 2 && token.find_first_not_of('.') == std::string_view::npos) return true;
  // Dash tokens made only of '-', en dash (U+2013) and em dash (U+2014).
  std::string_view rest = token;
  while (!rest.empty()) {
    if (rest.front() == '-') {
      rest.remove_prefix(1);
    } else if (rest.starts_with("\xE2\x80\x93") || rest.starts_with("\xE2\x80\x94")) {
      rest.remove_prefix(3);
    } else {
      return false;
    }
  }
  return !token.empty();
}

bool is_terminal_punctuation(std::string_view token) {
  return token == "." || token == "!" || token == "?";
}

bool is_clean_sentence(const AnnotatedSentence& s) {
  if (s.size() < 5 || s.size() > 50) return false;
  return std::none_of(s.tokens.begin(), s.tokens.end(), [](const Token& t) {
    return is_url(t.surface()) || is_special_punctuation(t.surface());
  });
}

bool is_candidate_pair(const AnnotatedSentence& a, const AnnotatedSentence& b) {
  return is_clean_sentence(a) && is_clean_sentence(b);
}

// --- Synthesis ---------------------------------------------------------------

LabeledSequence fuse(const AnnotatedSentence& a, const AnnotatedSentence& b,
                     const CaseEvidence* evidence) {
  if (a.tokens.empty() || !is_terminal_punctuation(a.tokens.back().surface())) {
    throw MissingTerminalPunctuation("sentence '" + a.source_id +
                                     "' does not end in . ! or ?");
  }
  if (a.tokens.size() < 2) throw InvalidArgument("sentence '" + a.source_id + "' is only punctuation");
  if (b.tokens.empty()) throw InvalidArgument("second sentence is empty");

  LabeledSequence out;
  auto& s = out.sentence;
  s.source_id = a.source_id + "+" + b.source_id;
  s.tokens.assign(a.tokens.begin(), a.tokens.end() - 1);
  const std::size_t boundary = s.tokens.size() - 1;
  s.tokens.insert(s.tokens.end(), b.tokens.begin(), b.tokens.end());

  const Token& first = b.tokens.front();
  const bool lower = !is_proper_noun(first, evidence);
  if (lower) s.tokens[boundary + 1] = Token(text::lower_first(first.surface()), first.pos());

  if (a.parse && b.parse) {
    ParseTree bt = *b.parse;
    if (lower) bt.set_leaf_word(0, s.tokens[boundary + 1].surface());
    s.parse = ParseTree::merge_clauses(a.parse->without_last_leaf(), bt);
  }

  out.labels.assign(s.tokens.size(), GapLabel::kSpace);
  out.labels[boundary] = GapLabel::kPeriod;
  return out;
}

LabeledSequence label_negative(const AnnotatedSentence& a) {
  return LabeledSequence{a, std::vector<GapLabel>(a.tokens.size(), GapLabel::kSpace)};
}

std::vector<LabeledSequence> build_dataset(std::span<const Paragraph> corpus,
                                           const DatasetSpec& spec,
                                           const CaseEvidence* evidence) {
  struct Ref {
    std::size_t para;
    std::size_t sent;
  };
  std::vector<std::vector<bool>> used(corpus.size());
  std::vector<Ref> pairs;
  for (std::size_t p = 0; p < corpus.size(); ++p) {
    used[p].assign(corpus[p].size(), false);
    for (std::size_t i = 0; i + 1 < corpus[p].size(); ++i) {
      const auto& a = corpus[p][i];
      if (is_candidate_pair(a, corpus[p][i + 1]) &&
          is_terminal_punctuation(a.tokens.back().surface())) {
        pairs.push_back({p, i});
      }
    }
  }

  Rng rng(spec.seed);
  rng.shuffle(std::span<Ref>(pairs));

  std::vector<LabeledSequence> out;
  out.reserve(spec.runon_count + spec.nonrunon_count);
  for (const Ref& r : pairs) {
    if (out.size() == spec.runon_count) break;
    if (used[r.para][r.sent] || used[r.para][r.sent + 1]) continue;
    used[r.para][r.sent] = used[r.para][r.sent + 1] = true;
    out.push_back(fuse(corpus[r.para][r.sent], corpus[r.para][r.sent + 1], evidence));
  }
  if (out.size() < spec.runon_count) {
    throw InsufficientCorpus("corpus yields only " + std::to_string(out.size()) +
                             " disjoint candidate pairs; " +
                             std::to_string(spec.runon_count) + " run-ons requested");
  }

  std::vector<Ref> singles;
  for (std::size_t p = 0; p < corpus.size(); ++p) {
    for (std::size_t i = 0; i < corpus[p].size(); ++i) {
      if (!used[p][i] && is_clean_sentence(corpus[p][i])) singles.push_back({p, i});
    }
  }
  if (singles.size() < spec.nonrunon_count) {
    throw InsufficientCorpus("corpus has only " + std::to_string(singles.size()) +
                             " unused clean sentences; " +
                             std::to_string(spec.nonrunon_count) + " negatives requested");
  }
  rng.shuffle(std::span<Ref>(singles));
  for (std::size_t k = 0; k < spec.nonrunon_count; ++k) {
    out.push_back(label_negative(corpus[singles[k].para][singles[k].sent]));
  }

  rng.shuffle(std::span<LabeledSequence>(out));
  return out;
}

std::vector<LabeledSequence> downsample_runons(std::span<const LabeledSequence> data,
                                               Fraction target, std::uint64_t seed) {
  if (target.num <= 0 || target.den <= 0 || target.num > target.den) {
    throw InvalidArgument("target run-on fraction must lie in (0, 1]");
  }
  std::vector<std::size_t> runons;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].is_runon()) runons.push_back(i);
  }
  const auto r = static_cast<std::int64_t>(runons.size());
  const auto n = static_cast<std::int64_t>(data.size()) - r;
  const Fraction current{r, std::max<std::int64_t>(r + n, 1)};
  if (target > current) {
    throw FractionTooHigh("target run-on fraction " + std::to_string(target.value()) +
                          " exceeds the current fraction " + std::to_string(current.value()));
  }

  // keep/(keep + n) = p/q  =>  keep = p*n/(q - p), rounded half up.
  std::int64_t keep = r;
  if (target.num < target.den) {
    const auto numer = static_cast<__int128>(target.num) * n;
    const auto denom = static_cast<__int128>(target.den - target.num);
    keep = static_cast<std::int64_t>((2 * numer + denom) / (2 * denom));
  }
  keep = std::min(keep, r);

  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(runons));
  std::vector<bool> drop(data.size(), false);
  for (std::size_t k = static_cast<std::size_t>(keep); k < runons.size(); ++k) drop[runons[k]] = true;

  std::vector<LabeledSequence> out;
  out.reserve(static_cast<std::size_t>(n + keep));
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!drop[i]) out.push_back(data[i]);
  }
  return out;
}

std::vector<std::vector<std::string>> split_at_periods(const LabeledSequence& seq) {
  std::vector<std::vector<std::string>> out(1);
  bool capitalize_next = false;
  for (std::size_t i = 0; i < seq.sentence.size(); ++i) {
    const auto& w = seq.sentence.tokens[i].surface();
    out.back().push_back(capitalize_next ? text::upper_first(w) : w);
    capitalize_next = false;
    if (seq.labels[i] == GapLabel::kPeriod) {
      out.back().push_back(".");
      out.emplace_back();
      capitalize_next = true;
    }
  }
  if (out.back().empty()) out.pop_back();
  return out;
}

// --- I/O ---------------------------------------------------------------------

namespace {

bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

bool is_blank(std::string_view line) { return text::trim(line).empty(); }

}  // namespace

std::vector<Paragraph> read_corpus(std::istream& text_in, std::istream* parses,
                                   const std::string& name) {
  std::vector<Paragraph> out(1);
  std::string line;
  std::string tree_line;
  std::size_t lineno = 0;
  while (read_line(text_in, line)) {
    ++lineno;
    const bool have_tree = parses != nullptr && read_line(*parses, tree_line);
    if (parses != nullptr && !have_tree) {
      throw FormatError(name, lineno, "parse file ended early");
    }
    if (is_blank(line)) {
      if (have_tree && !is_blank(tree_line)) {
        throw FormatError(name, lineno, "paragraph break not mirrored in the parse file");
      }
      if (!out.back().empty()) out.emplace_back();
      continue;
    }
    const auto fields = text::split_fields(line, '\t');
    if (fields.size() > 2) throw FormatError(name, lineno, "expected at most two tab-separated columns");
    try {
      AnnotatedSentence s = make_sentence(fields[0], fields.size() == 2 ? fields[1] : std::string_view{});
      s.source_id = name + ":" + std::to_string(lineno);
      if (have_tree) {
        const auto t = text::trim(tree_line);
        if (t.empty()) throw FormatError(name, lineno, "missing parse line (use '_' for none)");
        if (t != "_") {
          s.parse = ParseTree::parse(t);
          s.validate();
        }
      }
      out.back().push_back(std::move(s));
    } catch (const FormatError&) {
      throw;
    } catch (const Error& e) {
      throw FormatError(name, lineno, e.what());
    }
  }
  if (out.back().empty()) out.pop_back();
  return out;
}

void write_corpus(std::ostream& text_out, std::ostream* parses,
                  std::span<const Paragraph> corpus) {
  for (std::size_t p = 0; p < corpus.size(); ++p) {
    if (p > 0) {
      text_out << '\n';
      if (parses != nullptr) *parses << '\n';
    }
    for (const auto& s : corpus[p]) {
      text_out << text::join(s.surfaces(), " ");
      if (s.has_pos()) {
        text_out << '\t';
        for (std::size_t i = 0; i < s.tokens.size(); ++i) {
          text_out << (i ? " " : "") << *s.tokens[i].pos();
        }
      }
      text_out << '\n';
      if (parses != nullptr) *parses << (s.parse ? s.parse->to_string() : "_") << '\n';
    }
  }
}

std::vector<LabeledSequence> read_labeled(std::istream& in, const std::string& name) {
  std::vector<LabeledSequence> out;
  LabeledSequence cur;
  std::size_t start_line = 0;
  std::size_t lineno = 0;
  auto flush = [&] {
    if (cur.labels.empty()) return;
    cur.sentence.source_id = name + ":" + std::to_string(start_line);
    try {
      cur.validate();
    } catch (const Error& e) {
      throw FormatError(name, start_line, e.what());
    }
    out.push_back(std::move(cur));
    cur = LabeledSequence{};
  };
  std::string line;
  while (read_line(in, line)) {
    ++lineno;
    if (is_blank(line)) {
      flush();
      continue;
    }
    const auto fields = text::split_fields(line, '\t');
    if (fields.size() != 2 && fields.size() != 3) {
      throw FormatError(name, lineno, "expected surface<TAB>POS<TAB>label");
    }
    const auto label = parse_label(fields.back());
    if (!label) throw FormatError(name, lineno, "unknown label '" + fields.back() + "'");
    std::optional<std::string> pos;
    if (fields.size() == 3 && fields[1] != "_" && !fields[1].empty()) pos = fields[1];
    if (cur.labels.empty()) start_line = lineno;
    try {
      cur.sentence.tokens.emplace_back(fields[0], std::move(pos));
    } catch (const Error& e) {
      throw FormatError(name, lineno, e.what());
    }
    cur.labels.push_back(*label);
  }
  flush();
  return out;
}

void write_labeled(std::ostream& out, std::span<const LabeledSequence> data) {
  for (std::size_t k = 0; k < data.size(); ++k) {
    if (k > 0) out << '\n';
    const auto& seq = data[k];
    for (std::size_t i = 0; i < seq.sentence.size(); ++i) {
      const auto& t = seq.sentence.tokens[i];
      out << t.surface() << '\t' << (t.pos() ? *t.pos() : "_") << '\t'
          << label_code(seq.labels[i]) << '\n';
    }
  }
}

void read_sequence_parses(std::istream& in, std::span<LabeledSequence> data,
                          const std::string& name) {
  std::string line;
  std::size_t lineno = 0;
  for (auto& seq : data) {
    if (!read_line(in, line)) throw FormatError(name, lineno + 1, "parse file ended early");
    ++lineno;
    const auto t = text::trim(line);
    if (t == "_" || t.empty()) {
      seq.sentence.parse.reset();
      continue;
    }
    try {
      seq.sentence.parse = ParseTree::parse(t);
      seq.sentence.validate();
    } catch (const Error& e) {
      throw FormatError(name, lineno, e.what());
    }
  }
}

void write_sequence_parses(std::ostream& out, std::span<const LabeledSequence> data) {
  for (const auto& seq : data) {
    out << (seq.sentence.parse ? seq.sentence.parse->to_string() : "_") << '\n';
  }
}

}  // namespace runon
