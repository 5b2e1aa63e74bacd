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

#include "runon/features.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>

#include "runon/error.hpp"
#include "runon/text.hpp"

namespace runon {

std::string AncestorPair::kind() const {
  return std::string(left_preterminal ? "preterminal" : "phrase") + "/" +
         (right_preterminal ? "preterminal" : "phrase");
}

AncestorPair highest_uncommon_ancestors(const ParseTree& tree, std::size_t i) {
  if (i + 1 >= tree.leaf_count()) {
    throw MalformedTree("no leaf after index " + std::to_string(i));
  }
  auto a = tree.path_from_root(tree.leaf(i));
  auto b = tree.path_from_root(tree.leaf(i + 1));
  std::size_t d = 0;
  while (d < a.size() && d < b.size() && a[d] == b[d]) ++d;
  // d indexes the first differing node; both paths are longer than d since
  // distinct leaves cannot be ancestors of one another.
  AncestorPair out;
  out.left = tree.node(a[d]).label;
  out.right = tree.node(b[d]).label;
  out.left_preterminal = tree.is_preterminal(a[d]) || tree.is_leaf(a[d]);
  out.right_preterminal = tree.is_preterminal(b[d]) || tree.is_leaf(b[d]);
  return out;
}

namespace {

std::string fraction_bucket(std::size_t k, std::size_t n) {
  double x = static_cast<double>(k) / static_cast<double>(n);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.1f", std::floor(x * 10.0 + 0.5) / 10.0);
  return buf;
}

}  // namespace

FeatureSequence featurize(const AnnotatedSentence& sentence, const NgramModel* lm) {
  sentence.validate();
  const std::size_t n = sentence.size();
  const auto surfaces = sentence.surfaces();
  std::optional<GapScorer> scorer;
  if (lm != nullptr) scorer.emplace(*lm, surfaces);

  FeatureSequence out;
  out.rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Token& tok = sentence.tokens[i];
    const bool last = i + 1 == n;
    FeatureRow row(kNumColumns);
    row[kColToken] = tok.surface();
    row[kColPos] = tok.pos().value_or("NA");
    row[kColCap] = tok.is_capitalized() ? "True" : "False";
    row[kColIndex] = std::to_string(i);
    row[kColRemaining] = std::to_string(n - i - 1);
    row[kColFraction] = fraction_bucket(i, n);
    if (scorer && !last) {
      auto flags = scorer->kgram_flags(i);
      row[kColKgram1] = kgram_flag_name(flags[0]);
      row[kColKgram2] = kgram_flag_name(flags[1]);
      row[kColKgram3] = kgram_flag_name(flags[2]);
      row[kColPerplexity] = scorer->perplexity_decreases(i) ? "1" : "0";
    } else {
      row[kColKgram1] = row[kColKgram2] = row[kColKgram3] = "na";
      row[kColPerplexity] = "na";
    }
    if (last) {
      row[kColAncLeft] = row[kColAncRight] = "EOS";
      row[kColAncKind] = "EOS";
    } else if (sentence.parse) {
      auto hua = highest_uncommon_ancestors(*sentence.parse, i);
      row[kColAncLeft] = hua.left;
      row[kColAncRight] = hua.right;
      row[kColAncKind] = hua.kind();
    } else {
      row[kColAncLeft] = row[kColAncRight] = row[kColAncKind] = kNoParse;
    }
    out.rows.push_back(std::move(row));
  }
  out.labels.assign(n, GapLabel::kSpace);
  return out;
}

FeatureSequence featurize(const LabeledSequence& seq, const NgramModel* lm) {
  seq.validate();
  FeatureSequence out = featurize(seq.sentence, lm);
  out.labels = seq.labels;
  return out;
}

void write_feature_file(std::ostream& out, std::span<const FeatureSequence> data) {
  for (const auto& seq : data) {
    for (std::size_t i = 0; i < seq.rows.size(); ++i) {
      for (const auto& col : seq.rows[i]) out << col << '\t';
      out << (seq.labels.at(i) == GapLabel::kPeriod ? "PERIOD" : "SPACE") << '\n';
    }
    out << '\n';
  }
}

std::vector<FeatureSequence> read_feature_file(std::istream& in, const std::string& name) {
  std::vector<FeatureSequence> out;
  FeatureSequence cur;
  std::size_t width = 0;
  std::size_t lineno = 0;
  std::string line;
  auto flush = [&] {
    if (!cur.rows.empty()) out.push_back(std::move(cur));
    cur = {};
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) {
      flush();
      continue;
    }
    auto fields = text::split(line, '\t');
    if (fields.size() == 1) fields = text::split(line, ' ');
    if (fields.size() < 2) throw FormatError(name, lineno, "expected columns and a label");
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      throw FormatError(name, lineno,
                        "expected " + std::to_string(width) + " columns, got " +
                            std::to_string(fields.size()));
    }
    auto label = parse_label(fields.back());
    if (!label) throw FormatError(name, lineno, "bad label '" + fields.back() + "'");
    fields.pop_back();
    cur.rows.push_back(std::move(fields));
    cur.labels.push_back(*label);
  }
  flush();
  return out;
}

TemplateSet::TemplateSet(std::vector<FeatureTemplate> templates)
    : templates_(std::move(templates)) {
  for (const auto& t : templates_) {
    if (t.name.empty()) throw InvalidArgument("template without a name");
  }
}

TemplateSet TemplateSet::defaults() {
  std::vector<FeatureTemplate> t;
  // Row i describes the gap between token i and token i + 1, so offsets -2..+3
  // cover tokens i-2 .. i+3.
  const std::pair<Column, const char*> windowed[] = {
      {kColToken, "w"}, {kColPos, "p"}, {kColCap, "c"}};
  for (auto [col, tag] : windowed) {
    for (int d = -2; d <= 3; ++d) {
      t.push_back({std::string(tag) + "[" + std::to_string(d) + "]", {{d, col}}});
    }
    for (int d = -2; d <= 2; ++d) {
      t.push_back({std::string(tag) + "[" + std::to_string(d) + "," + std::to_string(d + 1) + "]",
                   {{d, col}, {d + 1, col}}});
    }
    for (int d = -2; d <= 1; ++d) {
      t.push_back({std::string(tag) + "[" + std::to_string(d) + ".." + std::to_string(d + 2) + "]",
                   {{d, col}, {d + 1, col}, {d + 2, col}}});
    }
  }
  t.push_back({"p[0]c[1]", {{0, kColPos}, {1, kColCap}}});
  t.push_back({"w[0]c[1]", {{0, kColToken}, {1, kColCap}}});
  t.push_back({"frac", {{0, kColFraction}}});
  t.push_back({"rem", {{0, kColRemaining}}});
  t.push_back({"k1", {{0, kColKgram1}}});
  t.push_back({"k2", {{0, kColKgram2}}});
  t.push_back({"k3", {{0, kColKgram3}}});
  t.push_back({"k123", {{0, kColKgram1}, {0, kColKgram2}, {0, kColKgram3}}});
  t.push_back({"ppl", {{0, kColPerplexity}}});
  t.push_back({"ppl.k1", {{0, kColPerplexity}, {0, kColKgram1}}});
  t.push_back({"hl", {{0, kColAncLeft}}});
  t.push_back({"hr", {{0, kColAncRight}}});
  t.push_back({"hlr", {{0, kColAncLeft}, {0, kColAncRight}}});
  t.push_back({"hk", {{0, kColAncKind}}});
  t.push_back({"hlr.hk", {{0, kColAncLeft}, {0, kColAncRight}, {0, kColAncKind}}});
  t.push_back({"bias", {}});
  return TemplateSet(std::move(t));
}

std::vector<std::string> TemplateSet::expand(std::span<const FeatureRow> rows,
                                             std::size_t row) const {
  std::vector<std::string> out;
  out.reserve(templates_.size());
  const auto n = static_cast<long>(rows.size());
  for (const auto& t : templates_) {
    std::string f = t.name;
    f += '=';
    for (std::size_t k = 0; k < t.cells.size(); ++k) {
      if (k) f += '/';
      long r = static_cast<long>(row) + t.cells[k].first;
      if (r < 0) {
        f += "BOS";
      } else if (r >= n) {
        f += "EOS";
      } else {
        const auto& cols = rows[static_cast<std::size_t>(r)];
        std::size_t c = t.cells[k].second;
        f += c < cols.size() ? cols[c] : std::string("NA");
      }
    }
    out.push_back(std::move(f));
  }
  return out;
}

std::string TemplateSet::serialize(const FeatureTemplate& t) const {
  std::string s = t.name + "\t";
  for (std::size_t k = 0; k < t.cells.size(); ++k) {
    if (k) s += ',';
    s += std::to_string(t.cells[k].first) + ":" + std::to_string(t.cells[k].second);
  }
  return s;
}

FeatureTemplate TemplateSet::parse(std::string_view line) {
  auto fields = text::split_fields(line, '\t');
  if (fields.size() != 2 || fields[0].empty()) {
    throw FormatError("bad template line '" + std::string(line) + "'");
  }
  FeatureTemplate t{fields[0], {}};
  for (const auto& cell : text::split(fields[1], ',')) {
    auto parts = text::split_fields(cell, ':');
    if (parts.size() != 2) throw FormatError("bad template cell '" + cell + "'");
    try {
      t.cells.emplace_back(std::stoi(parts[0]), static_cast<std::size_t>(std::stoul(parts[1])));
    } catch (const std::logic_error&) {
      throw FormatError("bad template cell '" + cell + "'");
    }
  }
  return t;
}

FeatureVector extract_features(const GapContext& ctx, const NgramModel& lm) {
  if (ctx.gap >= ctx.size()) throw InvalidArgument("gap index out of range");
  const TemplateSet templates = TemplateSet::defaults();
  FeatureSequence seq = featurize(ctx.sentence, &lm);
  auto strings = templates.expand(seq.rows, ctx.gap);
  FeatureVector out;
  out.reserve(strings.size());
  for (std::size_t k = 0; k < strings.size(); ++k) {
    auto eq = strings[k].find('=');
    out.push_back({k, strings[k].substr(eq + 1)});
  }
  return out;
}

}  // namespace runon
