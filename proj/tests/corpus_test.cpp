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

#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

#include "runon/error.hpp"
#include "runon/random.hpp"
#include "runon/text.hpp"

namespace runon {
namespace {

constexpr const char* kLifeA = "This shows the rising of life expectancies .";
constexpr const char* kLifeB = "It is an achievement and it is also a challenge .";
constexpr const char* kIlliterateA = "But the illiterate will not stay illiterate always .";
constexpr const char* kIlliterateB =
    "If they put an effort to improve and are given a chance for good education , "
    "they can still develop into a group of productive Singaporeans .";

std::string render(const LabeledSequence& seq) {
  std::string out;
  for (std::size_t i = 0; i < seq.sentence.size(); ++i) {
    if (i) out += ' ';
    out += seq.sentence.tokens[i].surface();
    out += '/';
    out += label_code(seq.labels[i]);
  }
  return out;
}

// Random clean-ish paragraphs: lowercase words, capitalized first word,
// terminal period, length 3..12.
std::vector<Paragraph> random_corpus(std::uint64_t seed, std::size_t paragraphs) {
  Rng rng(seed);
  static const std::vector<std::string> kWords = {"the", "cat", "sat", "on", "mat", "dog",
                                                  "ran", "a", "big", "red", "house", "we"};
  std::vector<Paragraph> corpus;
  for (std::size_t p = 0; p < paragraphs; ++p) {
    Paragraph para;
    const auto n = 1 + rng.below(6);
    for (std::size_t s = 0; s < n; ++s) {
      const auto len = 3 + rng.below(10);
      std::string line;
      for (std::size_t k = 0; k < len; ++k) {
        std::string w = kWords[rng.below(kWords.size())];
        if (k == 0) w = text::upper_first(w);
        line += w + ' ';
      }
      line += rng.bernoulli(0.1) ? ";" : ".";
      auto sent = make_sentence(line);
      sent.source_id = "p" + std::to_string(p) + "s" + std::to_string(s);
      para.push_back(std::move(sent));
    }
    corpus.push_back(std::move(para));
  }
  return corpus;
}

TEST(TokenTest, CapitalizationIsDerivedFromSurface) {
  EXPECT_TRUE(Token("We").is_capitalized());
  EXPECT_FALSE(Token("we").is_capitalized());
  EXPECT_FALSE(Token("3rd").is_capitalized());
  EXPECT_THROW(Token(""), InvalidArgument);
  EXPECT_THROW(Token("a b"), InvalidArgument);
}

TEST(SentenceTest, ParseMustAlignWithTokens) {
  EXPECT_NO_THROW(make_sentence("we do", "PRP VBP", "(S (NP (PRP we)) (VP (VBP do)))"));
  EXPECT_THROW(make_sentence("we do", "", "(S (NP (PRP we)))"), MalformedTree);
  EXPECT_THROW(make_sentence("we do", "", "(S (NP (PRP they)) (VP (VBP do)))"), MalformedTree);
}

TEST(CandidatePairTest, Examples) {
  const auto seven = make_sentence("The cat sat on the mat .");
  const auto twelve = make_sentence("The dog ran to the big red house on the corner .");
  ASSERT_EQ(seven.size(), 7u);
  ASSERT_EQ(twelve.size(), 12u);
  EXPECT_TRUE(is_candidate_pair(seven, twelve));
  EXPECT_FALSE(is_candidate_pair(make_sentence("The cat sat ."), twelve));
  EXPECT_FALSE(is_candidate_pair(make_sentence("See http://x.com for the details ."), twelve));
  EXPECT_FALSE(is_candidate_pair(seven, make_sentence("See WWW.x.com for the details .")));
}

TEST(CandidatePairTest, LengthBoundsAreInclusive) {
  auto sentence_of = [](std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i + 1 < n; ++i) s += "w ";
    return make_sentence(s + ".");
  };
  const auto ok = sentence_of(7);
  EXPECT_TRUE(is_candidate_pair(sentence_of(5), ok));
  EXPECT_TRUE(is_candidate_pair(sentence_of(50), ok));
  EXPECT_FALSE(is_candidate_pair(sentence_of(51), ok));
}

TEST(CandidatePairTest, SpecialPunctuation) {
  const auto ok = make_sentence("The cat sat on the mat .");
  for (const char* bad : {"He said : yes it is .", "He said ; yes it is .", "He said - yes it is .",
                          "He said -- yes it is .", "He said \xE2\x80\x94 yes it is .",
                          "He said ... yes it is .", "He said \xE2\x80\xA6 yes it is ."}) {
    EXPECT_FALSE(is_candidate_pair(make_sentence(bad), ok)) << bad;
  }
  EXPECT_TRUE(is_candidate_pair(make_sentence("It is a well-known fact ."), ok));
}

TEST(FuseTest, LifeExpectancies) {
  const auto seq = fuse(make_sentence(kLifeA), make_sentence(kLifeB));
  EXPECT_EQ(render(seq),
            "This/S shows/S the/S rising/S of/S life/S expectancies/P it/S is/S an/S "
            "achievement/S and/S it/S is/S also/S a/S challenge/S ./S");
  EXPECT_TRUE(seq.is_runon());
  EXPECT_NO_THROW(seq.validate());
}

TEST(FuseTest, Illiterate) {
  const auto seq = fuse(make_sentence(kIlliterateA), make_sentence(kIlliterateB));
  EXPECT_EQ(text::detokenize(seq.sentence.surfaces()),
            "But the illiterate will not stay illiterate always if they put an effort to "
            "improve and are given a chance for good education, they can still develop into "
            "a group of productive Singaporeans.");
  EXPECT_EQ(seq.period_count(), 1u);
  EXPECT_EQ(seq.labels[7], GapLabel::kPeriod);
}

TEST(FuseTest, ProperNounKeepsCase) {
  const auto a = make_sentence("He met Mary .", "PRP VBD NNP .");
  const auto b = make_sentence("Mary left .", "NNP VBD .");
  const auto seq = fuse(a, b);
  EXPECT_EQ(render(seq), "He/S met/S Mary/P Mary/S left/S ./S");
}

TEST(FuseTest, CaseEvidenceWithoutTags) {
  std::vector<Paragraph> corpus = {
      {make_sentence("Mary saw it ."), make_sentence("Then it left .")},
      {make_sentence("He said then it left .")}};
  const CaseEvidence evidence(corpus);
  EXPECT_FALSE(evidence.seen_lowercase_midsentence("Mary"));
  EXPECT_TRUE(evidence.seen_lowercase_midsentence("Then"));
  const auto a = make_sentence("He met her .");
  EXPECT_EQ(fuse(a, make_sentence("Mary left ."), &evidence).sentence.tokens[3].surface(), "Mary");
  EXPECT_EQ(fuse(a, make_sentence("Then left ."), &evidence).sentence.tokens[3].surface(), "then");
}

TEST(FuseTest, MissingTerminalPunctuation) {
  EXPECT_THROW(fuse(make_sentence("He met Mary"), make_sentence("She left .")),
               MissingTerminalPunctuation);
  EXPECT_NO_THROW(fuse(make_sentence("He met Mary !"), make_sentence("She left .")));
}

TEST(FuseTest, MergesParseTrees) {
  const auto a = make_sentence("we left .", "PRP VBD .", "(ROOT (S (NP (PRP we)) (VP (VBD left)) (. .)))");
  const auto b = make_sentence("They stayed .", "PRP VBD .",
                               "(ROOT (S (NP (PRP They)) (VP (VBD stayed)) (. .)))");
  const auto seq = fuse(a, b);
  ASSERT_TRUE(seq.sentence.parse.has_value());
  EXPECT_EQ(seq.sentence.parse->to_string(),
            "(ROOT (S (NP (PRP we)) (VP (VBD left)) (NP (PRP they)) (VP (VBD stayed)) (. .)))");
  EXPECT_NO_THROW(seq.validate());
}

TEST(LabelNegativeTest, AllSpace) {
  const auto one = label_negative(make_sentence("Yes"));
  EXPECT_EQ(one.labels, std::vector<GapLabel>{GapLabel::kSpace});
  EXPECT_FALSE(one.is_runon());
  for (const char* s : {kLifeA, kLifeB}) {
    const auto seq = label_negative(make_sentence(s));
    EXPECT_EQ(seq.labels.size(), seq.sentence.size());
    EXPECT_EQ(seq.period_count(), 0u);
  }
}

TEST(RoundTripProperty, SplittingAFusedPairRestoresBothSentences) {
  const auto corpus = random_corpus(11, 300);
  std::size_t checked = 0;
  for (const auto& para : corpus) {
    for (std::size_t i = 0; i + 1 < para.size(); ++i) {
      if (!is_candidate_pair(para[i], para[i + 1]) ||
          !is_terminal_punctuation(para[i].tokens.back().surface())) {
        continue;
      }
      const auto seq = fuse(para[i], para[i + 1]);
      ASSERT_EQ(seq.period_count(), 1u);
      const auto parts = split_at_periods(seq);
      ASSERT_EQ(parts.size(), 2u);
      auto a = para[i].surfaces();
      a.pop_back();
      auto first = parts[0];
      ASSERT_EQ(first.back(), ".");
      first.pop_back();
      EXPECT_EQ(first, a);
      EXPECT_EQ(parts[1], para[i + 1].surfaces());
      ++checked;
    }
  }
  EXPECT_GT(checked, 100u);
}

TEST(BuildDatasetTest, CountsFiltersAndDisjointness) {
  const auto corpus = random_corpus(5, 400);
  const DatasetSpec spec{60, 140, 42};
  const auto data = build_dataset(corpus, spec);
  ASSERT_EQ(data.size(), 200u);
  std::size_t runons = 0;
  std::multiset<std::string> sources;
  for (const auto& seq : data) {
    EXPECT_NO_THROW(seq.validate());
    if (seq.is_runon()) {
      ++runons;
      EXPECT_EQ(seq.period_count(), 1u);
    } else {
      EXPECT_TRUE(is_clean_sentence(seq.sentence));
    }
    for (const auto& id : text::split(seq.sentence.source_id, '+')) sources.insert(id);
  }
  EXPECT_EQ(runons, 60u);
  const std::set<std::string> unique(sources.begin(), sources.end());
  EXPECT_EQ(unique.size(), sources.size());
  // Run-on halves must each satisfy the clean-sentence predicate.
  std::map<std::string, const AnnotatedSentence*> by_id;
  for (const auto& para : corpus) {
    for (const auto& s : para) by_id[s.source_id] = &s;
  }
  for (const auto& seq : data) {
    for (const auto& id : text::split(seq.sentence.source_id, '+')) {
      EXPECT_TRUE(is_clean_sentence(*by_id.at(id))) << id;
    }
  }
}

TEST(BuildDatasetTest, Deterministic) {
  const auto corpus = random_corpus(5, 200);
  const DatasetSpec spec{30, 70, 9};
  std::ostringstream a;
  std::ostringstream b;
  write_labeled(a, build_dataset(corpus, spec));
  write_labeled(b, build_dataset(corpus, spec));
  EXPECT_EQ(a.str(), b.str());
  std::ostringstream c;
  write_labeled(c, build_dataset(corpus, DatasetSpec{30, 70, 10}));
  EXPECT_NE(a.str(), c.str());
}

TEST(BuildDatasetTest, NegativesOnly) {
  const auto corpus = random_corpus(5, 100);
  const auto data = build_dataset(corpus, DatasetSpec{0, 25, 1});
  ASSERT_EQ(data.size(), 25u);
  for (const auto& seq : data) EXPECT_FALSE(seq.is_runon());
}

TEST(BuildDatasetTest, InsufficientCorpus) {
  const auto corpus = random_corpus(5, 10);
  EXPECT_THROW(build_dataset(corpus, DatasetSpec{1000, 0, 1}), InsufficientCorpus);
  EXPECT_THROW(build_dataset(corpus, DatasetSpec{0, 1000, 1}), InsufficientCorpus);
}

TEST(DatasetSpecTest, TrainingSplitShare) {
  const auto spec = DatasetSpec::from_fraction(4'510'000, Fraction::parse("2760000/4510000"), 7);
  EXPECT_EQ(spec.runon_count, 2'760'000u);
  EXPECT_EQ(spec.nonrunon_count, 1'750'000u);
  EXPECT_NEAR(spec.target_runon_fraction().value(), 0.61, 0.005);
  const auto ten = DatasetSpec::from_fraction(20'000, Fraction::parse("10%"), 7);
  EXPECT_EQ(ten.runon_count, 2'000u);
}

TEST(FractionTest, Parse) {
  const auto a = Fraction::parse("11.46%");
  EXPECT_EQ(a.num, 1146);
  EXPECT_EQ(a.den, 10000);
  const auto b = Fraction::parse("0.1");
  EXPECT_EQ(b.num, 1);
  EXPECT_EQ(b.den, 10);
  const auto c = Fraction::parse("560/56910");
  EXPECT_EQ(c.num, 560);
  EXPECT_THROW(Fraction::parse("x"), InvalidArgument);
  EXPECT_THROW(Fraction::parse("1/0"), InvalidArgument);
}

std::vector<LabeledSequence> synthetic_split(std::size_t runons, std::size_t negatives) {
  const auto neg = label_negative(make_sentence("They left ."));
  auto pos = neg;
  pos.labels[0] = GapLabel::kPeriod;
  // Run-ons spread evenly so order preservation is observable.
  std::vector<LabeledSequence> data(runons + negatives, neg);
  for (std::size_t k = 0; k < runons; ++k) data[k * data.size() / runons] = pos;
  return data;
}

std::size_t count_runons(std::span<const LabeledSequence> data) {
  return static_cast<std::size_t>(std::count_if(data.begin(), data.end(),
                                                [](const auto& s) { return s.is_runon(); }));
}

TEST(DownsampleTest, NoisyTestSetToOnePercent) {
  const auto data = synthetic_split(5'600, 56'350);
  // 560 run-ons print as "1%"; the exact share is 560/56910.
  const auto exact = downsample_runons(data, Fraction{560, 56'910}, 3);
  EXPECT_EQ(count_runons(exact), 560u);
  EXPECT_EQ(exact.size(), 56'910u);
  // A literal 1% target needs 569 run-ons against 56,350 negatives.
  const auto literal = downsample_runons(data, Fraction{1, 100}, 3);
  EXPECT_EQ(count_runons(literal), 569u);
  EXPECT_EQ(literal.size() - 569u, 56'350u);
}

TEST(DownsampleTest, IdentityAtCurrentFraction) {
  const auto data = synthetic_split(28'232, 218'076);
  const auto out = downsample_runons(data, Fraction{28'232, 246'308}, 3);
  ASSERT_EQ(out.size(), data.size());
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i].labels, data[i].labels);
}

TEST(DownsampleTest, FractionTooHigh) {
  const auto data = synthetic_split(10, 90);
  EXPECT_THROW(downsample_runons(data, Fraction{11, 100}, 1), FractionTooHigh);
  EXPECT_THROW(downsample_runons(data, Fraction{0, 100}, 1), InvalidArgument);
}

TEST(DownsampleTest, FractionAccuracyProperty) {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t r = 1 + rng.below(400);
    const std::size_t n = rng.below(2000);
    const auto data = synthetic_split(r, n);
    const Fraction current{static_cast<std::int64_t>(r), static_cast<std::int64_t>(r + n)};
    const Fraction target{static_cast<std::int64_t>(1 + rng.below(1000)), 1000};
    if (target > current) continue;
    const auto out = downsample_runons(data, target, trial);
    const auto kept = count_runons(out);
    EXPECT_EQ(out.size() - kept, n);
    const double achieved = static_cast<double>(kept) / static_cast<double>(out.size());
    EXPECT_LE(std::abs(achieved - target.value()), 1.0 / static_cast<double>(out.size()) + 1e-12);
  }
}

TEST(LabeledIoTest, RoundTripAndErrors) {
  const auto corpus = random_corpus(3, 100);
  const auto data = build_dataset(corpus, DatasetSpec{20, 20, 4});
  std::ostringstream out;
  write_labeled(out, data);
  std::istringstream in(out.str());
  const auto back = read_labeled(in);
  ASSERT_EQ(back.size(), data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(back[i].labels, data[i].labels);
    EXPECT_EQ(back[i].sentence.tokens, data[i].sentence.tokens);
  }

  std::istringstream bad("the\tDT\tS\ncat\tNN\tQ\n");
  try {
    read_labeled(bad, "bad.txt");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.txt:2"), std::string::npos);
  }
}

TEST(CorpusIoTest, ReadsParagraphsTagsAndParses) {
  std::istringstream text("We left .\tPRP VBD .\nThey stayed .\tPRP VBD .\n\nOk .\n");
  std::istringstream trees("(S (NP (PRP We)) (VP (VBD left)) (. .))\n_\n\n_\n");
  const auto corpus = read_corpus(text, &trees, "c.txt");
  ASSERT_EQ(corpus.size(), 2u);
  ASSERT_EQ(corpus[0].size(), 2u);
  EXPECT_TRUE(corpus[0][0].parse.has_value());
  EXPECT_FALSE(corpus[0][1].parse.has_value());
  EXPECT_EQ(*corpus[0][1].tokens[0].pos(), "PRP");
  EXPECT_FALSE(corpus[1][0].has_pos());

  std::ostringstream t2;
  std::ostringstream p2;
  write_corpus(t2, &p2, corpus);
  std::istringstream t3(t2.str());
  std::istringstream p3(p2.str());
  const auto again = read_corpus(t3, &p3);
  ASSERT_EQ(again.size(), 2u);
  EXPECT_EQ(again[0][0].parse->to_string(), corpus[0][0].parse->to_string());

  std::istringstream mismatch("We left .\tPRP VBD\n");
  EXPECT_THROW(read_corpus(mismatch), FormatError);
}

}  // namespace
}  // namespace runon
