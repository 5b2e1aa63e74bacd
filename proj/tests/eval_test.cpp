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

#include "runon/eval.hpp"

#include <gtest/gtest.h>

#include <json.hpp>

#include "runon/error.hpp"
#include "runon/random.hpp"

namespace runon {
namespace {

constexpr GapLabel S = GapLabel::kSpace;
constexpr GapLabel P = GapLabel::kPeriod;

// Three-token sequences whose totals come to the requested counts.
void make_stream(int tp, int fp, int fn, std::vector<Labels>& pred, std::vector<Labels>& gold) {
  for (int i = 0; i < tp; ++i) {
    pred.push_back({P, S, S});
    gold.push_back({P, S, S});
  }
  for (int i = 0; i < fp; ++i) {
    pred.push_back({S, P, S});
    gold.push_back({S, S, S});
  }
  for (int i = 0; i < fn; ++i) {
    pred.push_back({S, S, S});
    gold.push_back({S, P, S});
  }
}

TEST(MetricTest, TableRowsRoundToPrintedValues) {
  EXPECT_EQ(format2(f05(0.84, 0.94)), "0.86");
  // Printed as 0.76 in the source table; 0.89 and 0.49 are themselves rounded.
  EXPECT_NEAR(f05(0.89, 0.49), 0.7650877, 1e-6);
  EXPECT_LT(f05(0.885, 0.485), 0.765);
  EXPECT_DOUBLE_EQ(f05(1.0, 1.0), 1.0);
  EXPECT_EQ(f05(0.0, 0.0), 0.0);
}

TEST(MetricTest, AgreesWithGenericFBeta) {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double p = rng.uniform();
    const double r = rng.uniform();
    EXPECT_NEAR(f05(p, r), f_beta(p, r, 0.5), 1e-12);
  }
}

TEST(MetricTest, StrictlyIncreasingInEachArgument) {
  Rng rng(4);
  for (int i = 0; i < 2000; ++i) {
    const double fixed = 0.01 + 0.99 * rng.uniform();
    const double a = 0.01 + 0.98 * rng.uniform();
    const double b = a + 0.001 + (0.99 - a) * rng.uniform() * 0.5;
    EXPECT_LT(f05(a, fixed), f05(b, fixed));
    EXPECT_LT(f05(fixed, a), f05(fixed, b));
  }
}

TEST(ScoreTest, CountsInsertions) {
  std::vector<Labels> pred = {{P, S, P, S}, {S, S}};
  std::vector<Labels> gold = {{P, P, S, S}, {S, S}};
  auto r = score(pred, gold);
  EXPECT_EQ(r.counts, (Counts{1, 1, 1}));
  EXPECT_DOUBLE_EQ(r.m.precision, 0.5);
  EXPECT_DOUBLE_EQ(r.m.recall, 0.5);
  EXPECT_DOUBLE_EQ(r.m.f05, 0.5);
}

TEST(ScoreTest, NoPredictionsGiveZeros) {
  std::vector<Labels> pred = {{S, S, S}};
  std::vector<Labels> gold = {{P, S, S}};
  auto r = score(pred, gold);
  EXPECT_EQ(r.m.precision, 0.0);
  EXPECT_EQ(r.m.recall, 0.0);
  EXPECT_EQ(r.m.f05, 0.0);
  EXPECT_EQ(format2(r.m.f05), "0.00");
}

TEST(ScoreTest, MisalignedStreamsThrow) {
  std::vector<Labels> a = {{S, S}};
  std::vector<Labels> b = {{S, S, S}};
  EXPECT_THROW(score(a, b), AlignmentError);
  std::vector<Labels> c = {{S, S}, {S}};
  EXPECT_THROW(score(a, c), AlignmentError);
}

TEST(ScoreTest, LabeledSequencesMustShareTokens) {
  LabeledSequence x;
  x.sentence.tokens = {Token("a"), Token("b")};
  x.labels = {S, S};
  LabeledSequence y = x;
  y.sentence.tokens[1] = Token("c");
  std::vector<LabeledSequence> px = {x};
  std::vector<LabeledSequence> py = {y};
  EXPECT_NO_THROW(score(px, px));
  EXPECT_THROW(score(px, py), AlignmentError);
}

TEST(ScoreTest, PermutationInvariantAndShardsMerge) {
  Rng rng(9);
  std::vector<Labels> pred;
  std::vector<Labels> gold;
  for (int i = 0; i < 300; ++i) {
    const std::size_t n = 1 + rng.below(12);
    Labels p(n);
    Labels g(n);
    for (std::size_t k = 0; k < n; ++k) {
      p[k] = rng.bernoulli(0.2) ? P : S;
      g[k] = rng.bernoulli(0.2) ? P : S;
    }
    pred.push_back(p);
    gold.push_back(g);
  }
  const Counts whole = score(pred, gold).counts;

  std::vector<std::size_t> order(pred.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<Labels> sp;
  std::vector<Labels> sg;
  for (std::size_t i : order) {
    sp.push_back(pred[i]);
    sg.push_back(gold[i]);
  }
  EXPECT_EQ(score(sp, sg).counts, whole);

  const std::size_t cut = 117;
  Counts merged = score(std::span(pred).first(cut), std::span(gold).first(cut)).counts;
  merged += score(std::span(pred).subspan(cut), std::span(gold).subspan(cut)).counts;
  EXPECT_EQ(merged, whole);
}

TEST(RandomBaselineTest, RateZeroAndOne) {
  std::vector<Labels> gold(50, Labels{P, S});
  auto none = random_baseline(gold, Fraction{0, 1}, 5);
  auto r0 = score(none, gold);
  EXPECT_EQ(r0.m.precision, 0.0);
  EXPECT_EQ(r0.m.recall, 0.0);
  auto all = random_baseline(gold, Fraction{1, 1}, 5);
  auto r1 = score(all, gold);
  EXPECT_DOUBLE_EQ(r1.m.precision, 1.0);
  EXPECT_DOUBLE_EQ(r1.m.recall, 1.0);
  EXPECT_THROW(random_baseline(gold, Fraction{3, 2}, 1), InvalidArgument);
}

TEST(RandomBaselineTest, DeterministicPerSeed) {
  std::vector<Labels> gold(200, Labels(10, S));
  EXPECT_EQ(random_baseline(gold, Fraction{1, 10}, 42), random_baseline(gold, Fraction{1, 10}, 42));
  EXPECT_NE(random_baseline(gold, Fraction{1, 10}, 42), random_baseline(gold, Fraction{1, 10}, 43));
}

TEST(RandomBaselineTest, MonteCarloMatchesClosedForm) {
  // Run-on-like corpus: 10% of sequences carry one PERIOD.
  Rng rng(17);
  std::vector<Labels> gold;
  for (int i = 0; i < 2000; ++i) {
    const std::size_t n = 6 + rng.below(20);
    Labels g(n, S);
    if (i % 10 == 0) g[1 + rng.below(n - 2)] = P;
    gold.push_back(g);
  }
  const Fraction rate{1, 10};
  const auto e = expected_random_score(gold, rate);
  double tp = 0.0;
  double fp = 0.0;
  double fn = 0.0;
  const int seeds = 60;
  for (int s = 0; s < seeds; ++s) {
    auto c = score(random_baseline(gold, rate, static_cast<std::uint64_t>(s)), gold).counts;
    tp += static_cast<double>(c.tp);
    fp += static_cast<double>(c.fp);
    fn += static_cast<double>(c.fn);
  }
  EXPECT_NEAR(tp / seeds, e.tp, 1.0);
  EXPECT_NEAR(fp / seeds, e.fp, 3.0);
  EXPECT_NEAR(fn / seeds, e.fn, 1.0);
  // At rate = prevalence the expected predicted and gold totals coincide, so P = R.
  EXPECT_NEAR(e.m.precision, e.m.recall, 1e-12);
}

TEST(BootstrapTest, DominanceGivesSmallP) {
  std::vector<Labels> gold;
  for (int i = 0; i < 100; ++i) gold.push_back({S, P, S, S});
  std::vector<Labels> good = gold;
  std::vector<Labels> bad(100, Labels{P, S, P, S});
  auto b = bootstrap_significance(good, bad, gold, 10000, 1);
  for (double p : b.p_value) EXPECT_LT(p, 0.01);
  EXPECT_GT(b.delta[2], 0.0);
}

TEST(BootstrapTest, IdenticalSystemsNeverWin) {
  std::vector<Labels> pred;
  std::vector<Labels> gold;
  make_stream(30, 10, 20, pred, gold);
  auto b = bootstrap_significance(pred, pred, gold, 1000, 2);
  for (double p : b.p_value) EXPECT_EQ(p, 1.0);
}

TEST(BootstrapTest, ReproducibleAndWorkerIndependent) {
  std::vector<Labels> pa;
  std::vector<Labels> gold;
  make_stream(60, 15, 25, pa, gold);
  std::vector<Labels> pb = pa;
  for (std::size_t i = 0; i < pb.size(); i += 7) pb[i] = Labels{S, S, S};
  auto a1 = bootstrap_significance(pa, pb, gold, 2000, 11, 1);
  auto a2 = bootstrap_significance(pa, pb, gold, 2000, 11, 1);
  auto a4 = bootstrap_significance(pa, pb, gold, 2000, 11, 4);
  EXPECT_EQ(a1.p_value, a2.p_value);
  EXPECT_EQ(a1.p_value, a4.p_value);
  EXPECT_EQ(a1.delta, a4.delta);
}

TEST(BootstrapTest, ConvergesAcrossSeeds) {
  std::vector<Labels> pa;
  std::vector<Labels> gold;
  make_stream(80, 20, 30, pa, gold);
  std::vector<Labels> pb = pa;
  // B drops two true positives and one false positive.
  pb[0] = Labels{S, S, S};
  pb[1] = Labels{S, S, S};
  pb[80] = Labels{S, S, S};
  auto x = bootstrap_significance(pa, pb, gold, 10000, 100, 4);
  auto y = bootstrap_significance(pa, pb, gold, 10000, 200, 4);
  for (int k = 0; k < 3; ++k) EXPECT_LT(std::abs(x.p_value[k] - y.p_value[k]), 0.02) << k;
}

TEST(BootstrapTest, OneDifferingSequenceOfAThousand) {
  Rng rng(23);
  std::vector<Labels> gold;
  for (int i = 0; i < 1000; ++i) {
    Labels g(8, S);
    if (rng.bernoulli(0.5)) g[3] = P;
    gold.push_back(g);
  }
  std::vector<Labels> pa = gold;
  std::vector<Labels> pb = gold;
  // A and B differ only on sequence 0, where A adds a false positive.
  pa[0][5] = P;
  auto b = bootstrap_significance(pa, pb, gold, 1000, 7);
  EXPECT_LT(b.delta[0], 0.0);
  EXPECT_EQ(b.delta[1], 0.0);
  EXPECT_EQ(b.p_value[1], 1.0);
  // B wins precision exactly when sequence 0 is drawn at least once.
  EXPECT_NEAR(b.p_value[0], 0.368, 0.05);
  EXPECT_DOUBLE_EQ(b.p_value[0], 0.397);
}

TEST(BootstrapTest, RejectsBadInput) {
  std::vector<Labels> g = {{S}};
  EXPECT_THROW(bootstrap_significance(g, g, g, 0, 1), InvalidArgument);
  std::vector<Labels> two = {{S}, {S}};
  EXPECT_THROW(bootstrap_significance(g, two, g, 10, 1), AlignmentError);
}

TEST(AlignTest, InsertedPeriodMapsToPrecedingGap) {
  std::vector<std::string> src = {"i", "went", "home", "it", "was", "late", "."};
  std::vector<std::string> sys = {"I", "went", "home", ".", "It", "was", "late", "."};
  EXPECT_EQ(align_external(src, sys), (Labels{S, S, P, S, S, S, S}));
}

TEST(AlignTest, ToleratesEditsAndOtherTerminators) {
  std::vector<std::string> src = {"we", "left", "early", "nobody", "noticed", "it", "."};
  std::vector<std::string> sys = {"We", "left", "early", "!", "Nobody", "saw", "it", "."};
  EXPECT_EQ(align_external(src, sys), (Labels{S, S, P, S, S, S, S}));
}

TEST(AlignTest, UnchangedTextHasNoPeriods) {
  std::vector<std::string> src = {"a", "b", "c"};
  EXPECT_EQ(align_external(src, src), (Labels{S, S, S}));
}

TEST(AlignTest, PoorAlignmentThrows) {
  std::vector<std::string> src = {"a", "b", "c", "d"};
  std::vector<std::string> sys = {"x", "y", "c"};
  EXPECT_THROW(align_external(src, sys), AlignmentError);
}

TEST(ReportTest, TextRowsUseTwoDecimals) {
  std::vector<Labels> pred;
  std::vector<Labels> gold;
  make_stream(1974, 376, 126, pred, gold);
  auto s2s = score(pred, gold, "roS2S", "FakeGiga");
  EXPECT_EQ(format2(s2s.m.precision) + " " + format2(s2s.m.recall) + " " + format2(s2s.m.f05), "0.84 0.94 0.86");
  std::vector<EvalReport> rs = {s2s};
  EXPECT_NE(report_text(rs).find("roS2S   0.84 0.94 0.86"), std::string::npos) << report_text(rs);
}

TEST(ReportTest, ExternallyScoredRow) {
  // Each source sentence is a run-on "a b c d" needing a period after b; the
  // system output comes from a file of corrected tokens.
  std::vector<std::string> src = {"a", "b", "c", "d"};
  std::vector<std::string> hit = {"a", "b", ".", "c", "d"};
  std::vector<std::string> wrong = {"a", ".", "b", "c", "d"};
  std::vector<Labels> pred;
  std::vector<Labels> gold;
  const Labels want = {S, P, S, S};
  for (int i = 0; i < 741; ++i) pred.push_back(align_external(src, hit)), gold.push_back(want);
  for (int i = 0; i < 209; ++i) pred.push_back(align_external(src, wrong)), gold.push_back({S, S, S, S});
  for (int i = 0; i < 559; ++i) pred.push_back(align_external(src, src)), gold.push_back(want);
  auto r = score(pred, gold, "Punctuator-RO", "FakeGiga");
  EXPECT_EQ(r.counts, (Counts{741, 209, 559}));
  std::vector<EvalReport> rs = {r};
  EXPECT_NE(report_text(rs).find("0.78 0.57 0.73"), std::string::npos) << report_text(rs);
}

TEST(ReportTest, CsvAndJsonFields) {
  EvalReport r;
  r.system = "roCRF";
  r.dataset = "FakeESL";
  r.counts = {3, 1, 2};
  r.m = metrics(r.counts);
  EvalReport q = r;
  q.p_value = 0.0123;
  std::vector<EvalReport> rs = {r, q};
  const std::string csv = report_csv(rs);
  EXPECT_EQ(csv,
            "system,dataset,tp,fp,fn,p,r,f05,p_value\n"
            "roCRF,FakeESL,3,1,2,0.75,0.60,0.71,\n"
            "roCRF,FakeESL,3,1,2,0.75,0.60,0.71,0.0123\n");
  auto j = nlohmann::json::parse(report_json(rs));
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[0]["tp"], 3);
  EXPECT_DOUBLE_EQ(j[0]["f05"].get<double>(), r.m.f05);
  EXPECT_FALSE(j[0].contains("p_value"));
  EXPECT_DOUBLE_EQ(j[1]["p_value"].get<double>(), 0.0123);
}

TEST(ReportTest, HalfUpRounding) {
  EXPECT_EQ(format2(0.125), "0.13");
  EXPECT_EQ(format2(0.005), "0.01");
  EXPECT_EQ(format2(0.0), "0.00");
  EXPECT_EQ(format2(1.0), "1.00");
}

}  // namespace
}  // namespace runon
