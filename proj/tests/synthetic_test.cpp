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

#include "synthetic.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace runon::testing {
namespace {

TEST(SyntheticTest, DeterministicAndClean) {
  auto a = synthetic_corpus(5, 300);
  auto b = synthetic_corpus(5, 300);
  std::ostringstream ta, pa, tb, pb;
  write_corpus(ta, &pa, a);
  write_corpus(tb, &pb, b);
  EXPECT_EQ(ta.str(), tb.str());
  EXPECT_EQ(pa.str(), pb.str());
  auto flat = flatten(a);
  ASSERT_EQ(flat.size(), 300u);
  for (const auto& s : flat) {
    EXPECT_TRUE(is_clean_sentence(s)) << ta.str();
    ASSERT_TRUE(s.parse.has_value());
    EXPECT_EQ(s.parse->leaf_words(), s.surfaces());
    EXPECT_TRUE(s.tokens.front().is_capitalized());
  }
}

TEST(SyntheticTest, RoundTripsThroughCorpusFormat) {
  auto a = synthetic_corpus(9, 40);
  std::ostringstream t, p;
  write_corpus(t, &p, a);
  std::istringstream ti(t.str()), pi(p.str());
  auto back = read_corpus(ti, &pi);
  ASSERT_EQ(back.size(), a.size());
  EXPECT_EQ(flatten(back).size(), 40u);
}

TEST(SyntheticTest, DatasetHasRequestedShape) {
  auto d = synthetic_dataset(3, 25, 25);
  ASSERT_EQ(d.size(), 50u);
  std::size_t runons = 0;
  for (const auto& s : d) {
    runons += s.is_runon();
    EXPECT_TRUE(s.sentence.parse.has_value());
  }
  EXPECT_EQ(runons, 25u);
}

}  // namespace
}  // namespace runon::testing
