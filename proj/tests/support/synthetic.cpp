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

#include <array>
#include <string>

#include "runon/random.hpp"
#include "runon/text.hpp"

namespace runon::testing {
namespace {

using Words = std::vector<const char*>;

const Words kDet = {"the", "a", "this", "that", "every", "some", "the", "the", "a"};
const Words kNoun = {"dog",    "cat",    "man",    "woman",  "teacher", "student", "car",
                     "house",  "book",   "letter", "city",   "river",   "game",    "meeting",
                     "window", "friend", "doctor", "child",  "road",    "garden",  "farmer",
                     "train",  "storm",  "song",   "report", "bridge",  "market",  "boat",
                     "nurse",  "lawyer", "kitchen", "office", "island", "station", "picture"};
const Words kPlural = {"dogs", "cats", "people", "students", "cars", "books", "children",
                       "farmers", "workers", "boats", "nurses", "apples", "letters", "birds"};
const Words kAdj = {"old", "new", "big", "small", "red", "quiet", "happy", "cold",
                    "bright", "tired", "young", "strange", "empty", "heavy", "green"};
const Words kSubj = {"he", "she", "they", "we", "it", "I", "you"};
const Words kObj = {"him", "her", "them", "us", "it", "me", "you"};
const Words kProper = {"John", "Mary", "Paris", "London", "Anna", "Peter", "Tokyo",
                       "Smith", "Maria", "Berlin", "David", "Laura", "Chicago", "Sarah"};
// Verbs that always take an object.
const Words kTrans = {"saw", "found", "liked", "bought", "sold", "visited", "called",
                      "helped", "took", "carried", "built", "painted", "followed", "fixed"};
// Verbs whose object is optional.
const Words kOptional = {"read", "watched", "ate", "wrote", "cooked", "drove", "played",
                         "cleaned", "studied", "sang"};
const Words kIntrans = {"left", "arrived", "slept", "waited", "laughed", "stayed",
                        "returned", "smiled", "worked", "fell", "ran", "agreed"};
const Words kSay = {"said", "thought", "knew", "believed", "hoped", "felt", "noticed", "heard"};
const Words kAdv = {"quickly", "early", "yesterday", "again", "slowly", "today", "later",
                    "there", "home", "outside", "together", "carefully"};
const Words kOpener = {"Then", "Later", "Yesterday", "Today", "Suddenly", "Finally", "Now"};
const Words kPrep = {"in", "on", "near", "with", "after", "before", "behind", "under"};
const Words kModal = {"will", "could", "should", "might", "would"};
const Words kBase = {"see", "find", "help", "visit", "call", "leave", "wait", "stay",
                     "read", "watch", "fix", "build"};
const Words kCc = {"and", "but", "so"};

// Open-class words built from syllables so the vocabulary has a long tail.
const Words kSyllables = {"ka", "lo", "ri", "man", "te", "su", "vo", "ben", "dra", "mi",
                          "tor", "pa", "lin", "go", "sa", "ve", "ru", "del", "no", "ba"};

std::string coined(std::size_t index, std::size_t syllables) {
  std::string w;
  for (std::size_t k = 0; k < syllables; ++k) {
    w += kSyllables[index % kSyllables.size()];
    index /= kSyllables.size();
  }
  return w;
}

struct Phrase {
  std::vector<std::string> words;
  std::vector<std::string> tags;
  std::string tree;

  void add(const std::string& w, const std::string& t) {
    words.push_back(w);
    tags.push_back(t);
  }
};

std::string leaf(const std::string& tag, const std::string& w) { return "(" + tag + " " + w + ")"; }

class Generator {
 public:
  explicit Generator(std::uint64_t seed) : rng_(seed) {}

  AnnotatedSentence sentence(bool with_parse) {
    for (;;) {
      Phrase s = clause(0);
      std::string tree = "(ROOT (S " + s.tree;
      const char* end = rng_.bernoulli(0.06) ? "!" : (rng_.bernoulli(0.04) ? "?" : ".");
      s.add(end, ".");
      tree += " " + leaf(".", end) + "))";
      s.words.front() = text::upper_first(s.words.front());
      if (s.words.size() < 5 || s.words.size() > 30) continue;
      const std::string tags = text::join(s.tags, " ");
      const std::string words = text::join(s.words, " ");
      // The parse must carry the capitalized first word too.
      std::string parse = tree;
      if (with_parse) {
        ParseTree t = ParseTree::parse(parse);
        t.set_leaf_word(0, s.words.front());
        parse = t.to_string();
      }
      return make_sentence(words, tags, with_parse ? std::string_view(parse) : std::string_view{});
    }
  }

 private:
  const char* pick(const Words& w) { return w[rng_.below(w.size())]; }

  // Mostly the closed list, otherwise a coined word from a skewed tail.
  std::string open_word(const Words& common, std::size_t offset, const char* suffix) {
    if (rng_.bernoulli(0.6)) return pick(common);
    const double u = rng_.uniform();
    const auto idx = static_cast<std::size_t>(6000.0 * u * u * u);
    return coined(offset + idx, 2 + idx % 2) + suffix;
  }

  Phrase noun_phrase(bool subject) {
    Phrase p;
    const double r = rng_.uniform();
    if (subject && r < 0.35) {
      const std::string w = pick(kSubj);
      p.add(w, "PRP");
      p.tree = "(NP " + leaf("PRP", w) + ")";
    } else if (!subject && r < 0.2) {
      const std::string w = pick(kObj);
      p.add(w, "PRP");
      p.tree = "(NP " + leaf("PRP", w) + ")";
    } else if (r < 0.5) {
      const std::string w = text::upper_first(open_word(kProper, 1000, ""));
      p.add(w, "NNP");
      p.tree = "(NP " + leaf("NNP", w) + ")";
    } else if (r < 0.6) {
      const std::string w = pick(kPlural);
      p.add(w, "NNS");
      p.tree = "(NP " + leaf("NNS", w) + ")";
    } else {
      const std::string d = pick(kDet);
      p.add(d, "DT");
      p.tree = "(NP " + leaf("DT", d);
      if (rng_.bernoulli(subject ? 0.6 : 0.35)) {
        const std::string a = open_word(kAdj, 50000, "ic");
        p.add(a, "JJ");
        p.tree += " " + leaf("JJ", a);
      }
      const std::string n = open_word(kNoun, 90000, "");
      p.add(n, "NN");
      p.tree += " " + leaf("NN", n) + ")";
    }
    const bool lexical = p.tags.back() == "NN";
    if (lexical && rng_.bernoulli(subject ? 0.45 : 0.2)) {
      Phrase pp = prep_phrase();
      p.words.insert(p.words.end(), pp.words.begin(), pp.words.end());
      p.tags.insert(p.tags.end(), pp.tags.begin(), pp.tags.end());
      p.tree = "(NP " + p.tree + " " + pp.tree + ")";
    }
    return p;
  }

  Phrase prep_phrase() {
    Phrase p;
    const std::string w = pick(kPrep);
    p.add(w, "IN");
    Phrase np = noun_phrase(false);
    p.words.insert(p.words.end(), np.words.begin(), np.words.end());
    p.tags.insert(p.tags.end(), np.tags.begin(), np.tags.end());
    p.tree = "(PP " + leaf("IN", w) + " " + np.tree + ")";
    return p;
  }

  void append(Phrase& into, const Phrase& p) {
    into.words.insert(into.words.end(), p.words.begin(), p.words.end());
    into.tags.insert(into.tags.end(), p.tags.begin(), p.tags.end());
    into.tree += " " + p.tree;
  }

  Phrase verb_phrase(int depth) {
    Phrase p;
    p.tree = "(VP";
    const double r = rng_.uniform();
    if (r < 0.12) {
      const std::string m = pick(kModal);
      const std::string v = pick(kBase);
      p.add(m, "MD");
      p.add(v, "VB");
      p.tree += " " + leaf("MD", m) + " " + leaf("VB", v);
      if (rng_.bernoulli(0.6)) append(p, noun_phrase(false));
    } else if (r < 0.3) {
      const std::string v = pick(kTrans);
      p.add(v, "VBD");
      p.tree += " " + leaf("VBD", v);
      append(p, noun_phrase(false));
    } else if (r < 0.62) {
      const std::string v = pick(kOptional);
      p.add(v, "VBD");
      p.tree += " " + leaf("VBD", v);
      if (rng_.bernoulli(0.5)) append(p, noun_phrase(false));
    } else if (r < 0.78 || depth > 0) {
      const std::string v = pick(kIntrans);
      p.add(v, "VBD");
      p.tree += " " + leaf("VBD", v);
    } else {
      const std::string v = pick(kSay);
      p.add(v, "VBD");
      p.tree += " " + leaf("VBD", v);
      Phrase sub = clause(depth + 1);
      std::string sbar = "(SBAR";
      if (rng_.bernoulli(0.4)) {
        p.add("that", "IN");
        sbar += " " + leaf("IN", "that");
      }
      p.words.insert(p.words.end(), sub.words.begin(), sub.words.end());
      p.tags.insert(p.tags.end(), sub.tags.begin(), sub.tags.end());
      p.tree += " " + sbar + " (S " + sub.tree + "))";
    }
    if (rng_.bernoulli(0.2)) {
      const std::string a = pick(kAdv);
      p.add(a, "RB");
      p.tree += " (ADVP " + leaf("RB", a) + ")";
    } else if (rng_.bernoulli(0.2)) {
      append(p, prep_phrase());
    }
    p.tree += ")";
    return p;
  }

  // Children of an S node (without the enclosing bracket).
  Phrase clause(int depth) {
    Phrase p;
    if (depth == 0 && rng_.bernoulli(0.12)) {
      const std::string o = pick(kOpener);
      p.add(o, "RB");
      p.tree = "(ADVP " + leaf("RB", o) + ")";
    }
    Phrase np = noun_phrase(true);
    if (p.tree.empty()) {
      p.words = np.words;
      p.tags = np.tags;
      p.tree = np.tree;
    } else {
      append(p, np);
    }
    append(p, verb_phrase(depth));
    if (depth == 0 && rng_.bernoulli(0.15)) {
      const std::string c = pick(kCc);
      if (rng_.bernoulli(0.5)) {
        p.add(",", ",");
        p.tree += " " + leaf(",", ",");
      }
      p.add(c, "CC");
      p.tree += " " + leaf("CC", c);
      Phrase rest = clause(depth + 1);
      p.words.insert(p.words.end(), rest.words.begin(), rest.words.end());
      p.tags.insert(p.tags.end(), rest.tags.begin(), rest.tags.end());
      p.tree += " (S " + rest.tree + ")";
    }
    return p;
  }

  Rng rng_;
};

}  // namespace

std::vector<Paragraph> synthetic_corpus(std::uint64_t seed, std::size_t sentences, bool with_parses) {
  Generator gen(seed);
  Rng sizes(mix64(seed ^ 0x5eed));
  std::vector<Paragraph> out;
  std::size_t made = 0;
  while (made < sentences) {
    const std::size_t want = std::min<std::size_t>(3 + sizes.below(7), sentences - made);
    Paragraph p;
    for (std::size_t i = 0; i < want; ++i) {
      AnnotatedSentence s = gen.sentence(with_parses);
      s.source_id = "syn:" + std::to_string(made + i + 1);
      p.push_back(std::move(s));
    }
    made += want;
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<AnnotatedSentence> flatten(const std::vector<Paragraph>& corpus) {
  std::vector<AnnotatedSentence> out;
  for (const auto& p : corpus) out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::vector<LabeledSequence> synthetic_dataset(std::uint64_t seed, std::size_t runons, std::size_t negatives,
                                               bool with_parses) {
  // Pairs use two sentences each and not every adjacent pair is disjoint.
  const std::size_t need = 3 * runons + negatives + 64;
  const auto corpus = synthetic_corpus(seed, need, with_parses);
  DatasetSpec spec;
  spec.runon_count = runons;
  spec.nonrunon_count = negatives;
  spec.seed = substream_seed(seed, "corpus");
  return build_dataset(corpus, spec);
}

}  // namespace runon::testing
