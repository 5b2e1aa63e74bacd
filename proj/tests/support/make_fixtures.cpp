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

// Regenerates the files under tests/data. Usage: make_fixtures <dir>

#include <fstream>
#include <iostream>

#include "synthetic.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixtures <dir>\n";
    return 1;
  }
  const std::string dir = argv[1];
  using namespace runon;

  const auto corpus = testing::synthetic_corpus(2026, 200);
  {
    std::ofstream text(dir + "/corpus200.txt");
    std::ofstream trees(dir + "/corpus200.parses");
    write_corpus(text, &trees, corpus);
  }
  const auto overfit = testing::synthetic_dataset(50, 25, 25);
  {
    std::ofstream seqs(dir + "/overfit50.labeled");
    std::ofstream trees(dir + "/overfit50.parses");
    write_labeled(seqs, overfit);
    write_sequence_parses(trees, overfit);
  }
  return 0;
}
