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

#ifndef RUNON_TREE_HPP_
#define RUNON_TREE_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace runon {

/// Labeled, rooted constituency tree in Penn bracket notation, e.g.
/// "(S (NP (PRP we)) (VP (VBP do) (RB not)))". Nodes live in a flat vector;
/// node 0 is the root. Leaves are the words.
class ParseTree {
 public:
  using NodeId = int;
  static constexpr NodeId kNone = -1;

  struct Node {
    std::string label;
    std::vector<NodeId> children;
    NodeId parent = kNone;
  };

  ParseTree() = default;

  /// Throws MalformedTree on unbalanced brackets or empty input.
  static ParseTree parse(std::string_view bracketed);

  std::string to_string() const;

  NodeId root() const { return nodes_.empty() ? kNone : 0; }
  const Node& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t node_count() const { return nodes_.size(); }

  bool is_leaf(NodeId id) const { return node(id).children.empty(); }
  /// A node whose only child is a leaf (a POS-tag node).
  bool is_preterminal(NodeId id) const;

  std::size_t leaf_count() const { return leaves_.size(); }
  NodeId leaf(std::size_t i) const { return leaves_.at(i); }
  std::vector<std::string> leaf_words() const;
  void set_leaf_word(std::size_t i, std::string word);

  /// Path from the root down to `id`, inclusive.
  std::vector<NodeId> path_from_root(NodeId id) const;

  /// Copy with the last leaf removed, together with every ancestor that is
  /// left without children.
  ParseTree without_last_leaf() const;

  /// Joins two sentence trees into one: the children of b's clause node are
  /// appended to a's clause node. The clause node is found by descending from
  /// the root through single-child non-preterminal nodes ("(ROOT (S ...))").
  static ParseTree merge_clauses(const ParseTree& a, const ParseTree& b);

  bool operator==(const ParseTree& other) const {
    return to_string() == other.to_string();
  }

 private:
  NodeId add_node(std::string label, NodeId parent);
  NodeId copy_subtree(const ParseTree& from, NodeId id, NodeId parent);
  NodeId clause_node() const;
  void reindex_leaves();
  void write(NodeId id, std::string& out) const;

  std::vector<Node> nodes_;
  std::vector<NodeId> leaves_;
};

}  // namespace runon

#endif  // RUNON_TREE_HPP_
