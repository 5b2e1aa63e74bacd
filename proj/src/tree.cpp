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

#include "runon/tree.hpp"

#include <algorithm>
#include <functional>

#include "runon/error.hpp"

namespace runon {

namespace {

std::vector<std::string_view> lex(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
    } else if (c == '(' || c == ')') {
      out.push_back(s.substr(i, 1));
      ++i;
    } else {
      std::size_t j = i;
      while (j < s.size() && s[j] != '(' && s[j] != ')' && s[j] != ' ' &&
             s[j] != '\t' && s[j] != '\n' && s[j] != '\r') {
        ++j;
      }
      out.push_back(s.substr(i, j - i));
      i = j;
    }
  }
  return out;
}

}  // namespace

ParseTree::NodeId ParseTree::add_node(std::string label, NodeId parent) {
  const auto id = static_cast<NodeId>(nodes_.size());
  nodes_.push_back(Node{std::move(label), {}, parent});
  if (parent != kNone) nodes_[static_cast<std::size_t>(parent)].children.push_back(id);
  return id;
}

ParseTree ParseTree::parse(std::string_view bracketed) {
  const auto toks = lex(bracketed);
  if (toks.empty() || toks.front() != "(") {
    throw MalformedTree("parse tree must start with '('");
  }
  ParseTree tree;
  std::vector<NodeId> stack;
  std::size_t i = 0;
  while (i < toks.size()) {
    const auto t = toks[i];
    if (t == "(") {
      if (!stack.empty() || tree.nodes_.empty()) {
        std::string label;
        if (i + 1 < toks.size() && toks[i + 1] != "(" && toks[i + 1] != ")") {
          label = std::string(toks[i + 1]);
          ++i;
        }
        if (label.empty()) label = "ROOT";
        stack.push_back(tree.add_node(std::move(label),
                                      stack.empty() ? kNone : stack.back()));
      } else {
        throw MalformedTree("trailing material after the root constituent");
      }
    } else if (t == ")") {
      if (stack.empty()) throw MalformedTree("unbalanced ')'");
      if (tree.nodes_[static_cast<std::size_t>(stack.back())].children.empty()) {
        throw MalformedTree("constituent '" +
                            tree.nodes_[static_cast<std::size_t>(stack.back())].label +
                            "' has no children");
      }
      stack.pop_back();
    } else {
      if (stack.empty()) throw MalformedTree("word outside any constituent");
      tree.add_node(std::string(t), stack.back());
    }
    ++i;
  }
  if (!stack.empty()) throw MalformedTree("unbalanced '('");
  tree.reindex_leaves();
  return tree;
}

void ParseTree::reindex_leaves() {
  leaves_.clear();
  if (nodes_.empty()) return;
  std::function<void(NodeId)> visit = [&](NodeId id) {
    const auto& n = nodes_[static_cast<std::size_t>(id)];
    if (n.children.empty()) {
      leaves_.push_back(id);
      return;
    }
    for (NodeId c : n.children) visit(c);
  };
  visit(0);
}

bool ParseTree::is_preterminal(NodeId id) const {
  const auto& n = node(id);
  return n.children.size() == 1 && is_leaf(n.children.front());
}

std::vector<std::string> ParseTree::leaf_words() const {
  std::vector<std::string> out;
  out.reserve(leaves_.size());
  for (NodeId id : leaves_) out.push_back(node(id).label);
  return out;
}

void ParseTree::set_leaf_word(std::size_t i, std::string word) {
  nodes_.at(static_cast<std::size_t>(leaves_.at(i))).label = std::move(word);
}

std::vector<ParseTree::NodeId> ParseTree::path_from_root(NodeId id) const {
  std::vector<NodeId> path;
  for (NodeId cur = id; cur != kNone; cur = node(cur).parent) path.push_back(cur);
  std::reverse(path.begin(), path.end());
  return path;
}

void ParseTree::write(NodeId id, std::string& out) const {
  const auto& n = node(id);
  if (n.children.empty()) {
    out += n.label;
    return;
  }
  out += '(';
  out += n.label;
  for (NodeId c : n.children) {
    out += ' ';
    write(c, out);
  }
  out += ')';
}

std::string ParseTree::to_string() const {
  std::string out;
  if (!nodes_.empty()) write(0, out);
  return out;
}

ParseTree::NodeId ParseTree::copy_subtree(const ParseTree& from, NodeId id,
                                          NodeId parent) {
  const NodeId copy = add_node(from.node(id).label, parent);
  for (NodeId c : from.node(id).children) copy_subtree(from, c, copy);
  return copy;
}

ParseTree ParseTree::without_last_leaf() const {
  if (leaves_.empty()) return *this;
  const NodeId drop = leaves_.back();
  ParseTree out;
  std::function<NodeId(NodeId, NodeId)> copy = [&](NodeId id, NodeId parent) {
    if (id == drop) return kNone;
    const auto& n = node(id);
    const NodeId self = out.add_node(n.label, parent);
    if (n.children.empty()) return self;
    for (NodeId c : n.children) copy(c, self);
    if (out.nodes_[static_cast<std::size_t>(self)].children.empty()) {
      // Node emptied by the removal; it was added last, so pop it.
      out.nodes_.pop_back();
      if (parent != kNone) out.nodes_[static_cast<std::size_t>(parent)].children.pop_back();
      return kNone;
    }
    return self;
  };
  copy(0, kNone);
  out.reindex_leaves();
  return out;
}

ParseTree::NodeId ParseTree::clause_node() const {
  NodeId cur = 0;
  while (node(cur).children.size() == 1 && !is_preterminal(cur) &&
         !is_leaf(node(cur).children.front())) {
    cur = node(cur).children.front();
  }
  return cur;
}

ParseTree ParseTree::merge_clauses(const ParseTree& a, const ParseTree& b) {
  if (a.nodes_.empty()) return b;
  if (b.nodes_.empty()) return a;
  ParseTree out;
  const NodeId a_clause = a.clause_node();
  const NodeId b_clause = b.clause_node();
  if (a.is_preterminal(a_clause)) {
    // Single-word sentence: no clause to extend, so join under a fresh node.
    const NodeId root = out.add_node("S", kNone);
    out.copy_subtree(a, 0, root);
    out.copy_subtree(b, 0, root);
    out.reindex_leaves();
    return out;
  }
  out.copy_subtree(a, 0, kNone);
  const NodeId target = out.clause_node();
  if (b.is_preterminal(b_clause)) {
    out.copy_subtree(b, b_clause, target);
  } else {
    for (NodeId c : b.node(b_clause).children) out.copy_subtree(b, c, target);
  }
  out.reindex_leaves();
  return out;
}

}  // namespace runon
