// SPDX-License-Identifier: Apache-2.0
//
// A recursive-descent parser for the Python 3.10 statement and expression
// grammar, producing a tree whose node type names match CPython's `ast`
// module. It covers everything except f-strings, `match` statements, tab
// indentation and non-ASCII identifiers; those inputs are rejected. The
// parser is conservative: anything it accepts CPython accepts too, which is
// the property prompt validation relies on.
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace atlas::py {

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(const std::string& what, int line, int column)
      : std::runtime_error(what + " (line " + std::to_string(line) + ", col " +
                           std::to_string(column) + ")"),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

using NodeId = std::size_t;
inline constexpr NodeId kNoNode = static_cast<NodeId>(-1);

struct Node {
  // CPython ast class name ("For", "Name", "comprehension", ...). Context
  // and operator singletons (Load, Add, ...) are not materialised.
  std::string type;
  // Identifiers this node references: Name.id, alias name components and
  // asname, ImportFrom module components, Global/Nonlocal names.
  std::vector<std::string> identifiers;
  std::vector<NodeId> children;
  NodeId parent = kNoNode;
  int line = 0;
};

class SyntaxTree {
 public:
  const Node& node(NodeId id) const { return nodes_.at(id); }
  NodeId root() const { return 0; }
  std::size_t size() const { return nodes_.size(); }

  bool contains(std::string_view type) const;
  std::vector<NodeId> find_all(std::string_view type) const;
  // True when `identifier` is referenced anywhere in the subtree at `id`.
  bool references(NodeId id, std::string_view identifier) const;
  bool references(std::string_view identifier) const { return references(root(), identifier); }
  std::map<std::string, int> type_counts() const;
  // S-expression rendering, for diagnostics.
  std::string dump() const;

 private:
  friend class Parser;
  std::vector<Node> nodes_;
};

// Parses a module. Throws SyntaxError.
SyntaxTree parse_module(std::string_view source);
std::optional<SyntaxTree> try_parse_module(std::string_view source);

bool is_keyword(std::string_view word);

}  // namespace atlas::py
