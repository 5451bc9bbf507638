// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace atlas {

enum class Family { ast_node, builtin };

// Representation tiers used by every downstream summary.
enum class Tier { tokenless_ast, modular_ast, nonmodular_ast, builtin };

std::string_view to_string(Family f);
std::string_view to_string(Tier t);
std::optional<Family> parse_family(std::string_view s);
std::optional<Tier> parse_tier(std::string_view s);

struct Concept {
  std::string id;
  Family family = Family::ast_node;
  std::optional<std::string> keyword;
  Tier tier = Tier::tokenless_ast;
  bool testable = false;

  bool is_ast() const { return family == Family::ast_node; }
  bool operator==(const Concept&) const = default;
};

class ConceptSpaceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConceptPair {
  const Concept* ast;
  const Concept* builtin;

  // Stable join key, "<ast>/<builtin>".
  std::string id() const;
};

// The concept universe. Immutable after construction.
class ConceptSpace {
 public:
  static constexpr std::size_t kAstCount = 43;
  static constexpr std::size_t kBuiltinCount = 63;
  static constexpr std::size_t kModularCount = 6;
  static constexpr std::size_t kNonmodularCount = 18;
  static constexpr std::size_t kTokenlessCount = 19;
  static constexpr std::size_t kTestableAst = 24;
  static constexpr std::size_t kTestableBuiltin = 34;

  // The six atomic single-statement constructs.
  static const std::vector<std::string>& modular_ids();

  // Parses the line-oriented concept-spec format and enforces the full
  // cardinality invariants.
  static ConceptSpace load(const std::filesystem::path& path);
  static ConceptSpace parse(std::string_view text);

  // Validates per-concept invariants and id uniqueness only. Used for
  // restricted desk-scale spaces.
  static ConceptSpace from_concepts(std::vector<Concept> ast_nodes, std::vector<Concept> builtins);

  // Keeps the listed ids in space order. Empty list keeps the whole family.
  ConceptSpace subspace(std::span<const std::string> ast_ids,
                        std::span<const std::string> builtin_ids) const;

  // First `n_ast` x `n_builtin` concepts.
  ConceptSpace head(std::size_t n_ast, std::size_t n_builtin) const;

  const std::vector<Concept>& ast_nodes() const { return ast_; }
  const std::vector<Concept>& builtins() const { return builtins_; }
  std::size_t size() const { return ast_.size() + builtins_.size(); }
  bool is_full() const;

  const Concept* find(std::string_view id) const;
  const Concept& at(std::string_view id) const;
  std::optional<std::size_t> ast_index(std::string_view id) const;
  std::optional<std::size_t> builtin_index(std::string_view id) const;

  // All concepts, AST nodes first.
  std::vector<const Concept*> all() const;

  bool operator==(const ConceptSpace&) const = default;

 private:
  ConceptSpace() = default;
  void validate_members() const;
  void validate_full() const;

  std::vector<Concept> ast_;
  std::vector<Concept> builtins_;
};

// Full Cartesian product, AST-major and builtin-minor.
std::vector<ConceptPair> pairs(const ConceptSpace& space);

std::vector<const Concept*> testable_objects(const ConceptSpace& space);

std::vector<const Concept*> tier_members(const ConceptSpace& space, Tier tier);

// Directory holding the bundled data files. Honors ATLAS_DATA_DIR.
std::filesystem::path default_data_dir();
std::filesystem::path default_concept_spec();

}  // namespace atlas
