// SPDX-License-Identifier: Apache-2.0
#include "atlas/concept_space.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

#include "atlas/util.hpp"

#ifndef ATLAS_DEFAULT_DATA_DIR
#define ATLAS_DEFAULT_DATA_DIR "data"
#endif

namespace atlas {

std::string_view to_string(Family f) {
  return f == Family::ast_node ? "ast-node" : "builtin";
}

std::string_view to_string(Tier t) {
  switch (t) {
    case Tier::tokenless_ast: return "tokenless-ast";
    case Tier::modular_ast: return "modular-ast";
    case Tier::nonmodular_ast: return "nonmodular-ast";
    case Tier::builtin: return "builtin";
  }
  return "?";
}

std::optional<Family> parse_family(std::string_view s) {
  if (s == "ast-node") return Family::ast_node;
  if (s == "builtin") return Family::builtin;
  return std::nullopt;
}

std::optional<Tier> parse_tier(std::string_view s) {
  if (s == "tokenless-ast") return Tier::tokenless_ast;
  if (s == "modular-ast") return Tier::modular_ast;
  if (s == "nonmodular-ast") return Tier::nonmodular_ast;
  if (s == "builtin") return Tier::builtin;
  return std::nullopt;
}

std::string ConceptPair::id() const { return ast->id + "/" + builtin->id; }

const std::vector<std::string>& ConceptSpace::modular_ids() {
  static const std::vector<std::string> ids = {"Import", "ImportFrom", "Break",
                                               "Continue", "Pass", "Assert"};
  return ids;
}

namespace {

void check_concept(const Concept& c) {
  const bool builtin_tier = c.tier == Tier::builtin;
  if (builtin_tier != (c.family == Family::builtin))
    throw ConceptSpaceError("concept " + c.id + ": tier builtin must match family builtin");
  if ((c.tier == Tier::modular_ast || c.tier == Tier::nonmodular_ast) &&
      (!c.keyword || !c.testable))
    throw ConceptSpaceError("concept " + c.id + ": keyword ASTs need a keyword");
  if (c.tier == Tier::tokenless_ast && (c.testable || c.keyword))
    throw ConceptSpaceError("concept " + c.id + ": tokenless ASTs carry no keyword");
  if (c.testable != c.keyword.has_value())
    throw ConceptSpaceError("concept " + c.id + ": testable iff keyword present");
  if (c.id.empty()) throw ConceptSpaceError("empty concept id");
}

}  // namespace

void ConceptSpace::validate_members() const {
  std::set<std::string_view> seen;
  for (const auto* list : {&ast_, &builtins_}) {
    for (const auto& c : *list) {
      check_concept(c);
      if (!seen.insert(c.id).second) throw ConceptSpaceError("duplicate concept id: " + c.id);
    }
  }
  for (const auto& c : ast_)
    if (c.family != Family::ast_node) throw ConceptSpaceError("misfiled concept " + c.id);
  for (const auto& c : builtins_)
    if (c.family != Family::builtin) throw ConceptSpaceError("misfiled concept " + c.id);
}

void ConceptSpace::validate_full() const {
  auto count_tier = [&](Tier t) {
    return std::count_if(ast_.begin(), ast_.end(), [t](const Concept& c) { return c.tier == t; });
  };
  auto expect = [](std::size_t got, std::size_t want, std::string_view what) {
    if (got != want)
      throw ConceptSpaceError("cardinality violation: " + std::string(what) + " = " +
                              std::to_string(got) + ", expected " + std::to_string(want));
  };
  expect(ast_.size(), kAstCount, "AST nodes");
  expect(builtins_.size(), kBuiltinCount, "builtins");
  expect(count_tier(Tier::modular_ast), kModularCount, "modular-ast members");
  expect(count_tier(Tier::nonmodular_ast), kNonmodularCount, "nonmodular-ast members");
  expect(count_tier(Tier::tokenless_ast), kTokenlessCount, "tokenless-ast members");
  expect(std::count_if(builtins_.begin(), builtins_.end(), [](const Concept& c) { return c.testable; }),
         kTestableBuiltin, "testable builtins");
  for (const auto& id : modular_ids()) {
    const Concept* c = find(id);
    if (!c || c->tier != Tier::modular_ast)
      throw ConceptSpaceError("cardinality violation: " + id + " must be modular-ast");
  }
}

ConceptSpace ConceptSpace::parse(std::string_view text) {
  ConceptSpace space;
  std::size_t line_no = 0;
  for (auto raw : split(text, '\n')) {
    ++line_no;
    auto line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || trim(line).front() == '#') continue;
    auto fields = split(line, '\t');
    if (fields.size() < 3 || fields.size() > 4)
      throw ConceptSpaceError("line " + std::to_string(line_no) + ": expected 3 or 4 tab-separated fields");
    Concept c;
    const auto family = parse_family(trim(fields[0]));
    const auto tier = parse_tier(trim(fields[2]));
    if (!family) throw ConceptSpaceError("line " + std::to_string(line_no) + ": unknown family");
    if (!tier) throw ConceptSpaceError("line " + std::to_string(line_no) + ": unknown tier");
    c.family = *family;
    c.tier = *tier;
    c.id = std::string(trim(fields[1]));
    if (fields.size() == 4 && !trim(fields[3]).empty()) c.keyword = std::string(trim(fields[3]));
    c.testable = c.keyword.has_value();
    (c.family == Family::ast_node ? space.ast_ : space.builtins_).push_back(std::move(c));
  }
  space.validate_members();
  space.validate_full();
  return space;
}

ConceptSpace ConceptSpace::load(const std::filesystem::path& path) {
  return parse(read_file(path));
}

ConceptSpace ConceptSpace::from_concepts(std::vector<Concept> ast_nodes, std::vector<Concept> builtins) {
  ConceptSpace space;
  space.ast_ = std::move(ast_nodes);
  space.builtins_ = std::move(builtins);
  space.validate_members();
  return space;
}

ConceptSpace ConceptSpace::subspace(std::span<const std::string> ast_ids,
                                    std::span<const std::string> builtin_ids) const {
  auto pick = [&](const std::vector<Concept>& from, std::span<const std::string> ids) {
    if (ids.empty()) return from;
    for (const auto& id : ids) {
      if (std::none_of(from.begin(), from.end(), [&](const Concept& c) { return c.id == id; }))
        throw ConceptSpaceError("unknown concept in sub-space: " + id);
    }
    std::vector<Concept> out;
    for (const auto& c : from)
      if (std::find(ids.begin(), ids.end(), c.id) != ids.end()) out.push_back(c);
    return out;
  };
  return from_concepts(pick(ast_, ast_ids), pick(builtins_, builtin_ids));
}

ConceptSpace ConceptSpace::head(std::size_t n_ast, std::size_t n_builtin) const {
  if (n_ast > ast_.size() || n_builtin > builtins_.size())
    throw ConceptSpaceError("sub-space larger than space");
  return from_concepts(std::vector<Concept>(ast_.begin(), ast_.begin() + n_ast),
                       std::vector<Concept>(builtins_.begin(), builtins_.begin() + n_builtin));
}

bool ConceptSpace::is_full() const {
  try {
    validate_full();
    return true;
  } catch (const ConceptSpaceError&) {
    return false;
  }
}

const Concept* ConceptSpace::find(std::string_view id) const {
  for (const auto* list : {&ast_, &builtins_})
    for (const auto& c : *list)
      if (c.id == id) return &c;
  return nullptr;
}

const Concept& ConceptSpace::at(std::string_view id) const {
  const Concept* c = find(id);
  if (!c) throw ConceptSpaceError("unknown concept: " + std::string(id));
  return *c;
}

std::optional<std::size_t> ConceptSpace::ast_index(std::string_view id) const {
  for (std::size_t i = 0; i < ast_.size(); ++i)
    if (ast_[i].id == id) return i;
  return std::nullopt;
}

std::optional<std::size_t> ConceptSpace::builtin_index(std::string_view id) const {
  for (std::size_t i = 0; i < builtins_.size(); ++i)
    if (builtins_[i].id == id) return i;
  return std::nullopt;
}

std::vector<const Concept*> ConceptSpace::all() const {
  std::vector<const Concept*> out;
  out.reserve(size());
  for (const auto& c : ast_) out.push_back(&c);
  for (const auto& c : builtins_) out.push_back(&c);
  return out;
}

std::vector<ConceptPair> pairs(const ConceptSpace& space) {
  std::vector<ConceptPair> out;
  out.reserve(space.ast_nodes().size() * space.builtins().size());
  for (const auto& a : space.ast_nodes())
    for (const auto& b : space.builtins()) out.push_back({&a, &b});
  return out;
}

std::vector<const Concept*> testable_objects(const ConceptSpace& space) {
  std::vector<const Concept*> out;
  for (const auto* c : space.all())
    if (c->testable) out.push_back(c);
  return out;
}

std::vector<const Concept*> tier_members(const ConceptSpace& space, Tier tier) {
  std::vector<const Concept*> out;
  for (const auto* c : space.all())
    if (c->tier == tier) out.push_back(c);
  return out;
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("ATLAS_DATA_DIR"); env && *env) return env;
  return ATLAS_DEFAULT_DATA_DIR;
}

std::filesystem::path default_concept_spec() { return default_data_dir() / "concepts.tsv"; }

}  // namespace atlas
